#pragma once

// Prior densities of mean velocity in missing-value segments: a truncated
// normal around the counter reading (class 1) and a piecewise uniform/linear
// density favouring speeds below 20 km/h (class 2), plus fixed-budget
// quadrature of prior-weighted integrands.

#include <cmath>
#include <functional>
#include <vector>

#include "tse/errors.hpp"

namespace tse {

inline constexpr double kClass2BreakKmh = 20.0;
inline constexpr int kQuadratureIntervals = 256;  // per smooth piece

struct PriorSpec {
    enum class Kind { class1, class2 };
    Kind kind = Kind::class2;
    double v_tc = 0.0;      // class 1: counter velocity
    double sigma_a = 10.0;  // class 1: tolerance, shared with the likelihood
    double u_min = 1.0;
    double u_max = 0.0;

    static PriorSpec class1(double v_tc, double sigma_a, double u_min, double u_max) {
        return {Kind::class1, v_tc, sigma_a, u_min, u_max};
    }
    static PriorSpec class2(double u_min, double u_max) {
        return {Kind::class2, 0.0, 10.0, u_min, u_max};
    }

    void validate() const {
        if (!(u_min < u_max)) throw ValidationError("prior requires u_min < u_max");
        if (kind == Kind::class1 && sigma_a <= 0.0)
            throw ValidationError("class-1 prior requires sigma_a > 0");
        if (kind == Kind::class2 && u_min >= kClass2BreakKmh)
            throw ValidationError("class-2 prior requires u_min below 20 km/h");
    }
};

namespace detail {

inline double std_normal_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline double class1_mass(const PriorSpec& s) {
    return std_normal_cdf((s.u_max - s.v_tc) / s.sigma_a) -
           std_normal_cdf((s.u_min - s.v_tc) / s.sigma_a);
}

// Z below this falls back to a uniform density instead of dividing by ~0.
inline constexpr double kMinClass1Mass = 1e-12;

}  // namespace detail

inline double prior_pdf(const PriorSpec& spec, double u) {
    spec.validate();
    if (u < spec.u_min || u > spec.u_max) return 0.0;
    double width = spec.u_max - spec.u_min;

    if (spec.kind == PriorSpec::Kind::class1) {
        double z = detail::class1_mass(spec);
        if (z < detail::kMinClass1Mass) return 1.0 / width;  // counter far outside bounds
        double d = (u - spec.v_tc) / spec.sigma_a;
        return std::exp(-0.5 * d * d) / (std::sqrt(2.0 * M_PI) * spec.sigma_a * z);
    }

    // class 2: uniform below the break, linearly decreasing above; collapses
    // to uniform when the whole support is below the break.
    if (spec.u_max <= kClass2BreakKmh) return 1.0 / width;
    double denom = spec.u_max + kClass2BreakKmh - 2.0 * spec.u_min;
    if (u <= kClass2BreakKmh) return 2.0 / denom;
    return 2.0 * (spec.u_max - u) / ((spec.u_max - kClass2BreakKmh) * denom);
}

// Prior evaluated on fixed quadrature nodes. fw holds f(node) times the
// Simpson weight, so integrating any g is a dot product. Built once per
// prior and reused across scenarios.
struct PriorQuadrature {
    std::vector<double> nodes;
    std::vector<double> fw;
    bool uniform_fallback = false;  // class-1 mass underflowed

    template <typename G>
    double integrate(G&& g) const {
        double acc = 0.0;
        for (size_t i = 0; i < nodes.size(); ++i) acc += fw[i] * g(nodes[i]);
        return acc;
    }
};

namespace detail {

inline void append_simpson_piece(const PriorSpec& spec, double a, double b,
                                 PriorQuadrature& quad) {
    const int n = kQuadratureIntervals;
    double h = (b - a) / n;
    for (int i = 0; i <= n; ++i) {
        // pin the endpoint: a + h*n can drift past b and off the support
        double x = i == n ? b : a + h * i;
        double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        quad.nodes.push_back(x);
        quad.fw.push_back(prior_pdf(spec, x) * w * h / 3.0);
    }
}

}  // namespace detail

// Composite Simpson per smooth piece; the class-2 break at 20 km/h splits
// the support so every piece is smooth.
inline PriorQuadrature make_quadrature(const PriorSpec& spec) {
    spec.validate();
    PriorQuadrature quad;
    if (spec.kind == PriorSpec::Kind::class1 &&
        detail::class1_mass(spec) < detail::kMinClass1Mass)
        quad.uniform_fallback = true;
    bool split = spec.kind == PriorSpec::Kind::class2 && spec.u_min < kClass2BreakKmh &&
                 kClass2BreakKmh < spec.u_max;
    if (split) {
        detail::append_simpson_piece(spec, spec.u_min, kClass2BreakKmh, quad);
        detail::append_simpson_piece(spec, kClass2BreakKmh, spec.u_max, quad);
    } else {
        detail::append_simpson_piece(spec, spec.u_min, spec.u_max, quad);
    }
    return quad;
}

// Integral of f(u) g(u) du over the prior support.
template <typename G>
inline double quadrature(const PriorSpec& spec, G&& g) {
    return make_quadrature(spec).integrate(std::forward<G>(g));
}

}  // namespace tse
