#include <catch2/catch_amalgamated.hpp>

#include "tse/units.hpp"

using namespace tse;

TEST_CASE("velocity unit conversions") {
    CHECK(kmh_to_cells(120.0) == 6);
    CHECK(kmh_to_cells(0.0) == 0);
    CHECK(kmh_to_cells(52.0) == 3);  // 2.6 rounds up
    CHECK(kmh_to_cells(100.0) == 5);
    CHECK(cells_to_kmh(3) == 60.0);
    CHECK(cells_to_kmh(0) == 0.0);
}

TEST_CASE("conversions round-trip on the lattice") {
    for (int c = 0; c <= 10; ++c) CHECK(kmh_to_cells(cells_to_kmh(c)) == c);
}

TEST_CASE("positions map to cells and segments") {
    CHECK(cell_of_km(2.27) == 227);
    CHECK(cell_of_km(5.89) == 589);
    CHECK(segment_of_cell(cell_of_km(5.89)) == 11);
    CHECK(segment_of_cell(cell_of_km(9.63)) == 19);
    CHECK(segment_of_cell(0) == 0);
    CHECK(segment_of_cell(49) == 0);
    CHECK(segment_of_cell(50) == 1);
}

TEST_CASE("33 steps cover one minute") {
    CHECK(minute_of_step(0) == 0);
    CHECK(minute_of_step(32) == 0);
    CHECK(minute_of_step(33) == 1);
}
