#include <catch2/catch_amalgamated.hpp>
#include "lfrid/lfrid.hpp"
TEST_CASE("placeholder") { CHECK(true); }
