#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hspgnn/bench.hpp"

using namespace hspgnn;

TEST_CASE("bench validates its inputs") {
    CHECK_THROWS_AS(bench_temporal_mixing(1, 10, 1, 10), ValidationError);
    CHECK_THROWS_AS(bench_temporal_mixing(20, 10, 0, 10), ValidationError);
    CHECK_THROWS_AS(bench_temporal_mixing(20, 10, 2, 5), ValidationError);
}

TEST_CASE("bench routes agree and report sane timings") {
    auto results = bench_temporal_mixing(40, 30, 3, 10);
    REQUIRE(results.size() == 3);
    for (const auto& r : results) {
        CHECK(r.wall_time_ms > 0.0);
        CHECK(r.repeats >= 10);
        CHECK(r.max_deviation <= 1e-9);
        CHECK(r.m == 40);
        CHECK(r.n == 30);
        CHECK(r.order == 3);
    }
    CHECK(results[0].method == "explicit_power");
    CHECK(results[1].method == "matrix_free");
    CHECK(results[2].method == "conv_approx");
}

TEST_CASE("conv route beats explicit powers at the reference size") {
    // The acceptance suite pins the full-size comparison; this smoke check
    // uses a smaller window so the suite stays fast.
    auto results = bench_temporal_mixing(60, 100, 3, 15);
    const double explicit_ms = results[0].wall_time_ms;
    const double conv_ms = results[2].wall_time_ms;
    CHECK(conv_ms < explicit_ms);
}

TEST_CASE("order 2 uses the three-tap kernel and still matches") {
    auto results = bench_temporal_mixing(30, 20, 2, 10);
    for (const auto& r : results) CHECK(r.max_deviation <= 1e-9);
}

TEST_CASE("timings grow with the window length for every method") {
    double prev[3] = {0.0, 0.0, 0.0};
    for (int m : {30, 60, 120}) {
        auto results = bench_temporal_mixing(m, 300, 3, 15);
        for (int i = 0; i < 3; ++i) {
            CHECK(results[i].wall_time_ms > prev[i]);
            prev[i] = results[i].wall_time_ms;
        }
    }
}
