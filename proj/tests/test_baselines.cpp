#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nfdoa/baselines.hpp"
#include "nfdoa/cvnn.hpp"
#include "nfdoa/rng.hpp"
#include "nfdoa/signal.hpp"

using namespace nfdoa;

namespace {
constexpr double kDeg = M_PI / 180.0;
}

TEST_CASE("music grid construction") {
    MusicGrid g = MusicGrid::regular(-90, 90, 1.0, 200, 400, 50);
    CHECK(g.theta_axis.size() == 179); // +-90 endpoints dropped
    CHECK(g.range_axis.size() == 5);
    CHECK(g.theta_axis.front() == doctest::Approx(-89.0 * kDeg));
    CHECK_NOTHROW(g.validate());

    MusicGrid empty;
    CHECK_THROWS_AS(empty.validate(), std::domain_error);
}

TEST_CASE("near-field music on a grid-node source") {
    ArrayConfig cfg = ArrayConfig::ula(33);
    SourcePlacement src{12.0 * kDeg, 400.0}; // on the grid below
    CovMatrix raw = analytic_covariance({src}, cfg, 0.0);
    MusicGrid grid = MusicGrid::regular(-60, 60, 0.5, 200, 800, 50);
    MusicResult res = near_field_music(raw, 1, grid, cfg);
    REQUIRE(res.estimates.size() == 1);
    // noiseless on-node: the refined peak sits on the node (up to refinement rounding)
    CHECK(std::abs(res.estimates[0].theta / kDeg - 12.0) < 2e-3);
    CHECK(res.estimates[0].range == doctest::Approx(400.0).epsilon(0.01));
    // and the grid argmax is exactly the node
    std::size_t best = 0;
    for (std::size_t i = 1; i < res.spectrum.size(); ++i)
        if (res.spectrum[i] > res.spectrum[best]) best = i;
    int nr = static_cast<int>(grid.range_axis.size());
    CHECK(grid.theta_axis[best / nr] == doctest::Approx(12.0 * kDeg));
    CHECK(grid.range_axis[best % nr] == doctest::Approx(400.0));
}

TEST_CASE("music spectrum is scale invariant") {
    ArrayConfig cfg = ArrayConfig::ula(17);
    SnapshotSet snaps =
        received_snapshots({{20.0 * kDeg, 60.0}}, cfg, 64, {5.0, 31});
    CovMatrix raw = sample_covariance(snaps);
    MusicGrid grid = MusicGrid::regular(-80, 80, 1.0, 30, 120, 15);
    MusicResult base = near_field_music(raw, 1, grid, cfg);

    CovMatrix scaled = raw;
    for (cd& z : scaled.data.data()) z *= 7.5;
    MusicResult after = near_field_music(scaled, 1, grid, cfg);
    CHECK(std::abs(after.estimates[0].theta - base.estimates[0].theta) < 1e-9);
    CHECK(std::abs(after.estimates[0].range - base.estimates[0].range) < 1e-6);
    for (double v : base.spectrum) CHECK(v > 0.0);
}

TEST_CASE("music resolves two sources") {
    ArrayConfig cfg = ArrayConfig::ula(65);
    std::vector<SourcePlacement> sources{{-30.0 * kDeg, 400.0}, {45.0 * kDeg, 700.0}};
    CovMatrix raw = analytic_covariance(sources, cfg, 0.01);
    MusicGrid grid = MusicGrid::regular(-80, 80, 0.25, 200, 1000, 100);
    MusicResult res = near_field_music(raw, 2, grid, cfg);
    REQUIRE(res.estimates.size() == 2);
    double a = res.estimates[0].theta / kDeg, b = res.estimates[1].theta / kDeg;
    if (a > b) std::swap(a, b);
    CHECK(a == doctest::Approx(-30.0).epsilon(0.01));
    CHECK(b == doctest::Approx(45.0).epsilon(0.01));
}

TEST_CASE("music accuracy at 5 dB: 95 percent within two grid steps") {
    ArrayConfig cfg = ArrayConfig::ula(65);
    MusicGrid grid = MusicGrid::regular(-80, 80, 0.25, 200, 1800, 50);
    int trials = 100, hits = 0;
    for (int t = 0; t < trials; ++t) {
        RandomStream rs(RandomStream::derive(4242, 0x6d75ULL, t));
        SourcePlacement src{rs.next_uniform(-75.0, 75.0) * kDeg,
                            rs.next_uniform(300.0, 1500.0)};
        SnapshotSet snaps = received_snapshots({src}, cfg, 100, {5.0, rs.next_u64()});
        MusicResult res = near_field_music(sample_covariance(snaps), 1, grid, cfg);
        REQUIRE(res.estimates.size() == 1);
        if (std::abs(res.estimates[0].theta - src.theta) <= 2.0 * 0.25 * kDeg) ++hits;
    }
    CHECK(hits >= 95);
}

TEST_CASE("music input validation") {
    ArrayConfig cfg = ArrayConfig::ula(9);
    CovMatrix raw = analytic_covariance({{0.1, 40.0}}, cfg, 0.1);
    MusicGrid grid = MusicGrid::regular(-10, 10, 1.0, 30, 60, 10);
    CHECK_THROWS_AS(near_field_music(raw, 9, grid, cfg), std::domain_error);
    MusicGrid bad;
    bad.theta_axis = {0.1};
    CHECK_THROWS_AS(near_field_music(raw, 1, bad, cfg), std::domain_error);
}

TEST_CASE("tdnn matches its published shape") {
    auto tdnn = build_tdnn(33, 5);
    CHECK(tdnn->input_size() == 33); // complex entries; real input is 66 wide
    CHECK(tdnn->name() == "tdnn");

    RandomStream rs(6);
    CVector f(33);
    for (cd& z : f) z = cd{rs.next_uniform(-1.0, 1.0), rs.next_uniform(-1.0, 1.0)};
    CHECK(std::isfinite(tdnn->forward(f)));

    auto zeroed = build_tdnn(9, 5);
    for (ParamBlock& p : zeroed->params()) std::fill(p.w->begin(), p.w->end(), 0.0);
    CVector f9(f.begin(), f.begin() + 9);
    CHECK(zeroed->forward(f9) == 0.0);
}

TEST_CASE("tdnn uses the concatenated real/imaginary input") {
    auto tdnn = build_tdnn(9, 8);
    RandomStream rs(9);
    CVector f(9);
    for (cd& z : f) z = cd{rs.next_uniform(-1.0, 1.0), rs.next_uniform(-1.0, 1.0)};
    double base = tdnn->forward(f);
    CVector conj = f;
    for (cd& z : conj) z = std::conj(z);
    // flipping the imaginary half changes the input tensor, hence the output
    CHECK(tdnn->forward(conj) != base);
}
