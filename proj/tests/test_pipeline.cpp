#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "nfdoa/pipeline.hpp"

using namespace nfdoa;

namespace {

DatasetSpec tiny_spec() {
    DatasetSpec spec;
    spec.distances = {400.0, 800.0};
    spec.theta_lo_deg = -60.0;
    spec.theta_hi_deg = 60.0;
    spec.theta_step_deg = 15.0;
    spec.snapshots = 50;
    spec.array = ArrayConfig::ula(33);
    spec.n_in = 17;
    spec.seed = 11;
    return spec;
}

} // namespace

TEST_CASE("theta grid handles the open interval") {
    DatasetSpec spec;
    spec.theta_lo_deg = -90.0;
    spec.theta_hi_deg = 90.0;
    spec.theta_step_deg = 0.5;
    CHECK(spec.theta_grid_deg().size() == 359); // +-90 dropped
    spec.theta_step_deg = 45.0;
    std::vector<double> grid = spec.theta_grid_deg();
    CHECK(grid == std::vector<double>{-45.0, 0.0, 45.0});
    spec.theta_lo_deg = -88.0;
    spec.theta_hi_deg = 88.0;
    spec.theta_step_deg = 0.5;
    CHECK(spec.theta_grid_deg().size() == 353);
}

TEST_CASE("dataset construction") {
    DatasetSpec spec = tiny_spec();
    std::vector<Sample> ds = build_dataset(spec);

    SUBCASE("one sample per grid point with radian labels") {
        CHECK(ds.size() == 2 * 9);
        for (const Sample& s : ds) {
            CHECK(s.feature.size() == 17);
            CHECK(s.label == doctest::Approx(s.theta_deg * M_PI / 180.0));
            CHECK((s.distance == 400.0 || s.distance == 800.0));
            CHECK(std::abs(norm2(s.feature) - 1.0) < 1e-8); // unit eigenvector
        }
    }

    SUBCASE("bitwise deterministic regardless of rebuild") {
        std::vector<Sample> again = build_dataset(spec);
        REQUIRE(again.size() == ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) CHECK(again[i].feature == ds[i].feature);
    }

    SUBCASE("seed changes the features") {
        DatasetSpec other = spec;
        other.seed = 12;
        std::vector<Sample> alt = build_dataset(other);
        CHECK(alt[0].feature != ds[0].feature);
    }

    SUBCASE("strict fresnel flags an out-of-zone distance") {
        DatasetSpec bad = spec;
        bad.distances = {5.0};
        bad.strict_fresnel = true;
        CHECK_THROWS_AS(build_dataset(bad), std::domain_error);
        bad.strict_fresnel = false;
        CHECK_NOTHROW(build_dataset(bad)); // warns, still builds
    }
}

TEST_CASE("dataset file round-trip") {
    std::vector<Sample> ds = build_dataset(tiny_spec());
    save_dataset(ds, "ds_roundtrip.bin");
    std::vector<Sample> back = load_dataset("ds_roundtrip.bin");
    REQUIRE(back.size() == ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back[i].feature == ds[i].feature);
        CHECK(back[i].label == ds[i].label);
        CHECK(back[i].distance == ds[i].distance);
    }
    std::remove("ds_roundtrip.bin");
    CHECK_THROWS_AS(load_dataset("missing.bin"), IoError);
}

TEST_CASE("training") {
    SUBCASE("one-sample memorization sanity") {
        DatasetSpec spec = tiny_spec();
        std::vector<Sample> ds = build_dataset(spec);
        std::vector<Sample> one{ds[3]};
        auto model = build_cvnn(17, 3);
        TrainConfig tc;
        tc.batch_size = 1;
        tc.epochs = 500; // 500 optimizer steps
        tc.seed = 3;
        History h = train_model(*model, one, tc, 0.0);
        CHECK(h.train_loss.size() == 500);
        CHECK(std::abs(model->forward(one[0].feature) - one[0].label) < 1e-3);
    }

    SUBCASE("history length equals epochs and loss decreases") {
        std::vector<Sample> ds = build_dataset(tiny_spec());
        auto model = build_cvnn(17, 4);
        TrainConfig tc;
        tc.epochs = 30;
        tc.batch_size = 8;
        tc.seed = 4;
        History h = train_model(*model, ds, tc, 0.1);
        CHECK(h.train_loss.size() == 30);
        CHECK(h.val_loss.size() == 30);
        CHECK(h.train_loss.back() < h.train_loss.front());
    }

    SUBCASE("divergence aborts with a numeric error") {
        std::vector<Sample> ds = build_dataset(tiny_spec());
        auto model = build_cvnn(17, 9);
        TrainConfig tc;
        tc.optimizer = OptimizerKind::sgd;
        tc.learning_rate = 1e18; // guaranteed blow-up
        tc.loss = LossKind::mse;
        tc.epochs = 5;
        tc.seed = 9;
        CHECK_THROWS_AS(train_model(*model, ds, tc, 0.0), NumericError);
    }

    SUBCASE("trained model is sensitive to an input phase rotation") {
        std::vector<Sample> ds = build_dataset(tiny_spec());
        std::vector<Sample> one{ds[5]};
        auto model = build_cvnn(17, 10);
        TrainConfig tc;
        tc.batch_size = 1;
        tc.epochs = 100;
        tc.seed = 10;
        train_model(*model, one, tc, 0.0);
        double base = model->forward(one[0].feature);
        CVector rotated = one[0].feature;
        for (cd& z : rotated) z *= std::polar(1.0, 0.7);
        CHECK(std::abs(model->forward(rotated) - base) > 1e-3);
    }

    SUBCASE("cvnn and tdnn consume the same feature vectors") {
        std::vector<Sample> ds = build_dataset(tiny_spec());
        auto cvnn = build_cvnn(17, 11);
        auto tdnn = build_tdnn(17, 11);
        CHECK(cvnn->input_size() == tdnn->input_size());
        CHECK(std::isfinite(cvnn->forward(ds[0].feature)));
        CHECK(std::isfinite(tdnn->forward(ds[0].feature)));
    }

    SUBCASE("empty dataset is rejected") {
        auto model = build_cvnn(17, 5);
        CHECK_THROWS_AS(train_model(*model, {}, TrainConfig{}, 0.1), std::domain_error);
    }

    SUBCASE("history csv shape") {
        History h;
        h.train_loss = {0.5, 0.25};
        h.val_loss = {0.75, 0.5};
        std::string csv = h.to_csv();
        CHECK(csv.find("epoch,train_loss,val_loss\n") == 0);
        CHECK(csv.find("\n1,0.5,0.75\n") != std::string::npos);
        CHECK(csv.find("\n2,0.25,0.5\n") != std::string::npos);
    }
}

TEST_CASE("evaluation") {
    SUBCASE("perfect predictor scores zero") {
        struct Oracle : Model {
            double label = 0.0;
            double forward(const CVector&) override { return label; }
            void backward(double) override {}
            void zero_grad() override {}
            std::vector<ParamBlock> params() override { return {}; }
            long long flops() const override { return 0; }
            std::string name() const override { return "oracle"; }
            int input_size() const override { return 17; }
            std::string arch_json() const override { return "[]"; }
            std::unique_ptr<Model> clone() const override { return nullptr; }
        } oracle;
        std::vector<Sample> ds = build_dataset(tiny_spec());
        // evaluate sample-by-sample so the "oracle" can cheat per sample
        double sq = 0.0;
        for (const Sample& s : ds) {
            oracle.label = s.label;
            EvalReport r = evaluate(oracle, {s});
            sq += r.rmse_deg;
        }
        CHECK(sq == 0.0);
    }

    SUBCASE("constant zero predictor scores the label RMS") {
        struct Zero : Model {
            double forward(const CVector&) override { return 0.0; }
            void backward(double) override {}
            void zero_grad() override {}
            std::vector<ParamBlock> params() override { return {}; }
            long long flops() const override { return 0; }
            std::string name() const override { return "zero"; }
            int input_size() const override { return 17; }
            std::string arch_json() const override { return "[]"; }
            std::unique_ptr<Model> clone() const override { return nullptr; }
        } zero;
        std::vector<Sample> ds = build_dataset(tiny_spec());
        EvalReport r = evaluate(zero, ds);
        double want = 0.0;
        for (const Sample& s : ds) want += s.theta_deg * s.theta_deg;
        want = std::sqrt(want / ds.size());
        CHECK(r.rmse_deg == doctest::Approx(want));
        CHECK(r.errors_deg.size() == ds.size());
    }
}

TEST_CASE("beampattern table and sidelobe metric") {
    ArrayConfig cfg = ArrayConfig::ula(65);
    CsvTable table = experiment_beampattern(-30.0, 45.0, 400.0, 700.0, cfg, 0.1, 0.25);
    CHECK(table.header == std::vector<std::string>{"theta_deg", "power_raw", "power_vcm"});
    CHECK(table.rows.size() == 719);

    std::vector<double> theta, p_raw, p_vcm;
    for (const auto& row : table.rows) {
        theta.push_back(std::stod(row[0]));
        p_raw.push_back(std::stod(row[1]));
        p_vcm.push_back(std::stod(row[2]));
    }
    auto peaks = spectrum_peaks(p_vcm, theta);
    REQUIRE(peaks.size() >= 2);
    double a = peaks[0].first, b = peaks[1].first;
    if (a > b) std::swap(a, b);
    CHECK(std::abs(a - (-30.0)) <= 0.5);
    CHECK(std::abs(b - 45.0) <= 0.5);

    double side_vcm = mean_sidelobe_level(p_vcm, theta, {-30.0, 45.0}, 2.0);
    double side_raw = mean_sidelobe_level(p_raw, theta, {-30.0, 45.0}, 2.0);
    CHECK(side_vcm < side_raw);
}

TEST_CASE("csv table formatting") {
    CsvTable t;
    t.header = {"a", "b"};
    t.rows = {{"1", "2"}, {"3", "4"}};
    CHECK(t.to_string() == "a,b\n1,2\n3,4\n");
    t.save("csv_test.csv");
    std::remove("csv_test.csv");
}

TEST_CASE("crop and distance sweeps draw independent conditions") {
    // an untrained net is fine: only the table mechanics are under test
    auto model = build_cvnn(17, 6);
    DatasetSpec tmpl = tiny_spec();
    tmpl.theta_step_deg = 30.0;
    CsvTable by_n = experiment_crop_invariance(*model, {33, 37}, tmpl);
    CHECK(by_n.rows.size() == 2);
    CHECK(by_n.rows[0][0] == "33");
    CHECK(by_n.rows[1][0] == "37");

    CsvTable by_d = experiment_rmse_vs_distance(*model, {400.0, 800.0}, tmpl);
    CHECK(by_d.rows.size() == 2);
    CHECK(by_d.rows[0][1] == "cvnn");
    // independent seeds per condition: rmse values differ
    CHECK(by_d.rows[0][2] != by_d.rows[1][2]);
}
