#include <filesystem>

#include <catch2/catch_amalgamated.hpp>

#include "lfrid/io.hpp"
#include "lfrid/signals.hpp"

using namespace lfrid;

namespace {

std::filesystem::path scratch_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "lfrid_io_test";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("signal records round-trip through CSV plus side-car JSON") {
    MultisineSpec spec;
    spec.n_samples = 64;
    spec.fs = 50.0;
    spec.f_min = 1.0;
    spec.f_max = 10.0;
    spec.amplitude_rms = 2.0;
    spec.seed = 3;
    SignalRecord rec = gen_multisine(spec);
    rec.y = rec.u * 0.5;
    rec.n_periods = 2;  // pretend: divisibility holds for 64
    rec.validate();

    const auto base = scratch_dir() / "rec";
    save_record(rec, base);
    const SignalRecord back = load_record(base);

    CHECK(back.u == rec.u);  // 17 significant digits round-trip doubles exactly
    CHECK(back.y == rec.y);
    CHECK(back.fs == rec.fs);
    CHECK(back.n_periods == 2);
    CHECK(back.excitation == Excitation::Multisine);
}

TEST_CASE("state-space models round-trip through JSON") {
    LtiStateSpace ss;
    ss.A = Eigen::MatrixXd::Random(3, 3);
    ss.B = Eigen::MatrixXd::Random(3, 2);
    ss.C = Eigen::MatrixXd::Random(1, 3);
    ss.D = Eigen::MatrixXd::Random(1, 2);

    const LtiStateSpace back = lti_from_json(to_json(ss));
    CHECK(back.A == ss.A);
    CHECK(back.B == ss.B);
    CHECK(back.C == ss.C);
    CHECK(back.D == ss.D);
}

TEST_CASE("NL-LFR models round-trip through the versioned JSON format") {
    NlLfrModel m;
    m.A = Eigen::MatrixXd::Random(2, 2) * 0.5;
    m.B_u = Eigen::MatrixXd::Random(2, 1);
    m.B_w = Eigen::MatrixXd::Random(2, 1);
    m.C_z = Eigen::MatrixXd::Random(2, 2);
    m.C_y = Eigen::MatrixXd::Random(1, 2);
    m.D_zu = Eigen::MatrixXd::Random(2, 1);
    m.D_yu = Eigen::MatrixXd::Random(1, 1);
    m.D_yw = Eigen::MatrixXd::Random(1, 1);
    m.net.W_z = Eigen::MatrixXd::Random(4, 2);
    m.net.b_z = Eigen::VectorXd::Random(4);
    m.net.W_w = Eigen::MatrixXd::Random(1, 4);
    m.net.b_w = Eigen::VectorXd::Random(1);
    m.net.activation = Activation::RadialBasis;

    json j = to_json(m);
    const NlLfrModel back = nllfr_from_json(j);
    CHECK(back.A == m.A);
    CHECK(back.net.W_z == m.net.W_z);
    CHECK(back.net.activation == Activation::RadialBasis);

    j["format_version"] = 999;
    CHECK_THROWS_AS(nllfr_from_json(j), IoError);
}

TEST_CASE("fit reports serialize their trace") {
    FitReport r;
    r.initial_cost = 2.0;
    r.final_cost = 0.5;
    r.termination = LmTermination::CostTolerance;
    r.seed = 77;
    r.theta = Eigen::VectorXd::Ones(3);
    LmIteration it;
    it.iter = 0;
    it.cost = 2.0;
    it.trial_cost = 0.5;
    it.accepted = true;
    it.rank = 3;
    r.iterations.push_back(it);

    const json j = to_json(r);
    CHECK(j.at("final_cost").get<double>() == 0.5);
    CHECK(j.at("termination").get<std::string>() == "cost_tolerance");
    CHECK(j.at("iterations").size() == 1);
    CHECK(j.at("accepted_steps").get<int>() == 1);

    const auto path = scratch_dir() / "trace.csv";
    save_cost_trace(r, path);
    CHECK(std::filesystem::exists(path));
}

TEST_CASE("missing files raise IoError") {
    CHECK_THROWS_AS(load_record(scratch_dir() / "does_not_exist"), IoError);
    CHECK_THROWS_AS(load_json(scratch_dir() / "nope.json"), IoError);
}
