#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lfrid/bla.hpp"
#include "lfrid/boucwen.hpp"
#include "lfrid/errors.hpp"
#include "lfrid/init.hpp"
#include "lfrid/io.hpp"
#include "lfrid/lm.hpp"
#include "lfrid/metrics.hpp"

namespace lfrid {

/// One test dataset: either generated from the Bouc-Wen simulator or loaded
/// from a CSV/JSON record pair, plus how it is scored.
struct TestSetConfig {
    std::string name = "test";
    BoucWenKind kind = BoucWenKind::Multisine;  // generated datasets only
    std::uint64_t seed = 0;
    double amplitude_rms = 50.0;
    std::string path;  // CSV source: base path without extension
    EvalMode mode = EvalMode::SteadyState;
    Eigen::Index discard = 2000;  // Transient mode only
};

struct DatasetConfig {
    std::string source = "boucwen";  // "boucwen" | "csv"

    // generated source
    BoucWenParams params;
    Eigen::Index n_samples = 8192;
    double f_min = 5.0;
    double f_max = 150.0;
    std::uint64_t est_seed = 1001;
    double est_amplitude_rms = 50.0;
    int settle_periods = 2;
    double noise_std = 0.0;
    std::uint64_t noise_seed = 0;

    // csv source
    std::string est_path;
    Eigen::Index n_u = 1;  // expected channel counts, validated against the files
    Eigen::Index n_y = 1;

    std::vector<TestSetConfig> tests;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    BlaOptions bla;
    InitSpec init;
    int restarts = 5;
    std::vector<std::uint64_t> init_seeds;  // optional; default seed, seed+1, ...
    LmOptions lm;
    bool estimate_x0 = true;
    int eval_steady_periods = 2;
    int threads = 0;  // 0 = one per restart up to hardware concurrency

    std::vector<std::uint64_t> seeds() const {
        if (!init_seeds.empty()) return init_seeds;
        std::vector<std::uint64_t> s;
        for (int i = 0; i < restarts; ++i) s.push_back(init.seed + static_cast<std::uint64_t>(i));
        return s;
    }

    void validate() const {
        bla.validate();
        init.validate();
        lm.validate();
        if (restarts < 1) throw ConfigError("restarts must be >= 1");
        if (!init_seeds.empty() && static_cast<int>(init_seeds.size()) != restarts)
            throw ConfigError("init_seeds length must equal restarts");
        if (dataset.source != "boucwen" && dataset.source != "csv")
            throw ConfigError("dataset.source must be 'boucwen' or 'csv'");
        if (dataset.source == "csv") {
            if (dataset.est_path.empty()) throw ConfigError("csv source needs estimation path");
            for (const auto& ext : {".csv", ".json"})
                if (!std::filesystem::exists(dataset.est_path + ext))
                    throw ConfigError("missing file " + dataset.est_path + ext);
            for (const auto& t : dataset.tests) {
                if (t.path.empty()) throw ConfigError("csv test set '" + t.name + "' needs path");
                for (const auto& ext : {".csv", ".json"})
                    if (!std::filesystem::exists(t.path + ext))
                        throw ConfigError("missing file " + t.path + ext);
            }
        }
        if (eval_steady_periods < 1) throw ConfigError("eval_steady_periods must be >= 1");
    }
};

/// The standard benchmark experiment: estimation multisine at 50 N rms plus
/// the two test sets of the original study.
inline ExperimentConfig default_boucwen_config() {
    ExperimentConfig cfg;
    cfg.dataset.tests.resize(2);
    cfg.dataset.tests[0].name = "multisine";
    cfg.dataset.tests[0].kind = BoucWenKind::Multisine;
    cfg.dataset.tests[0].seed = 2002;
    cfg.dataset.tests[0].amplitude_rms = 50.0;
    cfg.dataset.tests[0].mode = EvalMode::SteadyState;
    cfg.dataset.tests[1].name = "sweep";
    cfg.dataset.tests[1].kind = BoucWenKind::Sweep;
    cfg.dataset.tests[1].amplitude_rms = 40.0 / std::sqrt(2.0);  // 40 N sine amplitude
    cfg.dataset.tests[1].mode = EvalMode::Transient;
    cfg.dataset.tests[1].discard = 2000;
    return cfg;
}

// --- JSON (partial objects allowed; missing fields keep defaults) ----------

inline json to_json(const LmOptions& o) {
    return {{"max_iter", o.max_iter},       {"lambda_init", o.lambda_init},
            {"lambda_up", o.lambda_up},     {"lambda_down", o.lambda_down},
            {"svd_rel_tol", o.svd_rel_tol}, {"cost_rel_tol", o.cost_rel_tol},
            {"step_tol", o.step_tol},       {"lambda_max", o.lambda_max}};
}

inline LmOptions lm_options_from_json(const json& j) {
    LmOptions o;
    o.max_iter = j.value("max_iter", o.max_iter);
    o.lambda_init = j.value("lambda_init", o.lambda_init);
    o.lambda_up = j.value("lambda_up", o.lambda_up);
    o.lambda_down = j.value("lambda_down", o.lambda_down);
    o.svd_rel_tol = j.value("svd_rel_tol", o.svd_rel_tol);
    o.cost_rel_tol = j.value("cost_rel_tol", o.cost_rel_tol);
    o.step_tol = j.value("step_tol", o.step_tol);
    o.lambda_max = j.value("lambda_max", o.lambda_max);
    return o;
}

inline json to_json(const BlaOptions& o) {
    return {{"n_x", o.n_x}, {"max_iter", o.max_iter}, {"detrend", o.detrend},
            {"horizon", o.horizon}};
}

inline BlaOptions bla_options_from_json(const json& j) {
    BlaOptions o;
    o.n_x = j.value("n_x", o.n_x);
    o.max_iter = j.value("max_iter", o.max_iter);
    o.detrend = j.value("detrend", o.detrend);
    o.horizon = j.value("horizon", o.horizon);
    return o;
}

inline json to_json(const InitSpec& s) {
    return {{"n_z", s.n_z},   {"n_w", s.n_w},
            {"n_n", s.n_n},   {"activation", to_string(s.activation)},
            {"seed", s.seed}, {"uniform_bound", s.uniform_bound}};
}

inline InitSpec init_spec_from_json(const json& j) {
    InitSpec s;
    s.n_z = j.value("n_z", s.n_z);
    s.n_w = j.value("n_w", s.n_w);
    s.n_n = j.value("n_n", s.n_n);
    if (j.contains("activation"))
        s.activation = activation_from_string(j.at("activation").get<std::string>());
    s.seed = j.value("seed", s.seed);
    s.uniform_bound = j.value("uniform_bound", s.uniform_bound);
    return s;
}

inline json to_json(const BoucWenParams& p) {
    return {{"m_L", p.m_L},     {"c_L", p.c_L},     {"k_L", p.k_L},
            {"alpha", p.alpha}, {"beta", p.beta},   {"gamma", p.gamma},
            {"delta", p.delta}, {"nu", p.nu},       {"fs", p.fs},
            {"oversample", p.oversample}};
}

inline BoucWenParams boucwen_params_from_json(const json& j) {
    BoucWenParams p;
    p.m_L = j.value("m_L", p.m_L);
    p.c_L = j.value("c_L", p.c_L);
    p.k_L = j.value("k_L", p.k_L);
    p.alpha = j.value("alpha", p.alpha);
    p.beta = j.value("beta", p.beta);
    p.gamma = j.value("gamma", p.gamma);
    p.delta = j.value("delta", p.delta);
    p.nu = j.value("nu", p.nu);
    p.fs = j.value("fs", p.fs);
    p.oversample = j.value("oversample", p.oversample);
    return p;
}

inline json to_json(const TestSetConfig& t) {
    return {{"name", t.name},
            {"kind", t.kind == BoucWenKind::Multisine ? "multisine" : "sweep"},
            {"seed", t.seed},
            {"amplitude_rms", t.amplitude_rms},
            {"path", t.path},
            {"mode", t.mode == EvalMode::SteadyState ? "steady_state" : "transient"},
            {"discard", t.discard}};
}

inline TestSetConfig test_set_from_json(const json& j) {
    TestSetConfig t;
    t.name = j.value("name", t.name);
    if (j.contains("kind")) {
        const std::string k = j.at("kind").get<std::string>();
        if (k == "multisine")
            t.kind = BoucWenKind::Multisine;
        else if (k == "sweep")
            t.kind = BoucWenKind::Sweep;
        else
            throw ConfigError("unknown test kind '" + k + "'");
    }
    t.seed = j.value("seed", t.seed);
    t.amplitude_rms = j.value("amplitude_rms", t.amplitude_rms);
    t.path = j.value("path", t.path);
    if (j.contains("mode")) {
        const std::string m = j.at("mode").get<std::string>();
        if (m == "steady_state")
            t.mode = EvalMode::SteadyState;
        else if (m == "transient")
            t.mode = EvalMode::Transient;
        else
            throw ConfigError("unknown eval mode '" + m + "'");
    }
    t.discard = j.value("discard", t.discard);
    return t;
}

inline json to_json(const DatasetConfig& d) {
    json tests = json::array();
    for (const auto& t : d.tests) tests.push_back(to_json(t));
    return {{"source", d.source},
            {"params", to_json(d.params)},
            {"n_samples", d.n_samples},
            {"f_min", d.f_min},
            {"f_max", d.f_max},
            {"est_seed", d.est_seed},
            {"est_amplitude_rms", d.est_amplitude_rms},
            {"settle_periods", d.settle_periods},
            {"noise_std", d.noise_std},
            {"noise_seed", d.noise_seed},
            {"est_path", d.est_path},
            {"n_u", d.n_u},
            {"n_y", d.n_y},
            {"tests", std::move(tests)}};
}

inline DatasetConfig dataset_from_json(const json& j) {
    DatasetConfig d = default_boucwen_config().dataset;
    d.source = j.value("source", d.source);
    if (j.contains("params")) d.params = boucwen_params_from_json(j.at("params"));
    d.n_samples = j.value("n_samples", d.n_samples);
    d.f_min = j.value("f_min", d.f_min);
    d.f_max = j.value("f_max", d.f_max);
    d.est_seed = j.value("est_seed", d.est_seed);
    d.est_amplitude_rms = j.value("est_amplitude_rms", d.est_amplitude_rms);
    d.settle_periods = j.value("settle_periods", d.settle_periods);
    d.noise_std = j.value("noise_std", d.noise_std);
    d.noise_seed = j.value("noise_seed", d.noise_seed);
    d.est_path = j.value("est_path", d.est_path);
    d.n_u = j.value("n_u", d.n_u);
    d.n_y = j.value("n_y", d.n_y);
    if (j.contains("tests")) {
        d.tests.clear();
        for (const auto& t : j.at("tests")) d.tests.push_back(test_set_from_json(t));
    }
    return d;
}

inline json to_json(const ExperimentConfig& c) {
    json seeds = json::array();
    for (auto s : c.init_seeds) seeds.push_back(s);
    return {{"dataset", to_json(c.dataset)},
            {"bla", to_json(c.bla)},
            {"init", to_json(c.init)},
            {"restarts", c.restarts},
            {"init_seeds", std::move(seeds)},
            {"lm", to_json(c.lm)},
            {"estimate_x0", c.estimate_x0},
            {"eval_steady_periods", c.eval_steady_periods},
            {"threads", c.threads}};
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig c;
    if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"));
    else c.dataset = default_boucwen_config().dataset;
    if (j.contains("bla")) c.bla = bla_options_from_json(j.at("bla"));
    if (j.contains("init")) c.init = init_spec_from_json(j.at("init"));
    c.restarts = j.value("restarts", c.restarts);
    if (j.contains("init_seeds"))
        for (const auto& s : j.at("init_seeds")) c.init_seeds.push_back(s.get<std::uint64_t>());
    if (j.contains("lm")) c.lm = lm_options_from_json(j.at("lm"));
    c.estimate_x0 = j.value("estimate_x0", c.estimate_x0);
    c.eval_steady_periods = j.value("eval_steady_periods", c.eval_steady_periods);
    c.threads = j.value("threads", c.threads);
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = load_json(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    ExperimentConfig cfg = config_from_json(j);
    cfg.validate();
    return cfg;
}

} // namespace lfrid
