#pragma once

#include <chrono>
#include <filesystem>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lfrid/config.hpp"
#include "lfrid/fit.hpp"
#include "lfrid/spectra.hpp"
#include "lfrid/version.hpp"

namespace lfrid {

struct PipelineData {
    SignalRecord estimation;                                  // as loaded/generated
    std::vector<std::pair<TestSetConfig, SignalRecord>> tests;
};

/// Generate (and persist) or load the experiment datasets. Channel counts of
/// external CSV data are validated against the config before any estimation
/// work starts.
inline PipelineData prepare_data(const ExperimentConfig& cfg,
                                 const std::filesystem::path& out_dir) {
    PipelineData data;
    if (cfg.dataset.source == "csv") {
        data.estimation = load_record(cfg.dataset.est_path);
        if (data.estimation.n_inputs() != cfg.dataset.n_u ||
            data.estimation.n_outputs() != cfg.dataset.n_y)
            throw ConfigError("estimation record is " + std::to_string(data.estimation.n_inputs()) +
                              "x" + std::to_string(data.estimation.n_outputs()) +
                              " channels, config expects " + std::to_string(cfg.dataset.n_u) + "x" +
                              std::to_string(cfg.dataset.n_y));
        for (const auto& t : cfg.dataset.tests) {
            SignalRecord rec = load_record(t.path);
            if (rec.n_inputs() != cfg.dataset.n_u || rec.n_outputs() != cfg.dataset.n_y)
                throw ConfigError("test set '" + t.name + "' channel count mismatch");
            data.tests.emplace_back(t, std::move(rec));
        }
        return data;
    }

    BoucWenDatasetOptions opts;
    opts.n_samples = cfg.dataset.n_samples;
    opts.f_min = cfg.dataset.f_min;
    opts.f_max = cfg.dataset.f_max;
    opts.settle_periods = cfg.dataset.settle_periods;
    opts.noise_std = cfg.dataset.noise_std;
    opts.noise_seed = cfg.dataset.noise_seed;

    data.estimation = make_boucwen_dataset(cfg.dataset.params, cfg.dataset.est_seed,
                                           cfg.dataset.est_amplitude_rms,
                                           BoucWenKind::Multisine, opts);
    for (const auto& t : cfg.dataset.tests) {
        opts.sweep_f_start = 20.0;
        opts.sweep_f_end = 50.0;
        opts.sweep_rate = 10.0;
        data.tests.emplace_back(t, make_boucwen_dataset(cfg.dataset.params, t.seed,
                                                        t.amplitude_rms, t.kind, opts));
    }

    const auto data_dir = out_dir / "data";
    std::filesystem::create_directories(data_dir);
    save_record(data.estimation, data_dir / "estimation");
    for (const auto& [tcfg, rec] : data.tests) save_record(rec, data_dir / ("test_" + tcfg.name));
    return data;
}

struct PipelineResult {
    BlaEstimate bla;
    NlLfrModel best_model;
    std::uint64_t best_seed = 0;
    double best_cost = 0.0;
    std::vector<FitReport> fit_reports;
    json manifest;
};

/// How far run_pipeline goes; each CLI subcommand maps onto one stop point.
enum class PipelineStage { Data, Bla, Init, Fit, Eval };

namespace detail {

inline SignalRecord detrended(const SignalRecord& rec, const Eigen::VectorXd& u_mean,
                              const Eigen::VectorXd& y_mean) {
    SignalRecord out = rec;
    out.u.rowwise() -= u_mean.transpose();
    if (out.has_output()) out.y.rowwise() -= y_mean.transpose();
    return out;
}

inline std::string csv_escape_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

} // namespace detail

/// Full experiment: data -> BLA -> R initializations -> R concurrent fits ->
/// model selection on estimation cost -> evaluation on every test set.
/// All artifacts (datasets, models, reports, metrics, plot data, manifest) are
/// written under out_dir; every stage outcome lands in manifest.json so a
/// failed run still leaves a machine-readable trace.
inline PipelineResult run_pipeline(const ExperimentConfig& cfg,
                                   const std::filesystem::path& out_dir,
                                   PipelineStage until = PipelineStage::Eval) {
    cfg.validate();
    std::filesystem::create_directories(out_dir);

    PipelineResult result;
    json& manifest = result.manifest;
    manifest["tool_version"] = k_version;
    manifest["config"] = to_json(cfg);
    json seeds = json::array();
    for (auto s : cfg.seeds()) seeds.push_back(s);
    manifest["seeds"] = std::move(seeds);
    json& stages = manifest["stages"];
    const auto flush_manifest = [&] { save_json(manifest, out_dir / "manifest.json"); };
    const auto now = [] { return std::chrono::steady_clock::now(); };
    const auto seconds_since = [](auto t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    // --- data ---------------------------------------------------------------
    PipelineData data;
    auto t0 = now();
    try {
        data = prepare_data(cfg, out_dir);
        stages["data"] = {{"status", "ok"}, {"seconds", seconds_since(t0)}};
    } catch (const std::exception& e) {
        stages["data"] = {{"status", "error"}, {"error", e.what()}};
        flush_manifest();
        throw;
    }
    if (until == PipelineStage::Data) {
        flush_manifest();
        return result;
    }

    // --- BLA ----------------------------------------------------------------
    t0 = now();
    try {
        result.bla = estimate_bla(data.estimation, cfg.bla);
        save_json(to_json(result.bla.model), out_dir / "bla.json");
        save_json(to_json(result.bla.report), out_dir / "bla_report.json");
        save_cost_trace(result.bla.report, out_dir / "bla_cost_trace.csv");
        stages["bla"] = {{"status", "ok"},
                         {"seconds", seconds_since(t0)},
                         {"refinement_warning", result.bla.refinement_warning},
                         {"stable", is_stable(result.bla.model)}};
        json means;
        means["u"] = json::array();
        means["y"] = json::array();
        for (Eigen::Index i = 0; i < result.bla.u_mean.size(); ++i)
            means["u"].push_back(result.bla.u_mean(i));
        for (Eigen::Index i = 0; i < result.bla.y_mean.size(); ++i)
            means["y"].push_back(result.bla.y_mean(i));
        manifest["detrend_means"] = std::move(means);
    } catch (const std::exception& e) {
        stages["bla"] = {{"status", "error"}, {"error", e.what()}};
        flush_manifest();
        throw;
    }
    if (until == PipelineStage::Bla) {
        flush_manifest();
        return result;
    }

    // The NL-LFR is estimated on the same (detrended) record the BLA saw.
    const SignalRecord est_fit =
        detail::detrended(data.estimation, result.bla.u_mean, result.bla.y_mean);

    if (until == PipelineStage::Init) {
        t0 = now();
        try {
            for (auto seed : cfg.seeds()) {
                InitSpec spec = cfg.init;
                spec.seed = seed;
                InitResult init = init_nllfr(result.bla.model, est_fit, spec);
                save_json(to_json(init.model),
                          out_dir / ("init_seed" + std::to_string(seed) + ".json"));
            }
            stages["init"] = {{"status", "ok"}, {"seconds", seconds_since(t0)}};
        } catch (const std::exception& e) {
            stages["init"] = {{"status", "error"}, {"error", e.what()}};
            flush_manifest();
            throw;
        }
        flush_manifest();
        return result;
    }

    // --- init + fit, one per seed, concurrently ------------------------------
    t0 = now();
    const std::vector<std::uint64_t> seed_list = cfg.seeds();
    std::vector<NlLfrFit> fits(seed_list.size());
    try {
        const auto run_one = [&](std::size_t i) {
            InitSpec spec = cfg.init;
            spec.seed = seed_list[i];
            InitResult init = init_nllfr(result.bla.model, est_fit, spec);
            save_json(to_json(init.model),
                      out_dir / ("init_seed" + std::to_string(seed_list[i]) + ".json"));
            NlLfrFit fit = fit_nllfr(init.model, est_fit, cfg.lm, cfg.estimate_x0);
            fit.report.seed = seed_list[i];
            return fit;
        };
        if (cfg.threads == 1 || seed_list.size() == 1) {
            for (std::size_t i = 0; i < seed_list.size(); ++i) fits[i] = run_one(i);
        } else {
            std::vector<std::future<NlLfrFit>> futures;
            futures.reserve(seed_list.size());
            for (std::size_t i = 0; i < seed_list.size(); ++i)
                futures.push_back(std::async(std::launch::async, run_one, i));
            for (std::size_t i = 0; i < seed_list.size(); ++i) fits[i] = futures[i].get();
        }

        std::size_t best = 0;
        for (std::size_t i = 0; i < fits.size(); ++i) {
            const auto& fit = fits[i];
            const std::string tag = "seed" + std::to_string(seed_list[i]);
            save_json(to_json(fit.model), out_dir / ("fit_" + tag + "_model.json"));
            save_json(to_json(fit.report), out_dir / ("fit_" + tag + "_report.json"));
            save_cost_trace(fit.report, out_dir / ("fit_" + tag + "_cost_trace.csv"));
            result.fit_reports.push_back(fit.report);
            if (fit.report.final_cost < fits[best].report.final_cost) best = i;
        }
        result.best_model = fits[best].model;
        result.best_seed = seed_list[best];
        result.best_cost = fits[best].report.final_cost;
        save_json(to_json(result.best_model), out_dir / "best_model.json");
        manifest["best_seed"] = result.best_seed;
        manifest["best_estimation_cost"] = result.best_cost;
        stages["fit"] = {{"status", "ok"}, {"seconds", seconds_since(t0)}};
    } catch (const std::exception& e) {
        stages["fit"] = {{"status", "error"}, {"error", e.what()}};
        flush_manifest();
        throw;
    }
    if (until == PipelineStage::Fit) {
        flush_manifest();
        return result;
    }

    // --- evaluation ----------------------------------------------------------
    t0 = now();
    try {
        std::ostringstream metrics;
        metrics.precision(17);
        metrics << "dataset,model,n_z,n_w,seed,rmse\n";
        const auto add_row = [&metrics](const std::string& dataset, const std::string& model,
                                        const std::string& nz, const std::string& nw,
                                        const std::string& seed, double value) {
            metrics << dataset << "," << model << "," << nz << "," << nw << "," << seed << ","
                    << detail::csv_escape_double(value) << "\n";
        };
        const std::string nz = std::to_string(cfg.init.n_z);
        const std::string nw = std::to_string(cfg.init.n_w);
        const std::string best_seed_str = std::to_string(result.best_seed);

        // estimation data, simulated from zero initial state
        {
            EvalOptions opts;
            opts.mode = EvalMode::Transient;
            opts.discard = 0;
            EvalResult bla_est = evaluate_model(result.bla.model, est_fit, opts);
            EvalResult nl_est = evaluate_model(result.best_model, est_fit, opts);
            add_row("estimation", "bla", "", "", "", bla_est.rmse_per_channel(0));
            add_row("estimation", "nllfr", nz, nw, best_seed_str, nl_est.rmse_per_channel(0));
        }

        json eval_summary = json::array();
        for (const auto& [tcfg, rec] : data.tests) {
            EvalOptions opts;
            opts.mode = tcfg.mode;
            opts.steady_periods = cfg.eval_steady_periods;
            opts.discard = tcfg.discard;
            EvalResult e_bla = evaluate_model(result.bla.model, rec, opts);
            EvalResult e_nl = evaluate_model(result.best_model, rec, opts);
            if (!e_bla.valid || !e_nl.valid) {
                eval_summary.push_back({{"test", tcfg.name}, {"valid", false}});
                continue;
            }
            add_row(tcfg.name, "bla", "", "", "", e_bla.rmse_per_channel(0));
            add_row(tcfg.name, "nllfr", nz, nw, best_seed_str, e_nl.rmse_per_channel(0));
            eval_summary.push_back({{"test", tcfg.name},
                                    {"valid", true},
                                    {"rmse_bla", e_bla.rmse_per_channel(0)},
                                    {"rmse_nllfr", e_nl.rmse_per_channel(0)},
                                    {"scored_samples", e_bla.scored_samples}});

            // plot data: time-domain residual traces and magnitude spectra of
            // the scored segment (output channel 0)
            std::ostringstream tcsv;
            tcsv.precision(17);
            tcsv << "k,t,y,y_bla,y_nllfr,e_bla,e_nllfr\n";
            for (Eigen::Index k = 0; k < e_bla.scored_samples; ++k)
                tcsv << k << "," << static_cast<double>(k) / rec.fs << "," << e_bla.y_ref(k, 0)
                     << "," << e_bla.y_model(k, 0) << "," << e_nl.y_model(k, 0) << ","
                     << e_bla.y_ref(k, 0) - e_bla.y_model(k, 0) << ","
                     << e_nl.y_ref(k, 0) - e_nl.y_model(k, 0) << "\n";
            detail::write_text(out_dir / ("resid_time_" + tcfg.name + ".csv"), tcsv.str());

            const Eigen::VectorXd mag_y = dft_magnitude(e_bla.y_ref.col(0));
            const Eigen::VectorXd mag_eb = dft_magnitude(e_bla.y_ref.col(0) - e_bla.y_model.col(0));
            const Eigen::VectorXd mag_en = dft_magnitude(e_nl.y_ref.col(0) - e_nl.y_model.col(0));
            const Eigen::VectorXd freqs = dft_frequencies(e_bla.scored_samples, rec.fs);
            std::ostringstream fcsv;
            fcsv.precision(17);
            fcsv << "f_hz,abs_y,abs_e_bla,abs_e_nllfr\n";
            for (Eigen::Index k = 0; k < freqs.size(); ++k)
                fcsv << freqs(k) << "," << mag_y(k) << "," << mag_eb(k) << "," << mag_en(k)
                     << "\n";
            detail::write_text(out_dir / ("resid_freq_" + tcfg.name + ".csv"), fcsv.str());
        }
        detail::write_text(out_dir / "metrics.csv", metrics.str());
        manifest["evaluation"] = std::move(eval_summary);
        stages["eval"] = {{"status", "ok"}, {"seconds", seconds_since(t0)}};
    } catch (const std::exception& e) {
        stages["eval"] = {{"status", "error"}, {"error", e.what()}};
        flush_manifest();
        throw;
    }

    flush_manifest();
    return result;
}

} // namespace lfrid
