#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "lfrid/errors.hpp"
#include "lfrid/lti.hpp"
#include "lfrid/nllfr.hpp"
#include "lfrid/signals.hpp"

namespace lfrid {

/// Per-channel root-mean-square error between a reference and a simulated
/// output of equal shape.
inline Eigen::VectorXd rmse(const Eigen::MatrixXd& y, const Eigen::MatrixXd& y_hat) {
    if (y.rows() != y_hat.rows() || y.cols() != y_hat.cols())
        throw DimMismatch("rmse needs equal shapes, got " + std::to_string(y.rows()) + "x" +
                          std::to_string(y.cols()) + " vs " + std::to_string(y_hat.rows()) + "x" +
                          std::to_string(y_hat.cols()));
    return rms_per_channel(y - y_hat);
}

enum class EvalMode { SteadyState, Transient };

struct EvalOptions {
    EvalMode mode = EvalMode::SteadyState;
    int steady_periods = 2;        // periods simulated; the last one is scored
    Eigen::Index discard = 2000;   // transient samples ignored in Transient mode
};

struct EvalResult {
    Eigen::VectorXd rmse_per_channel;
    Eigen::MatrixXd y_ref;    // scored reference segment
    Eigen::MatrixXd y_model;  // scored model output segment
    Eigen::Index scored_samples = 0;
    bool valid = false;  // false when the simulation diverged before scoring
    std::optional<Eigen::Index> diverged_at;
};

namespace detail {

using Simulator = std::function<std::pair<Eigen::MatrixXd, std::optional<Eigen::Index>>(
    const Eigen::MatrixXd&)>;

/// Common scoring core. Steady-state mode repeats one period of the input
/// `steady_periods` times, simulates from zero initial state and scores the
/// final period against the final period of the reference, so the score does
/// not depend on the unknown true initial state. Transient mode simulates the
/// record once and drops the first `discard` samples.
inline EvalResult evaluate_with(const Simulator& sim, const SignalRecord& test,
                                const EvalOptions& opts) {
    test.validate();
    if (!test.has_output()) throw DimMismatch("test record has no output to score against");

    EvalResult out;
    if (opts.mode == EvalMode::SteadyState) {
        if (opts.steady_periods < 1) throw InvalidSpec("steady_periods must be >= 1");
        const Eigen::Index period = test.period_length();
        const Eigen::MatrixXd u_period = test.u.topRows(period);
        Eigen::MatrixXd u_sim(period * opts.steady_periods, test.n_inputs());
        for (int p = 0; p < opts.steady_periods; ++p)
            u_sim.middleRows(p * period, period) = u_period;
        auto [y_sim, diverged] = sim(u_sim);
        out.diverged_at = diverged;
        if (diverged.has_value() && *diverged < u_sim.rows()) return out;
        out.y_model = y_sim.bottomRows(period);
        out.y_ref = test.y.bottomRows(period);
    } else {
        if (opts.discard < 0) throw InvalidSpec("discard must be >= 0");
        if (opts.discard >= test.n_samples())
            throw EmptyEvaluation("discard " + std::to_string(opts.discard) +
                                  " leaves no samples out of " +
                                  std::to_string(test.n_samples()));
        auto [y_sim, diverged] = sim(test.u);
        out.diverged_at = diverged;
        if (diverged.has_value()) return out;
        out.y_model = y_sim.bottomRows(test.n_samples() - opts.discard);
        out.y_ref = test.y.bottomRows(test.n_samples() - opts.discard);
    }
    out.rmse_per_channel = rmse(out.y_ref, out.y_model);
    out.scored_samples = out.y_ref.rows();
    out.valid = true;
    return out;
}

} // namespace detail

inline EvalResult evaluate_model(const NlLfrModel& model, const SignalRecord& test,
                                 const EvalOptions& opts) {
    return detail::evaluate_with(
        [&model](const Eigen::MatrixXd& u) {
            SimResult s = simulate(model, u, Eigen::VectorXd::Zero(model.n_states()));
            return std::make_pair(std::move(s.y), s.diverged_at);
        },
        test, opts);
}

inline EvalResult evaluate_model(const LtiStateSpace& model, const SignalRecord& test,
                                 const EvalOptions& opts) {
    return detail::evaluate_with(
        [&model](const Eigen::MatrixXd& u) {
            LtiSimResult s = simulate_lti(model, u, Eigen::VectorXd::Zero(model.n_states()));
            std::optional<Eigen::Index> diverged;
            if (!s.y.allFinite()) diverged = 0;
            return std::make_pair(std::move(s.y), diverged);
        },
        test, opts);
}

} // namespace lfrid
