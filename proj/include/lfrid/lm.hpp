#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "lfrid/errors.hpp"

namespace lfrid {

struct LmOptions {
    int max_iter = 300;
    double lambda_init = 1.0;
    double lambda_up = 10.0;
    double lambda_down = 0.5;
    double svd_rel_tol = 1e-9;    // singular values below svd_rel_tol * sigma_max are dropped
    double cost_rel_tol = 1e-12;  // stop when an accepted step improves cost by less than this
    double step_tol = 1e-12;      // stop when |step| < step_tol * (1 + |theta|)
    double lambda_max = 1e15;     // give up raising damping beyond this

    void validate() const {
        if (max_iter < 1 || !(lambda_init > 0.0) || !(svd_rel_tol > 0.0) ||
            !(cost_rel_tol > 0.0) || !(step_tol > 0.0))
            throw InvalidSpec("LmOptions fields must be positive");
        if (!(lambda_up > 1.0) || !(lambda_down < 1.0) || !(lambda_down > 0.0))
            throw InvalidSpec("need lambda_up > 1 > lambda_down > 0");
    }
};

enum class LmTermination {
    MaxIterations,
    CostTolerance,
    StepTolerance,
    DampingExhausted,  // every trial rejected until lambda_max
    ZeroGradient,
    InvalidStartPoint,
};

inline std::string to_string(LmTermination t) {
    switch (t) {
        case LmTermination::MaxIterations: return "max_iterations";
        case LmTermination::CostTolerance: return "cost_tolerance";
        case LmTermination::StepTolerance: return "step_tolerance";
        case LmTermination::DampingExhausted: return "damping_exhausted";
        case LmTermination::ZeroGradient: return "zero_gradient";
        case LmTermination::InvalidStartPoint: return "invalid_start";
    }
    return "unknown";
}

/// One trial step. `cost` is the cost at the current iterate before the trial,
/// `trial_cost` the cost at the proposed point (NaN when the residual could
/// not be evaluated there).
struct LmIteration {
    int iter = 0;
    double cost = 0.0;
    double trial_cost = 0.0;
    double lambda = 0.0;
    double step_norm = 0.0;
    Eigen::Index rank = 0;
    bool accepted = false;
};

/// Cost trace, rank history and convergence diagnostics of one minimization.
/// The subsequence of accepted-step costs is non-increasing by construction.
struct FitReport {
    std::vector<LmIteration> iterations;
    Eigen::VectorXd theta;
    double initial_cost = 0.0;
    double final_cost = 0.0;
    LmTermination termination = LmTermination::MaxIterations;
    std::uint64_t seed = 0;  // filled by callers that drew random starts
    int failed_trials = 0;   // trial points where the residual could not be evaluated

    int accepted_steps() const {
        int n = 0;
        for (const auto& it : iterations) n += it.accepted ? 1 : 0;
        return n;
    }
};

/// Residual callback: fill r (and J when requested) at theta; return false when
/// the model cannot be evaluated there (e.g. the simulation diverged). J rows
/// follow the residual stacking; dr/dtheta, not dyhat/dtheta.
using ResidualFn =
    std::function<bool(const Eigen::VectorXd& theta, Eigen::VectorXd& r, Eigen::MatrixXd* J)>;

/// Levenberg-Marquardt on mean-squared residual cost V(theta) = |r|^2 / dim(r).
///
/// Each step is computed in the data-driven coordinate frame: the SVD of J is
/// truncated to directions with sigma_i > svd_rel_tol * sigma_max, which removes
/// the gradient directions made equivalent by over-parameterization, and the
/// damped subproblem is solved in that subspace:
///
///   delta = -V_r diag(sigma_i / (sigma_i^2 + lambda * sigma_max^2)) U_r^T r.
///
/// Damping is scaled by sigma_max^2 so that duplicating a parameter leaves the
/// iterate sequence, projected onto the original parameters, unchanged.
///
/// Lambda adaptation is multiplicative with the usual very-successful-step
/// acceleration: when the quadratic model predicts the achieved reduction
/// almost exactly (gain ratio > 0.99) lambda drops by a factor 1e3 instead of
/// lambda_down, so near-quadratic basins converge at Gauss-Newton speed.
/// A residual failure at a trial point counts as a rejected step and raises
/// lambda; it never aborts the run.
inline FitReport lm_minimize(const ResidualFn& residual_fn, const Eigen::VectorXd& theta0,
                             const LmOptions& opts, Eigen::VectorXd* theta_out) {
    opts.validate();

    Eigen::VectorXd theta = theta0;
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    if (!residual_fn(theta, r, &J) || !r.allFinite() || !J.allFinite())
        throw InvalidStart("residual evaluation failed at the starting point");

    const auto cost_of = [](const Eigen::VectorXd& res) {
        return res.squaredNorm() / static_cast<double>(res.size());
    };

    FitReport report;
    double cost = cost_of(r);
    report.initial_cost = cost;
    double lambda = opts.lambda_init;
    LmTermination term = LmTermination::MaxIterations;

    Eigen::BDCSVD<Eigen::MatrixXd> svd;
    bool jac_fresh = true;
    Eigen::VectorXd r_trial, delta, utr;

    for (int it = 0; it < opts.max_iter; ++it) {
        if (jac_fresh) {
            svd.compute(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
            jac_fresh = false;
        }
        const Eigen::VectorXd& sv = svd.singularValues();
        const double smax = sv.size() > 0 ? sv(0) : 0.0;
        if (!(smax > 0.0)) {
            term = LmTermination::ZeroGradient;
            break;
        }
        Eigen::Index rank = 0;
        while (rank < sv.size() && sv(rank) > opts.svd_rel_tol * smax) ++rank;

        utr.noalias() = svd.matrixU().leftCols(rank).transpose() * r;
        Eigen::VectorXd gain(rank);
        for (Eigen::Index i = 0; i < rank; ++i)
            gain(i) = sv(i) / (sv(i) * sv(i) + lambda * smax * smax);
        delta.noalias() = -svd.matrixV().leftCols(rank) * gain.cwiseProduct(utr);

        LmIteration rec;
        rec.iter = it;
        rec.cost = cost;
        rec.lambda = lambda;
        rec.rank = rank;
        rec.step_norm = delta.norm();

        if (rec.step_norm < opts.step_tol * (1.0 + theta.norm())) {
            report.iterations.push_back(rec);
            term = LmTermination::StepTolerance;
            break;
        }

        const Eigen::VectorXd trial = theta + delta;
        const bool ok = residual_fn(trial, r_trial, nullptr) && r_trial.allFinite();
        rec.trial_cost = ok ? cost_of(r_trial) : std::numeric_limits<double>::quiet_NaN();

        if (ok && rec.trial_cost < cost) {
            rec.accepted = true;
            report.iterations.push_back(rec);
            const double improvement = (cost - rec.trial_cost) / cost;
            const double predicted_cost = cost_of(Eigen::VectorXd(r + J * delta));
            const double predicted_drop = cost - predicted_cost;
            const double gain_ratio =
                predicted_drop > 0.0 ? (cost - rec.trial_cost) / predicted_drop : 0.0;
            theta = trial;
            cost = rec.trial_cost;
            lambda = std::max(lambda * (gain_ratio > 0.99 ? 1e-3 : opts.lambda_down), 1e-32);
            if (!residual_fn(theta, r, &J) || !r.allFinite() || !J.allFinite()) {
                // can only happen with a non-deterministic residual; keep the iterate
                term = LmTermination::DampingExhausted;
                break;
            }
            jac_fresh = true;
            if (improvement < opts.cost_rel_tol) {
                term = LmTermination::CostTolerance;
                break;
            }
        } else {
            if (!ok) ++report.failed_trials;
            report.iterations.push_back(rec);
            lambda *= opts.lambda_up;
            if (lambda > opts.lambda_max) {
                term = LmTermination::DampingExhausted;
                break;
            }
        }
    }

    report.theta = theta;
    report.final_cost = cost;
    report.termination = term;
    if (theta_out) *theta_out = theta;
    return report;
}

} // namespace lfrid
