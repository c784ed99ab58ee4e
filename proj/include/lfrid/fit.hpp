#pragma once

#include <utility>

#include <Eigen/Core>

#include "lfrid/bla.hpp"
#include "lfrid/lm.hpp"
#include "lfrid/nllfr.hpp"
#include "lfrid/signals.hpp"

namespace lfrid {

struct NlLfrFit {
    NlLfrModel model;
    Eigen::VectorXd x0;  // co-estimated initial state (informational)
    FitReport report;
};

/// Minimize the mean-squared simulation error of an NL-LFR model over all its
/// parameters, starting from `init`. The residual is r(k) = y(k) - yhat(k);
/// a trial point whose simulation diverges is rejected by raising the damping,
/// so instability during the search never aborts the fit. With estimate_x0 the
/// initial state is appended to the parameter vector (and reported, not part
/// of the delivered model).
inline NlLfrFit fit_nllfr(const NlLfrModel& init, const SignalRecord& data,
                          const LmOptions& opts, bool estimate_x0 = true) {
    init.validate();
    data.validate();
    if (!data.has_output()) throw DimMismatch("fitting needs an output channel");
    if (data.n_outputs() != init.n_outputs() || data.n_inputs() != init.n_inputs())
        throw DimMismatch("record channel counts do not match the model");

    const ParamLayout lay = ParamLayout::of(init, estimate_x0);
    const Eigen::VectorXd y_stacked = stack_rows(data.y);
    const Eigen::MatrixXd& u = data.u;

    ResidualFn residual = [&lay, &y_stacked, &u](const Eigen::VectorXd& theta, Eigen::VectorXd& r,
                                                 Eigen::MatrixXd* J) {
        auto [model, x0] = unpack(theta, lay);
        if (J) {
            JacobianResult jac = output_jacobian(model, u, x0, lay.has_x0);
            if (!jac.ok()) return false;
            r = y_stacked - stack_rows(jac.y);
            *J = -jac.J;
        } else {
            SimResult sim = simulate(model, u, x0);
            if (!sim.ok()) return false;
            r = y_stacked - stack_rows(sim.y);
        }
        return true;
    };

    const Eigen::VectorXd x0_zero = Eigen::VectorXd::Zero(init.n_states());
    Eigen::VectorXd theta0 = pack(init, estimate_x0 ? &x0_zero : nullptr);
    Eigen::VectorXd theta_hat;
    FitReport report = lm_minimize(residual, theta0, opts, &theta_hat);

    auto [model_hat, x0_hat] = unpack(theta_hat, lay);
    NlLfrFit out;
    out.model = std::move(model_hat);
    out.x0 = std::move(x0_hat);
    out.report = std::move(report);
    return out;
}

} // namespace lfrid
