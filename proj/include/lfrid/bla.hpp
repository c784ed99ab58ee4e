#pragma once

#include <string>
#include <utility>

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "lfrid/errors.hpp"
#include "lfrid/lm.hpp"
#include "lfrid/lti.hpp"
#include "lfrid/signals.hpp"

namespace lfrid {

struct BlaOptions {
    Eigen::Index n_x = 3;
    int max_iter = 100;      // refinement iteration cap
    bool detrend = true;     // remove sample means of u and y first
    Eigen::Index horizon = 0;  // block-Hankel rows; 0 selects 2*n_x + 5

    void validate() const {
        if (n_x < 0) throw InvalidSpec("model order must be >= 0");
        if (max_iter < 0) throw InvalidSpec("max_iter must be >= 0");
    }
};

struct BlaEstimate {
    LtiStateSpace model;
    Eigen::VectorXd x0;          // estimated initial state (informational; models are matrices)
    FitReport report;            // refinement trace
    bool refinement_warning = false;  // refinement stalled or hit failed trials
    Eigen::VectorXd u_mean;      // means removed when detrend was set (zeros otherwise)
    Eigen::VectorXd y_mean;
};

/// Stack a sample matrix row-major (time-major) into one long vector,
/// matching the Jacobian row order k*n_y + i.
inline Eigen::VectorXd stack_rows(const Eigen::MatrixXd& m) {
    Eigen::VectorXd v(m.size());
    for (Eigen::Index k = 0; k < m.rows(); ++k)
        v.segment(k * m.cols(), m.cols()) = m.row(k).transpose();
    return v;
}

namespace detail {

/// Ordinary MOESP: LQ of the stacked input/output block-Hankel matrices,
/// SVD of the part of the output rows orthogonal to the input rows for the
/// extended observability matrix, then A and C from shift invariance.
/// B, D and x0 follow by linear regression, which is exact for noiseless data.
inline std::pair<LtiStateSpace, Eigen::VectorXd> moesp(const Eigen::MatrixXd& u,
                                                       const Eigen::MatrixXd& y,
                                                       Eigen::Index n_x, Eigen::Index horizon) {
    const Eigen::Index N = u.rows(), nu = u.cols(), ny = y.cols();
    const Eigen::Index i = horizon;
    const Eigen::Index j = N - i + 1;
    if (j < i * (nu + ny))
        throw InsufficientData("record of " + std::to_string(N) +
                               " samples is too short for horizon " + std::to_string(i));

    Eigen::MatrixXd W(i * (nu + ny), j);
    for (Eigen::Index r = 0; r < i; ++r)
        for (Eigen::Index c = 0; c < j; ++c) {
            W.block(r * nu, c, nu, 1) = u.row(r + c).transpose();
            W.block(i * nu + r * ny, c, ny, 1) = y.row(r + c).transpose();
        }

    // LQ factorization via QR of the transpose; L22 is the projection of the
    // output rows onto the orthogonal complement of the input row space.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(W.transpose());
    const Eigen::Index m = i * (nu + ny);
    Eigen::MatrixXd R = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    Eigen::MatrixXd L22 = R.transpose().block(i * nu, i * nu, i * ny, i * ny);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(L22, Eigen::ComputeThinU);
    if (svd.singularValues().size() < n_x || !(svd.singularValues()(n_x - 1) > 0.0))
        throw InsufficientData("projected data has rank below the requested order");
    Eigen::MatrixXd gamma =
        svd.matrixU().leftCols(n_x) * svd.singularValues().head(n_x).cwiseSqrt().asDiagonal();

    LtiStateSpace ss;
    ss.C = gamma.topRows(ny);
    ss.A = gamma.topRows((i - 1) * ny)
               .colPivHouseholderQr()
               .solve(gamma.bottomRows((i - 1) * ny));

    // Regression for x0, B, D: the output is linear in them once A and C are fixed.
    const Eigen::Index n_cols = n_x + n_x * nu + ny * nu;
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(N * ny, n_cols);
    for (Eigen::Index s = 0; s < n_x; ++s) {  // free response of e_s
        Eigen::VectorXd x = Eigen::VectorXd::Unit(n_x, s);
        for (Eigen::Index k = 0; k < N; ++k) {
            phi.block(k * ny, s, ny, 1) = ss.C * x;
            x = ss.A * x;
        }
    }
    for (Eigen::Index s = 0; s < n_x; ++s)  // forced response of B(s, in) entries
        for (Eigen::Index in = 0; in < nu; ++in) {
            const Eigen::Index col = n_x + in * n_x + s;
            Eigen::VectorXd x = Eigen::VectorXd::Zero(n_x);
            for (Eigen::Index k = 0; k < N; ++k) {
                phi.block(k * ny, col, ny, 1) = ss.C * x;
                x = ss.A * x + Eigen::VectorXd::Unit(n_x, s) * u(k, in);
            }
        }
    for (Eigen::Index out = 0; out < ny; ++out)  // direct feedthrough entries
        for (Eigen::Index in = 0; in < nu; ++in) {
            const Eigen::Index col = n_x + n_x * nu + in * ny + out;
            for (Eigen::Index k = 0; k < N; ++k) phi(k * ny + out, col) = u(k, in);
        }

    Eigen::VectorXd rhs = stack_rows(y);
    Eigen::VectorXd coef = phi.colPivHouseholderQr().solve(rhs);

    Eigen::VectorXd x0 = coef.head(n_x);
    ss.B = Eigen::Map<const Eigen::MatrixXd>(coef.data() + n_x, n_x, nu);
    ss.D = Eigen::Map<const Eigen::MatrixXd>(coef.data() + n_x + n_x * nu, ny, nu);
    return {std::move(ss), std::move(x0)};
}

} // namespace detail

/// Order-n_x linear state-space estimate of the best linear approximation:
/// subspace initialization refined by minimizing the mean-squared simulation
/// error (output-error criterion) with the SVD-truncated Levenberg-Marquardt
/// solver. The initial state is co-estimated during refinement and reported
/// separately; the delivered model is the matrix quadruple alone.
inline BlaEstimate estimate_bla(const SignalRecord& data, const BlaOptions& opts) {
    opts.validate();
    data.validate();
    if (!data.has_output()) throw DimMismatch("BLA estimation needs an output channel");

    Eigen::MatrixXd u = data.u;
    Eigen::MatrixXd y = data.y;
    BlaEstimate est;
    est.u_mean = Eigen::VectorXd::Zero(u.cols());
    est.y_mean = Eigen::VectorXd::Zero(y.cols());
    if (opts.detrend) {
        est.u_mean = u.colwise().mean();
        est.y_mean = y.colwise().mean();
        u.rowwise() -= est.u_mean.transpose();
        y.rowwise() -= est.y_mean.transpose();
    }

    if (opts.n_x == 0) {  // pure feedthrough: plain least squares for D
        est.model.A.resize(0, 0);
        est.model.B.resize(0, u.cols());
        est.model.C.resize(y.cols(), 0);
        est.model.D = u.colPivHouseholderQr().solve(y).transpose();
        est.x0.resize(0);
        return est;
    }

    const Eigen::Index horizon = opts.horizon > 0 ? opts.horizon : 2 * opts.n_x + 5;
    auto [ss0, x0_sub] = detail::moesp(u, y, opts.n_x, horizon);

    if (opts.max_iter == 0) {
        est.model = std::move(ss0);
        est.x0 = std::move(x0_sub);
        return est;
    }

    // A badly conditioned record can hand the subspace step an unstable A;
    // shrink it inside the unit disc so refinement has a simulable start.
    if (double rho = spectral_radius(ss0.A); rho >= 1.0) {
        ss0.A *= 0.995 / rho;
        est.refinement_warning = true;
    }

    LtiParamLayout lay{opts.n_x, u.cols(), y.cols(), /*has_x0=*/true};
    const Eigen::VectorXd y_stacked = stack_rows(y);
    ResidualFn residual = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& r,
                              Eigen::MatrixXd* J) {
        auto [ss, x0] = unpack_lti(theta, lay);
        if (J) {
            LtiJacobianResult sens = lti_output_jacobian(ss, u, x0, true);
            if (!sens.y.allFinite()) return false;
            r = y_stacked - stack_rows(sens.y);
            *J = -sens.J;
        } else {
            LtiSimResult sim = simulate_lti(ss, u, x0);
            if (!sim.y.allFinite()) return false;
            r = y_stacked - stack_rows(sim.y);
        }
        return true;
    };

    LmOptions lm_opts;
    lm_opts.max_iter = opts.max_iter;
    Eigen::VectorXd theta0 = pack_lti(ss0, &x0_sub);
    Eigen::VectorXd theta_hat;
    est.report = lm_minimize(residual, theta0, lm_opts, &theta_hat);
    if (est.report.failed_trials > 0 ||
        est.report.termination == LmTermination::DampingExhausted)
        est.refinement_warning = true;

    auto [ss_hat, x0_hat] = unpack_lti(theta_hat, lay);
    est.model = std::move(ss_hat);
    est.x0 = std::move(x0_hat);
    return est;
}

} // namespace lfrid
