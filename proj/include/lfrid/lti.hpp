#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "lfrid/errors.hpp"

namespace lfrid {

/// Discrete-time state-space quadruple x(k+1) = A x(k) + B u(k),
/// y(k) = C x(k) + D u(k).
struct LtiStateSpace {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;

    Eigen::Index n_states() const { return A.rows(); }
    Eigen::Index n_inputs() const { return B.cols(); }
    Eigen::Index n_outputs() const { return C.rows(); }

    void validate() const {
        const Eigen::Index nx = A.rows();
        if (A.cols() != nx) throw DimMismatch("A must be square");
        if (B.rows() != nx) throw DimMismatch("B rows must match A");
        if (C.cols() != nx && nx > 0) throw DimMismatch("C cols must match A");
        if (D.rows() != C.rows() || D.cols() != B.cols())
            throw DimMismatch("D must be n_y x n_u");
    }
};

inline double spectral_radius(const Eigen::MatrixXd& A) {
    if (A.rows() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// True iff the spectral radius of A is below 1 - eps_stab. The marginal case
/// counts as unstable.
inline bool is_stable(const LtiStateSpace& ss, double eps_stab = 1e-9) {
    return spectral_radius(ss.A) < 1.0 - eps_stab;
}

struct LtiSimResult {
    Eigen::MatrixXd y;  // N x n_y
    Eigen::MatrixXd x;  // N x n_x, state *before* the update at each sample
};

/// Forward recursion of the state-space equations; returns outputs and the
/// full state trajectory for reuse by the initializer.
inline LtiSimResult simulate_lti(const LtiStateSpace& ss, const Eigen::MatrixXd& u,
                                 const Eigen::VectorXd& x0) {
    ss.validate();
    if (u.cols() != ss.n_inputs())
        throw DimMismatch("input has " + std::to_string(u.cols()) + " channels, B expects " +
                          std::to_string(ss.n_inputs()));
    if (x0.size() != ss.n_states()) throw DimMismatch("x0 length must match state order");

    const Eigen::Index n = u.rows();
    LtiSimResult out;
    out.y.resize(n, ss.n_outputs());
    out.x.resize(n, ss.n_states());
    Eigen::VectorXd x = x0;
    for (Eigen::Index k = 0; k < n; ++k) {
        out.x.row(k) = x.transpose();
        out.y.row(k) = (ss.C * x + ss.D * u.row(k).transpose()).transpose();
        x = ss.A * x + ss.B * u.row(k).transpose();
    }
    return out;
}

/// First n impulse-response coefficients D, CB, CAB, ... - the
/// similarity-invariant fingerprint used by tests instead of raw matrices.
inline std::vector<Eigen::MatrixXd> markov_parameters(const LtiStateSpace& ss, int n) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(n));
    out.push_back(ss.D);
    Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(ss.n_states(), ss.n_states());
    for (int k = 1; k < n; ++k) {
        out.push_back(ss.C * Ak * ss.B);
        Ak = ss.A * Ak;
    }
    return out;
}

/// Column-major slice layout of the flat LTI parameter vector
/// [vec(A) vec(B) vec(C) vec(D) (x0)].
struct LtiParamLayout {
    Eigen::Index n_x = 0, n_u = 0, n_y = 0;
    bool has_x0 = false;

    Eigen::Index off_A() const { return 0; }
    Eigen::Index off_B() const { return n_x * n_x; }
    Eigen::Index off_C() const { return off_B() + n_x * n_u; }
    Eigen::Index off_D() const { return off_C() + n_y * n_x; }
    Eigen::Index off_x0() const { return off_D() + n_y * n_u; }
    Eigen::Index size() const { return off_x0() + (has_x0 ? n_x : 0); }
};

inline Eigen::VectorXd pack_lti(const LtiStateSpace& ss, const Eigen::VectorXd* x0 = nullptr) {
    LtiParamLayout lay{ss.n_states(), ss.n_inputs(), ss.n_outputs(), x0 != nullptr};
    Eigen::VectorXd theta(lay.size());
    theta.segment(lay.off_A(), lay.n_x * lay.n_x) =
        Eigen::Map<const Eigen::VectorXd>(ss.A.data(), ss.A.size());
    theta.segment(lay.off_B(), lay.n_x * lay.n_u) =
        Eigen::Map<const Eigen::VectorXd>(ss.B.data(), ss.B.size());
    theta.segment(lay.off_C(), lay.n_y * lay.n_x) =
        Eigen::Map<const Eigen::VectorXd>(ss.C.data(), ss.C.size());
    theta.segment(lay.off_D(), lay.n_y * lay.n_u) =
        Eigen::Map<const Eigen::VectorXd>(ss.D.data(), ss.D.size());
    if (x0) theta.segment(lay.off_x0(), lay.n_x) = *x0;
    return theta;
}

inline std::pair<LtiStateSpace, Eigen::VectorXd> unpack_lti(const Eigen::VectorXd& theta,
                                                            const LtiParamLayout& lay) {
    if (theta.size() != lay.size())
        throw LayoutError("LTI parameter vector has length " + std::to_string(theta.size()) +
                          ", layout expects " + std::to_string(lay.size()));
    LtiStateSpace ss;
    ss.A = Eigen::Map<const Eigen::MatrixXd>(theta.data() + lay.off_A(), lay.n_x, lay.n_x);
    ss.B = Eigen::Map<const Eigen::MatrixXd>(theta.data() + lay.off_B(), lay.n_x, lay.n_u);
    ss.C = Eigen::Map<const Eigen::MatrixXd>(theta.data() + lay.off_C(), lay.n_y, lay.n_x);
    ss.D = Eigen::Map<const Eigen::MatrixXd>(theta.data() + lay.off_D(), lay.n_y, lay.n_u);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(lay.n_x);
    if (lay.has_x0) x0 = theta.segment(lay.off_x0(), lay.n_x);
    return {std::move(ss), std::move(x0)};
}

/// Simulated output plus the exact output Jacobian of an LTI model w.r.t. the
/// flat parameter vector, by the classic forward sensitivity recursion:
///   S_x(k+1) = A S_x(k) + dA*x(k) + dB*u(k),   S_y(k) = C S_x(k) + dC*x(k) + dD*u(k),
/// where the d-terms are the one-hot direct derivatives of each entry.
///
/// Deliberately independent of the NL-LFR sensitivity code so the two can be
/// cross-checked against each other.
struct LtiJacobianResult {
    Eigen::MatrixXd y;  // N x n_y
    Eigen::MatrixXd J;  // (N*n_y) x n_theta, row k*n_y+i is dy_i(k)/dtheta
};

inline LtiJacobianResult lti_output_jacobian(const LtiStateSpace& ss, const Eigen::MatrixXd& u,
                                             const Eigen::VectorXd& x0, bool estimate_x0) {
    ss.validate();
    const Eigen::Index nx = ss.n_states(), nu = ss.n_inputs(), ny = ss.n_outputs();
    const Eigen::Index n = u.rows();
    LtiParamLayout lay{nx, nu, ny, estimate_x0};
    const Eigen::Index nth = lay.size();

    LtiJacobianResult out;
    out.y.resize(n, ny);
    out.J.resize(n * ny, nth);

    Eigen::MatrixXd Sx = Eigen::MatrixXd::Zero(nx, nth);
    if (estimate_x0) Sx.block(0, lay.off_x0(), nx, nx).setIdentity();
    Eigen::VectorXd x = x0;
    Eigen::MatrixXd Sy(ny, nth), Sx_next(nx, nth);

    for (Eigen::Index k = 0; k < n; ++k) {
        const auto uk = u.row(k).transpose();
        out.y.row(k) = (ss.C * x + ss.D * uk).transpose();

        Sy.noalias() = ss.C * Sx;
        for (Eigen::Index j = 0; j < nx; ++j)      // dC entries: column-major (i, j)
            for (Eigen::Index i = 0; i < ny; ++i) Sy(i, lay.off_C() + j * ny + i) += x(j);
        for (Eigen::Index j = 0; j < nu; ++j)      // dD entries
            for (Eigen::Index i = 0; i < ny; ++i) Sy(i, lay.off_D() + j * ny + i) += uk(j);
        out.J.middleRows(k * ny, ny) = Sy;

        Sx_next.noalias() = ss.A * Sx;
        for (Eigen::Index j = 0; j < nx; ++j)      // dA entries
            for (Eigen::Index i = 0; i < nx; ++i) Sx_next(i, lay.off_A() + j * nx + i) += x(j);
        for (Eigen::Index j = 0; j < nu; ++j)      // dB entries
            for (Eigen::Index i = 0; i < nx; ++i) Sx_next(i, lay.off_B() + j * nx + i) += uk(j);
        x = ss.A * x + ss.B * uk;
        Sx.swap(Sx_next);
    }
    return out;
}

} // namespace lfrid
