#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "lfrid/errors.hpp"
#include "lfrid/lti.hpp"

namespace lfrid {

enum class Activation { Tanh, RadialBasis, Identity };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::RadialBasis: return "radial-basis";
        case Activation::Identity: return "identity";
    }
    return "tanh";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "radial-basis") return Activation::RadialBasis;
    if (s == "identity") return Activation::Identity;
    throw InvalidSpec("unknown activation tag '" + s + "'");
}

/// Elementwise activation value and derivative.
inline void activation_eval(Activation act, const Eigen::VectorXd& a, Eigen::VectorXd& s,
                            Eigen::VectorXd& ds) {
    switch (act) {
        case Activation::Tanh:
            s = a.array().tanh();
            ds = 1.0 - s.array().square();
            break;
        case Activation::RadialBasis:
            s = (-a.array().square()).exp();
            ds = -2.0 * a.array() * s.array();
            break;
        case Activation::Identity:
            s = a;
            ds = Eigen::VectorXd::Ones(a.size());
            break;
    }
}

/// One-hidden-layer feedforward net w = W_w sigma(W_z z + b_z) + b_w.
struct NeuralNet {
    Eigen::MatrixXd W_z;  // n_n x n_z
    Eigen::VectorXd b_z;  // n_n
    Eigen::MatrixXd W_w;  // n_w x n_n
    Eigen::VectorXd b_w;  // n_w
    Activation activation = Activation::Tanh;

    Eigen::Index n_in() const { return W_z.cols(); }
    Eigen::Index n_out() const { return W_w.rows(); }
    Eigen::Index n_neurons() const { return W_z.rows(); }

    void validate() const {
        if (n_neurons() < 1) throw DimMismatch("net needs at least one neuron");
        if (b_z.size() != n_neurons()) throw DimMismatch("b_z length must match W_z rows");
        if (W_w.cols() != n_neurons()) throw DimMismatch("W_w cols must match W_z rows");
        if (b_w.size() != n_out()) throw DimMismatch("b_w length must match W_w rows");
    }
};

struct NnEval {
    Eigen::VectorXd w;      // n_w
    Eigen::MatrixXd jac_z;  // n_w x n_z, dw/dz = W_w diag(sigma'(a)) W_z
};

inline NnEval eval_nn(const NeuralNet& net, const Eigen::VectorXd& z) {
    net.validate();
    if (z.size() != net.n_in()) throw DimMismatch("z length must match W_z cols");
    Eigen::VectorXd a = net.W_z * z + net.b_z;
    Eigen::VectorXd s, ds;
    activation_eval(net.activation, a, s, ds);
    NnEval out;
    out.w = net.W_w * s + net.b_w;
    out.jac_z = net.W_w * ds.asDiagonal() * net.W_z;
    return out;
}

/// Nonlinear LFR model: a linear state-space block with inputs (u, w) and
/// outputs (z, y) closed through the static net w = f(z).
///
///   x(k+1) = A x(k) + B_u u(k) + B_w w(k)
///   z(k)   = C_z x(k) + D_zu u(k)
///   y(k)   = C_y x(k) + D_yu u(k) + D_yw w(k)
///
/// There is deliberately no D_zw field: z never depends on w within a sample,
/// so the recursion is explicit and no algebraic loop can arise.
struct NlLfrModel {
    Eigen::MatrixXd A;     // n_x x n_x
    Eigen::MatrixXd B_u;   // n_x x n_u
    Eigen::MatrixXd B_w;   // n_x x n_w
    Eigen::MatrixXd C_z;   // n_z x n_x
    Eigen::MatrixXd C_y;   // n_y x n_x
    Eigen::MatrixXd D_zu;  // n_z x n_u
    Eigen::MatrixXd D_yu;  // n_y x n_u
    Eigen::MatrixXd D_yw;  // n_y x n_w
    NeuralNet net;

    Eigen::Index n_states() const { return A.rows(); }
    Eigen::Index n_inputs() const { return B_u.cols(); }
    Eigen::Index n_outputs() const { return C_y.rows(); }
    Eigen::Index n_z() const { return C_z.rows(); }
    Eigen::Index n_w() const { return B_w.cols(); }

    void validate() const {
        const Eigen::Index nx = A.rows();
        if (A.cols() != nx) throw DimMismatch("A must be square");
        if (B_u.rows() != nx || B_w.rows() != nx) throw DimMismatch("B_u/B_w rows must match A");
        if (C_z.cols() != nx || C_y.cols() != nx) throw DimMismatch("C_z/C_y cols must match A");
        if (D_zu.rows() != n_z() || D_zu.cols() != n_inputs())
            throw DimMismatch("D_zu must be n_z x n_u");
        if (D_yu.rows() != n_outputs() || D_yu.cols() != n_inputs())
            throw DimMismatch("D_yu must be n_y x n_u");
        if (D_yw.rows() != n_outputs() || D_yw.cols() != n_w())
            throw DimMismatch("D_yw must be n_y x n_w");
        net.validate();
        if (net.n_in() != n_z() || net.n_out() != n_w())
            throw DimMismatch("net dimensions must match (n_z, n_w)");
    }

    /// The linear subsystem seen from u to y with the nonlinear path removed.
    LtiStateSpace linear_part() const { return LtiStateSpace{A, B_u, C_y, D_yu}; }
};

/// Full trajectory of one simulation. When the closed loop blows up the
/// matrices are truncated to the samples computed before the first non-finite
/// value and diverged_at holds that sample index.
struct SimResult {
    Eigen::MatrixXd y;  // N x n_y
    Eigen::MatrixXd z;  // N x n_z
    Eigen::MatrixXd w;  // N x n_w
    Eigen::MatrixXd x;  // N x n_x
    std::optional<Eigen::Index> diverged_at;

    bool ok() const { return !diverged_at.has_value(); }
};

namespace detail {

inline void truncate_rows(Eigen::MatrixXd& m, Eigen::Index rows) { m.conservativeResize(rows, Eigen::NoChange); }

} // namespace detail

/// Explicit forward recursion of the closed loop; O(N) steps, no implicit
/// equation is ever solved.
inline SimResult simulate(const NlLfrModel& model, const Eigen::MatrixXd& u,
                          const Eigen::VectorXd& x0) {
    model.validate();
    if (u.cols() != model.n_inputs()) throw DimMismatch("input channel count mismatch");
    if (x0.size() != model.n_states()) throw DimMismatch("x0 length mismatch");

    const Eigen::Index n = u.rows();
    SimResult out;
    out.y.resize(n, model.n_outputs());
    out.z.resize(n, model.n_z());
    out.w.resize(n, model.n_w());
    out.x.resize(n, model.n_states());

    Eigen::VectorXd x = x0, a, s, ds;
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto uk = u.row(k).transpose();
        Eigen::VectorXd z = model.C_z * x + model.D_zu * uk;
        a = model.net.W_z * z + model.net.b_z;
        activation_eval(model.net.activation, a, s, ds);
        Eigen::VectorXd w = model.net.W_w * s + model.net.b_w;
        Eigen::VectorXd y = model.C_y * x + model.D_yu * uk + model.D_yw * w;
        Eigen::VectorXd x_next = model.A * x + model.B_u * uk + model.B_w * w;
        if (!z.allFinite() || !w.allFinite() || !y.allFinite() || !x_next.allFinite()) {
            out.diverged_at = k;
            detail::truncate_rows(out.y, k);
            detail::truncate_rows(out.z, k);
            detail::truncate_rows(out.w, k);
            detail::truncate_rows(out.x, k);
            return out;
        }
        out.x.row(k) = x.transpose();
        out.z.row(k) = z.transpose();
        out.w.row(k) = w.transpose();
        out.y.row(k) = y.transpose();
        x = std::move(x_next);
    }
    return out;
}

/// Column-major slice layout of the flat parameter vector. The block order is
/// fixed and documented here; pack and unpack are exact inverses:
///   [vec(A) vec(B_u) vec(B_w) vec(C_z) vec(C_y) vec(D_zu) vec(D_yu) vec(D_yw)
///    vec(W_z) b_z vec(W_w) b_w (x0)]
struct ParamLayout {
    Eigen::Index n_x = 0, n_u = 0, n_y = 0, n_z = 0, n_w = 0, n_n = 0;
    Activation activation = Activation::Tanh;
    bool has_x0 = false;

    Eigen::Index off_A() const { return 0; }
    Eigen::Index off_Bu() const { return off_A() + n_x * n_x; }
    Eigen::Index off_Bw() const { return off_Bu() + n_x * n_u; }
    Eigen::Index off_Cz() const { return off_Bw() + n_x * n_w; }
    Eigen::Index off_Cy() const { return off_Cz() + n_z * n_x; }
    Eigen::Index off_Dzu() const { return off_Cy() + n_y * n_x; }
    Eigen::Index off_Dyu() const { return off_Dzu() + n_z * n_u; }
    Eigen::Index off_Dyw() const { return off_Dyu() + n_y * n_u; }
    Eigen::Index off_Wz() const { return off_Dyw() + n_y * n_w; }
    Eigen::Index off_bz() const { return off_Wz() + n_n * n_z; }
    Eigen::Index off_Ww() const { return off_bz() + n_n; }
    Eigen::Index off_bw() const { return off_Ww() + n_w * n_n; }
    Eigen::Index off_x0() const { return off_bw() + n_w; }
    Eigen::Index size() const { return off_x0() + (has_x0 ? n_x : 0); }

    static ParamLayout of(const NlLfrModel& m, bool with_x0) {
        return ParamLayout{m.n_states(), m.n_inputs(), m.n_outputs(), m.n_z(), m.n_w(),
                           m.net.n_neurons(), m.net.activation, with_x0};
    }
};

inline Eigen::VectorXd pack(const NlLfrModel& m, const Eigen::VectorXd* x0 = nullptr) {
    m.validate();
    const ParamLayout lay = ParamLayout::of(m, x0 != nullptr);
    Eigen::VectorXd theta(lay.size());
    const auto put = [&theta](Eigen::Index off, const Eigen::MatrixXd& mat) {
        theta.segment(off, mat.size()) = Eigen::Map<const Eigen::VectorXd>(mat.data(), mat.size());
    };
    put(lay.off_A(), m.A);
    put(lay.off_Bu(), m.B_u);
    put(lay.off_Bw(), m.B_w);
    put(lay.off_Cz(), m.C_z);
    put(lay.off_Cy(), m.C_y);
    put(lay.off_Dzu(), m.D_zu);
    put(lay.off_Dyu(), m.D_yu);
    put(lay.off_Dyw(), m.D_yw);
    put(lay.off_Wz(), m.net.W_z);
    theta.segment(lay.off_bz(), lay.n_n) = m.net.b_z;
    put(lay.off_Ww(), m.net.W_w);
    theta.segment(lay.off_bw(), lay.n_w) = m.net.b_w;
    if (x0) theta.segment(lay.off_x0(), lay.n_x) = *x0;
    return theta;
}

inline std::pair<NlLfrModel, Eigen::VectorXd> unpack(const Eigen::VectorXd& theta,
                                                     const ParamLayout& lay) {
    if (theta.size() != lay.size())
        throw LayoutError("parameter vector has length " + std::to_string(theta.size()) +
                          ", layout expects " + std::to_string(lay.size()));
    const auto get = [&theta](Eigen::Index off, Eigen::Index rows, Eigen::Index cols) {
        return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(theta.data() + off, rows, cols));
    };
    NlLfrModel m;
    m.A = get(lay.off_A(), lay.n_x, lay.n_x);
    m.B_u = get(lay.off_Bu(), lay.n_x, lay.n_u);
    m.B_w = get(lay.off_Bw(), lay.n_x, lay.n_w);
    m.C_z = get(lay.off_Cz(), lay.n_z, lay.n_x);
    m.C_y = get(lay.off_Cy(), lay.n_y, lay.n_x);
    m.D_zu = get(lay.off_Dzu(), lay.n_z, lay.n_u);
    m.D_yu = get(lay.off_Dyu(), lay.n_y, lay.n_u);
    m.D_yw = get(lay.off_Dyw(), lay.n_y, lay.n_w);
    m.net.W_z = get(lay.off_Wz(), lay.n_n, lay.n_z);
    m.net.b_z = theta.segment(lay.off_bz(), lay.n_n);
    m.net.W_w = get(lay.off_Ww(), lay.n_w, lay.n_n);
    m.net.b_w = theta.segment(lay.off_bw(), lay.n_w);
    m.net.activation = lay.activation;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(lay.n_x);
    if (lay.has_x0) x0 = theta.segment(lay.off_x0(), lay.n_x);
    return {std::move(m), std::move(x0)};
}

struct JacobianResult {
    Eigen::MatrixXd y;  // N x n_y simulated output
    Eigen::MatrixXd J;  // (N*n_y) x n_theta, row k*n_y+i is dyhat_i(k)/dtheta_j
    std::optional<Eigen::Index> diverged_at;

    bool ok() const { return !diverged_at.has_value(); }
};

/// Exact output Jacobian by forward sensitivity propagation.
///
/// The state sensitivity S_x = dx/dtheta is carried through the recursion with
/// the chain rule; the nonlinear block contributes through its input Jacobian
/// W_w diag(sigma') W_z and through the direct derivatives of its own weights.
/// No finite differences anywhere; cost is O(N * n_x * n_theta) time and
/// O(n_x * n_theta) working memory.
inline JacobianResult output_jacobian(const NlLfrModel& model, const Eigen::MatrixXd& u,
                                      const Eigen::VectorXd& x0, bool estimate_x0) {
    model.validate();
    if (u.cols() != model.n_inputs()) throw DimMismatch("input channel count mismatch");
    if (x0.size() != model.n_states()) throw DimMismatch("x0 length mismatch");

    const ParamLayout lay = ParamLayout::of(model, estimate_x0);
    const Eigen::Index nx = lay.n_x, nu = lay.n_u, ny = lay.n_y, nz = lay.n_z, nw = lay.n_w,
                       nn = lay.n_n, nth = lay.size();
    const Eigen::Index n = u.rows();

    JacobianResult out;
    out.y.resize(n, ny);
    out.J.resize(n * ny, nth);

    Eigen::MatrixXd Sx = Eigen::MatrixXd::Zero(nx, nth);
    if (estimate_x0) Sx.block(0, lay.off_x0(), nx, nx).setIdentity();
    Eigen::VectorXd x = x0, a, s, ds;
    Eigen::MatrixXd Sz(nz, nth), Sa(nn, nth), Sw(nw, nth), Sy(ny, nth), Sx_next(nx, nth);

    for (Eigen::Index k = 0; k < n; ++k) {
        const auto uk = u.row(k).transpose();
        Eigen::VectorXd z = model.C_z * x + model.D_zu * uk;
        a = model.net.W_z * z + model.net.b_z;
        activation_eval(model.net.activation, a, s, ds);
        Eigen::VectorXd w = model.net.W_w * s + model.net.b_w;
        Eigen::VectorXd y = model.C_y * x + model.D_yu * uk + model.D_yw * w;
        Eigen::VectorXd x_next = model.A * x + model.B_u * uk + model.B_w * w;
        if (!z.allFinite() || !w.allFinite() || !y.allFinite() || !x_next.allFinite()) {
            out.diverged_at = k;
            detail::truncate_rows(out.y, k);
            out.J.conservativeResize(k * ny, Eigen::NoChange);
            return out;
        }
        out.y.row(k) = y.transpose();

        Sz.noalias() = model.C_z * Sx;
        for (Eigen::Index j = 0; j < nx; ++j)
            for (Eigen::Index i = 0; i < nz; ++i) Sz(i, lay.off_Cz() + j * nz + i) += x(j);
        for (Eigen::Index j = 0; j < nu; ++j)
            for (Eigen::Index i = 0; i < nz; ++i) Sz(i, lay.off_Dzu() + j * nz + i) += uk(j);

        Sa.noalias() = model.net.W_z * Sz;
        for (Eigen::Index j = 0; j < nz; ++j)
            for (Eigen::Index i = 0; i < nn; ++i) Sa(i, lay.off_Wz() + j * nn + i) += z(j);
        for (Eigen::Index i = 0; i < nn; ++i) Sa(i, lay.off_bz() + i) += 1.0;
        Sa = ds.asDiagonal() * Sa;  // now holds S_h

        Sw.noalias() = model.net.W_w * Sa;
        for (Eigen::Index j = 0; j < nn; ++j)
            for (Eigen::Index i = 0; i < nw; ++i) Sw(i, lay.off_Ww() + j * nw + i) += s(j);
        for (Eigen::Index i = 0; i < nw; ++i) Sw(i, lay.off_bw() + i) += 1.0;

        Sy.noalias() = model.C_y * Sx;
        Sy.noalias() += model.D_yw * Sw;
        for (Eigen::Index j = 0; j < nx; ++j)
            for (Eigen::Index i = 0; i < ny; ++i) Sy(i, lay.off_Cy() + j * ny + i) += x(j);
        for (Eigen::Index j = 0; j < nu; ++j)
            for (Eigen::Index i = 0; i < ny; ++i) Sy(i, lay.off_Dyu() + j * ny + i) += uk(j);
        for (Eigen::Index j = 0; j < nw; ++j)
            for (Eigen::Index i = 0; i < ny; ++i) Sy(i, lay.off_Dyw() + j * ny + i) += w(j);
        out.J.middleRows(k * ny, ny) = Sy;

        Sx_next.noalias() = model.A * Sx;
        Sx_next.noalias() += model.B_w * Sw;
        for (Eigen::Index j = 0; j < nx; ++j)
            for (Eigen::Index i = 0; i < nx; ++i) Sx_next(i, lay.off_A() + j * nx + i) += x(j);
        for (Eigen::Index j = 0; j < nu; ++j)
            for (Eigen::Index i = 0; i < nx; ++i) Sx_next(i, lay.off_Bu() + j * nx + i) += uk(j);
        for (Eigen::Index j = 0; j < nw; ++j)
            for (Eigen::Index i = 0; i < nx; ++i) Sx_next(i, lay.off_Bw() + j * nx + i) += w(j);

        x = std::move(x_next);
        Sx.swap(Sx_next);
    }
    return out;
}

} // namespace lfrid
