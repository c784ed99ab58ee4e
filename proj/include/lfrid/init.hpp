#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "lfrid/errors.hpp"
#include "lfrid/lti.hpp"
#include "lfrid/nllfr.hpp"
#include "lfrid/random.hpp"
#include "lfrid/signals.hpp"

namespace lfrid {

struct InitSpec {
    Eigen::Index n_z = 2;
    Eigen::Index n_w = 1;
    Eigen::Index n_n = 15;
    Activation activation = Activation::Tanh;
    std::uint64_t seed = 0;
    double uniform_bound = 1.0;  // half-width of the uniform draws

    void validate() const {
        if (n_z < 1 || n_w < 1 || n_n < 1) throw InvalidSpec("n_z, n_w, n_n must be >= 1");
        if (!(uniform_bound > 0.0)) throw InvalidSpec("uniform_bound must be positive");
    }
};

/// Diagonal scalings used by the initializer, stored as inverse sample
/// standard deviations (all entries positive). Multiplying a signal by the
/// corresponding entry normalizes it to unit standard deviation.
struct NormalizingTransforms {
    Eigen::VectorXd inv_std_x;      // n_x, the diagonal of T
    Eigen::VectorXd inv_std_u;      // n_u
    Eigen::VectorXd inv_std_zstar;  // n_z
};

namespace detail {

constexpr double k_eps_std = 1e-12;

/// State trajectory used for normalization statistics. For periodic records
/// the input is run twice and the second pass is kept, so the statistics are
/// taken in steady state and transients do not bias them; aperiodic data is
/// used as-is from zero initial state.
inline Eigen::MatrixXd states_for_statistics(const LtiStateSpace& ss, const Eigen::MatrixXd& u,
                                             bool periodic_steady_state) {
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(ss.n_states());
    if (!periodic_steady_state) return simulate_lti(ss, u, x0).x;
    Eigen::MatrixXd u2(2 * u.rows(), u.cols());
    u2 << u, u;
    return simulate_lti(ss, u2, x0).x.bottomRows(u.rows());
}

} // namespace detail

/// Similarity-transform the model so every state has unit sample standard
/// deviation on the given input (Eq-style: A -> T A T^-1, B -> T B, C -> C T^-1
/// with T = diag(1/std(x))). The input-output map is unchanged.
inline std::pair<LtiStateSpace, Eigen::VectorXd> normalize_bla(const LtiStateSpace& bla,
                                                               const Eigen::MatrixXd& u,
                                                               bool periodic_steady_state,
                                                               double eps_stab = 1e-9) {
    bla.validate();
    if (!is_stable(bla, eps_stab))
        throw UnstableBla("spectral radius " + std::to_string(spectral_radius(bla.A)));

    const Eigen::MatrixXd x = detail::states_for_statistics(bla, u, periodic_steady_state);
    const Eigen::VectorXd std_x = std_per_channel(x);
    for (Eigen::Index i = 0; i < std_x.size(); ++i)
        if (!(std_x(i) > detail::k_eps_std))
            throw DegenerateState("state " + std::to_string(i) +
                                  " has no variance on this input (unexcited or unreachable)");

    const Eigen::VectorXd t = std_x.cwiseInverse();
    LtiStateSpace out;
    out.A = t.asDiagonal() * bla.A * std_x.asDiagonal();
    out.B = t.asDiagonal() * bla.B;
    out.C = bla.C * std_x.asDiagonal();
    out.D = bla.D;
    return {std::move(out), t};
}

inline std::pair<LtiStateSpace, Eigen::VectorXd> normalize_bla(const LtiStateSpace& bla,
                                                               const SignalRecord& record) {
    return normalize_bla(bla, record.u, record.periodic());
}

struct InitResult {
    NlLfrModel model;
    NormalizingTransforms transforms;
};

namespace detail {

inline Eigen::MatrixXd draw_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                    double bound) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)  // column-major fill; draw order is part of the API
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-bound, bound);
    return m;
}

} // namespace detail

/// Build the initial NL-LFR model from a single BLA estimate.
///
/// The normalized BLA is embedded as (A, B_u, C_y, D_yu); B_w, D_yw and b_w
/// start at zero so the initial model reproduces the BLA output exactly and is
/// stable whenever the BLA is. The net weights W_w, W_z, b_z are drawn
/// uniformly (in that order, column-major). C_z and D_zu come from uniform
/// candidates C_* and D_+ rescaled so every channel of z = C_z x + D_zu u has
/// unit sample standard deviation over the estimation record:
///
///   D_* = D_+ diag(1/std(u)),   z_* = C_* x + D_* u,
///   C_z = diag(1/std(z_*)) C_*,  D_zu = diag(1/std(z_*)) D_*.
///
/// x is the normalized-BLA state trajectory on the same record (unit-std by
/// construction), taken in steady state for periodic records.
inline InitResult init_nllfr(const LtiStateSpace& bla, const Eigen::MatrixXd& u,
                             bool periodic_steady_state, const InitSpec& spec) {
    spec.validate();
    auto [nbla, inv_std_x] = normalize_bla(bla, u, periodic_steady_state);
    const Eigen::Index nx = nbla.n_states(), nu = nbla.n_inputs();

    const Eigen::VectorXd std_u = std_per_channel(u);
    for (Eigen::Index i = 0; i < nu; ++i)
        if (!(std_u(i) > detail::k_eps_std))
            throw DegenerateChannel("input channel " + std::to_string(i) + " has no variance");

    Rng rng(spec.seed);
    NlLfrModel m;
    m.A = nbla.A;
    m.B_u = nbla.B;
    m.C_y = nbla.C;
    m.D_yu = nbla.D;
    m.B_w = Eigen::MatrixXd::Zero(nx, spec.n_w);
    m.D_yw = Eigen::MatrixXd::Zero(nbla.n_outputs(), spec.n_w);
    m.net.activation = spec.activation;
    m.net.W_w = detail::draw_uniform(rng, spec.n_w, spec.n_n, spec.uniform_bound);
    m.net.W_z = detail::draw_uniform(rng, spec.n_n, spec.n_z, spec.uniform_bound);
    m.net.b_z = detail::draw_uniform(rng, spec.n_n, 1, spec.uniform_bound);
    m.net.b_w = Eigen::VectorXd::Zero(spec.n_w);

    const Eigen::MatrixXd c_star = detail::draw_uniform(rng, spec.n_z, nx, spec.uniform_bound);
    const Eigen::MatrixXd d_plus = detail::draw_uniform(rng, spec.n_z, nu, spec.uniform_bound);
    const Eigen::MatrixXd d_star = d_plus * std_u.cwiseInverse().asDiagonal();

    const Eigen::MatrixXd x_norm =
        detail::states_for_statistics(nbla, u, periodic_steady_state);
    const Eigen::MatrixXd z_star = x_norm * c_star.transpose() + u * d_star.transpose();
    const Eigen::VectorXd std_z = std_per_channel(z_star);
    for (Eigen::Index i = 0; i < std_z.size(); ++i)
        if (!(std_z(i) > detail::k_eps_std))
            throw DegenerateChannel("z candidate channel " + std::to_string(i) +
                                    " has no variance; redraw with another seed");

    m.C_z = std_z.cwiseInverse().asDiagonal() * c_star;
    m.D_zu = std_z.cwiseInverse().asDiagonal() * d_star;

    InitResult out;
    out.model = std::move(m);
    out.transforms.inv_std_x = std::move(inv_std_x);
    out.transforms.inv_std_u = std_u.cwiseInverse();
    out.transforms.inv_std_zstar = std_z.cwiseInverse();
    return out;
}

inline InitResult init_nllfr(const LtiStateSpace& bla, const SignalRecord& record,
                             const InitSpec& spec) {
    return init_nllfr(bla, record.u, record.periodic(), spec);
}

} // namespace lfrid
