#include <catch2/catch_amalgamated.hpp>

#include "lfrid/nllfr.hpp"
#include "lfrid/random.hpp"

using namespace lfrid;

namespace {

NeuralNet random_net(Rng& rng, Eigen::Index n_z, Eigen::Index n_w, Eigen::Index n_n,
                     Activation act, double scale = 1.0) {
    NeuralNet net;
    net.activation = act;
    net.W_z.resize(n_n, n_z);
    net.b_z.resize(n_n);
    net.W_w.resize(n_w, n_n);
    net.b_w.resize(n_w);
    for (Eigen::Index i = 0; i < net.W_z.size(); ++i)
        net.W_z.data()[i] = scale * rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < n_n; ++i) net.b_z(i) = scale * rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < net.W_w.size(); ++i)
        net.W_w.data()[i] = scale * rng.uniform(-1.0, 1.0);
    for (Eigen::Index i = 0; i < n_w; ++i) net.b_w(i) = scale * rng.uniform(-1.0, 1.0);
    return net;
}

/// Random stable model; A is rescaled to the requested spectral radius and the
/// feedback gain kept small enough that short simulations stay bounded.
NlLfrModel random_stable_model(std::uint64_t seed, Eigen::Index n_x, Eigen::Index n_u,
                               Eigen::Index n_y, Eigen::Index n_z, Eigen::Index n_w,
                               Eigen::Index n_n, Activation act = Activation::Tanh) {
    Rng rng(seed);
    const auto draw = [&rng](Eigen::Index r, Eigen::Index c, double s) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = s * rng.uniform(-1.0, 1.0);
        return m;
    };
    NlLfrModel m;
    m.A = draw(n_x, n_x, 1.0);
    const double rho = spectral_radius(m.A);
    if (rho > 0.0) m.A *= 0.6 / rho;
    m.B_u = draw(n_x, n_u, 1.0);
    m.B_w = draw(n_x, n_w, 0.3);
    m.C_z = draw(n_z, n_x, 1.0);
    m.C_y = draw(n_y, n_x, 1.0);
    m.D_zu = draw(n_z, n_u, 0.5);
    m.D_yu = draw(n_y, n_u, 0.5);
    m.D_yw = draw(n_y, n_w, 0.5);
    m.net = random_net(rng, n_z, n_w, n_n, act, 0.7);
    return m;
}

Eigen::MatrixXd multisine_like_input(std::uint64_t seed, Eigen::Index n, Eigen::Index n_u) {
    Rng rng(seed);
    Eigen::MatrixXd u(n, n_u);
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = rng.uniform(-1.0, 1.0);
    return u;
}

} // namespace

TEST_CASE("net with zero outer weights outputs its bias") {
    NeuralNet net;
    net.W_z = Eigen::MatrixXd::Random(4, 2);
    net.b_z = Eigen::VectorXd::Random(4);
    net.W_w = Eigen::MatrixXd::Zero(1, 4);
    net.b_w = Eigen::VectorXd::Constant(1, 0.37);
    for (int i = 0; i < 5; ++i) {
        const NnEval e = eval_nn(net, Eigen::VectorXd::Random(2));
        CHECK(e.w(0) == 0.37);
        CHECK(e.jac_z.isZero(0.0));
    }
}

TEST_CASE("scalar tanh net at the origin") {
    NeuralNet net;
    net.W_z = Eigen::MatrixXd::Constant(1, 1, 1.0);
    net.b_z = Eigen::VectorXd::Zero(1);
    net.W_w = Eigen::MatrixXd::Constant(1, 1, 1.0);
    net.b_w = Eigen::VectorXd::Zero(1);
    const NnEval e = eval_nn(net, Eigen::VectorXd::Zero(1));
    CHECK(e.w(0) == 0.0);
    CHECK(e.jac_z(0, 0) == 1.0);
}

TEST_CASE("net jacobian matches central finite differences") {
    for (const Activation act : {Activation::Tanh, Activation::RadialBasis}) {
        Rng rng(act == Activation::Tanh ? 21u : 22u);
        const NeuralNet net = random_net(rng, 3, 2, 6, act);
        Eigen::VectorXd z(3);
        z << 0.4, -0.9, 0.15;
        const NnEval e = eval_nn(net, z);

        const double step = 1e-6;
        for (Eigen::Index j = 0; j < 3; ++j) {
            Eigen::VectorXd zp = z, zm = z;
            zp(j) += step;
            zm(j) -= step;
            const Eigen::VectorXd fd = (eval_nn(net, zp).w - eval_nn(net, zm).w) / (2.0 * step);
            CHECK((e.jac_z.col(j) - fd).norm() / std::max(1.0, fd.norm()) < 1e-8);
        }
    }
}

TEST_CASE("disconnected nonlinear path reduces to the LTI simulation") {
    NlLfrModel m = random_stable_model(31, 3, 2, 2, 2, 1, 5);
    m.B_w.setZero();
    m.D_yw.setZero();
    const Eigen::MatrixXd u = multisine_like_input(32, 200, 2);
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(3);

    const SimResult nl = simulate(m, u, x0);
    const LtiSimResult lin = simulate_lti(m.linear_part(), u, x0);
    REQUIRE(nl.ok());
    CHECK(nl.y == lin.y);  // exactly, not approximately
    CHECK(nl.x == lin.x);
}

TEST_CASE("two-step scalar recursion matches the hand-computed trace") {
    NlLfrModel m;
    m.A = Eigen::MatrixXd::Constant(1, 1, 0.5);
    m.B_u = Eigen::MatrixXd::Constant(1, 1, 1.0);
    m.B_w = Eigen::MatrixXd::Constant(1, 1, 0.25);
    m.C_z = Eigen::MatrixXd::Constant(1, 1, 2.0);
    m.C_y = Eigen::MatrixXd::Constant(1, 1, 1.0);
    m.D_zu = Eigen::MatrixXd::Constant(1, 1, 0.1);
    m.D_yu = Eigen::MatrixXd::Constant(1, 1, 0.0);
    m.D_yw = Eigen::MatrixXd::Constant(1, 1, 0.3);
    m.net.W_z = Eigen::MatrixXd::Constant(1, 1, 0.7);
    m.net.b_z = Eigen::VectorXd::Constant(1, 0.1);
    m.net.W_w = Eigen::MatrixXd::Constant(1, 1, 0.9);
    m.net.b_w = Eigen::VectorXd::Constant(1, -0.2);

    Eigen::MatrixXd u(2, 1);
    u << 1.0, -1.0;
    const SimResult sim = simulate(m, u, Eigen::VectorXd::Constant(1, 0.4));
    REQUIRE(sim.ok());

    // scalar recursion by hand: z0 = 2*0.4 + 0.1 = 0.9, w0 = 0.9*tanh(0.73) - 0.2,
    // y0 = 0.4 + 0.3*w0, x1 = 0.2 + 1 + 0.25*w0, then the same with u = -1
    CHECK(sim.z(0, 0) == Catch::Approx(0.9).margin(1e-15));
    CHECK(sim.y(0, 0) == Catch::Approx(0.5082276443845375).margin(1e-14));
    CHECK(sim.z(1, 0) == Catch::Approx(2.4803794073075625).margin(1e-14));
    CHECK(sim.y(1, 0) == Catch::Approx(1.4868072633606515).margin(1e-14));
}

TEST_CASE("identity activation equals the analytically closed loop") {
    NlLfrModel m = random_stable_model(41, 2, 1, 1, 2, 1, 3, Activation::Identity);
    m.net.b_z.setZero();
    m.net.b_w.setZero();

    // with sigma(a) = a the loop is linear: w = K z with K = W_w W_z
    const Eigen::MatrixXd K = m.net.W_w * m.net.W_z;
    LtiStateSpace closed;
    closed.A = m.A + m.B_w * K * m.C_z;
    closed.B = m.B_u + m.B_w * K * m.D_zu;
    closed.C = m.C_y + m.D_yw * K * m.C_z;
    closed.D = m.D_yu + m.D_yw * K * m.D_zu;

    const Eigen::MatrixXd u = multisine_like_input(42, 300, 1);
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
    if (spectral_radius(closed.A) < 0.95) {
        const SimResult nl = simulate(m, u, x0);
        const LtiSimResult lin = simulate_lti(closed, u, x0);
        REQUIRE(nl.ok());
        CHECK((nl.y - lin.y).cwiseAbs().maxCoeff() < 1e-10);
    } else {
        FAIL("test fixture produced an unstable closed loop; adjust the seed");
    }
}

TEST_CASE("divergence is reported with the partial trajectory") {
    NlLfrModel m = random_stable_model(51, 1, 1, 1, 1, 1, 2, Activation::Identity);
    m.A(0, 0) = 10.0;  // wildly unstable linear core, overflows around k = 300
    m.B_u(0, 0) = 1.0;
    m.B_w.setZero();
    m.net.W_w.setZero();
    const Eigen::MatrixXd u = Eigen::MatrixXd::Ones(2000, 1);

    const SimResult sim = simulate(m, u, Eigen::VectorXd::Zero(1));
    CHECK_FALSE(sim.ok());
    REQUIRE(sim.diverged_at.has_value());
    CHECK(*sim.diverged_at > 100);
    CHECK(*sim.diverged_at < 2000);
    CHECK(sim.y.rows() == *sim.diverged_at);
    CHECK(sim.y.allFinite());
    CHECK(sim.x.rows() == *sim.diverged_at);
}

TEST_CASE("pack and unpack are exact inverses with an isolated layout") {
    const NlLfrModel m = random_stable_model(61, 3, 2, 1, 2, 2, 4);
    const ParamLayout lay = ParamLayout::of(m, false);

    // documented length arithmetic
    const Eigen::Index expected = 3 * 3 + 3 * 2 + 3 * 2 + 2 * 3 + 1 * 3 + 2 * 2 + 1 * 2 +
                                  1 * 2 + 4 * 2 + 4 + 2 * 4 + 2;
    REQUIRE(lay.size() == expected);

    const Eigen::VectorXd theta = pack(m);
    auto [m2, x0] = unpack(theta, lay);
    CHECK(pack(m2) == theta);
    CHECK(m2.A == m.A);
    CHECK(m2.net.W_z == m.net.W_z);

    // perturbing the A slice changes only A
    Eigen::VectorXd theta_p = theta;
    theta_p(lay.off_A() + 1) += 1.0;
    auto [m3, x0_p] = unpack(theta_p, lay);
    CHECK(m3.A != m.A);
    CHECK(m3.B_u == m.B_u);
    CHECK(m3.C_z == m.C_z);
    CHECK(m3.net.W_z == m.net.W_z);

    CHECK_THROWS_AS(unpack(Eigen::VectorXd::Zero(lay.size() + 1), lay), LayoutError);
}

namespace {

/// Central finite-difference check of the analytic Jacobian; returns the worst
/// column error relative to the column norm.
double jacobian_fd_error(const NlLfrModel& m, const Eigen::MatrixXd& u, const Eigen::VectorXd& x0,
                         bool estimate_x0) {
    const ParamLayout lay = ParamLayout::of(m, estimate_x0);
    const JacobianResult jac = output_jacobian(m, u, x0, estimate_x0);
    REQUIRE(jac.ok());

    const Eigen::VectorXd theta = pack(m, estimate_x0 ? &x0 : nullptr);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < lay.size(); ++j) {
        const double step = 1e-6 * std::max(1.0, std::abs(theta(j)));
        Eigen::VectorXd tp = theta, tm = theta;
        tp(j) += step;
        tm(j) -= step;
        auto [mp, x0p] = unpack(tp, lay);
        auto [mm, x0m] = unpack(tm, lay);
        const SimResult sp = simulate(mp, u, estimate_x0 ? x0p : x0);
        const SimResult sm = simulate(mm, u, estimate_x0 ? x0m : x0);
        REQUIRE(sp.ok());
        REQUIRE(sm.ok());
        const Eigen::MatrixXd fd = (sp.y - sm.y) / (2.0 * step);
        double err = 0.0, norm = 0.0;
        for (Eigen::Index k = 0; k < fd.rows(); ++k)
            for (Eigen::Index i = 0; i < fd.cols(); ++i) {
                const double a = jac.J(k * fd.cols() + i, j);
                err += (a - fd(k, i)) * (a - fd(k, i));
                norm += fd(k, i) * fd(k, i);
            }
        worst = std::max(worst, std::sqrt(err) / std::max(1e-12, std::sqrt(norm)));
    }
    return worst;
}

} // namespace

TEST_CASE("output jacobian matches central finite differences") {
    const NlLfrModel m = random_stable_model(71, 2, 1, 1, 1, 1, 3);
    const Eigen::MatrixXd u = multisine_like_input(72, 50, 1);
    Eigen::VectorXd x0(2);
    x0 << 0.1, -0.2;
    CHECK(jacobian_fd_error(m, u, x0, true) < 1e-6);
    CHECK(jacobian_fd_error(m, u, x0, false) < 1e-6);
}

TEST_CASE("structural zero columns at the disconnected initialization point") {
    NlLfrModel m = random_stable_model(81, 2, 1, 1, 2, 1, 3);
    m.B_w.setZero();
    m.D_yw.setZero();
    m.net.b_w.setZero();
    const Eigen::MatrixXd u = multisine_like_input(82, 60, 1);
    const ParamLayout lay = ParamLayout::of(m, false);
    const JacobianResult jac = output_jacobian(m, u, Eigen::VectorXd::Zero(2), false);
    REQUIRE(jac.ok());

    // the net cannot influence y: all W_z, b_z, W_w columns vanish
    CHECK(jac.J.middleCols(lay.off_Wz(), lay.n_n * lay.n_z).isZero(0.0));
    CHECK(jac.J.middleCols(lay.off_bz(), lay.n_n).isZero(0.0));
    CHECK(jac.J.middleCols(lay.off_Ww(), lay.n_w * lay.n_n).isZero(0.0));
    // while the couplings that would reconnect it do not
    CHECK(jac.J.middleCols(lay.off_Bw(), lay.n_x * lay.n_w).norm() > 1e-6);
    CHECK(jac.J.middleCols(lay.off_Dyw(), lay.n_y * lay.n_w).norm() > 1e-6);
}

TEST_CASE("pure-LTI columns agree with the independent LTI sensitivity recursion") {
    NlLfrModel m = random_stable_model(91, 2, 1, 1, 1, 1, 2);
    m.B_w.setZero();
    m.D_yw.setZero();
    const Eigen::MatrixXd u = multisine_like_input(92, 80, 1);
    Eigen::VectorXd x0(2);
    x0 << 0.05, 0.3;

    const ParamLayout lay = ParamLayout::of(m, true);
    const JacobianResult jac = output_jacobian(m, u, x0, true);
    REQUIRE(jac.ok());

    const LtiStateSpace lin = m.linear_part();
    const LtiParamLayout lti_lay{2, 1, 1, true};
    const LtiJacobianResult lti_jac = lti_output_jacobian(lin, u, x0, true);

    const auto compare_block = [&](Eigen::Index off_nl, Eigen::Index off_lti, Eigen::Index n) {
        CHECK((jac.J.middleCols(off_nl, n) - lti_jac.J.middleCols(off_lti, n)).cwiseAbs().maxCoeff()
              < 1e-12);
    };
    compare_block(lay.off_A(), lti_lay.off_A(), 4);
    compare_block(lay.off_Bu(), lti_lay.off_B(), 2);
    compare_block(lay.off_Cy(), lti_lay.off_C(), 2);
    compare_block(lay.off_Dyu(), lti_lay.off_D(), 1);
    compare_block(lay.off_x0(), lti_lay.off_x0(), 2);
}
