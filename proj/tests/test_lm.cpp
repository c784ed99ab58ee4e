#include <catch2/catch_amalgamated.hpp>

#include "lfrid/lm.hpp"

using namespace lfrid;

namespace {

bool accepted_costs_monotone(const FitReport& r) {
    double last = std::numeric_limits<double>::infinity();
    for (const auto& it : r.iterations) {
        if (!it.accepted) continue;
        if (it.trial_cost > last) return false;
        last = it.trial_cost;
    }
    return true;
}

} // namespace

TEST_CASE("linear residual converges to the target in a handful of iterations") {
    Eigen::VectorXd target(3);
    target << 1.0, -2.0, 0.5;
    const ResidualFn fn = [&target](const Eigen::VectorXd& th, Eigen::VectorXd& r,
                                    Eigen::MatrixXd* J) {
        r = th - target;
        if (J) *J = Eigen::MatrixXd::Identity(3, 3);
        return true;
    };
    Eigen::VectorXd theta0(3);
    theta0 << 10.0, 3.0, -7.0;
    Eigen::VectorXd theta;
    LmOptions opts;
    const FitReport report = lm_minimize(fn, theta0, opts, &theta);

    CHECK(report.final_cost < 1e-20);
    CHECK(report.accepted_steps() <= 5);
    CHECK((theta - target).norm() < 1e-10);
    CHECK(accepted_costs_monotone(report));
}

TEST_CASE("Rosenbrock valley is solved to the analytic minimum") {
    const ResidualFn fn = [](const Eigen::VectorXd& th, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        r.resize(2);
        r << 1.0 - th(0), 10.0 * (th(1) - th(0) * th(0));
        if (J) {
            J->resize(2, 2);
            *J << -1.0, 0.0, -20.0 * th(0), 10.0;
        }
        return true;
    };
    Eigen::VectorXd theta0(2);
    theta0 << -1.2, 1.0;
    Eigen::VectorXd theta;
    const FitReport report = lm_minimize(fn, theta0, LmOptions{}, &theta);

    CHECK(report.final_cost < 1e-16);
    CHECK(std::abs(theta(0) - 1.0) < 1e-8);
    CHECK(std::abs(theta(1) - 1.0) < 1e-8);
    CHECK(accepted_costs_monotone(report));
}

TEST_CASE("rank-deficient parameterization converges with truncated rank 1") {
    // r = theta_1 + theta_2 - 1: a 2-parameter redundancy like an
    // over-parameterized model class
    const ResidualFn fn = [](const Eigen::VectorXd& th, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        r.resize(1);
        r(0) = th(0) + th(1) - 1.0;
        if (J) {
            J->resize(1, 2);
            *J << 1.0, 1.0;
        }
        return true;
    };
    Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd theta;
    const FitReport report = lm_minimize(fn, theta0, LmOptions{}, &theta);

    CHECK(report.final_cost < 1e-20);
    for (const auto& it : report.iterations) CHECK(it.rank == 1);
    CHECK(std::abs(theta(0) + theta(1) - 1.0) < 1e-10);
}

TEST_CASE("duplicated parameter does not change the projected iterates") {
    // nonlinear scalar problem in phi, solved directly and with phi split into
    // theta_1 + theta_2; the SVD truncation plus sigma-scaled damping must give
    // identical projected steps
    const auto resid = [](double phi, Eigen::VectorXd& r, Eigen::VectorXd* dr) {
        r.resize(2);
        r << phi - 2.0, 0.5 * phi * phi - 0.3;
        if (dr) {
            dr->resize(2);
            *dr << 1.0, phi;
        }
    };
    std::vector<double> phis_direct, phis_dup;
    const ResidualFn direct = [&](const Eigen::VectorXd& th, Eigen::VectorXd& r,
                                  Eigen::MatrixXd* J) {
        Eigen::VectorXd dr;
        resid(th(0), r, J ? &dr : nullptr);
        if (J) *J = dr;
        return true;
    };
    const ResidualFn duplicated = [&](const Eigen::VectorXd& th, Eigen::VectorXd& r,
                                      Eigen::MatrixXd* J) {
        Eigen::VectorXd dr;
        resid(th(0) + th(1), r, J ? &dr : nullptr);
        if (J) {
            J->resize(2, 2);
            J->col(0) = dr;
            J->col(1) = dr;
        }
        return true;
    };

    LmOptions opts;
    opts.max_iter = 12;
    Eigen::VectorXd th_direct(1), th_dup(2);
    th_direct << 0.3;
    th_dup << 0.3, 0.0;
    const FitReport rep_a = lm_minimize(direct, th_direct, opts, &th_direct);
    const FitReport rep_b = lm_minimize(duplicated, th_dup, opts, &th_dup);

    REQUIRE(rep_a.iterations.size() == rep_b.iterations.size());
    for (std::size_t i = 0; i < rep_a.iterations.size(); ++i) {
        CHECK(rep_a.iterations[i].accepted == rep_b.iterations[i].accepted);
        if (rep_a.iterations[i].accepted)
            CHECK(rep_a.iterations[i].trial_cost ==
                  Catch::Approx(rep_b.iterations[i].trial_cost).epsilon(1e-12));
    }
    CHECK(std::abs(th_direct(0) - (th_dup(0) + th_dup(1))) < 1e-10);
}

TEST_CASE("failing trial points are rejected, raise damping, and never abort") {
    // evaluation "diverges" above theta = 3, so the first optimistic trials fail
    const ResidualFn fn = [](const Eigen::VectorXd& th, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        if (th(0) > 3.0) return false;
        r.resize(1);
        r(0) = th(0) - 10.0;
        if (J) {
            J->resize(1, 1);
            (*J)(0, 0) = 1.0;
        }
        return true;
    };
    Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(1);
    Eigen::VectorXd theta;
    FitReport report;
    REQUIRE_NOTHROW(report = lm_minimize(fn, theta0, LmOptions{}, &theta));

    CHECK(report.failed_trials > 0);
    CHECK(report.final_cost < report.initial_cost);
    CHECK(theta(0) <= 3.0);
    CHECK(theta(0) > 2.0);  // crept up to the feasible boundary
    CHECK(accepted_costs_monotone(report));
}

TEST_CASE("failure at the starting point throws InvalidStart") {
    const ResidualFn fn = [](const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd*) {
        return false;
    };
    CHECK_THROWS_AS(lm_minimize(fn, Eigen::VectorXd::Zero(2), LmOptions{}, nullptr),
                    InvalidStart);
}

TEST_CASE("identical inputs give an identical report") {
    const ResidualFn fn = [](const Eigen::VectorXd& th, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
        r.resize(2);
        r << 1.0 - th(0), 10.0 * (th(1) - th(0) * th(0));
        if (J) {
            J->resize(2, 2);
            *J << -1.0, 0.0, -20.0 * th(0), 10.0;
        }
        return true;
    };
    Eigen::VectorXd theta0(2);
    theta0 << -1.2, 1.0;
    Eigen::VectorXd ta, tb;
    const FitReport a = lm_minimize(fn, theta0, LmOptions{}, &ta);
    const FitReport b = lm_minimize(fn, theta0, LmOptions{}, &tb);

    REQUIRE(a.iterations.size() == b.iterations.size());
    CHECK(ta == tb);
    for (std::size_t i = 0; i < a.iterations.size(); ++i) {
        CHECK(a.iterations[i].cost == b.iterations[i].cost);
        CHECK(a.iterations[i].lambda == b.iterations[i].lambda);
        CHECK(a.iterations[i].accepted == b.iterations[i].accepted);
    }
}
