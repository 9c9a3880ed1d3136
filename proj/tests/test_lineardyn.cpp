#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "sysid/atmosphere.hpp"
#include "sysid/dynsim.hpp"
#include "sysid/errors.hpp"
#include "sysid/lineardyn.hpp"
#include "sysid/verify.hpp"

using namespace sysid;

namespace {

// Modulus and damping of the complex root of the 2x2 short-period state matrix.
std::pair<double, double> eigen_mode(const DimensionalDerivatives& d) {
    Eigen::Matrix2d A;
    A << d.Z_alpha / d.U1, 1.0, d.M_alpha + d.M_alpha_dot * d.Z_alpha / d.U1, d.M_q + d.M_alpha_dot;
    const std::complex<double> s = A.eigenvalues()(0);
    return {std::abs(s), -s.real() / std::abs(s)};
}

// Symbolic partial of a polynomial model with respect to one argument.
double symbolic_partial(const GenericAeroModel& m, const AeroPoint& p, int which) {
    double sum = 0.0;
    for (const auto& t : m.terms) {
        int e[3] = {t.e.alpha, t.e.qtilde, t.e.delta_e};
        const double x[3] = {p.alpha, p.qtilde, p.delta_e};
        if (e[which] == 0) continue;
        double v = t.theta * e[which];
        e[which] -= 1;
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < e[k]; ++j) v *= x[k];
        sum += v;
    }
    return sum;
}

}  // namespace

TEST_CASE("one-DOF short period arithmetic") {
    auto r = one_dof_short_period(-4.0, 0.0);
    CHECK(r.omega_sp == 2.0);
    CHECK(r.zeta_sp == 0.0);
    CHECK(r.flag == ModeFlag::Oscillatory);
    r = one_dof_short_period(-4.0, -1.0);
    CHECK(r.zeta_sp == 0.25);
    r = one_dof_short_period(1.0, -1.0);
    CHECK(r.flag == ModeFlag::NonOscillatory);
    CHECK_FALSE(r.populated());

    // Roots of s^2 - M_adot s - M_a by companion eigensolve.
    Eigen::Matrix2d C;
    C << 0.0, 1.0, -4.0, -1.0;
    const auto s = C.eigenvalues()(0);
    CHECK(std::abs(std::abs(s) - 2.0) <= 1e-12);
    CHECK(std::abs(-s.real() / std::abs(s) - 0.25) <= 1e-12);
}

TEST_CASE("two-DOF short period arithmetic") {
    DimensionalDerivatives d;
    d.M_alpha = -4.0;
    d.M_q = -0.5;
    d.U1 = 100.0;
    d.Z_alpha = -0.5 * d.U1;
    d.M_alpha_dot = -0.1667;
    const auto r = two_dof_short_period(d);
    CHECK(r.omega_sp == doctest::Approx(std::sqrt(4.25)).epsilon(1e-14));
    CHECK(r.zeta_sp == doctest::Approx(1.1667 / (2.0 * std::sqrt(4.25))).epsilon(1e-14));

    DimensionalDerivatives flat;
    flat.M_alpha = 2.0;
    CHECK(two_dof_short_period(flat).flag == ModeFlag::NonOscillatory);
}

TEST_CASE("eigen oracle and reduction properties") {
    const auto e = verify::short_period_eigen(5);
    CHECK_MESSAGE(e.passed, verify::format(e));
    const auto r = verify::short_period_reduction(5);
    CHECK_MESSAGE(r.passed, verify::format(r));

    DimensionalDerivatives d;
    d.M_alpha = -7.3;
    d.M_alpha_dot = -0.4;
    const auto a = two_dof_short_period(d), b = one_dof_short_period(-7.3, -0.4);
    CHECK(a.omega_sp == b.omega_sp);
    CHECK(a.zeta_sp == b.zeta_sp);
}

TEST_CASE("M_q substitution") {
    DimensionalDerivatives d;
    d.M_alpha = -5.0;
    d.U1 = 150.0;
    d.Z_alpha = -300.0;
    const auto zero = short_period_with_mq_substitution(d), plain = two_dof_short_period(d);
    CHECK(zero.omega_sp == plain.omega_sp);
    CHECK(zero.zeta_sp == plain.zeta_sp);

    d.M_q = -3.0;
    d.Z_alpha = 0.0;
    const auto s = short_period_with_mq_substitution(d);
    CHECK(s.zeta_sp == doctest::Approx(4.0 / (2.0 * std::sqrt(5.0))).epsilon(1e-14));
    CHECK(s.derivatives.M_alpha_dot == -1.0);
}

TEST_CASE("omega ignores the control derivatives") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    DimensionalDerivatives d;
    d.M_alpha = -6.0;
    d.M_q = -1.2;
    d.Z_alpha = -250.0;
    d.U1 = 180.0;
    const double w = two_dof_short_period(d).omega_sp;
    for (int i = 0; i < 20; ++i) {
        d.M_delta_e = U(rng) * 10.0;
        d.Z_delta_e = U(rng) * 30.0;
        CHECK(two_dof_short_period(d).omega_sp == w);
    }
}

TEST_CASE("alpha transfer function") {
    DimensionalDerivatives d;
    d.M_alpha = -6.0;
    d.M_q = -1.2;
    d.M_alpha_dot = -0.3;
    d.M_delta_e = -9.0;
    d.Z_alpha = -250.0;
    d.U1 = 180.0;
    auto tf = alpha_transfer_function(d);
    REQUIRE(tf.numerator.size() == 2);
    CHECK(tf.numerator[0] == 0.0);
    CHECK(tf.numerator[1] == -9.0);

    REQUIRE(tf.denominator.size() == 3);
    const double a1 = tf.denominator[1], a0 = tf.denominator[2];
    const std::complex<double> root = (-a1 + std::sqrt(std::complex<double>(a1 * a1 - 4.0 * a0))) / 2.0;
    const auto sp = two_dof_short_period(d);
    CHECK(std::abs(root) == doctest::Approx(sp.omega_sp).epsilon(1e-12));
    CHECK(-root.real() / std::abs(root) == doctest::Approx(sp.zeta_sp).epsilon(1e-12));

    d.Z_delta_e = -20.0;
    tf = alpha_transfer_function(d);
    CHECK(tf.numerator[0] == doctest::Approx(-20.0 / 180.0));
    CHECK(tf.numerator[1] == doctest::Approx((-9.0 * 180.0 - (-1.2) * (-20.0)) / 180.0));
}

TEST_CASE("linearize_truth") {
    SUBCASE("linear model recovers its coefficients") {
        const auto cm = make_model(Channel::Cm, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {0.02, -0.6, -15.0, -1.1});
        const auto cz = make_model(Channel::Cz, {{1, 0, 0}, {0, 0, 1}}, {-4.5, -0.4});
        const auto c = linearize_truth(cm, cz, 0.07, -0.02);
        CHECK(std::abs(c.Cm_alpha + 0.6) <= 1e-9);
        CHECK(std::abs(c.Cm_q_nd + 15.0) <= 1e-9);
        CHECK(std::abs(c.Cm_delta_e + 1.1) <= 1e-9);
        CHECK(std::abs(c.Cz_alpha + 4.5) <= 1e-9);
        CHECK(std::abs(c.Cz_delta_e + 0.4) <= 1e-9);
    }
    SUBCASE("quartic alpha term at zero alpha") {
        const auto cm = make_model(Channel::Cm, {{4, 0, 0}}, {2.0});
        const auto cz = make_model(Channel::Cz, {{1, 0, 0}}, {-4.5});
        CHECK(std::abs(linearize_truth(cm, cz, 0.0, 0.0).Cm_alpha) <= 1e-15);
    }
    SUBCASE("general model against symbolic partials") {
        const auto e = fixture_truth_like();
        for (double a : {-0.05, 0.02, 0.08, 0.2}) {
            for (double de : {-0.1, 0.0, 0.05}) {
                const auto c = linearize_truth(*e.cm, *e.cz, a, de);
                const AeroPoint p{a, 0.0, de};
                CHECK(c.Cm_alpha == doctest::Approx(symbolic_partial(*e.cm, p, 0)).epsilon(1e-7));
                CHECK(c.Cm_q_nd == doctest::Approx(symbolic_partial(*e.cm, p, 1)).epsilon(1e-7));
                CHECK(c.Cm_delta_e == doctest::Approx(symbolic_partial(*e.cm, p, 2)).epsilon(1e-7));
                CHECK(c.Cz_alpha == doctest::Approx(symbolic_partial(*e.cz, p, 0)).epsilon(1e-7));
            }
        }
    }
    SUBCASE("central differences are second order") {
        const auto cm = make_model(Channel::Cm, {{3, 0, 0}}, {1.0});
        const auto cz = make_model(Channel::Cz, {{1, 0, 0}}, {-4.5});
        const double a = 0.1, exact = 3.0 * a * a;
        const double e1 = std::abs(linearize_truth(cm, cz, a, 0.0, 1e-3).Cm_alpha - exact);
        const double e2 = std::abs(linearize_truth(cm, cz, a, 0.0, 2e-3).Cm_alpha - exact);
        CHECK(e2 / e1 == doctest::Approx(4.0).epsilon(1e-3));
    }
    SUBCASE("perturbation leaving the hull") {
        const auto e = fixture_truth_like();
        CHECK_THROWS_AS(linearize_truth(*e.cm, *e.cz, e.cm->hull.alpha.max, 0.0), HullError);
    }
}

TEST_CASE("dimensionalize") {
    AircraftGeometry g;
    g.S = 1.0;
    g.cbar = 1.0;
    g.Iy = 1.0;
    g.mass = 4.0;
    CoefficientDerivatives c;
    auto d = dimensionalize(c, g, 2.0, 100.0);
    CHECK(d.M_alpha == 0.0);
    CHECK(d.M_q == 0.0);
    CHECK(d.Z_alpha == 0.0);
    c.Cm_alpha = -1.0;
    c.Cm_q_nd = -20.0;
    c.Cz_alpha = -4.0;
    d = dimensionalize(c, g, 2.0, 100.0, true);
    CHECK(d.M_alpha == -2.0);
    CHECK(d.M_q == doctest::Approx(-20.0 * (1.0 / 200.0) * 2.0));
    CHECK(d.M_alpha_dot == doctest::Approx(d.M_q / 3.0));
    CHECK(d.Z_alpha == -2.0);
    CHECK_THROWS_AS(dimensionalize(c, g, 0.0, 100.0), DataError);
}

TEST_CASE("linearized truth at trim agrees with the state-matrix eigenvalues") {
    const TruthAircraft ac = TruthAircraft::from_prior(fixture_truth_like());
    for (double qbar : {8000.0, 16000.0, 24000.0}) {
        const TrimResult t = solve_trim(ac, 0.7, isa::altitude_for_qbar_mach(qbar, 0.7));
        const auto c = linearize_truth(ac.cm, ac.cz, t.alpha, t.delta_e);
        for (bool subst : {false, true}) {
            const auto d = dimensionalize(c, ac.geom, t.qbar, t.state.airspeed(), subst);
            const auto sp = two_dof_short_period(d);
            const auto [w, z] = eigen_mode(d);
            CHECK(std::abs(sp.omega_sp - w) / w <= 1e-10);
            CHECK(std::abs(sp.zeta_sp - z) / z <= 1e-10);
        }
    }
}

TEST_CASE("transfer-function step peak time matches the simulator") {
    const TruthAircraft ac = TruthAircraft::from_prior(fixture_truth_like());
    for (double qbar : {8000.0, 16000.0, 24000.0}) {
        const TrimResult t = solve_trim(ac, 0.7, isa::altitude_for_qbar_mach(qbar, 0.7));
        const double step = -0.001, t0 = 0.5, dt = 0.001;
        const double de = t.delta_e;
        const SimRecord r = integrate(ac, t.state, [=](double time) { return time < t0 ? de : de + step; },
                                      t.thrust, dt, 6.0);
        double sim_peak = NAN;
        for (std::size_t i = 1; i + 1 < r.truth.size(); ++i) {
            const double a = r.truth.states[i].alpha;
            if (r.truth.t[i] > t0 && a > r.truth.states[i - 1].alpha && a >= r.truth.states[i + 1].alpha) {
                sim_peak = r.truth.t[i] - t0;
                break;
            }
        }

        // Controllable canonical realization of the transfer function, stepped by RK4.
        const auto d = dimensionalize(linearize_truth(ac.cm, ac.cz, t.alpha, t.delta_e), ac.geom, t.qbar,
                                      t.state.airspeed());
        const auto tf = alpha_transfer_function(d);
        const double b1 = tf.numerator[0], b0 = tf.numerator[1], a1 = tf.denominator[1], a0 = tf.denominator[2];
        auto f = [&](const Eigen::Vector2d& x) { return Eigen::Vector2d(x(1), -a0 * x(0) - a1 * x(1) + step); };
        Eigen::Vector2d x = Eigen::Vector2d::Zero();
        double prev = 0.0, tf_peak = NAN;
        for (int k = 1; k < 6000; ++k) {
            const Eigen::Vector2d k1 = f(x), k2 = f(x + 0.5 * dt * k1), k3 = f(x + 0.5 * dt * k2), k4 = f(x + dt * k3);
            x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            const double y = b0 * x(0) + b1 * x(1);
            if (k > 1 && y < prev) {
                tf_peak = (k - 1) * dt;
                break;
            }
            prev = y;
        }
        CAPTURE(qbar);
        CAPTURE(sim_peak);
        CAPTURE(tf_peak);
        CHECK(std::abs(sim_peak - tf_peak) <= 0.05 * tf_peak);
    }
}
