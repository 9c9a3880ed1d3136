#include "sysid/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "sysid/aeromean.hpp"
#include "sysid/atmosphere.hpp"
#include "sysid/dynsim.hpp"
#include "sysid/lineardyn.hpp"
#include "sysid/trimfit.hpp"

namespace sysid::verify {

namespace {

Check make(std::string name, double measured, double bound, std::string detail = {}) {
    return {std::move(name), measured, bound, measured <= bound, std::move(detail)};
}

double rel_err(double a, double b, double floor = 0.0) {
    return std::abs(a - b) / std::max({std::abs(b), floor, 1e-300});
}

// Independent transcription of the kernels on standardized coordinates.
double oracle_kernel(const KernelSpec& k, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (k.kind == KernelKind::SquaredExponential) {
        double s = 0.0;
        for (int i = 0; i < 8; ++i) s += std::pow((x[i] - y[i]) / k.lengthscales[static_cast<std::size_t>(i)], 2);
        return k.signal_variance * std::exp(-s / 2.0);
    }
    return std::asin(x.dot(y) / std::sqrt((1.0 + x.squaredNorm() / 2.0) * (1.0 + y.squaredNorm() / 2.0)));
}

Eigen::VectorXd standardized(const GpModel& m, const FlightState& x) {
    const auto a = x.to_array();
    Eigen::VectorXd z(8);
    for (int i = 0; i < 8; ++i) z[i] = (a[static_cast<std::size_t>(i)] - m.standardizer.center[static_cast<std::size_t>(i)]) /
                                       m.standardizer.scale[static_cast<std::size_t>(i)];
    return z;
}

FlightState random_state(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FlightState x;
    x.mach = 0.55 + 0.3 * u(gen);
    x.rho = 0.4 + 0.6 * u(gen);
    x.qbar = 8000.0 + 17000.0 * u(gen);
    x.p = -0.1 + 0.2 * u(gen);
    x.q = -0.15 + 0.3 * u(gen);
    x.r = -0.1 + 0.2 * u(gen);
    x.alpha = -0.05 + 0.3 * u(gen);
    x.delta_e = -0.2 + 0.3 * u(gen);
    return x;
}

}  // namespace

GpProblem random_gp_problem(std::size_t n, std::size_t queries, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, 2e-3);
    const auto truth = fixture_truth_like();
    const auto prior = fixture_wrong_prior();
    GpProblem p;
    p.mean = MeanFunction{prior.cm, prior.geometry.cbar};
    for (std::size_t i = 0; i < n; ++i) {
        const FlightState x = random_state(gen);
        p.samples.push_back({x, truth.cm->value(project(x, truth.geometry.cbar)) + noise(gen), Channel::Cm});
    }
    for (std::size_t i = 0; i < queries; ++i) p.queries.push_back(random_state(gen));
    return p;
}

Check gp_dense_inverse(std::uint64_t seed, std::size_t n, double nu) {
    const GpProblem p = random_gp_problem(n, 10, seed);
    const GpModel m = fit(p.samples, p.mean, KernelSpec{}, nu);
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd K(N, N);
    std::vector<Eigen::VectorXd> Z;
    for (const auto& s : p.samples) Z.push_back(standardized(m, s.x));
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j)
            K(i, j) = oracle_kernel(m.kernel, Z[static_cast<std::size_t>(i)], Z[static_cast<std::size_t>(j)]);
    K.diagonal().array() += nu + m.jitter;
    const Eigen::MatrixXd Kinv = K.fullPivLu().inverse();
    Eigen::VectorXd r(N);
    for (Eigen::Index i = 0; i < N; ++i)
        r[i] = p.samples[static_cast<std::size_t>(i)].y - p.mean.value(p.samples[static_cast<std::size_t>(i)].x);
    double worst = 0.0;
    for (const auto& q : p.queries) {
        const Eigen::VectorXd zq = standardized(m, q);
        Eigen::VectorXd ks(N);
        for (Eigen::Index j = 0; j < N; ++j) ks[j] = oracle_kernel(m.kernel, zq, Z[static_cast<std::size_t>(j)]);
        const double mu = p.mean.value(q) + ks.dot(Kinv * r);
        const double var = oracle_kernel(m.kernel, zq, zq) - ks.dot(Kinv * ks);
        worst = std::max({worst, std::abs(predict_mean(m, q) - mu), std::abs(predict_variance(m, q).raw - var)});
    }
    return make("gp dense-inverse oracle (mean, variance)", worst, 1e-8, std::to_string(n) + " points, 10 queries");
}

Check gp_interpolation(std::uint64_t seed) {
    double worst = 0.0;
    // Single point with nu = 0, then a small set with nu = 1e-12.
    {
        const GpProblem p = random_gp_problem(1, 0, seed);
        const GpModel m = fit(p.samples, p.mean, KernelSpec{}, 0.0);
        worst = std::max(worst, std::abs(predict_mean(m, p.samples[0].x) - p.samples[0].y));
    }
    {
        const GpProblem p = random_gp_problem(6, 0, seed + 1);
        const GpModel m = fit(p.samples, p.mean, KernelSpec{}, 1e-12);
        for (const auto& s : p.samples) worst = std::max(worst, std::abs(predict_mean(m, s.x) - s.y));
    }
    return make("gp interpolation at training inputs", worst, 1e-6);
}

Check gp_zero_data(std::uint64_t seed) {
    const GpProblem p = random_gp_problem(0, 50, seed);
    FitOptions opt;
    opt.standardizer = Standardizer::fit(p.queries);
    const GpModel m = fit({}, p.mean, KernelSpec{}, 0.0, opt);
    double worst = 0.0;
    for (const auto& q : p.queries) {
        worst = std::max(worst, std::abs(predict_mean(m, q) - p.mean.value(q)));
        const Vec8 g = posterior_gradient(m, q), gm = p.mean.gradient(q);
        for (std::size_t d = 0; d < kStateDim; ++d) worst = std::max(worst, std::abs(g[d] - gm[d]));
        const Vec8 z = m.standardizer.apply(q);
        worst = std::max(worst, std::abs(predict_variance(m, q).value - kernel_eval(m.kernel, z.data(), z.data())));
    }
    return make("gp zero-data posterior equals prior", worst, 0.0);
}

Check gp_gradient_fd(KernelKind kind, std::uint64_t seed, std::size_t queries) {
    const GpProblem p = random_gp_problem(40, queries, seed);
    KernelSpec k;
    k.kind = kind;
    if (kind == KernelKind::SquaredExponential) k.lengthscales = {0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2};
    const GpModel m = fit(p.samples, p.mean, k, 1e-4);
    const double h = 1e-5;  // in standardized units
    double worst = 0.0;
    for (const auto& q : p.queries) {
        const Vec8 g = posterior_gradient(m, q);
        for (std::size_t d = 0; d < kStateDim; ++d) {
            auto a = q.to_array();
            const double step = h * m.standardizer.scale[d];
            a[d] = q.to_array()[d] + step;
            const double up = predict_mean(m, FlightState::from_array(a));
            a[d] = q.to_array()[d] - step;
            const double dn = predict_mean(m, FlightState::from_array(a));
            const double fd = (up - dn) / (2.0 * step);
            const double err = std::abs(g[d]) < 1e-10 ? std::abs(fd - g[d]) : rel_err(fd, g[d]);
            worst = std::max(worst, err);
        }
    }
    return make(std::string("gp posterior gradient vs finite differences (") +
                    (kind == KernelKind::NeuralNetwork ? "NN" : "SE") + " kernel)",
                worst, 1e-5, std::to_string(queries) + " queries x 8 components");
}

Check kernel_identities(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    // Inside |x|^2 <= 2, where the literal asin argument stays within [-1, 1].
    std::normal_distribution<double> n01(0.0, 0.25);
    KernelSpec k;
    double worst = 0.0;
    const Vec8 zero{};
    Vec8 x{};
    for (int trial = 0; trial < 1000; ++trial) {
        Vec8 a, b;
        for (std::size_t i = 0; i < kStateDim; ++i) {
            a[i] = n01(gen);
            b[i] = n01(gen);
        }
        worst = std::max(worst, std::abs(kernel_eval(k, a.data(), b.data()) - kernel_eval(k, b.data(), a.data())));
        worst = std::max(worst, std::abs(kernel_eval(k, zero.data(), a.data())));
    }
    x[0] = 1.0;
    x[5] = 1.0;  // |x|^2 = 2
    worst = std::max(worst, std::abs(kernel_eval(k, x.data(), x.data()) - std::acos(-1.0) / 2.0));
    return make("NN kernel identities (symmetry, zero input, asin(1))", worst, 0.0);
}

Check short_period_eigen(std::uint64_t seed, std::size_t sets) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    std::size_t done = 0;
    while (done < sets) {
        DimensionalDerivatives d;
        d.M_alpha = -(0.5 + 30.0 * u(gen));
        d.M_q = -(0.2 + 4.0 * u(gen));
        d.M_alpha_dot = -(1.5 * u(gen));
        d.Z_alpha = -(50.0 + 1500.0 * u(gen));
        d.U1 = 100.0 + 200.0 * u(gen);
        Eigen::Matrix2d A;
        A << d.Z_alpha / d.U1, 1.0, d.M_alpha + d.M_alpha_dot * d.Z_alpha / d.U1, d.M_q + d.M_alpha_dot;
        const Eigen::Vector2cd ev = A.eigenvalues();
        if (std::abs(ev[0].imag()) < 1e-3) continue;  // overdamped draw
        const std::complex<double> s = ev[0];
        const double w = std::abs(s), z = -s.real() / w;
        const ShortPeriodResult r = two_dof_short_period(d);
        worst = std::max({worst, rel_err(r.omega_sp, w), rel_err(r.zeta_sp, z)});

        // 1-DOF: roots of s^2 - M_adot s - M_alpha from the companion matrix.
        Eigen::Matrix2d C;
        C << 0.0, 1.0, d.M_alpha, d.M_alpha_dot;
        const std::complex<double> s1 = C.eigenvalues()[0];
        const ShortPeriodResult r1 = one_dof_short_period(d.M_alpha, d.M_alpha_dot);
        if (std::abs(s1.imag()) > 1e-3)
            worst = std::max({worst, rel_err(r1.omega_sp, std::abs(s1)), rel_err(r1.zeta_sp, -s1.real() / std::abs(s1))});
        ++done;
    }
    return make("short period closed form vs companion-matrix eigenvalues", worst, 1e-10,
                std::to_string(sets) + " random stable sets");
}

Check short_period_reduction(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        DimensionalDerivatives d;
        d.M_alpha = -(0.5 + 30.0 * u(gen));
        d.M_alpha_dot = -(1.5 * u(gen));
        d.U1 = 100.0 + 200.0 * u(gen);
        d.M_delta_e = -10.0 * u(gen);
        const ShortPeriodResult a = two_dof_short_period(d);
        const ShortPeriodResult b = one_dof_short_period(d.M_alpha, d.M_alpha_dot);
        worst = std::max({worst, std::abs(a.omega_sp - b.omega_sp), std::abs(a.zeta_sp - b.zeta_sp)});
    }
    return make("2-DOF reduces to 1-DOF when Z_alpha = M_q = 0", worst, 0.0);
}

Check aeromean_fd(std::uint64_t seed, std::size_t points) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> theta;
    for (std::size_t i = 0; i < canonical_cm_terms().size(); ++i) theta.push_back(n01(gen));
    const GenericAeroModel m = make_model(Channel::Cm, canonical_cm_terms(), theta);
    double worst = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const AeroPoint p{-0.15 + 0.48 * u(gen), -0.045 + 0.09 * u(gen), -0.28 + 0.56 * u(gen)};
        const auto g = gradient(m, p);
        const double h = 1e-6;
        const std::array<AeroPoint, 3> ups{AeroPoint{p.alpha + h, p.qtilde, p.delta_e},
                                           AeroPoint{p.alpha, p.qtilde + h, p.delta_e},
                                           AeroPoint{p.alpha, p.qtilde, p.delta_e + h}};
        const std::array<AeroPoint, 3> dns{AeroPoint{p.alpha - h, p.qtilde, p.delta_e},
                                           AeroPoint{p.alpha, p.qtilde - h, p.delta_e},
                                           AeroPoint{p.alpha, p.qtilde, p.delta_e - h}};
        for (std::size_t k = 0; k < 3; ++k) {
            const double fd = (m.value(ups[k]) - m.value(dns[k])) / (2.0 * h);
            worst = std::max(worst, rel_err(fd, g[k], 1e-3));
        }
    }
    return make("aeromean gradient vs finite differences", worst, 1e-6, std::to_string(points) + " random in-hull points");
}

Check aeromean_direct_sum(std::uint64_t seed, std::size_t points) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> theta;
    for (std::size_t i = 0; i < canonical_cm_terms().size(); ++i) theta.push_back(n01(gen));
    const GenericAeroModel m = make_model(Channel::Cm, canonical_cm_terms(), theta);
    double worst = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const AeroPoint p{-0.15 + 0.48 * u(gen), -0.045 + 0.09 * u(gen), -0.28 + 0.56 * u(gen)};
        double direct = 0.0;
        for (std::size_t k = 0; k < m.terms.size(); ++k) {
            double mono = theta[k];
            for (int a = 0; a < m.terms[k].e.alpha; ++a) mono *= p.alpha;
            for (int b = 0; b < m.terms[k].e.qtilde; ++b) mono *= p.qtilde;
            for (int c = 0; c < m.terms[k].e.delta_e; ++c) mono *= p.delta_e;
            direct += mono;
        }
        worst = std::max(worst, std::abs(evaluate(m, p) - direct));
    }
    return make("aeromean evaluation vs direct summation", worst, 1e-14, std::to_string(points) + " random in-hull points");
}

Check stencil_polynomial() {
    // The extraction stencil (degree 2) is exact on quadratics and carries a
    // 3.4 a3 h^2 bias on cubics; the degree-3 variant is exact on cubics.
    const double h = 0.01, a0 = 2.0, a1 = -1.5, a2 = 0.7, a3 = -0.9;
    std::vector<double> t, quad, cubic;
    for (int i = 0; i < 200; ++i) {
        const double ti = 0.3 + i * h;
        t.push_back(ti);
        quad.push_back(a0 + a1 * ti + a2 * ti * ti);
        cubic.push_back(quad.back() + a3 * ti * ti * ti);
    }
    const auto dq = sg_derivative(t, quad, 2);
    const auto dc2 = sg_derivative(t, cubic, 2);
    const auto dc3 = sg_derivative(t, cubic, 3);
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < t.size(); ++i) {
        const double dquad = a1 + 2.0 * a2 * t[i];
        const double dcubic = dquad + 3.0 * a3 * t[i] * t[i];
        worst = std::max({worst, rel_err(dq[i], dquad), rel_err(dc3[i], dcubic),
                          rel_err(dc2[i], dcubic + 3.4 * a3 * h * h)});
    }
    return make("differentiation stencils on polynomials (interior)", worst, 1e-9);
}

Check trim_exact_recovery() {
    std::vector<TrimShot> shots;
    for (int i = 0; i < 9; ++i) {
        TrimShot s;
        s.state.mach = 0.7;
        s.state.rho = 0.5;
        s.state.qbar = 2000.0 + 1000.0 * i;
        s.alpha_trim = 0.2 * std::exp(-4e-4 * s.state.qbar);
        s.delta_e_trim = -0.05 + 0.01 * std::log(s.state.qbar);
        shots.push_back(s);
    }
    const auto tf = fit_trim_functions(shots).at(0);
    const double worst = std::max({rel_err(tf.a, 0.2), rel_err(tf.b, 4e-4), rel_err(tf.c, -0.05), rel_err(tf.d, 0.01)});
    return make("trim regression exact-data recovery", worst, 1e-6);
}

Check trim_noise_recovery(std::uint64_t seed, std::size_t replications) {
    std::vector<double> as, bs;
    for (std::size_t r = 0; r < replications; ++r) {
        std::mt19937_64 gen(seed * 1000 + r);
        std::normal_distribution<double> N(0.0, 0.01);
        std::vector<TrimShot> shots;
        for (int i = 0; i < 9; ++i) {
            TrimShot s;
            s.state.mach = 0.7;
            s.state.rho = 0.5;
            s.state.qbar = 2000.0 + 1000.0 * i;
            s.alpha_trim = 0.2 * std::exp(-4e-4 * s.state.qbar) * (1.0 + N(gen));
            s.delta_e_trim = -0.05 + 0.01 * std::log(s.state.qbar);
            shots.push_back(s);
        }
        const auto tf = fit_trim_functions(shots).at(0);
        as.push_back(tf.a);
        bs.push_back(tf.b);
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    const double ma = median(as), mb = median(bs);
    char buf[96];
    std::snprintf(buf, sizeof buf, "median a %.5f, b %.4e", ma, mb);
    return make("trim regression median under 1% alpha noise", std::max(rel_err(ma, 0.2), rel_err(mb, 4e-4)), 0.02,
                buf);
}

namespace {

TruthAircraft truth_aircraft() { return TruthAircraft::from_prior(fixture_truth_like()); }

// Max airframe-state gap between two runs, sampling b every `stride` steps.
double max_state_gap(const SimRecord& a, std::size_t stride_a, const SimRecord& b, std::size_t stride_b,
                     std::size_t samples) {
    double worst = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const std::size_t j = i * stride_a, k = i * stride_b;
        worst = std::max({worst, std::abs(a.truth.u_body[j] - b.truth.u_body[k]),
                          std::abs(a.truth.w_body[j] - b.truth.w_body[k]),
                          std::abs(a.truth.states[j].q - b.truth.states[k].q),
                          std::abs(a.truth.theta[j] - b.truth.theta[k])});
    }
    return worst;
}

}  // namespace

Check rk4_order() {
    const TruthAircraft ac = truth_aircraft();
    const TrimResult trim = solve_trim(ac, 0.7, isa::altitude_for_qbar_mach(16000.0, 0.7));
    const double de0 = trim.delta_e;
    const ElevatorSchedule elevator = [de0](double t) { return de0 + 0.01 * std::sin(2.0 * t); };
    const double dt = 0.08, duration = 8.0;
    auto run = [&](double step) { return integrate(ac, trim.state, elevator, trim.thrust, step, duration); };
    const SimRecord coarse = run(dt), fine = run(dt / 2.0), reference = run(dt / 8.0);
    const std::size_t n = coarse.truth.size();
    const double e1 = max_state_gap(coarse, 1, reference, 8, n);
    const double e2 = max_state_gap(fine, 2, reference, 8, n);
    const double ratio = e1 / e2;
    return {"RK4 error ratio on halving dt", ratio, 16.0, ratio >= 14.0 && ratio <= 18.0, "required in [14, 18]"};
}

Check trim_drift() {
    const TruthAircraft ac = truth_aircraft();
    double worst = 0.0;
    for (double qbar : {8000.0, 16000.0, 24000.0}) {
        ManeuverSpec spec;
        spec.kind = ManeuverKind::TrimShot;
        spec.duration = 60.0;
        spec.altitude_target = isa::altitude_for_qbar_mach(qbar, 0.7);
        const SimRecord r = fly_trim_hold(ac, spec, NoiseSpec{});
        const auto& s0 = r.trim.state;
        for (std::size_t i = 0; i < r.truth.size(); ++i)
            worst = std::max({worst, std::abs(r.truth.u_body[i] - s0.u), std::abs(r.truth.w_body[i] - s0.w),
                              std::abs(r.truth.states[i].q - s0.q), std::abs(r.truth.theta[i] - s0.theta)});
    }
    return make("trim hold stationarity over 60 s", worst, 1e-6);
}

DoubletFit doublet_frequency(double qbar) {
    const TruthAircraft ac = truth_aircraft();
    ManeuverSpec spec;
    spec.kind = ManeuverKind::Doublet;
    spec.altitude_target = isa::altitude_for_qbar_mach(qbar, 0.7);
    // Small enough that the response stays linear and the fit sees one clean pole pair.
    spec.doublet_amplitude = 0.001;
    spec.doublet_width = 0.5;
    spec.doublet_start = 1.0;
    spec.duration = 6.0;
    const SimRecord r = fly_doublet(ac, spec, NoiseSpec{});

    // Free response after the doublet, thinned to 50 Hz.
    const double t_free = spec.doublet_start + 2.0 * spec.doublet_width + 0.05;
    const std::size_t thin = 2;
    std::vector<double> d;
    for (std::size_t i = 0; i < r.truth.size(); i += thin)
        if (r.truth.t[i] >= t_free) d.push_back(r.truth.states[i].alpha - r.trim.alpha);
    const double h = thin * spec.dt;

    // Prony: least-squares AR(4) covers the short-period and phugoid pairs.
    constexpr int p = 4;
    const int rows = static_cast<int>(d.size()) - p;
    Eigen::MatrixXd A(rows, p);
    Eigen::VectorXd b(rows);
    for (int k = 0; k < rows; ++k) {
        for (int j = 0; j < p; ++j) A(k, j) = d[k + p - 1 - j];
        b(k) = d[k + p];
    }
    const Eigen::VectorXd a = A.colPivHouseholderQr().solve(b);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(p, p);
    C.row(0) = a.transpose();
    for (int j = 1; j < p; ++j) C(j, j - 1) = 1.0;
    const Eigen::VectorXcd z = C.eigenvalues();
    std::complex<double> best{0.0, 0.0};
    for (int j = 0; j < p; ++j) {
        const std::complex<double> s = std::log(z(j)) / h;
        if (std::abs(s.imag()) > std::abs(best.imag())) best = s;
    }

    const CoefficientDerivatives c = linearize_truth(ac.cm, ac.cz, r.trim.alpha, r.trim.delta_e);
    const DimensionalDerivatives dd = dimensionalize(c, ac.geom, r.trim.qbar, r.trim.state.airspeed(), false);
    DoubletFit out;
    out.omega_fit = std::abs(best);
    out.zeta_fit = -best.real() / std::abs(best);
    const ShortPeriodResult sp = two_dof_short_period(dd);
    out.omega_model = sp.omega_sp;
    out.zeta_model = sp.zeta_sp;
    return out;
}

Check doublet_response() {
    double worst = 0.0;
    std::string detail;
    for (double qbar : {8000.0, 16000.0, 24000.0}) {
        const DoubletFit f = doublet_frequency(qbar);
        worst = std::max(worst, rel_err(f.omega_fit, f.omega_model));
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s%.0f Pa: %.4f vs %.4f rad/s", detail.empty() ? "" : "; ", qbar, f.omega_fit,
                      f.omega_model);
        detail += buf;
    }
    return make("doublet frequency vs two-DOF linearization", worst, 0.02, detail);
}

std::vector<Check> run_all(std::uint64_t seed) {
    const std::vector<std::pair<std::string, std::function<Check()>>> suites{
        {"kernel identities", [&] { return kernel_identities(seed); }},
        {"gp dense inverse", [&] { return gp_dense_inverse(seed); }},
        {"gp interpolation", [&] { return gp_interpolation(seed); }},
        {"gp zero data", [&] { return gp_zero_data(seed); }},
        {"gp gradient NN", [&] { return gp_gradient_fd(KernelKind::NeuralNetwork, seed); }},
        {"gp gradient SE", [&] { return gp_gradient_fd(KernelKind::SquaredExponential, seed); }},
        {"short period eigen", [&] { return short_period_eigen(seed); }},
        {"short period reduction", [&] { return short_period_reduction(seed); }},
        {"aeromean gradient", [&] { return aeromean_fd(seed); }},
        {"aeromean evaluation", [&] { return aeromean_direct_sum(seed); }},
        {"stencil", [] { return stencil_polynomial(); }},
        {"trim regression", [] { return trim_exact_recovery(); }},
        {"trim regression noise", [&] { return trim_noise_recovery(seed); }},
        {"rk4 order", [] { return rk4_order(); }},
        {"trim drift", [] { return trim_drift(); }},
        {"doublet", [] { return doublet_response(); }},
    };
    std::vector<Check> out;
    for (const auto& [name, run] : suites) {
        try {
            out.push_back(run());
        } catch (const std::exception& e) {
            out.push_back({name, std::numeric_limits<double>::infinity(), 0.0, false, std::string("threw: ") + e.what()});
        }
    }
    return out;
}

std::string format(const Check& c) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s  %-62s  worst %.3e  bound %.1e", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                  c.measured, c.bound);
    std::string out = buf;
    if (!c.detail.empty()) out += "  (" + c.detail + ")";
    return out;
}

}  // namespace sysid::verify
