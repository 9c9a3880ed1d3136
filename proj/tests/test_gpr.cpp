#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "sysid/errors.hpp"
#include "sysid/gpr.hpp"
#include "sysid/verify.hpp"

using namespace sysid;

namespace {

MeanFunction wrong_mean() { return {fixture_wrong_prior().cm, fixture_geometry().cbar}; }

Vec8 vec(std::initializer_list<double> v) {
    Vec8 out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

}  // namespace

TEST_CASE("NN kernel values") {
    const KernelSpec nn;
    const Vec8 zero{}, x = vec({0.3, -0.2, 0.1, 0.05, 0.0, 0.0, 0.2, -0.1});
    CHECK(kernel_eval(nn, zero.data(), x.data()) == 0.0);
    const Vec8 r2 = vec({1.0, 1.0});
    CHECK(kernel_eval(nn, r2.data(), r2.data()) == doctest::Approx(M_PI / 2.0).epsilon(1e-15));
    const Vec8 big = vec({1.0, 1.0, 1.0});
    CHECK_THROWS_AS(kernel_eval(nn, big.data(), big.data()), NumericError);
    const auto c = verify::kernel_identities(4);
    CHECK_MESSAGE(c.passed, verify::format(c));
}

TEST_CASE("SE kernel value") {
    KernelSpec se;
    se.kind = KernelKind::SquaredExponential;
    se.signal_variance = 2.0;
    se.lengthscales = vec({0.5, 1, 1, 1, 1, 1, 1, 1});
    const Vec8 a = vec({0.5}), b{};
    CHECK(kernel_eval(se, a.data(), b.data()) == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-15));
    se.lengthscales[3] = 0.0;
    CHECK_THROWS_AS(se.validate(), ConfigError);
}

TEST_CASE("two-point fit against the closed-form 2x2 inverse") {
    const auto p = verify::random_gp_problem(2, 1, 21);
    const double nu = 1e-3;
    const GpModel m = fit(p.samples, p.mean, KernelSpec{}, nu);
    const double k11 = kernel_eval(m.kernel, &m.Z(0, 0), &m.Z(0, 0)) + nu + m.jitter;
    const double k22 = kernel_eval(m.kernel, &m.Z(1, 0), &m.Z(1, 0)) + nu + m.jitter;
    const double k12 = kernel_eval(m.kernel, &m.Z(0, 0), &m.Z(1, 0));
    const double det = k11 * k22 - k12 * k12;
    const double r1 = p.samples[0].y - p.mean.value(p.samples[0].x);
    const double r2 = p.samples[1].y - p.mean.value(p.samples[1].x);
    const double a1 = (k22 * r1 - k12 * r2) / det, a2 = (-k12 * r1 + k11 * r2) / det;
    CHECK(std::abs(m.A(0) - a1) <= 1e-12 * std::max(1.0, std::abs(a1)));
    CHECK(std::abs(m.A(1) - a2) <= 1e-12 * std::max(1.0, std::abs(a2)));
}

TEST_CASE("dense-inverse, interpolation and zero-data oracles") {
    for (std::uint64_t seed : {1u, 2u}) {
        for (const auto& c : {verify::gp_dense_inverse(seed), verify::gp_interpolation(seed), verify::gp_zero_data(seed)})
            CHECK_MESSAGE(c.passed, verify::format(c));
    }
}

TEST_CASE("gradient against finite differences for both kernels") {
    for (auto kind : {KernelKind::NeuralNetwork, KernelKind::SquaredExponential}) {
        const auto c = verify::gp_gradient_fd(kind, 3);
        CHECK_MESSAGE(c.passed, verify::format(c));
    }
}

TEST_CASE("duplicate inputs are regularized by nu") {
    auto p = verify::random_gp_problem(5, 1, 8);
    p.samples.push_back(p.samples[2]);
    p.samples.back().y += 1e-3;
    const GpModel m = fit(p.samples, p.mean, KernelSpec{}, 1e-4);
    CHECK(m.size() == 6);
    CHECK(std::isfinite(predict_mean(m, p.samples[2].x)));
}

TEST_CASE("Cholesky factor reproduces the regularized Gram matrix") {
    const auto p = verify::random_gp_problem(60, 1, 13);
    const GpModel m = fit(p.samples, p.mean, KernelSpec{}, 1e-4);
    Eigen::MatrixXd K = gram_matrix_serial(m.kernel, m.Z);
    K.diagonal().array() += m.nu + m.jitter;
    const Eigen::MatrixXd LLt = m.L * m.L.transpose();
    CHECK((LLt - K).norm() / K.norm() <= 1e-8);
    CHECK(m.jitter <= 1e-6 * K.trace() / 60.0);

    // A solves the regularized system for the prior residual.
    Eigen::VectorXd resid(60);
    for (int i = 0; i < 60; ++i) resid(i) = m.y(i) - m.mean.value(m.X[i]);
    CHECK((K * m.A - resid).norm() <= 1e-8 * resid.norm());
}

TEST_CASE("targets equal to the prior give zero weights") {
    auto p = verify::random_gp_problem(30, 10, 17);
    for (auto& s : p.samples) s.y = p.mean.value(s.x);
    const GpModel m = fit(p.samples, p.mean, KernelSpec{}, 1e-4);
    CHECK(m.A.norm() == 0.0);
    for (const auto& q : p.queries) {
        CHECK(predict_mean(m, q) == p.mean.value(q));
        CHECK(posterior_gradient(m, q) == p.mean.gradient(q));
    }
}

TEST_CASE("zero-data gradient is the prior gradient") {
    const auto p = verify::random_gp_problem(0, 10, 19);
    FitOptions opt;
    opt.standardizer = Standardizer::fit(p.queries);
    const GpModel m = fit({}, p.mean, KernelSpec{}, 0.0, opt);
    for (const auto& q : p.queries) CHECK(posterior_gradient(m, q) == p.mean.gradient(q));
    CHECK_THROWS(fit({}, p.mean, KernelSpec{}, 0.0));
}

TEST_CASE("variance near training points and clamping") {
    const auto p = verify::random_gp_problem(40, 1, 23);
    const double nu = 1e-6;
    const GpModel m = fit(p.samples, p.mean, KernelSpec{}, nu);
    for (const auto& s : p.samples) {
        const auto v = predict_variance(m, s.x);
        CHECK(v.value <= nu + 1e-8);
        CHECK(v.value >= 0.0);
        const Vec8 z = m.standardizer.apply(s.x);
        CHECK(v.raw >= -1e-8 * kernel_eval(m.kernel, z.data(), z.data()));
    }
}

TEST_CASE("fit report") {
    SUBCASE("no jitter needed for a well-conditioned set") {
        const auto p = verify::random_gp_problem(3, 1, 29);
        const GpModel m = fit(p.samples, p.mean, KernelSpec{}, 0.0);
        const auto r = fit_report(m);
        CHECK(r.jitter == 0.0);
        CHECK(r.n == 3);
        CHECK(r.nu == 0.0);
    }
    SUBCASE("training residual within three noise sigmas") {
        const auto p = verify::random_gp_problem(200, 1, 31);  // targets carry N(0, 2e-3) noise
        const double nu = 4e-6;
        const auto r = fit_report(fit(p.samples, p.mean, KernelSpec{}, nu));
        CHECK(r.n == 200);
        CHECK(r.residual_rms <= 3.0 * std::sqrt(nu));
        CHECK(r.residual_rms > 0.0);
    }
}

TEST_CASE("serial and parallel paths are bit-identical") {
    const auto p = verify::random_gp_problem(150, 40, 37);
    FitOptions serial;
    serial.parallel = false;
    const GpModel a = fit(p.samples, p.mean, KernelSpec{}, 1e-4, serial);
    const GpModel b = fit(p.samples, p.mean, KernelSpec{}, 1e-4);
    CHECK(gram_matrix_serial(a.kernel, a.Z) == gram_matrix_parallel(a.kernel, a.Z));
    CHECK(a.A == b.A);
    CHECK(predict_mean_batch_serial(a, p.queries) == predict_mean_batch_parallel(a, p.queries));
    const auto batch = predict_mean_batch_serial(a, p.queries);
    for (std::size_t i = 0; i < p.queries.size(); ++i) CHECK(batch[i] == predict_mean(a, p.queries[i]));
}

TEST_CASE("checkpoint round trip") {
    const auto p = verify::random_gp_problem(80, 25, 41);
    KernelSpec se;
    se.kind = KernelKind::SquaredExponential;
    se.lengthscales.fill(0.3);
    for (const KernelSpec& k : {KernelSpec{}, se}) {
        const GpModel m = fit(p.samples, p.mean, k, 1e-4);
        const auto path = (std::filesystem::temp_directory_path() / "sysid_gp.json").string();
        save_checkpoint(m, path);
        const GpModel back = load_checkpoint(path);
        CHECK(back.nu == m.nu);
        CHECK(back.jitter == m.jitter);
        for (const auto& q : p.queries) {
            CHECK(predict_mean(back, q) == predict_mean(m, q));
            CHECK(predict_variance(back, q).raw == predict_variance(m, q).raw);
            CHECK(posterior_gradient(back, q) == posterior_gradient(m, q));
        }
    }
    CHECK_THROWS_AS(checkpoint_from_json(R"({"format":"sysid-gp-checkpoint","version":999})"), FormatError);
    CHECK_THROWS_AS(checkpoint_from_json("{}"), FormatError);
}

TEST_CASE("noise variance estimate") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N(0.0, 0.01);
    std::vector<double> s;
    for (int i = 0; i < 20000; ++i) s.push_back(std::sin(0.001 * i) + N(rng));
    const double nu = estimate_nu({s});
    // A window-5 median removes part of the noise with it; the estimate stays within a factor of the truth.
    CHECK(nu > 0.5e-4);
    CHECK(nu < 1.5e-4);
}
