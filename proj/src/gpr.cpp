#include "sysid/gpr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sysid/errors.hpp"

namespace sysid {

using nlohmann::json;

void KernelSpec::validate() const {
    if (kind == KernelKind::SquaredExponential) {
        if (!(signal_variance > 0.0)) throw ConfigError("SE kernel: signal variance must be positive");
        for (double l : lengthscales)
            if (!(l > 0.0)) throw ConfigError("SE kernel: lengthscales must be positive");
    }
}

double kernel_eval(const KernelSpec& k, const double* x, const double* y) {
    if (k.kind == KernelKind::SquaredExponential) {
        double s = 0.0;
        for (std::size_t i = 0; i < kStateDim; ++i) {
            const double d = (x[i] - y[i]) / k.lengthscales[i];
            s += d * d;
        }
        return k.signal_variance * std::exp(-0.5 * s);
    }
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < kStateDim; ++i) {
        xy += x[i] * y[i];
        xx += x[i] * x[i];
        yy += y[i] * y[i];
    }
    double u = xy / std::sqrt((1.0 + 0.5 * xx) * (1.0 + 0.5 * yy));
    if (!(std::abs(u) <= 1.0)) {
        if (!(std::abs(u) <= 1.0 + 1e-12)) throw NumericError("NN kernel: asin argument outside [-1, 1]");
        u = std::clamp(u, -1.0, 1.0);
    }
    return std::asin(u);
}

Vec8 kernel_grad(const KernelSpec& k, const double* x, const double* y) {
    Vec8 g{};
    if (k.kind == KernelKind::SquaredExponential) {
        const double kv = kernel_eval(k, x, y);
        for (std::size_t i = 0; i < kStateDim; ++i) {
            const double l2 = k.lengthscales[i] * k.lengthscales[i];
            g[i] = -kv * (x[i] - y[i]) / l2;
        }
        return g;
    }
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < kStateDim; ++i) {
        xy += x[i] * y[i];
        xx += x[i] * x[i];
        yy += y[i] * y[i];
    }
    const double a = 1.0 + 0.5 * xx, b = 1.0 + 0.5 * yy;
    const double root = std::sqrt(a * b);
    const double u = xy / root;
    const double outer = 1.0 / std::sqrt(std::max(0.0, 1.0 - u * u));
    for (std::size_t i = 0; i < kStateDim; ++i) g[i] = outer * (y[i] / root - u * x[i] / (2.0 * a));
    return g;
}

Standardizer Standardizer::fit(const std::vector<FlightState>& X, double radius2) {
    if (!(radius2 > 0.0)) throw ConfigError("standardizer radius must be positive");
    Standardizer s;
    s.radius2 = radius2;
    if (X.empty()) return s;
    Vec8 sumsq{};
    for (const auto& x : X) {
        const auto a = x.to_array();
        for (std::size_t i = 0; i < kStateDim; ++i) sumsq[i] += a[i] * a[i];
    }
    for (std::size_t i = 0; i < kStateDim; ++i) {
        const double rms = std::sqrt(sumsq[i] / static_cast<double>(X.size()));
        s.constant[i] = !(rms > 0.0);
        s.center[i] = 0.0;
        s.scale[i] = s.constant[i] ? 1.0 : rms;
    }
    double r2max = 0.0;
    for (const auto& x : X) {
        const auto a = x.to_array();
        double r2 = 0.0;
        for (std::size_t i = 0; i < kStateDim; ++i)
            if (!s.constant[i]) r2 += (a[i] / s.scale[i]) * (a[i] / s.scale[i]);
        r2max = std::max(r2max, r2);
    }
    if (r2max > 0.0) {
        const double shrink = std::sqrt(r2max / radius2);
        for (std::size_t i = 0; i < kStateDim; ++i)
            if (!s.constant[i]) s.scale[i] *= shrink;
    }
    return s;
}

Vec8 Standardizer::apply(const FlightState& x) const {
    const auto a = x.to_array();
    Vec8 z;
    for (std::size_t i = 0; i < kStateDim; ++i) z[i] = (a[i] - center[i]) / scale[i];
    return z;
}

double MeanFunction::value(const FlightState& x) const {
    return model ? model->value(project(x, cbar)) : 0.0;
}

Vec8 MeanFunction::gradient(const FlightState& x) const {
    Vec8 g{};
    if (!model) return g;
    const AeroPoint p = project(x, cbar);
    const auto d = model->partials(p);
    const double V = x.true_airspeed();
    g[kAlpha] = d[0];
    g[kDeltaE] = d[2];
    // qtilde = Q cbar / (2 V) with V = sqrt(2 qbar / rho).
    g[kQ] = d[1] * cbar / (2.0 * V);
    g[kQbar] = -d[1] * p.qtilde / (2.0 * x.qbar);
    g[kRho] = d[1] * p.qtilde / (2.0 * x.rho);
    return g;
}

Eigen::MatrixXd gram_matrix_serial(const KernelSpec& k, const RowMatrix8& Z) {
    const Eigen::Index n = Z.rows();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) K(i, j) = K(j, i) = kernel_eval(k, Z.row(i).data(), Z.row(j).data());
    return K;
}

Eigen::MatrixXd gram_matrix_parallel(const KernelSpec& k, const RowMatrix8& Z) {
    const Eigen::Index n = Z.rows();
    Eigen::MatrixXd K(n, n);
    bool failed = false;
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < n; ++i) {
        try {
            for (Eigen::Index j = 0; j <= i; ++j)
                K(i, j) = K(j, i) = kernel_eval(k, Z.row(i).data(), Z.row(j).data());
        } catch (const NumericError&) {
#pragma omp atomic write
            failed = true;
        }
    }
    if (failed) throw NumericError("NN kernel: asin argument outside [-1, 1] in Gram assembly");
    return K;
}

namespace {

RowMatrix8 standardize_all(const Standardizer& s, const std::vector<FlightState>& X) {
    RowMatrix8 Z(static_cast<Eigen::Index>(X.size()), static_cast<Eigen::Index>(kStateDim));
    for (std::size_t i = 0; i < X.size(); ++i) {
        const auto z = s.apply(X[i]);
        for (std::size_t d = 0; d < kStateDim; ++d) Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = z[d];
    }
    return Z;
}

Eigen::VectorXd cross_kernel(const GpModel& m, const Vec8& z) {
    Eigen::VectorXd k(m.Z.rows());
    for (Eigen::Index j = 0; j < m.Z.rows(); ++j) k[j] = kernel_eval(m.kernel, z.data(), m.Z.row(j).data());
    return k;
}

}  // namespace

GpModel fit(const std::vector<CoefficientSample>& samples, const MeanFunction& mean, const KernelSpec& kernel,
            double nu, const FitOptions& opt) {
    kernel.validate();
    if (!(nu >= 0.0)) throw ConfigError("noise variance must be non-negative");
    GpModel m;
    m.mean = mean;
    m.kernel = kernel;
    m.nu = nu;
    if (!samples.empty()) m.channel = samples.front().channel;
    for (const auto& s : samples) {
        if (!std::isfinite(s.y)) throw DataError("training target is not finite");
        m.X.push_back(s.x);
    }
    if (opt.standardizer) {
        m.standardizer = *opt.standardizer;
    } else {
        if (samples.empty()) throw UsageError("fitting zero samples needs an explicit standardizer");
        m.standardizer = Standardizer::fit(m.X, opt.radius2);
    }
    m.Z = standardize_all(m.standardizer, m.X);
    const Eigen::Index n = m.Z.rows();
    m.y.resize(n);
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m.y[i] = samples[static_cast<std::size_t>(i)].y;
        resid[i] = m.y[i] - mean.value(m.X[static_cast<std::size_t>(i)]);
    }
    if (n == 0) {
        m.A.resize(0);
        m.L.resize(0, 0);
        return m;
    }

    const Eigen::MatrixXd K = opt.parallel ? gram_matrix_parallel(kernel, m.Z) : gram_matrix_serial(kernel, m.Z);
    const double mean_diag = K.diagonal().mean();
    const double base = 1e-10 * (mean_diag > 0.0 ? mean_diag : 1.0);
    std::vector<double> attempts;
    if (opt.fixed_jitter) {
        attempts = {*opt.fixed_jitter};
    } else {
        attempts = {0.0, base, 10 * base, 100 * base, 1000 * base};
    }
    double smallest_pivot = 0.0;
    for (double jit : attempts) {
        m.L = K;
        m.L.diagonal().array() += nu + jit;
        Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(m.L);
        const auto diag = m.L.diagonal();
        smallest_pivot = diag.minCoeff();
        if (llt.info() == Eigen::Success && diag.allFinite() && smallest_pivot > 0.0) {
            m.L.triangularView<Eigen::StrictlyUpper>().setZero();
            m.jitter = jit;
            m.A = m.L.triangularView<Eigen::Lower>().solve(resid);
            m.L.triangularView<Eigen::Lower>().transpose().solveInPlace(m.A);
            return m;
        }
    }
    throw ConditioningError("Cholesky factorization failed after jitter escalation (smallest pivot " +
                                std::to_string(smallest_pivot) + ")",
                            smallest_pivot);
}

double predict_mean(const GpModel& m, const FlightState& x) {
    double mu = m.mean.value(x);
    if (m.size() == 0) return mu;
    const Vec8 z = m.standardizer.apply(x);
    for (Eigen::Index j = 0; j < m.Z.rows(); ++j) mu += kernel_eval(m.kernel, z.data(), m.Z.row(j).data()) * m.A[j];
    return mu;
}

std::vector<double> predict_mean_batch_serial(const GpModel& m, const std::vector<FlightState>& xs) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = predict_mean(m, xs[i]);
    return out;
}

std::vector<double> predict_mean_batch_parallel(const GpModel& m, const std::vector<FlightState>& xs) {
    std::vector<double> out(xs.size());
    const auto n = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = predict_mean(m, xs[static_cast<std::size_t>(i)]);
    return out;
}

VariancePrediction predict_variance(const GpModel& m, const FlightState& x) {
    const Vec8 z = m.standardizer.apply(x);
    VariancePrediction v;
    v.raw = kernel_eval(m.kernel, z.data(), z.data());
    if (m.size() > 0) {
        const Eigen::VectorXd w = m.L.triangularView<Eigen::Lower>().solve(cross_kernel(m, z));
        v.raw -= w.squaredNorm();
    }
    v.clamped = v.raw < 0.0;
    v.value = v.clamped ? 0.0 : v.raw;
    return v;
}

Vec8 posterior_gradient(const GpModel& m, const FlightState& x) {
    Vec8 g = m.mean.gradient(x);
    if (m.size() == 0) return g;
    const Vec8 z = m.standardizer.apply(x);
    Vec8 gz{};
    for (Eigen::Index j = 0; j < m.Z.rows(); ++j) {
        const Vec8 dk = kernel_grad(m.kernel, z.data(), m.Z.row(j).data());
        for (std::size_t d = 0; d < kStateDim; ++d) gz[d] += dk[d] * m.A[j];
    }
    for (std::size_t d = 0; d < kStateDim; ++d) g[d] += gz[d] / m.standardizer.scale[d];
    return g;
}

FitReport fit_report(const GpModel& m) {
    FitReport r;
    r.n = m.size();
    r.nu = m.nu;
    r.jitter = m.jitter;
    if (r.n == 0) return r;
    const auto d = m.L.diagonal();
    const double ratio = d.maxCoeff() / d.minCoeff();
    r.condition_estimate = ratio * ratio;
    // y - mu(X) = (nu + jitter) A at the training inputs.
    r.residual_rms = (m.nu + m.jitter) * std::sqrt(m.A.squaredNorm() / static_cast<double>(r.n));
    return r;
}

double estimate_nu(const std::vector<std::vector<double>>& series) {
    std::vector<double> resid;
    for (const auto& s : series) {
        for (std::size_t i = 2; i + 2 < s.size(); ++i) {
            std::array<double, 5> w{s[i - 2], s[i - 1], s[i], s[i + 1], s[i + 2]};
            std::nth_element(w.begin(), w.begin() + 2, w.end());
            resid.push_back(s[i] - w[2]);
        }
    }
    if (resid.size() < 2) throw InsufficientDataError("noise estimate needs at least 5 samples");
    const double mean = std::accumulate(resid.begin(), resid.end(), 0.0) / static_cast<double>(resid.size());
    double ss = 0.0;
    for (double r : resid) ss += (r - mean) * (r - mean);
    return ss / static_cast<double>(resid.size() - 1);
}

// ---- checkpoint ----

namespace {

constexpr int kCheckpointVersion = 1;

json vec8_json(const Vec8& v) { return json(std::vector<double>(v.begin(), v.end())); }

Vec8 vec8_from(const json& j) {
    if (!j.is_array() || j.size() != kStateDim) throw FormatError("checkpoint: expected 8-vector");
    Vec8 v;
    for (std::size_t i = 0; i < kStateDim; ++i) v[i] = j[i].get<double>();
    return v;
}

}  // namespace

std::string checkpoint_to_json(const GpModel& m) {
    json X = json::array();
    for (const auto& x : m.X) X.push_back(vec8_json(x.to_array()));
    json j;
    j["format"] = "sysid-gp-checkpoint";
    j["version"] = kCheckpointVersion;
    j["channel"] = to_string(m.channel);
    j["kernel"] = {{"kind", m.kernel.kind == KernelKind::NeuralNetwork ? "nn" : "se"},
                   {"lengthscales", vec8_json(m.kernel.lengthscales)},
                   {"signal_variance", m.kernel.signal_variance}};
    j["nu"] = m.nu;
    j["jitter"] = m.jitter;
    j["standardizer"] = {{"center", vec8_json(m.standardizer.center)},
                         {"scale", vec8_json(m.standardizer.scale)},
                         {"constant", std::vector<bool>(m.standardizer.constant.begin(), m.standardizer.constant.end())},
                         {"radius2", m.standardizer.radius2}};
    j["mean"] = {{"cbar", m.mean.cbar},
                 {"model", m.mean.model ? json::parse(model_to_json_text(*m.mean.model)) : json(nullptr)}};
    j["X"] = X;
    j["y"] = std::vector<double>(m.y.data(), m.y.data() + m.y.size());
    j["A"] = std::vector<double>(m.A.data(), m.A.data() + m.A.size());
    return j.dump();
}

GpModel checkpoint_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.at("format") != "sysid-gp-checkpoint") throw FormatError("not a GP checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion)
            throw FormatError("unsupported checkpoint version " + std::to_string(j.at("version").get<int>()));
        KernelSpec k;
        k.kind = j.at("kernel").at("kind") == "nn" ? KernelKind::NeuralNetwork : KernelKind::SquaredExponential;
        k.lengthscales = vec8_from(j["kernel"].at("lengthscales"));
        k.signal_variance = j["kernel"].at("signal_variance").get<double>();
        Standardizer s;
        s.center = vec8_from(j.at("standardizer").at("center"));
        s.scale = vec8_from(j["standardizer"].at("scale"));
        const auto flags = j["standardizer"].at("constant").get<std::vector<bool>>();
        if (flags.size() != kStateDim) throw FormatError("checkpoint: bad constant flags");
        for (std::size_t i = 0; i < kStateDim; ++i) s.constant[i] = flags[i];
        s.radius2 = j["standardizer"].at("radius2").get<double>();
        MeanFunction mean;
        mean.cbar = j.at("mean").at("cbar").get<double>();
        if (!j["mean"].at("model").is_null()) mean.model = model_from_json_text(j["mean"]["model"].dump());

        const Channel ch = channel_from_string(j.at("channel").get<std::string>());
        const auto& X = j.at("X");
        const auto y = j.at("y").get<std::vector<double>>();
        const auto A = j.at("A").get<std::vector<double>>();
        if (X.size() != y.size() || A.size() != y.size()) throw FormatError("checkpoint: inconsistent sizes");
        std::vector<CoefficientSample> samples(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) samples[i] = {FlightState::from_array(vec8_from(X[i])), y[i], ch};

        FitOptions opt;
        opt.standardizer = s;
        opt.fixed_jitter = j.at("jitter").get<double>();
        GpModel m = fit(samples, mean, k, j.at("nu").get<double>(), opt);
        m.channel = ch;
        for (std::size_t i = 0; i < A.size(); ++i)
            if (A[i] != m.A[static_cast<Eigen::Index>(i)])
                throw FormatError("checkpoint: recomputed weights differ from stored weights");
        return m;
    } catch (const json::exception& ex) {
        throw FormatError(std::string("checkpoint: ") + ex.what());
    }
}

void save_checkpoint(const GpModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << checkpoint_to_json(m) << "\n";
}

GpModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return checkpoint_from_json(ss.str());
}

}  // namespace sysid
