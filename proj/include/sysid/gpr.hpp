#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sysid/aeromean.hpp"
#include "sysid/flightdata.hpp"

namespace sysid {

using Vec8 = std::array<double, kStateDim>;

enum class KernelKind { NeuralNetwork, SquaredExponential };

struct KernelSpec {
    KernelKind kind = KernelKind::NeuralNetwork;
    Vec8 lengthscales{1, 1, 1, 1, 1, 1, 1, 1};  // SE only
    double signal_variance = 1.0;               // SE only

    void validate() const;
};

// Kernel on standardized coordinates. NN: asin(x.y / sqrt((1+|x|^2/2)(1+|y|^2/2))).
double kernel_eval(const KernelSpec& k, const double* x, const double* y);
// Gradient of k(x, y) with respect to x.
Vec8 kernel_grad(const KernelSpec& k, const double* x, const double* y);

// Uncentered per-dimension RMS scaling followed by a common contraction that
// places every training point inside |z|^2 <= radius2. All-zero dimensions are
// flagged constant and passed through unscaled.
struct Standardizer {
    Vec8 center{};
    Vec8 scale{1, 1, 1, 1, 1, 1, 1, 1};
    std::array<bool, kStateDim> constant{};
    double radius2 = 0.1;

    static Standardizer fit(const std::vector<FlightState>& X, double radius2 = 0.1);
    Vec8 apply(const FlightState& x) const;
};

// Physics prior evaluated in physical units through (alpha, qtilde, delta_e).
// No hull restriction here: the GP is allowed to extrapolate.
struct MeanFunction {
    std::optional<GenericAeroModel> model;
    double cbar = 1.0;

    double value(const FlightState& x) const;
    Vec8 gradient(const FlightState& x) const;
};

using RowMatrix8 = Eigen::Matrix<double, Eigen::Dynamic, kStateDim, Eigen::RowMajor>;

// Gram matrix assembly; both variants produce identical bits.
Eigen::MatrixXd gram_matrix_serial(const KernelSpec& k, const RowMatrix8& Z);
Eigen::MatrixXd gram_matrix_parallel(const KernelSpec& k, const RowMatrix8& Z);

struct FitOptions {
    double radius2 = 0.1;
    bool parallel = true;
    std::optional<Standardizer> standardizer;  // required when fitting zero samples
    std::optional<double> fixed_jitter;        // bypass escalation (checkpoint reload)
};

struct GpModel {
    Channel channel = Channel::Cm;
    std::vector<FlightState> X;  // physical units
    RowMatrix8 Z;                // standardized
    Eigen::VectorXd y;
    Eigen::VectorXd A;
    Eigen::MatrixXd L;  // lower Cholesky factor of K + (nu + jitter) I
    MeanFunction mean;
    KernelSpec kernel;
    double nu = 0.0;
    double jitter = 0.0;
    Standardizer standardizer;

    std::size_t size() const { return X.size(); }
};

GpModel fit(const std::vector<CoefficientSample>& samples, const MeanFunction& mean, const KernelSpec& kernel,
            double nu, const FitOptions& opt = {});

double predict_mean(const GpModel& m, const FlightState& x);
std::vector<double> predict_mean_batch_serial(const GpModel& m, const std::vector<FlightState>& xs);
std::vector<double> predict_mean_batch_parallel(const GpModel& m, const std::vector<FlightState>& xs);

struct VariancePrediction {
    double value = 0.0;  // clamped to >= 0
    double raw = 0.0;
    bool clamped = false;
};
VariancePrediction predict_variance(const GpModel& m, const FlightState& x);

// d mu / d x in physical units, ordered as the GP input vector.
Vec8 posterior_gradient(const GpModel& m, const FlightState& x);

struct FitReport {
    std::size_t n = 0;
    double condition_estimate = 0.0;
    double nu = 0.0;
    double jitter = 0.0;
    double residual_rms = 0.0;
};
FitReport fit_report(const GpModel& m);

// Noise variance estimate: pooled variance of each series minus its window-5 moving median.
double estimate_nu(const std::vector<std::vector<double>>& series);

void save_checkpoint(const GpModel& m, const std::string& path);
GpModel load_checkpoint(const std::string& path);
std::string checkpoint_to_json(const GpModel& m);
GpModel checkpoint_from_json(const std::string& text);

}  // namespace sysid
