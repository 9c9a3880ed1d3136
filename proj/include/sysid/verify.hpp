#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sysid/gpr.hpp"

namespace sysid::verify {

// Outcome of one property check: the measured worst case against its bound.
struct Check {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool passed = false;
    std::string detail;
};

// Random but reproducible GP problem: 8 active input dimensions, truth-like
// targets with noise, wrong-prior mean.
struct GpProblem {
    std::vector<CoefficientSample> samples;
    MeanFunction mean;
    std::vector<FlightState> queries;
};
GpProblem random_gp_problem(std::size_t n, std::size_t queries, std::uint64_t seed);

// Mean and variance against an explicit-inverse dense solve; returns the worst of the two.
Check gp_dense_inverse(std::uint64_t seed, std::size_t n = 50, double nu = 1e-2);
Check gp_interpolation(std::uint64_t seed);
Check gp_zero_data(std::uint64_t seed);
Check gp_gradient_fd(KernelKind kind, std::uint64_t seed, std::size_t queries = 20);
Check kernel_identities(std::uint64_t seed);
Check short_period_eigen(std::uint64_t seed, std::size_t sets = 1000);
Check short_period_reduction(std::uint64_t seed);
Check aeromean_fd(std::uint64_t seed, std::size_t points = 100);
Check aeromean_direct_sum(std::uint64_t seed, std::size_t points = 1000);
Check stencil_polynomial();
Check trim_exact_recovery();
// Median (a, b) over seeded replications with 1% multiplicative alpha noise.
Check trim_noise_recovery(std::uint64_t seed, std::size_t replications = 100);

// Simulator checks on the truth-like fixture aircraft.
Check rk4_order();
Check trim_drift();
struct DoubletFit {
    double omega_fit = 0.0;  // |s| of the fitted short-period pole
    double zeta_fit = 0.0;
    double omega_model = 0.0;  // two-DOF prediction with M_alpha_dot = 0
    double zeta_model = 0.0;
};
DoubletFit doublet_frequency(double qbar);
Check doublet_response();

std::vector<Check> run_all(std::uint64_t seed = 1);

std::string format(const Check& c);

}  // namespace sysid::verify
