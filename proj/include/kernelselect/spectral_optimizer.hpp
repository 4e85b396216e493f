#pragma once

// Maximization of sum_i l_i c_i / (alpha + l_i)^2 over the probability simplex.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kernelselect/common.hpp"

namespace ksel {

/// c_i = |<e_i, phi>|^2 for an orthonormal basis {e_i}.
struct CoefficientProfile {
    std::vector<double> c;
    double phi_norm_sq = 0.0;

    /// phi_norm_sq = sum c_i.
    explicit CoefficientProfile(std::vector<double> coeffs);
    /// Checks sum c_i = phi_norm_sq within 1e-10 (relative to max(1, phi_norm_sq)).
    CoefficientProfile(std::vector<double> coeffs, double phi_norm_sq);

    std::size_t size() const { return c.size(); }
};

struct SpectrumSolution {
    std::vector<double> lambda;
    /// Multiplier of the simplex constraint in (alpha - l) c = A (alpha + l)^3.
    double A = 0.0;
    double objective = 0.0;
    /// max over active i of |(alpha - l_i) c_i - A (alpha + l_i)^3| / (alpha c_i)
    double kkt_residual = 0.0;
    bool certified_global = false;
    /// sum_i A^{2/3} l_i c_i^{1/3} / (alpha - l_i)^{2/3}; NaN when not applicable.
    double objective_lagrangian_form = 0.0;
    /// "kkt", "saturated", "single", or "search".
    std::string method;
};

double objective_rkhs(std::span<const double> lambda, std::span<const double> c, double alpha);
double objective_ambient(std::span<const double> lambda, std::span<const double> c, double alpha);

/// Root in [0, alpha) of (alpha - l) c = A (alpha + l)^3; 0 when A alpha^3 >= alpha c.
double solve_inner(double c, double alpha, double A);

struct SolveOptions {
    std::uint64_t seed = 0;
    /// Projected-gradient restarts used when alpha < 0.5.
    std::size_t multistart = 32;
    /// Grid step of the oracle consulted when alpha < 0.5 and N <= 4.
    double fallback_grid_step = 1e-3;
};

SpectrumSolution solve_spectrum(const CoefficientProfile& profile, double alpha, const SolveOptions& opts = {});

struct GridResult {
    std::vector<double> lambda;
    double objective;
};

/// Exact maximum over {l : l_i in step Z, sum l_i = 1}. N <= 4, step <= 1e-2, 1/step integral.
GridResult oracle_grid(const CoefficientProfile& profile, double alpha, double step);

/// Local maximum by projected gradient ascent on the simplex from `start`.
std::vector<double> projected_gradient(std::span<const double> c, double alpha, std::vector<double> start,
                                       std::size_t max_iter = 20000);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::span<const double> v);

}  // namespace ksel
