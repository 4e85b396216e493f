#pragma once

// Operations on the family of stationary kernels g(x - y), g = Fourier transform of a
// probability measure mu: membership of g * rho in H_{K_g}, and the Fourier-side
// selection functionals.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kernelselect/spectral_measure.hpp"

namespace ksel {

StationaryKernel builtin_kernel(const std::string& name, double scale = 1.0);

/// rho = sum_k c_k delta_{x_k}; rho_hat(xi) = sum_k c_k exp(-i xi x_k).
struct SignedAtomicMeasure {
    std::vector<double> positions;
    std::vector<Complex> masses;

    Complex fourier(double xi) const;
};

/// Value of \int f dmu as the cutoff C doubles from 2^6 to 2^12.
struct GrowthTrace {
    std::vector<double> cutoffs;
    std::vector<double> values;
};

struct MembershipReport {
    bool member = false;
    /// The integral when member; the last truncated value otherwise.
    double value = 0.0;
    GrowthTrace trace;
};

/// True when every doubling in the trace grows the value by more than 1%.
bool is_divergent(const GrowthTrace& trace);

/// ||g * rho||^2 = \int |rho_hat|^2 dmu for a finite signed atomic rho.
MembershipReport convolution_membership(const StationaryKernel& kernel, const SignedAtomicMeasure& rho);
/// Same with rho_hat supplied as a function of the frequency.
MembershipReport convolution_membership(const StationaryKernel& kernel, const std::function<Complex(double)>& rho_hat);

/// \int xi^2 dmu, deciding whether g * delta'_x lies in H_{K_g}.
MembershipReport derivative_membership(const StationaryKernel& kernel);

/// \int conj(a_hat) b_hat dmu over |xi| <= cutoff.
Complex spectral_inner(const StationaryKernel& kernel, const std::function<Complex(double)>& a_hat,
                       const std::function<Complex(double)>& b_hat, double cutoff = 200.0);

/// (phi * g)(x) = \int_a^b phi(y) g(x - y) dy for phi supported in [a, b].
Complex convolve(const StationaryKernel& kernel, const std::function<double(double)>& phi, double a, double b, double x);

/// \int_a^b exp(-i xi y) phi(y) dy
Complex fourier_transform(const std::function<double(double)>& phi, double a, double b, double xi);

struct FeatureNorms {
    double rkhs = 0.0;
    double ambient = 0.0;
    /// max over nodes of |r - (alpha r2 + r^2)| with r = g/(alpha+g), r2 = g/(alpha+g)^2
    double identity_deviation = 0.0;
    /// mu mass outside the grid.
    double tail_mass = 0.0;
};

/// \int g_hat/(alpha+g_hat)^2 |phi_hat|^2 and \int g_hat/(alpha+g_hat) |phi_hat|^2 on the grid,
/// with g_hat the spectral density under `conv`. CapabilityError for atomic spectra.
FeatureNorms spectral_feature_norms(const StationaryKernel& kernel, const std::function<Complex(double)>& phi_hat,
                                    double alpha, const FrequencyGrid& grid,
                                    Convention conv = Convention::probability);

struct Table1Row {
    double g_hat;
    double ratio_sq;
    double ratio;
};

Table1Row table1_columns(const std::string& name, double alpha, double xi, Convention conv = Convention::probability);

struct Table1Columns {
    std::vector<double> xi;
    std::vector<double> g_hat;
    std::vector<double> ratio_sq;
    std::vector<double> ratio;
};

Table1Columns table1_columns(const std::string& name, double alpha, std::span<const double> xi,
                             Convention conv = Convention::probability);

}  // namespace ksel
