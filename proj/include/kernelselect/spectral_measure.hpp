#pragma once

// Finite Borel measures on the frequency line and the stationary kernels they
// generate through g(t) = \int e^{i xi t} dmu(xi).

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kernelselect/common.hpp"

namespace ksel {

/// How Fourier-side columns of the built-in kernels are normalized.
/// `probability` uses the exact density of the probability measure;
/// `paper_table` drops the 1/pi (Laplace) and (2 pi)^{-1/2} (Gauss) constants.
enum class Convention { probability, paper_table };

Convention parse_convention(const std::string& text);
std::string to_string(Convention c);

class SpectralMeasure {
public:
    struct Density {
        std::string name;
        std::function<double(double)> density;
        /// Mass outside [-C, C]. Empty when no analytic tail is known.
        std::function<double(double)> tail_mass;
        /// Closed-form Fourier transform, if known.
        std::function<Complex(double)> characteristic;
        bool even = true;
        double total_mass = 1.0;
        /// Factor applied to the density under Convention::paper_table.
        double paper_table_factor = 1.0;
    };
    struct Atomic {
        std::vector<double> frequencies;
        std::vector<double> masses;
    };

    /// dmu = (s/pi) / (1 + s^2 xi^2) dxi, the measure of g(t) = exp(-|t|/s).
    static SpectralMeasure laplace(double scale = 1.0);
    /// dmu = s (2 pi)^{-1/2} exp(-s^2 xi^2 / 2) dxi, the measure of g(t) = exp(-t^2 / (2 s^2)).
    static SpectralMeasure gauss(double scale = 1.0);
    static SpectralMeasure atomic(std::vector<double> frequencies, std::vector<double> masses);
    static SpectralMeasure from_density(Density d);

    bool is_atomic() const { return atomic_ != nullptr; }
    const Atomic& atoms() const;
    const Density& density_info() const;
    const std::string& name() const { return name_; }

    double total_mass() const { return total_mass_; }

    /// Density value dmu/dxi; CapabilityError for atomic measures.
    double density(double xi) const;
    /// Density scaled for the requested convention.
    double multiplier(double xi, Convention conv) const;

    /// Mass outside [-cutoff, cutoff]. Exact for atomic measures and the built-ins.
    double tail_mass(double cutoff) const;

    /// Fourier transform at t: closed form when available, otherwise quadrature.
    Complex characteristic(double t) const;
    /// Fourier transform at t by quadrature of the measure (finite sum for atoms).
    Complex characteristic_quadrature(double t) const;

    /// \int_{|xi| > cutoff} e^{i xi t} dmu(xi), by oscillatory quadrature on the half lines.
    Complex tail_fourier(double t, double cutoff) const;

private:
    std::string name_;
    double total_mass_ = 1.0;
    std::shared_ptr<const Density> density_;
    std::shared_ptr<const Atomic> atomic_;
};

/// K_g(x, y) = g(x - y) on the real line with g the Fourier transform of a
/// finite positive measure.
class StationaryKernel {
public:
    explicit StationaryKernel(SpectralMeasure spectral);

    static StationaryKernel builtin(const std::string& name, double scale = 1.0);

    const SpectralMeasure& spectral() const { return spectral_; }
    const std::string& name() const { return spectral_.name(); }

    /// g(t).
    Complex g(double t) const { return spectral_.characteristic(t); }
    Complex eval(double x, double y) const { return g(x - y); }

private:
    SpectralMeasure spectral_;
};

/// Fixed quadrature nodes on [-cutoff, cutoff], composite Gauss-Legendre.
struct FrequencyGrid {
    std::vector<double> nodes;
    std::vector<double> weights;
    double cutoff = 0.0;

    static FrequencyGrid composite_gauss_legendre(double cutoff, std::size_t panels);
    std::size_t size() const { return nodes.size(); }
};

namespace quad {

struct Estimate {
    double value;
    double error;
};

/// Adaptive Gauss-Kronrod (61 points) with its error estimate.
Estimate integrate_estimate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-13,
                            unsigned max_depth = 30);

/// Adaptive Gauss-Kronrod (61 points) on [a, b].
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-13,
                 unsigned max_depth = 30);
Complex integrate_complex(const std::function<Complex(double)>& f, double a, double b, double rel_tol = 1e-13,
                          unsigned max_depth = 30);

}  // namespace quad

}  // namespace ksel
