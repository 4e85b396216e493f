#include "kernelselect/spectral_measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

namespace ksel {

Convention parse_convention(const std::string& text) {
    if (text == "probability") return Convention::probability;
    if (text == "paper-table") return Convention::paper_table;
    throw ArgumentError("unknown convention '" + text + "' (expected probability or paper-table)");
}

std::string to_string(Convention c) { return c == Convention::probability ? "probability" : "paper-table"; }

namespace {

using std::numbers::pi;

// Half-line integrals \int_0^\infty q(u) {cos,sin}(w u) du, w > 0.
double half_line_cos(const std::function<double(double)>& q, double w) {
    thread_local boost::math::quadrature::ooura_fourier_cos<double> integrator(1e-14);
    return integrator.integrate(q, w).first;
}

double half_line_sin(const std::function<double(double)>& q, double w) {
    thread_local boost::math::quadrature::ooura_fourier_sin<double> integrator(1e-14);
    return integrator.integrate(q, w).first;
}

double half_line(const std::function<double(double)>& q) {
    thread_local boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate(q, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

// \int_0^\infty e^{i t u} q(u) du for real t.
Complex half_line_fourier(const std::function<double(double)>& q, double t) {
    if (t == 0.0) return {half_line(q), 0.0};
    const double w = std::abs(t);
    const double s = t > 0 ? 1.0 : -1.0;
    return {half_line_cos(q, w), s * half_line_sin(q, w)};
}

}  // namespace

SpectralMeasure SpectralMeasure::laplace(double scale) {
    require(scale > 0 && std::isfinite(scale), "laplace: scale must be positive");
    Density d;
    d.name = "laplace";
    d.density = [scale](double xi) { return (scale / pi) / (1.0 + scale * scale * xi * xi); };
    d.tail_mass = [scale](double c) { return c <= 0 ? 1.0 : (2.0 / pi) * std::atan(1.0 / (scale * c)); };
    d.characteristic = [scale](double t) { return Complex(std::exp(-std::abs(t) / scale), 0.0); };
    d.paper_table_factor = pi / scale;
    return from_density(std::move(d));
}

SpectralMeasure SpectralMeasure::gauss(double scale) {
    require(scale > 0 && std::isfinite(scale), "gauss: scale must be positive");
    Density d;
    d.name = "gauss";
    d.density = [scale](double xi) {
        return scale / std::sqrt(2.0 * pi) * std::exp(-0.5 * scale * scale * xi * xi);
    };
    d.tail_mass = [scale](double c) { return c <= 0 ? 1.0 : std::erfc(scale * c / std::numbers::sqrt2); };
    d.characteristic = [scale](double t) { return Complex(std::exp(-0.5 * t * t / (scale * scale)), 0.0); };
    d.paper_table_factor = std::sqrt(2.0 * pi) / scale;
    return from_density(std::move(d));
}

SpectralMeasure SpectralMeasure::atomic(std::vector<double> frequencies, std::vector<double> masses) {
    require(!frequencies.empty() && frequencies.size() == masses.size(),
            "atomic spectral measure: need matching, nonempty frequency and mass lists");
    double total = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        require(std::isfinite(frequencies[i]), "atomic spectral measure: non-finite frequency");
        require(masses[i] > 0 && std::isfinite(masses[i]), "atomic spectral measure: masses must be positive");
        total += masses[i];
    }
    SpectralMeasure m;
    m.name_ = "atomic";
    m.total_mass_ = total;
    m.atomic_ = std::make_shared<Atomic>(Atomic{std::move(frequencies), std::move(masses)});
    return m;
}

SpectralMeasure SpectralMeasure::from_density(Density d) {
    require(static_cast<bool>(d.density), "density measure needs a density function");
    SpectralMeasure m;
    m.name_ = d.name;
    m.total_mass_ = d.total_mass;
    m.density_ = std::make_shared<Density>(std::move(d));
    return m;
}

const SpectralMeasure::Atomic& SpectralMeasure::atoms() const {
    if (!atomic_) throw CapabilityError("spectral measure '" + name_ + "' is not atomic");
    return *atomic_;
}

const SpectralMeasure::Density& SpectralMeasure::density_info() const {
    if (!density_) throw CapabilityError("spectral measure '" + name_ + "' has an atomic part; no density");
    return *density_;
}

double SpectralMeasure::density(double xi) const { return density_info().density(xi); }

double SpectralMeasure::multiplier(double xi, Convention conv) const {
    const Density& d = density_info();
    const double p = d.density(xi);
    return conv == Convention::paper_table ? p * d.paper_table_factor : p;
}

double SpectralMeasure::tail_mass(double cutoff) const {
    if (atomic_) {
        double s = 0.0;
        for (std::size_t i = 0; i < atomic_->masses.size(); ++i)
            if (std::abs(atomic_->frequencies[i]) > cutoff) s += atomic_->masses[i];
        return s;
    }
    if (density_->tail_mass) return density_->tail_mass(cutoff);
    const auto& p = density_->density;
    const double right = half_line([&](double u) { return p(u + cutoff); });
    const double left = half_line([&](double u) { return p(-(u + cutoff)); });
    return right + left;
}

Complex SpectralMeasure::characteristic(double t) const {
    if (density_ && density_->characteristic) return density_->characteristic(t);
    return characteristic_quadrature(t);
}

Complex SpectralMeasure::characteristic_quadrature(double t) const {
    if (atomic_) {
        Complex s = 0.0;
        for (std::size_t i = 0; i < atomic_->masses.size(); ++i)
            s += atomic_->masses[i] * std::exp(Complex(0.0, atomic_->frequencies[i] * t));
        return s;
    }
    const auto& p = density_->density;
    if (density_->even) {
        const Complex h = half_line_fourier(p, t);
        return {2.0 * h.real(), 0.0};
    }
    const Complex right = half_line_fourier(p, t);
    const Complex left = half_line_fourier([&](double u) { return p(-u); }, -t);
    return right + left;
}

Complex SpectralMeasure::tail_fourier(double t, double cutoff) const {
    require(cutoff >= 0, "tail_fourier: cutoff must be nonnegative");
    if (atomic_) {
        Complex s = 0.0;
        for (std::size_t i = 0; i < atomic_->masses.size(); ++i)
            if (std::abs(atomic_->frequencies[i]) > cutoff)
                s += atomic_->masses[i] * std::exp(Complex(0.0, atomic_->frequencies[i] * t));
        return s;
    }
    const auto& p = density_->density;
    const Complex right =
        std::exp(Complex(0.0, cutoff * t)) * half_line_fourier([&](double u) { return p(u + cutoff); }, t);
    if (density_->even) return {2.0 * right.real(), 0.0};
    const Complex left =
        std::exp(Complex(0.0, -cutoff * t)) * half_line_fourier([&](double u) { return p(-(u + cutoff)); }, -t);
    return right + left;
}

StationaryKernel::StationaryKernel(SpectralMeasure spectral) : spectral_(std::move(spectral)) {
    require(spectral_.total_mass() > 0, "stationary kernel: spectral measure must have positive mass");
}

StationaryKernel StationaryKernel::builtin(const std::string& name, double scale) {
    if (name == "laplace") return StationaryKernel(SpectralMeasure::laplace(scale));
    if (name == "gauss") return StationaryKernel(SpectralMeasure::gauss(scale));
    throw ArgumentError("unknown stationary kernel '" + name + "' (expected laplace or gauss)");
}

FrequencyGrid FrequencyGrid::composite_gauss_legendre(double cutoff, std::size_t panels) {
    require(cutoff > 0 && std::isfinite(cutoff), "frequency grid: cutoff must be positive");
    require(panels >= 1, "frequency grid: need at least one panel");
    using rule = boost::math::quadrature::gauss<double, 20>;
    const auto& x = rule::abscissa();
    const auto& w = rule::weights();
    FrequencyGrid grid;
    grid.cutoff = cutoff;
    const double h = 2.0 * cutoff / static_cast<double>(panels);
    grid.nodes.reserve(panels * 20);
    grid.weights.reserve(panels * 20);
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = -cutoff + (static_cast<double>(p) + 0.5) * h;
        // boost stores the nonnegative half of a symmetric rule; 20 points -> 10 stored, none at 0.
        for (std::size_t k = x.size(); k-- > 0;) {
            grid.nodes.push_back(mid - 0.5 * h * x[k]);
            grid.weights.push_back(0.5 * h * w[k]);
        }
        for (std::size_t k = 0; k < x.size(); ++k) {
            grid.nodes.push_back(mid + 0.5 * h * x[k]);
            grid.weights.push_back(0.5 * h * w[k]);
        }
    }
    return grid;
}

namespace quad {

namespace {

// Global adaptive Gauss-Kronrod: split the piece with the largest error estimate until
// the total error is below rel_tol |I| (or rounding level relative to \int |f|), the
// pieces reach width (b - a) / 2^max_depth, or the piece budget runs out.
template <class K, class F>
std::pair<K, double> adaptive(F f, double a, double b, double rel_tol, unsigned max_depth) {
    using rule = boost::math::quadrature::gauss_kronrod<double, 61>;
    struct Piece {
        double a, b;
        K value;
        double error, l1;
    };
    const auto eval = [&](double lo, double hi) {
        double err = 0.0, l1 = 0.0;
        const K v = rule::integrate(f, lo, hi, 0, 0.0, &err, &l1);
        return Piece{lo, hi, v, err, l1};
    };
    const auto by_error = [](const Piece& x, const Piece& y) { return x.error < y.error; };
    constexpr std::size_t kMaxPieces = 4000;
    const double min_width = std::ldexp(b - a, -static_cast<int>(std::min(max_depth, 60u)));

    std::vector<Piece> heap{eval(a, b)};
    while (true) {
        K value = 0.0;
        double error = 0.0, l1 = 0.0;
        for (const Piece& p : heap) {
            value += p.value;
            error += p.error;
            l1 += p.l1;
        }
        if (!(error > std::max(rel_tol * std::abs(value), 1e-15 * l1)) || heap.size() >= kMaxPieces)
            return {value, error};
        std::pop_heap(heap.begin(), heap.end(), by_error);
        const Piece worst = heap.back();
        const double mid = 0.5 * (worst.a + worst.b);
        if (worst.b - worst.a < 2 * min_width || !(mid > worst.a && mid < worst.b)) {
            std::push_heap(heap.begin(), heap.end(), by_error);
            return {value, error};
        }
        heap.back() = eval(worst.a, mid);
        std::push_heap(heap.begin(), heap.end(), by_error);
        heap.push_back(eval(mid, worst.b));
        std::push_heap(heap.begin(), heap.end(), by_error);
    }
}

}  // namespace

Estimate integrate_estimate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                            unsigned max_depth) {
    const auto [v, err] = adaptive<double>(f, a, b, rel_tol, max_depth);
    if (!std::isfinite(v)) throw NumericError("quadrature produced a non-finite value");
    return {v, err};
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol, unsigned max_depth) {
    return integrate_estimate(f, a, b, rel_tol, max_depth).value;
}

Complex integrate_complex(const std::function<Complex(double)>& f, double a, double b, double rel_tol,
                          unsigned max_depth) {
    const auto [v, err] = adaptive<Complex>(f, a, b, rel_tol, max_depth);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw NumericError("quadrature produced a non-finite value");
    return v;
}

}  // namespace quad

}  // namespace ksel
