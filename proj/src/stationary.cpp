#include "kernelselect/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kernelselect/simd/kernels.hpp"

namespace ksel {

namespace {

constexpr double kFirstCutoff = 64.0;
constexpr int kDoublings = 6;
constexpr double kBodyCutoff = 200.0;

quad::Estimate checked(const std::function<double(double)>& f, double a, double b) {
    const quad::Estimate e = quad::integrate_estimate(f, a, b, 1e-12, 30);
    if (e.error > 1e-8 * std::max(1.0, std::abs(e.value))) {
        std::ostringstream os;
        os << "quadrature did not converge on [" << a << ", " << b << "]: value " << e.value << ", error estimate "
           << e.error;
        throw NumericError(os.str());
    }
    return e;
}

// \int f dmu for nonnegative f, over growing symmetric windows.
MembershipReport traced_integral(const SpectralMeasure& mu, const std::function<double(double)>& f) {
    MembershipReport r;
    if (mu.is_atomic()) {
        const auto& a = mu.atoms();
        double s = 0.0;
        for (std::size_t i = 0; i < a.masses.size(); ++i) s += a.masses[i] * f(a.frequencies[i]);
        r.member = std::isfinite(s);
        r.value = s;
        return r;
    }
    const auto& p = mu.density_info().density;
    const auto integrand = [&](double xi) {
        const double d = p(xi);
        return d == 0.0 ? 0.0 : f(xi) * d;
    };
    double c = kFirstCutoff;
    double value = checked(integrand, -c, c).value;
    r.trace.cutoffs.push_back(c);
    r.trace.values.push_back(value);
    for (int k = 0; k < kDoublings; ++k) {
        value += checked(integrand, c, 2 * c).value + checked(integrand, -2 * c, -c).value;
        c *= 2;
        r.trace.cutoffs.push_back(c);
        r.trace.values.push_back(value);
    }
    r.member = !is_divergent(r.trace);
    r.value = value;
    const double tail = mu.tail_mass(c);
    if (r.member && tail > 0) {
        // Tail: remaining mass times the mean of f over the outermost shell.
        double mean = 0.0;
        constexpr int samples = 16;
        for (int i = 0; i < samples; ++i) {
            const double xi = c * (0.5 + 0.5 * (i + 0.5) / samples);
            mean += 0.5 * (f(xi) + f(-xi));
        }
        r.value += tail * mean / samples;
    }
    return r;
}

}  // namespace

StationaryKernel builtin_kernel(const std::string& name, double scale) { return StationaryKernel::builtin(name, scale); }

Complex SignedAtomicMeasure::fourier(double xi) const {
    Complex s = 0.0;
    for (std::size_t k = 0; k < positions.size(); ++k) s += masses[k] * std::exp(Complex(0.0, -xi * positions[k]));
    return s;
}

bool is_divergent(const GrowthTrace& trace) {
    if (trace.values.size() < 2) return false;
    for (std::size_t k = 1; k < trace.values.size(); ++k) {
        const double prev = trace.values[k - 1];
        const double cur = trace.values[k];
        if (!(cur > prev) || !(cur - prev > 0.01 * std::abs(prev))) return false;
    }
    return true;
}

MembershipReport convolution_membership(const StationaryKernel& kernel, const SignedAtomicMeasure& rho) {
    require(rho.positions.size() == rho.masses.size(), "signed measure: positions and masses differ in length");
    for (double x : rho.positions) require(std::isfinite(x), "signed measure: non-finite position");
    const SpectralMeasure& mu = kernel.spectral();
    MembershipReport r;
    r.member = true;
    if (rho.positions.empty()) return r;
    if (mu.is_atomic()) {
        return traced_integral(mu, [&](double xi) { return std::norm(rho.fourier(xi)); });
    }
    // |rho_hat|^2 is bounded, so the integral is finite; body by quadrature, tail by
    // oscillatory quadrature of each pair term.
    const auto& p = mu.density_info().density;
    double body = checked([&](double xi) { return std::norm(rho.fourier(xi)) * p(xi); }, -kBodyCutoff, kBodyCutoff).value;
    Complex tail = 0.0;
    const double tm = mu.tail_mass(kBodyCutoff);
    if (tm > 0) {
        for (std::size_t k = 0; k < rho.positions.size(); ++k) {
            tail += std::norm(rho.masses[k]) * tm;
            for (std::size_t l = k + 1; l < rho.positions.size(); ++l) {
                const Complex t = std::conj(rho.masses[k]) * rho.masses[l] *
                                  mu.tail_fourier(rho.positions[k] - rho.positions[l], kBodyCutoff);
                tail += t + std::conj(t);
            }
        }
    }
    r.value = body + tail.real();
    return r;
}

MembershipReport convolution_membership(const StationaryKernel& kernel, const std::function<Complex(double)>& rho_hat) {
    return traced_integral(kernel.spectral(), [&](double xi) { return std::norm(rho_hat(xi)); });
}

MembershipReport derivative_membership(const StationaryKernel& kernel) {
    return traced_integral(kernel.spectral(), [](double xi) { return xi * xi; });
}

Complex spectral_inner(const StationaryKernel& kernel, const std::function<Complex(double)>& a_hat,
                       const std::function<Complex(double)>& b_hat, double cutoff) {
    require(cutoff > 0, "spectral_inner: cutoff must be positive");
    const SpectralMeasure& mu = kernel.spectral();
    if (mu.is_atomic()) {
        const auto& a = mu.atoms();
        Complex s = 0.0;
        for (std::size_t i = 0; i < a.masses.size(); ++i)
            s += a.masses[i] * std::conj(a_hat(a.frequencies[i])) * b_hat(a.frequencies[i]);
        return s;
    }
    const auto& p = mu.density_info().density;
    return quad::integrate_complex([&](double xi) { return std::conj(a_hat(xi)) * b_hat(xi) * p(xi); }, -cutoff,
                                   cutoff, 1e-11, 30);
}

Complex convolve(const StationaryKernel& kernel, const std::function<double(double)>& phi, double a, double b, double x) {
    require(a < b, "convolve: empty support");
    const auto f = [&](double y) { return phi(y) * kernel.g(x - y); };
    // g may have a kink at lag 0.
    if (x > a && x < b) return quad::integrate_complex(f, a, x, 1e-12, 30) + quad::integrate_complex(f, x, b, 1e-12, 30);
    return quad::integrate_complex(f, a, b, 1e-12, 30);
}

Complex fourier_transform(const std::function<double(double)>& phi, double a, double b, double xi) {
    require(a < b, "fourier_transform: empty support");
    return quad::integrate_complex([&](double y) { return phi(y) * std::exp(Complex(0.0, -xi * y)); }, a, b, 1e-12, 30);
}

FeatureNorms spectral_feature_norms(const StationaryKernel& kernel, const std::function<Complex(double)>& phi_hat,
                                    double alpha, const FrequencyGrid& grid, Convention conv) {
    require(alpha > 0 && std::isfinite(alpha), "alpha must be positive");
    require(grid.nodes.size() == grid.weights.size() && !grid.nodes.empty(), "frequency grid is empty or malformed");
    const SpectralMeasure& mu = kernel.spectral();
    if (mu.is_atomic())
        throw CapabilityError("spectral feature norms need a spectral density; '" + mu.name() + "' is atomic");
    const std::size_t n = grid.size();
    std::vector<double> g(n), c(n), r2(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = mu.multiplier(grid.nodes[i], conv);
        c[i] = grid.weights[i] * std::norm(phi_hat(grid.nodes[i]));
    }
    FeatureNorms out;
    out.rkhs = simd::spectral_sum_rkhs(g, c, alpha);
    out.ambient = simd::spectral_sum_ambient(g, c, alpha);
    simd::ratio_columns(g, alpha, r2, r);
    for (std::size_t i = 0; i < n; ++i)
        out.identity_deviation = std::max(out.identity_deviation, std::abs(r[i] - (alpha * r2[i] + r[i] * r[i])));
    out.tail_mass = mu.tail_mass(grid.cutoff);
    return out;
}

Table1Row table1_columns(const std::string& name, double alpha, double xi, Convention conv) {
    const Table1Columns t = table1_columns(name, alpha, std::span<const double>(&xi, 1), conv);
    return Table1Row{t.g_hat[0], t.ratio_sq[0], t.ratio[0]};
}

Table1Columns table1_columns(const std::string& name, double alpha, std::span<const double> xi, Convention conv) {
    require(alpha > 0 && std::isfinite(alpha), "alpha must be positive");
    const SpectralMeasure mu = builtin_kernel(name).spectral();
    Table1Columns t;
    t.xi.assign(xi.begin(), xi.end());
    t.g_hat.resize(xi.size());
    t.ratio_sq.resize(xi.size());
    t.ratio.resize(xi.size());
    for (std::size_t i = 0; i < xi.size(); ++i) t.g_hat[i] = mu.multiplier(xi[i], conv);
    simd::ratio_columns(t.g_hat, alpha, t.ratio_sq, t.ratio);
    return t;
}

}  // namespace ksel
