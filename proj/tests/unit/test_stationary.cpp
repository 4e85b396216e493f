#include <doctest.h>

#include <numbers>

#include "kernelselect/feature_select.hpp"
#include "kernelselect/stationary.hpp"
#include "oracles.hpp"

using namespace ksel;
using std::numbers::pi;

namespace {

double bump(double x) {
    const double u = 1.0 - x * x;
    return u > 0 ? u * u * u : 0.0;
}

}  // namespace

TEST_CASE("builtin kernels") {
    const StationaryKernel lap = builtin_kernel("laplace");
    const StationaryKernel gau = builtin_kernel("gauss");
    CHECK(std::abs(lap.g(1.0) - std::exp(-1.0)) < 1e-16);
    CHECK(gau.g(0.0) == Complex(1.0, 0.0));
    CHECK_THROWS_AS(builtin_kernel("cauchy"), ArgumentError);
    CHECK_THROWS_AS(builtin_kernel("gauss", 0.0), ArgumentError);

    oracle::Rand r(51);
    for (const auto& k : {lap, gau, builtin_kernel("laplace", 2.0), builtin_kernel("gauss", 0.5)}) {
        CHECK(std::abs(k.spectral().characteristic_quadrature(0.0) - Complex(1.0, 0.0)) < 1e-8);
        for (int t = 0; t < 50; ++t) {
            const double lag = r.uniform(-10, 10);
            CHECK(std::abs(k.g(-lag) - std::conj(k.g(lag))) < 1e-15);
            CHECK(std::abs(k.g(lag)) <= std::abs(k.g(0.0)));
        }
    }
}

TEST_CASE("Fourier consistency of the spectral measures") {
    oracle::Rand r(52);
    for (const auto& k : {builtin_kernel("laplace"), builtin_kernel("gauss"), builtin_kernel("laplace", 0.6)}) {
        for (int t = 0; t < 25; ++t) {
            const double lag = r.uniform(-10, 10);
            CHECK(std::abs(k.spectral().characteristic_quadrature(lag) - k.g(lag)) <= 1e-6);
        }
    }
    // Laplace at lag 1: truncated window [-200, 200] plus its oscillatory tail.
    const SpectralMeasure mu = SpectralMeasure::laplace();
    const Complex body = quad::integrate_complex(
        [&](double xi) { return std::exp(Complex(0.0, xi)) * mu.density(xi); }, -200.0, 200.0, 1e-13, 30);
    CHECK(std::abs(body + mu.tail_fourier(1.0, 200.0) - std::exp(-1.0)) <= 1e-10);
}

TEST_CASE("tail masses match quadrature") {
    for (const auto& mu : {SpectralMeasure::laplace(), SpectralMeasure::gauss(), SpectralMeasure::laplace(3.0)}) {
        for (double c : {0.5, 2.0, 10.0}) {
            const double inner = quad::integrate([&](double xi) { return mu.density(xi); }, -c, c, 1e-14, 30);
            CHECK(std::abs(mu.tail_mass(c) - (1.0 - inner)) < 1e-12);
        }
    }
}

TEST_CASE("Bochner: built-in Grams are positive definite") {
    oracle::Rand r(53);
    for (const auto& name : {"laplace", "gauss"}) {
        const KernelSpec k(builtin_kernel(name));
        for (int t = 0; t < 20; ++t) {
            std::vector<Point> pts;
            for (int i = 0; i < 8; ++i) pts.push_back(Point{r.uniform(-4, 4)});
            CHECK(gram(k, pts).is_numerically_pd());
        }
    }
}

TEST_CASE("convolution membership: Dirac, zero and discrete measures") {
    for (const auto& k : {builtin_kernel("laplace"), builtin_kernel("gauss")}) {
        const MembershipReport d = convolution_membership(k, SignedAtomicMeasure{{0.7}, {Complex(1.0, 0.0)}});
        CHECK(d.member);
        CHECK(std::abs(d.value - 1.0) <= 1e-8);
        const MembershipReport z = convolution_membership(k, SignedAtomicMeasure{});
        CHECK(z.member);
        CHECK(z.value == 0.0);
    }
}

TEST_CASE("Gram form equals the spectral integral on discrete measures") {
    oracle::Rand r(54);
    for (int t = 0; t < 100; ++t) {
        const StationaryKernel k = builtin_kernel(t % 2 == 0 ? "laplace" : "gauss", r.uniform(0.5, 2.0));
        SignedAtomicMeasure rho;
        const int n = r.integer(1, 5);
        for (int i = 0; i < n; ++i) {
            rho.positions.push_back(r.uniform(-3, 3));
            rho.masses.push_back(r.cnormal());
        }
        Complex gram_form = 0.0;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                gram_form += std::conj(rho.masses[a]) * rho.masses[b] * k.g(rho.positions[a] - rho.positions[b]);
        const MembershipReport m = convolution_membership(k, rho);
        CHECK(m.member);
        CHECK(std::abs(m.value - gram_form.real()) <= 1e-8 * std::max(1.0, gram_form.real()));
    }
}

TEST_CASE("derivative membership") {
    const MembershipReport g = derivative_membership(builtin_kernel("gauss"));
    CHECK(g.member);
    CHECK(std::abs(g.value - 1.0) <= 1e-6);

    const MembershipReport l = derivative_membership(builtin_kernel("laplace"));
    CHECK_FALSE(l.member);
    CHECK(is_divergent(l.trace));
    REQUIRE(l.trace.values.size() == 7);
    CHECK(l.trace.cutoffs.front() == 64.0);
    CHECK(l.trace.cutoffs.back() == 4096.0);
    for (std::size_t k = 1; k < l.trace.values.size(); ++k) {
        CHECK(l.trace.values[k] > l.trace.values[k - 1] * 1.01);
        // Linear growth: (2/pi)(C - atan C).
        const double c = l.trace.cutoffs[k];
        CHECK(l.trace.values[k] == doctest::Approx(2.0 / pi * (c - std::atan(c))).epsilon(1e-9));
    }

    const StationaryKernel atomic(SpectralMeasure::atomic({-2.0, 0.5, 3.0}, {0.2, 0.5, 0.3}));
    const MembershipReport a = derivative_membership(atomic);
    CHECK(a.member);
    CHECK(a.value == doctest::Approx(0.2 * 4 + 0.5 * 0.25 + 0.3 * 9));
}

TEST_CASE("divergence heuristic") {
    CHECK(is_divergent(GrowthTrace{{1, 2, 4}, {1.0, 2.0, 4.0}}));
    CHECK_FALSE(is_divergent(GrowthTrace{{1, 2, 4}, {1.0, 1.005, 2.0}}));
    CHECK_FALSE(is_divergent(GrowthTrace{{1, 2, 4}, {1.0, 2.0, 1.5}}));
    CHECK_FALSE(is_divergent(GrowthTrace{{1}, {1.0}}));
}

TEST_CASE("membership with a frequency-side rho") {
    // rho = bump dx has an integrable |rho_hat|^2 dmu for both kernels.
    const auto rho_hat = [](double xi) { return fourier_transform(bump, -1.0, 1.0, xi); };
    const MembershipReport g = convolution_membership(builtin_kernel("gauss"), rho_hat);
    CHECK(g.member);
    const Complex via_inner = spectral_inner(builtin_kernel("gauss"), rho_hat, rho_hat, 40.0);
    CHECK(g.value == doctest::Approx(via_inner.real()).epsilon(1e-9));
    // rho_hat = 1 (a Dirac at the origin) against the Laplace measure: member with norm 1.
    const MembershipReport one = convolution_membership(builtin_kernel("laplace"), [](double) { return Complex(1.0, 0.0); });
    CHECK(one.member);
    CHECK(one.value == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("reproducing property <g(x - .), phi * g> = (phi * g)(x)") {
    oracle::Rand r(55);
    for (const auto& k : {builtin_kernel("gauss"), builtin_kernel("laplace")}) {
        for (int t = 0; t < 10; ++t) {
            const double x = r.uniform(-2, 2);
            const auto delta_hat = [x](double xi) { return std::exp(Complex(0.0, -xi * x)); };
            const auto phi_hat = [](double xi) { return fourier_transform(bump, -1.0, 1.0, xi); };
            const double cutoff = k.name() == "gauss" ? 40.0 : 400.0;
            const Complex lhs = spectral_inner(k, delta_hat, phi_hat, cutoff);
            const Complex rhs = convolve(k, bump, -1.0, 1.0, x);
            CHECK(std::abs(lhs - rhs) <= 1e-6);
        }
    }
}

TEST_CASE("Green identity for the Laplace kernel") {
    // ||g * phi||^2_{H} = <phi, g * phi> = 2 <phi, (1 - D^2)^{-1} phi> for g = exp(-|t|),
    // since (1/2) exp(-|t|) is the Green function of 1 - D^2. Oracle: finite differences.
    const double lo = -20.0, hi = 20.0;
    const int n = 40001;
    const double h = (hi - lo) / (n - 1);
    std::vector<double> f(n), u(n), cp(n), dp(n);
    for (int i = 0; i < n; ++i) f[i] = bump(lo + i * h);
    // (1 - D^2) u = f, u = 0 at the ends: tridiagonal (-1, 2 + h^2, -1) / h^2.
    const double diag = 2.0 + h * h, off = -1.0;
    cp[0] = off / diag;
    dp[0] = f[0] * h * h / diag;
    for (int i = 1; i < n; ++i) {
        const double m = diag - off * cp[i - 1];
        cp[i] = off / m;
        dp[i] = (f[i] * h * h - off * dp[i - 1]) / m;
    }
    u[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) u[i] = dp[i] - cp[i] * u[i + 1];
    double green = 0.0;
    for (int i = 0; i < n; ++i) green += f[i] * u[i] * h;

    const StationaryKernel k = builtin_kernel("laplace");
    const auto phi_hat = [](double xi) { return fourier_transform(bump, -1.0, 1.0, xi); };
    const double spectral = spectral_inner(k, phi_hat, phi_hat, 400.0).real();
    const double direct =
        quad::integrate([&](double x) { return bump(x) * convolve(k, bump, -1.0, 1.0, x).real(); }, -1.0, 1.0, 1e-12, 20);
    CHECK(spectral == doctest::Approx(direct).epsilon(1e-6));
    CHECK(direct == doctest::Approx(2.0 * green).epsilon(1e-5));
}

TEST_CASE("Table 1 columns, paper-table convention") {
    oracle::Rand r(56);
    for (int t = 0; t < 1000; ++t) {
        const double xi = r.uniform(-10, 10), a = r.uniform(0.01, 10);
        const double q = 1.0 + xi * xi;
        const Table1Row lap = table1_columns("laplace", a, xi, Convention::paper_table);
        CHECK(std::abs(lap.g_hat - 1.0 / q) <= 1e-12 / q);
        CHECK(std::abs(lap.ratio_sq - q / ((1 + a * q) * (1 + a * q))) <= 1e-12 * lap.ratio_sq);
        CHECK(std::abs(lap.ratio - 1.0 / (1 + a * q)) <= 1e-12 * lap.ratio);

        const double e = std::exp(0.5 * xi * xi);
        const Table1Row gau = table1_columns("gauss", a, xi, Convention::paper_table);
        CHECK(std::abs(gau.g_hat - 1.0 / e) <= 1e-12 / e);
        CHECK(std::abs(gau.ratio_sq - e / ((1 + a * e) * (1 + a * e))) <= 1e-12 * gau.ratio_sq);
        CHECK(std::abs(gau.ratio - 1.0 / (1 + a * e)) <= 1e-12 * gau.ratio);

        for (const Table1Row& row : {lap, gau}) {
            CHECK(std::abs(row.ratio_sq * (a + row.g_hat) - row.ratio) <= 1e-15 * std::max(1.0, row.ratio));
            CHECK(std::abs(row.ratio_sq * (a + row.g_hat) * (a + row.g_hat) - row.g_hat) <= 1e-14 * row.g_hat);
        }
    }
    CHECK(table1_columns("gauss", 0.4, 0.0, Convention::paper_table).ratio == doctest::Approx(1.0 / 1.4).epsilon(1e-15));
    CHECK(table1_columns("laplace", 0.4, 0.0, Convention::paper_table).ratio == doctest::Approx(1.0 / 1.4).epsilon(1e-15));
    // The probability convention uses the normalized densities.
    CHECK(table1_columns("laplace", 1.0, 0.0).g_hat == doctest::Approx(1.0 / pi).epsilon(1e-15));
    CHECK(table1_columns("gauss", 1.0, 0.0).g_hat == doctest::Approx(1.0 / std::sqrt(2 * pi)).epsilon(1e-15));
    CHECK(parse_convention("paper-table") == Convention::paper_table);
    CHECK(to_string(Convention::probability) == "probability");
}

TEST_CASE("spectral feature norms") {
    const FrequencyGrid grid = FrequencyGrid::composite_gauss_legendre(30.0, 120);
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid.nodes[i] > grid.nodes[i - 1]);
    for (double w : grid.weights) CHECK(w > 0);
    double wsum = 0;
    for (double w : grid.weights) wsum += w;
    CHECK(wsum == doctest::Approx(60.0).epsilon(1e-13));

    const auto zero = spectral_feature_norms(builtin_kernel("laplace"), [](double) { return Complex(0.0); }, 1.0, grid);
    CHECK(zero.rkhs == 0.0);
    CHECK(zero.ambient == 0.0);

    for (auto conv : {Convention::probability, Convention::paper_table}) {
        const auto fn = spectral_feature_norms(builtin_kernel("laplace"),
                                               [](double xi) { return Complex(std::exp(-xi * xi / 4), 0.0); }, 0.3, grid, conv);
        CHECK(fn.identity_deviation <= 1e-12);
        CHECK(fn.tail_mass == doctest::Approx(2.0 / pi * std::atan(1.0 / 30.0)));
        // Laplace under the paper-table convention: integrands (1+xi^2)/(1+a(1+xi^2))^2 and 1/(1+a(1+xi^2)).
        if (conv == Convention::paper_table) {
            double rk = 0, am = 0;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double q = 1 + grid.nodes[i] * grid.nodes[i];
                const double m = grid.weights[i] * std::exp(-grid.nodes[i] * grid.nodes[i] / 2);
                rk += q / ((1 + 0.3 * q) * (1 + 0.3 * q)) * m;
                am += 1 / (1 + 0.3 * q) * m;
            }
            CHECK(fn.rkhs == doctest::Approx(rk).epsilon(1e-12));
            CHECK(fn.ambient == doctest::Approx(am).epsilon(1e-12));
        }
    }
    const StationaryKernel atomic(SpectralMeasure::atomic({0.0}, {1.0}));
    CHECK_THROWS_AS(spectral_feature_norms(atomic, [](double) { return Complex(1.0); }, 1.0, grid), CapabilityError);
}

TEST_CASE("spectral feature norms agree with a periodic Mercer discretization") {
    // Periodic grid of n points with spacing h; the circulant with entries h g(d_ij) / (2 pi)
    // has eigenvalues close to the probability density p at the grid frequencies, the
    // multiplier used by the probability convention against unitary Fourier transforms.
    const double h = 0.1;
    const int n = 400;
    const double period = n * h;
    const StationaryKernel k = builtin_kernel("gauss");
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) pts.push_back(Point{-0.5 * period + i * h});
    CMatrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double d = std::abs(i - j) * h;
            d = std::min(d, period - d);
            g(i, j) = k.g(d) / (2 * pi);
        }
    auto mu = std::make_shared<const DiscreteMeasure>(pts, std::vector<double>(n, h));
    const EmbeddingOperator op(KernelSpec(GramKernel(pts, g)), mu);
    CVector phi(n);
    for (int i = 0; i < n; ++i) phi[i] = std::exp(-0.5 * pts[static_cast<std::size_t>(i)][0] * pts[static_cast<std::size_t>(i)][0]);
    const FrequencyGrid grid = FrequencyGrid::composite_gauss_legendre(30.0, 120);
    for (double alpha : {0.05, 0.2, 1.0}) {
        const FeatureSolution s = fit(op, L2Function(mu, phi), alpha);
        const auto fn = spectral_feature_norms(k, [](double xi) { return Complex(std::exp(-0.5 * xi * xi), 0.0); }, alpha, grid);
        CHECK(std::abs(fn.rkhs - s.rkhs_norm_sq) <= 1e-3 * s.rkhs_norm_sq);
        CHECK(std::abs(fn.ambient - s.ambient_norm_sq) <= 1e-3 * s.ambient_norm_sq);
    }
}
