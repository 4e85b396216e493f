#include "kernelselect/spectral_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "kernelselect/rng.hpp"
#include "kernelselect/simd/kernels.hpp"

namespace ksel {

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0) || !std::isfinite(alpha)) {
        std::ostringstream os;
        os << "alpha must be positive and finite, got " << alpha;
        throw ArgumentError(os.str());
    }
}

void check_pair(std::span<const double> lambda, std::span<const double> c) {
    if (lambda.size() != c.size()) {
        std::ostringstream os;
        os << "lambda has " << lambda.size() << " entries but c has " << c.size();
        throw ArgumentError(os.str());
    }
}

double term(double l, double c, double alpha) {
    const double d = alpha + l;
    return c * (l / (d * d));
}

double term_grad(double l, double c, double alpha) {
    const double d = alpha + l;
    return c * (alpha - l) / (d * d * d);
}

double kkt_residual(const std::vector<double>& lambda, const std::vector<double>& c, double alpha, double A) {
    double r = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (lambda[i] <= 0 || c[i] <= 0) continue;
        const double d = alpha + lambda[i];
        r = std::max(r, std::abs((alpha - lambda[i]) * c[i] - A * d * d * d) / (alpha * c[i]));
    }
    return r;
}

double lagrangian_form(const std::vector<double>& lambda, const std::vector<double>& c, double alpha, double A) {
    double s = 0.0;
    const double a23 = std::cbrt(A * A);
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (lambda[i] <= 0) continue;
        const double gap = alpha - lambda[i];
        s += a23 * lambda[i] * std::cbrt(c[i]) / std::cbrt(gap * gap);
    }
    return s;
}

// Multiplier estimate from stationarity on the coordinates with positive mass.
double estimate_multiplier(const std::vector<double>& lambda, const std::vector<double>& c, double alpha) {
    double best_c = -1.0;
    double A = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (lambda[i] > 0 && c[i] > best_c) {
            best_c = c[i];
            A = term_grad(lambda[i], c[i], alpha);
        }
    }
    return A;
}

double sum_lambda(const std::vector<double>& c, double alpha, double A) {
    double s = 0.0;
    for (double ci : c)
        if (ci > 0) s += solve_inner(ci, alpha, A);
    return s;
}

}  // namespace

CoefficientProfile::CoefficientProfile(std::vector<double> coeffs) : c(std::move(coeffs)) {
    require(!c.empty(), "coefficient profile must be nonempty");
    for (double v : c) require(v >= 0 && std::isfinite(v), "coefficients c_i must be finite and nonnegative");
    phi_norm_sq = std::accumulate(c.begin(), c.end(), 0.0);
}

CoefficientProfile::CoefficientProfile(std::vector<double> coeffs, double norm_sq) : CoefficientProfile(std::move(coeffs)) {
    if (std::abs(phi_norm_sq - norm_sq) > 1e-10 * std::max(1.0, norm_sq)) {
        std::ostringstream os;
        os.precision(17);
        os << "sum of c_i (" << phi_norm_sq << ") differs from ||phi||^2 (" << norm_sq << ")";
        throw ArgumentError(os.str());
    }
    phi_norm_sq = norm_sq;
}

double objective_rkhs(std::span<const double> lambda, std::span<const double> c, double alpha) {
    check_pair(lambda, c);
    check_alpha(alpha);
    return simd::spectral_sum_rkhs(lambda, c, alpha);
}

double objective_ambient(std::span<const double> lambda, std::span<const double> c, double alpha) {
    check_pair(lambda, c);
    check_alpha(alpha);
    return simd::spectral_sum_ambient(lambda, c, alpha);
}

double solve_inner(double c, double alpha, double A) {
    if (!std::isfinite(c) || !std::isfinite(alpha) || !std::isfinite(A))
        throw ArgumentError("solve_inner: non-finite input");
    require(c > 0 && alpha > 0 && A > 0, "solve_inner: c, alpha and A must be positive");
    if (A * alpha * alpha * alpha >= alpha * c) return 0.0;
    // h is strictly decreasing on [0, alpha] with h(0) > 0 > h(alpha).
    const auto h = [&](double l) {
        const double d = alpha + l;
        return (alpha - l) * c - A * d * d * d;
    };
    double lo = 0.0;
    double hi = alpha;
    while (hi - lo > 1e-12 * alpha) {
        const double mid = 0.5 * (lo + hi);
        if (h(mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    // Newton polish inside the bracket.
    double l = 0.5 * (lo + hi);
    for (int it = 0; it < 4; ++it) {
        const double d = alpha + l;
        const double dh = -c - 3.0 * A * d * d;
        const double next = l - h(l) / dh;
        if (!(next >= lo && next <= hi)) break;
        if (next == l) break;
        l = next;
    }
    return l;
}

std::vector<double> project_simplex(std::span<const double> v) {
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        const double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0) theta = t;
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(0.0, v[i] - theta);
    return out;
}

std::vector<double> projected_gradient(std::span<const double> c, double alpha, std::vector<double> start,
                                       std::size_t max_iter) {
    check_alpha(alpha);
    require(start.size() == c.size(), "projected_gradient: start has wrong length");
    const double cmax = *std::max_element(c.begin(), c.end());
    if (cmax <= 0) return project_simplex(start);
    // |f''| <= 4 / alpha^3 on [0, inf) bounds the Lipschitz constant of the gradient.
    const double step = alpha * alpha * alpha / (4.0 * cmax);
    std::vector<double> x = project_simplex(start);
    std::vector<double> y(x.size());
    for (std::size_t it = 0; it < max_iter; ++it) {
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + step * term_grad(x[i], c[i], alpha);
        std::vector<double> next = project_simplex(y);
        double move = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) move = std::max(move, std::abs(next[i] - x[i]));
        x = std::move(next);
        if (move < 1e-15) break;
    }
    return x;
}

GridResult oracle_grid(const CoefficientProfile& profile, double alpha, double step) {
    check_alpha(alpha);
    const std::size_t n = profile.size();
    if (n > 4) {
        std::ostringstream os;
        os << "oracle_grid supports at most 4 coordinates, got " << n;
        throw CapabilityError(os.str());
    }
    require(step > 0 && step <= 1e-2, "oracle_grid: step must lie in (0, 1e-2]");
    const double mf = std::round(1.0 / step);
    require(std::abs(mf * step - 1.0) <= 1e-9, "oracle_grid: 1/step must be an integer");
    const auto m = static_cast<std::size_t>(mf);

    // Stage tables val_i[k] = c_i f(k / m); best_i = best_{i-1} (max,+) val_i.
    std::vector<std::vector<double>> val(n, std::vector<double>(m + 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k <= m; ++k)
            val[i][k] = term(static_cast<double>(k) / mf, profile.c[i], alpha);

    std::vector<std::vector<double>> best(n);
    best[0] = val[0];
    const double neg_inf = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) {
        best[i].assign(m + 1, neg_inf);
        simd::maxplus_accumulate(best[i - 1], val[i], best[i]);
    }

    GridResult r;
    r.objective = best[n - 1][m];
    r.lambda.assign(n, 0.0);
    std::size_t remaining = m;
    for (std::size_t i = n; i-- > 1;) {
        std::size_t chosen = m + 1;
        for (std::size_t k = 0; k <= remaining; ++k) {
            if (best[i - 1][remaining - k] + val[i][k] == best[i][remaining]) {
                chosen = k;
                break;
            }
        }
        if (chosen > m) throw NumericError("oracle_grid: backtracking failed");
        r.lambda[i] = static_cast<double>(chosen) / mf;
        remaining -= chosen;
    }
    r.lambda[0] = static_cast<double>(remaining) / mf;
    return r;
}

SpectrumSolution solve_spectrum(const CoefficientProfile& profile, double alpha, const SolveOptions& opts) {
    check_alpha(alpha);
    const std::size_t n = profile.size();
    const double cmax = *std::max_element(profile.c.begin(), profile.c.end());
    if (!(cmax > 0)) throw ArgumentError("all c_i are zero: the objective is identically 0 and lambda is undetermined");

    std::vector<double> c(profile.c);
    for (double& v : c)
        if (v < 1e-14 * cmax) v = 0.0;
    const auto n_active = static_cast<std::size_t>(std::count_if(c.begin(), c.end(), [](double v) { return v > 0; }));

    SpectrumSolution s;
    s.objective_lagrangian_form = std::numeric_limits<double>::quiet_NaN();

    const auto finish = [&](SpectrumSolution& sol) {
        sol.objective = objective_rkhs(sol.lambda, c, alpha);
        sol.kkt_residual = kkt_residual(sol.lambda, c, alpha, sol.A);
        return sol;
    };

    if (n == 1) {
        s.lambda = {1.0};
        // Equality constraint only, so the multiplier is the slope itself and may be negative.
        s.A = term_grad(1.0, c[0], alpha);
        s.method = "single";
        s.certified_global = true;
        return finish(s);
    }

    const std::size_t n_zero = n - n_active;
    const double room = 1.0 - static_cast<double>(n_active) * alpha;
    if (room >= 0 && (n_zero > 0 || room == 0)) {
        // Every active term sits at its peak l = alpha; the rest of the mass goes where c = 0.
        s.lambda.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (c[i] > 0) s.lambda[i] = alpha;
        for (std::size_t i = 0; i < n; ++i)
            if (c[i] == 0) s.lambda[i] = room / static_cast<double>(n_zero);
        s.A = 0.0;
        s.method = "saturated";
        s.certified_global = true;
        return finish(s);
    }

    std::vector<double> kkt_lambda;
    double kkt_A = 0.0;
    if (room < 0) {
        // sum_i l_i(A) decreases from n_active * alpha > 1 (A -> 0) to 0 (A = cmax / alpha^2).
        double hi = cmax / (alpha * alpha);
        double lo = hi;
        int guard = 0;
        while (sum_lambda(c, alpha, lo) <= 1.0) {
            lo *= 0.5;
            if (++guard > 4000 || lo == 0.0) throw NumericError("solve_spectrum: multiplier bracket not found");
        }
        for (int it = 0; it < 400; ++it) {
            const double mid = std::sqrt(lo) * std::sqrt(hi);
            if (!(mid > lo && mid < hi)) break;
            if (sum_lambda(c, alpha, mid) > 1.0)
                lo = mid;
            else
                hi = mid;
        }
        const double s_lo = sum_lambda(c, alpha, lo);
        const double s_hi = sum_lambda(c, alpha, hi);
        kkt_A = std::abs(s_lo - 1.0) <= std::abs(s_hi - 1.0) ? lo : hi;
        kkt_lambda.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (c[i] > 0) kkt_lambda[i] = solve_inner(c[i], alpha, kkt_A);
        const double total = std::accumulate(kkt_lambda.begin(), kkt_lambda.end(), 0.0);
        if (std::abs(total - 1.0) > 1e-9) {
            std::ostringstream os;
            os.precision(17);
            os << "solve_spectrum: multiplier bisection stalled with sum(lambda) = " << total;
            throw NumericError(os.str());
        }
    }

    if (alpha >= 0.5 && !kkt_lambda.empty()) {
        s.lambda = std::move(kkt_lambda);
        s.A = kkt_A;
        s.method = "kkt";
        s.certified_global = true;
        finish(s);
        s.objective_lagrangian_form = lagrangian_form(s.lambda, c, alpha, s.A);
        if (std::abs(s.objective_lagrangian_form - s.objective) > 1e-8 * std::max(1.0, s.objective)) {
            std::ostringstream os;
            os.precision(17);
            os << "solve_spectrum: objective " << s.objective << " disagrees with the Lagrangian form "
               << s.objective_lagrangian_form;
            throw NumericError(os.str());
        }
        return s;
    }

    // Non-concave regime: keep the best of the KKT point, multistart ascent and (small N) the grid.
    std::vector<std::vector<double>> candidates;
    if (!kkt_lambda.empty()) candidates.push_back(kkt_lambda);
    CounterRng rng(opts.seed, 0x6d73);
    for (std::size_t r = 0; r < opts.multistart; ++r) {
        std::vector<double> start(n);
        double tot = 0.0;
        for (double& v : start) {
            v = -std::log(1.0 - rng.uniform());
            tot += v;
        }
        for (double& v : start) v /= tot;
        candidates.push_back(projected_gradient(c, alpha, std::move(start)));
    }
    if (n <= 4) {
        const GridResult g = oracle_grid(CoefficientProfile(c), alpha, opts.fallback_grid_step);
        candidates.push_back(projected_gradient(c, alpha, g.lambda));
    }
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        const double v = objective_rkhs(candidates[k], c, alpha);
        if (v > best) {
            best = v;
            best_idx = k;
        }
    }
    s.lambda = candidates[best_idx];
    const bool is_kkt = !kkt_lambda.empty() && best_idx == 0;
    s.A = is_kkt ? kkt_A : estimate_multiplier(s.lambda, c, alpha);
    s.method = is_kkt ? "kkt" : "search";
    s.certified_global = false;
    finish(s);
    if (is_kkt) s.objective_lagrangian_form = lagrangian_form(s.lambda, c, alpha, s.A);
    spdlog::debug("solve_spectrum: alpha={} method={} objective={}", alpha, s.method, s.objective);
    return s;
}

}  // namespace ksel
