#include "kernelselect/feature_select.hpp"

#include <cmath>
#include <sstream>
#include <vector>

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

std::span<const double> as_span(const RVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

SpectralProfile spectral_profile(const EmbeddingOperator& op, const L2Function& phi) {
    op.check_same_measure(phi);
    const SpectralDecomposition& d = op.decomposition();
    // <v_j, phi>_w = v_j^H W phi
    const CVector proj = d.eigenvectors.adjoint() * (op.weights().asDiagonal() * phi.values);
    return SpectralProfile{d.eigenvalues, proj.cwiseAbs2()};
}

FeatureSolution fit(const EmbeddingOperator& op, const L2Function& phi, double alpha, const FitOptions& opts) {
    check_alpha(alpha);
    op.check_same_measure(phi);
    const RVector& w = op.weights();
    const RVector sw = w.cwiseSqrt();

    FeatureSolution s;
    s.alpha = alpha;
    const CVector y = op.solve_shifted(alpha, sw.asDiagonal() * phi.values);
    s.coeffs = sw.cwiseInverse().asDiagonal() * y;

    const CVector c = w.asDiagonal() * s.coeffs;
    s.fitted = op.gram() * c;
    s.rkhs_norm_sq = std::max(0.0, c.dot(s.fitted).real());
    const double fitted_sq = op.measure().l2_norm_sq(s.fitted);
    s.residual_norm_sq = op.measure().l2_norm_sq(phi.values - s.fitted);
    s.ambient_norm_sq = alpha * s.rkhs_norm_sq + fitted_sq;

    if (opts.cross_check) {
        const SpectralProfile p = spectral_profile(op, phi);
        const double r = rkhs_norm_sq(p, alpha);
        const double a = ambient_norm_sq(p, alpha);
        const double scale = std::max(1.0, phi.norm_sq());
        if (std::abs(r - s.rkhs_norm_sq) > opts.cross_check_tol * scale ||
            std::abs(a - s.ambient_norm_sq) > opts.cross_check_tol * scale) {
            std::ostringstream os;
            os.precision(17);
            os << "fit cross-check failed: rkhs " << s.rkhs_norm_sq << " vs spectral " << r << ", ambient "
               << s.ambient_norm_sq << " vs spectral " << a;
            throw NumericError(os.str());
        }
    }
    return s;
}

double rkhs_norm_sq(const SpectralProfile& p, double alpha) {
    check_alpha(alpha);
    return simd::spectral_sum_rkhs(as_span(p.eigenvalues), as_span(p.masses), alpha);
}

double ambient_norm_sq(const SpectralProfile& p, double alpha) {
    check_alpha(alpha);
    return simd::spectral_sum_ambient(as_span(p.eigenvalues), as_span(p.masses), alpha);
}

double rkhs_norm_sq(const EmbeddingOperator& op, const L2Function& phi, double alpha) {
    return rkhs_norm_sq(spectral_profile(op, phi), alpha);
}

double ambient_norm_sq(const EmbeddingOperator& op, const L2Function& phi, double alpha) {
    return ambient_norm_sq(spectral_profile(op, phi), alpha);
}

ErrorBounds error_bounds(double lambda_minus, double lambda_plus, double alpha, double phi_norm_sq) {
    check_alpha(alpha);
    require(lambda_minus > 0 && std::isfinite(lambda_plus), "error_bounds: need 0 < lambda_minus <= lambda_plus");
    require(lambda_minus <= lambda_plus, "error_bounds: lambda_minus exceeds lambda_plus");
    require(phi_norm_sq >= 0 && std::isfinite(phi_norm_sq), "error_bounds: ||phi||^2 must be nonnegative");
    return ErrorBounds{lambda_minus / (alpha + lambda_minus) * phi_norm_sq,
                       lambda_plus / (alpha + lambda_plus) * phi_norm_sq, phi_norm_sq / (alpha + lambda_plus),
                       phi_norm_sq / (alpha + lambda_minus)};
}

double approximation_error(const SpectralProfile& p, double alpha) {
    check_alpha(alpha);
    double s = 0.0;
    for (Eigen::Index j = 0; j < p.masses.size(); ++j) s += p.masses[j] / (alpha + p.eigenvalues[j]);
    return s;
}

double approximation_error(const FeatureSolution& s) {
    return (s.alpha * s.rkhs_norm_sq + s.residual_norm_sq) / s.alpha;
}

CriteriaReport compare_criteria(const EmbeddingOperator& op, const L2Function& phi, double alpha) {
    const FeatureSolution s = fit(op, phi, alpha);
    return CriteriaReport{s.rkhs_norm_sq, s.ambient_norm_sq, op.measure().l2_norm_sq(s.fitted)};
}

}  // namespace ksel
