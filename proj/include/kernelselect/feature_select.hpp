#pragma once

// Regularized feature selection f = T*(alpha + TT*)^{-1} phi and its two criteria:
// the H_K norm and the graph (ambient) norm alpha ||f||^2 + ||Tf||^2.

#include "kernelselect/operators.hpp"

namespace ksel {

struct FeatureSolution {
    /// beta = (alpha I + G W)^{-1} phi; f = sum_j K(., x_j) w_j beta_j.
    CVector coeffs;
    double alpha = 0.0;
    double rkhs_norm_sq = 0.0;
    double ambient_norm_sq = 0.0;
    /// ||phi - Tf||^2 in L^2(mu)
    double residual_norm_sq = 0.0;
    /// Tf on the atoms.
    CVector fitted;

    /// Span coefficients w o beta.
    CVector span_coeffs(const EmbeddingOperator& op) const { return op.weights().asDiagonal() * coeffs; }
};

struct FitOptions {
    /// Recompute both norms from the spectral decomposition and throw NumericError on disagreement.
    bool cross_check = false;
    double cross_check_tol = 1e-9;
};

/// Eigenvalues of TT* (descending) with masses m_j = |<v_j, phi>_w|^2.
struct SpectralProfile {
    RVector eigenvalues;
    RVector masses;
};

SpectralProfile spectral_profile(const EmbeddingOperator& op, const L2Function& phi);

FeatureSolution fit(const EmbeddingOperator& op, const L2Function& phi, double alpha, const FitOptions& opts = {});

/// sum_j x_j / (alpha + x_j)^2 m_j
double rkhs_norm_sq(const EmbeddingOperator& op, const L2Function& phi, double alpha);
/// sum_j x_j / (alpha + x_j) m_j
double ambient_norm_sq(const EmbeddingOperator& op, const L2Function& phi, double alpha);

double rkhs_norm_sq(const SpectralProfile& p, double alpha);
double ambient_norm_sq(const SpectralProfile& p, double alpha);

struct ErrorBounds {
    double lower;
    double upper;
    double err_lower;
    double err_upper;
};

/// Bounds for a spectrum inside [lambda_minus, lambda_plus]:
/// lower/upper = l/(alpha + l) ||phi||^2, err_lower/err_upper = ||phi||^2 / (alpha + l).
ErrorBounds error_bounds(double lambda_minus, double lambda_plus, double alpha, double phi_norm_sq);

/// err = sum_j m_j / (alpha + x_j) = (alpha ||f||^2 + ||phi - Tf||^2) / alpha.
double approximation_error(const SpectralProfile& p, double alpha);
double approximation_error(const FeatureSolution& s);

struct CriteriaReport {
    double rkhs_value;
    double ambient_value;
    /// ||Tf||^2
    double fitted_norm_sq;
};

CriteriaReport compare_criteria(const EmbeddingOperator& op, const L2Function& phi, double alpha);

}  // namespace ksel
