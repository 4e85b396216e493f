#pragma once

// Conditional mean embeddings x |-> E[L(., Y) | X = x] for finite joint tables, and
// feature selection with operator-valued kernels S: A x A -> B(H_L).
//
// H_L is handled through an orthonormal basis of span{L(., y_j)}: with G_L = U D U^H,
// the span element sum_j a_j L(., y_j) has coordinates D^{1/2} U^H a (eigenvalues below
// 1e-12 * max dropped), and H_L inner products become Euclidean.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kernelselect/feature_select.hpp"
#include "kernelselect/kernel_core.hpp"

namespace ksel {

class JointDistribution {
public:
    /// probs(i, j) = P(X = x_i, Y = y_j); entries >= 0, total 1 within 1e-12.
    JointDistribution(std::vector<Point> x_states, std::vector<Point> y_states, RMatrix probs);

    const std::vector<Point>& x_states() const { return x_; }
    const std::vector<Point>& y_states() const { return y_; }
    const RMatrix& probs() const { return p_; }
    RVector x_marginal() const { return p_.rowwise().sum(); }
    RVector y_marginal() const { return p_.colwise().sum().transpose(); }

private:
    std::vector<Point> x_;
    std::vector<Point> y_;
    RMatrix p_;
};

/// mu_{Y|x_i}; DomainError when mu_X(x_i) = 0.
RVector conditional(const JointDistribution& joint, std::size_t x_index);

/// Orthonormal coordinates for span{L(., y_j)}.
struct LBasis {
    CMatrix gram;
    /// Columns: retained eigenvectors of the L-Gram.
    CMatrix u;
    RVector d;
    bool rank_deficient = false;

    static LBasis build(const KernelSpec& L, const std::vector<Point>& y_states);
    std::size_t rank() const { return static_cast<std::size_t>(d.size()); }
    std::size_t span_size() const { return static_cast<std::size_t>(gram.rows()); }
    /// D^{1/2} U^H a
    CVector to_onb(const CVector& span_coeffs) const;
};

struct Embedding {
    std::size_t x_index = 0;
    Point x;
    /// mu_{Y|x}(y_j): pi(x) = sum_j coeffs_j L(., y_j).
    RVector coeffs;
    /// ||pi(x)||^2_{H_L}
    double norm_sq = 0.0;

    /// <pi(x), f>_{H_L} for f = sum_j beta_j L(., y_j), i.e. E[f(Y) | X = x].
    Complex inner(const CMatrix& l_gram, const CVector& beta) const;
};

Embedding embed(const JointDistribution& joint, const KernelSpec& L, std::size_t x_index);
Embedding embed(const JointDistribution& joint, const CMatrix& l_gram, std::size_t x_index);

struct FinitenessReport {
    /// Retained x indices (mu_X > 0) and mu_{Y|x} L mu_{Y|x} at each.
    std::vector<std::size_t> x_indices;
    std::vector<double> per_x;
    /// sum_x mu_X(x) per_x(x)
    double integrated = 0.0;
};

FinitenessReport finiteness_report(const JointDistribution& joint, const KernelSpec& L);
/// Single x-state version; DomainError when mu_X(x) = 0.
FinitenessReport finiteness_report(const JointDistribution& joint, const KernelSpec& L, std::size_t x_index);

class OperatorValuedKernel {
public:
    /// S(x, y) = B(x, y) acting on H_L, in orthonormal coordinates (rank x rank).
    using BlockFn = std::function<CMatrix(const Point&, const Point&)>;

    /// S(x, y) = K(x, y) I.
    static OperatorValuedKernel tensor(KernelSpec k);
    static OperatorValuedKernel general(BlockFn blocks, std::size_t dim, std::string name = "general");

    bool is_tensor() const { return scalar_.has_value(); }
    const KernelSpec& scalar() const;
    std::string describe() const;

    /// [S(x_i, x_j)] as an (n r) x (n r) matrix; ArgumentError if not Hermitian.
    CMatrix block_gram(const std::vector<Point>& xs, std::size_t r) const;

private:
    std::optional<KernelSpec> scalar_;
    BlockFn blocks_;
    std::size_t dim_ = 0;
    std::string name_;
};

struct HsGramReport {
    CMatrix blocks;
    /// sum_ij <u_i, S(x_i, x_j) u_j>
    double quadratic_form = 0.0;
    double min_eigenvalue = 0.0;
    bool positive = false;
};

/// u_vectors are span coefficients over y_states.
HsGramReport hs_gram(const OperatorValuedKernel& S, const LBasis& basis, const std::vector<Point>& x_points,
                     const std::vector<CVector>& u_vectors);

struct CmeSolution {
    /// x-states with mu_X > 0, in table order.
    std::vector<std::size_t> x_indices;
    std::vector<double> x_weights;
    /// f = sum_i S(., x_i) u_i; row i holds u_i in orthonormal H_L coordinates.
    CMatrix coeffs;
    /// Target pi(x_i) in orthonormal coordinates, row per retained x.
    CMatrix target;
    /// (T_S f)(x_i), row per retained x.
    CMatrix fitted;
    double alpha = 0.0;
    double rkhs_norm_sq = 0.0;
    double residual_norm_sq = 0.0;
    double objective = 0.0;
    std::size_t rank = 0;
    bool rank_deficient = false;
};

/// f = T_S* (alpha + T_S T_S*)^{-1} pi. `target` overrides pi (rows: retained x, columns: ONB coordinates).
CmeSolution cme_fit(const JointDistribution& joint, const KernelSpec& L, const OperatorValuedKernel& S, double alpha,
                    const std::optional<CMatrix>& target = std::nullopt);

/// ||T_S f - target||^2 + alpha ||f||^2 for arbitrary coefficients in the layout of CmeSolution.
double cme_objective(const CmeSolution& s, const CMatrix& block_gram, const CMatrix& coeffs);

struct FamilyResult {
    std::vector<double> rkhs_norm_sq;
    std::size_t argmax = 0;
};

/// Runs cme_fit for each S and reports the largest ||f^{pi,S}||^2.
FamilyResult cme_family_argmax(const JointDistribution& joint, const KernelSpec& L,
                               const std::vector<OperatorValuedKernel>& family, double alpha);

}  // namespace ksel
