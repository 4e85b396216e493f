#pragma once

// The embedding T: H_K -> L^2(mu), f |-> f restricted to the atoms of mu, its adjoint
// T* phi = sum_j K(., x_j) w_j phi_j, and the composites TT* and T*T.
//
// Coordinates: an L^2(mu) function is its vector of atom values, with inner product
// <u, v>_w = sum_i w_i conj(u_i) v_i. An element of H_K in the atom span is a
// coefficient vector c meaning sum_j c_j K(., x_j), with <c, d>_{H_K} = c^H G d.
// On finite atoms T is always bounded, so every p.d. kernel is admissible and lies
// in the bounded class; closability is not a separate question here.

#include <cstdint>
#include <memory>

#include "kernelselect/common.hpp"
#include "kernelselect/kernel_core.hpp"

namespace ksel {

struct L2Function {
    std::shared_ptr<const DiscreteMeasure> measure;
    CVector values;

    L2Function(std::shared_ptr<const DiscreteMeasure> m, CVector v);
    static L2Function zero(std::shared_ptr<const DiscreteMeasure> m);

    double norm_sq() const { return measure->l2_norm_sq(values); }
};

/// Eigen-pairs of TT* = G W, descending; eigenvectors are orthonormal in <.,.>_w.
struct SpectralDecomposition {
    RVector eigenvalues;
    CMatrix eigenvectors;
};

class EmbeddingOperator {
public:
    /// Builds the Gram on the atoms and eigensolves eagerly. DomainError if the kernel
    /// is not positive definite on the atoms (tolerance 1e-10 relative).
    EmbeddingOperator(KernelSpec kernel, std::shared_ptr<const DiscreteMeasure> measure);

    const KernelSpec& kernel() const { return kernel_; }
    const DiscreteMeasure& measure() const { return *measure_; }
    const std::shared_ptr<const DiscreteMeasure>& measure_ptr() const { return measure_; }
    std::size_t size() const { return measure_->size(); }

    const CMatrix& gram() const { return gram_; }
    const RVector& weights() const { return weights_; }
    /// M = G W, the matrix of TT* on atom values.
    CMatrix weighted_gram() const { return gram_ * weights_.asDiagonal(); }
    /// S = W^{1/2} G W^{1/2}, Hermitian and similar to M.
    const CMatrix& symmetrized() const { return sym_; }
    const SpectralDecomposition& decomposition() const { return decomp_; }

    /// (alpha I + S)^{-1} rhs by a dense Cholesky solve.
    CVector solve_shifted(double alpha, const CVector& rhs) const;

    void check_same_measure(const L2Function& f) const;

private:
    KernelSpec kernel_;
    std::shared_ptr<const DiscreteMeasure> measure_;
    CMatrix gram_;
    RVector weights_;
    RVector sqrt_w_;
    CMatrix sym_;
    SpectralDecomposition decomp_;
};

L2Function apply_TT_star(const EmbeddingOperator& op, const L2Function& phi);
KernelSpan apply_T_star(const EmbeddingOperator& op, const L2Function& phi);
/// (Th)(x_i) = h(x_i) for every atom x_i.
L2Function apply_T(const EmbeddingOperator& op, const KernelSpan& h);

const SpectralDecomposition& spectral_decompose(const EmbeddingOperator& op);

/// Nonzero spectrum of T*T computed on the H_K side (orthonormal basis of the atom
/// span), descending. Independent of the TT* eigensolve.
RVector gram_side_spectrum(const EmbeddingOperator& op);

struct AdmissibilityReport {
    /// Always true on finite atomic measures (T is bounded).
    bool admissible;
    bool bounded;
    /// sup over draws of |<h, F_phi>|^2 / ||h||^2.
    double worst_ratio;
    /// C_phi = ||F_phi||^2_{H_K} with F_phi = T* phi.
    double c_phi;
    std::size_t trials;
};

/// Samples random finite families h = sum a_i K(., x_i) (complex standard normal a)
/// and reports the largest ratio |<h, T* phi>|^2 / ||h||^2. NumericError when a draw
/// has ||h|| = 0 but a nonzero left side (degenerate kernel).
AdmissibilityReport check_admissible(const KernelSpec& kernel, std::shared_ptr<const DiscreteMeasure> measure,
                                     const L2Function& phi, std::size_t trials = 200, std::uint64_t seed = 0);

/// A pair (u, v) in H_K x L^2(mu): u as atom-span coefficients, v as atom values.
struct GraphPair {
    CVector u;
    CVector v;
};

/// Applies the 2x2 block projection onto the graph {(h, Th)} in the product with
/// inner product alpha <u1, u2>_{H_K} + <v1, v2>_{L^2}.
GraphPair graph_projection_apply(const EmbeddingOperator& op, double alpha, const CVector& u, const CVector& v);

/// alpha <u1, u2>_{H_K} + <v1, v2>_{L^2(mu)}
Complex graph_inner(const EmbeddingOperator& op, double alpha, const GraphPair& a, const GraphPair& b);

}  // namespace ksel
