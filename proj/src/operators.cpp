#include "kernelselect/operators.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "kernelselect/rng.hpp"

namespace ksel {

L2Function::L2Function(std::shared_ptr<const DiscreteMeasure> m, CVector v) : measure(std::move(m)), values(std::move(v)) {
    require(measure != nullptr, "L2 function: missing measure");
    require(static_cast<std::size_t>(values.size()) == measure->size(), "L2 function: length does not match atom count");
    require(values.allFinite(), "L2 function: values must be finite");
}

L2Function L2Function::zero(std::shared_ptr<const DiscreteMeasure> m) {
    const auto n = static_cast<Eigen::Index>(m->size());
    return L2Function(std::move(m), CVector::Zero(n));
}

EmbeddingOperator::EmbeddingOperator(KernelSpec kernel, std::shared_ptr<const DiscreteMeasure> measure)
    : kernel_(std::move(kernel)), measure_(std::move(measure)) {
    require(measure_ != nullptr, "embedding operator: missing measure");
    gram_ = ksel::gram(kernel_, measure_->atoms()).entries;
    weights_ = measure_->weight_vector();
    sqrt_w_ = weights_.cwiseSqrt();
    sym_ = sqrt_w_.asDiagonal() * gram_ * sqrt_w_.asDiagonal();

    Eigen::SelfAdjointEigenSolver<CMatrix> es(sym_);
    if (es.info() != Eigen::Success) {
        std::ostringstream os;
        os << "eigensolve of the weighted Gram failed (n = " << sym_.rows()
           << ", max |entry| = " << sym_.cwiseAbs().maxCoeff() << ")";
        throw NumericError(os.str());
    }
    const RVector& ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    if (ev.minCoeff() < -1e-10 * scale) {
        std::ostringstream os;
        os << "kernel is not positive definite on the measure's atoms (min eigenvalue " << ev.minCoeff()
           << ", max " << ev.maxCoeff() << ")";
        throw DomainError(os.str());
    }
    const Eigen::Index n = ev.size();
    decomp_.eigenvalues.resize(n);
    decomp_.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = n - 1 - k;
        decomp_.eigenvalues[k] = std::max(0.0, ev[src]);
        // v = W^{-1/2} s turns an orthonormal eigenvector of S into a w-orthonormal one of G W.
        decomp_.eigenvectors.col(k) = sqrt_w_.cwiseInverse().asDiagonal() * es.eigenvectors().col(src);
    }
}

CVector EmbeddingOperator::solve_shifted(double alpha, const CVector& rhs) const {
    require(alpha > 0 && std::isfinite(alpha), "alpha must be positive");
    const CMatrix shifted = sym_ + alpha * CMatrix::Identity(sym_.rows(), sym_.cols());
    Eigen::LLT<CMatrix> llt(shifted);
    if (llt.info() != Eigen::Success) throw NumericError("shifted system alpha I + S is not positive definite");
    CVector x = llt.solve(rhs);
    if (!x.allFinite()) throw NumericError("shifted solve produced non-finite values");
    return x;
}

void EmbeddingOperator::check_same_measure(const L2Function& f) const {
    if (f.measure != measure_ && !(*f.measure == *measure_))
        throw ArgumentError("L2 function is attached to a different measure than the operator");
}

L2Function apply_TT_star(const EmbeddingOperator& op, const L2Function& phi) {
    op.check_same_measure(phi);
    return L2Function(op.measure_ptr(), op.gram() * (op.weights().asDiagonal() * phi.values));
}

KernelSpan apply_T_star(const EmbeddingOperator& op, const L2Function& phi) {
    op.check_same_measure(phi);
    CVector c = op.weights().asDiagonal() * phi.values;
    return KernelSpan{op.measure().atoms(), std::move(c)};
}

L2Function apply_T(const EmbeddingOperator& op, const KernelSpan& h) {
    require(static_cast<std::size_t>(h.coeffs.size()) == h.points.size(), "apply_T: span length mismatch");
    if (h.points.empty()) return L2Function::zero(op.measure_ptr());
    const CMatrix c = cross_gram(op.kernel(), op.measure().atoms(), h.points);
    return L2Function(op.measure_ptr(), c * h.coeffs);
}

const SpectralDecomposition& spectral_decompose(const EmbeddingOperator& op) { return op.decomposition(); }

RVector gram_side_spectrum(const EmbeddingOperator& op) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(op.gram());
    if (es.info() != Eigen::Success) throw NumericError("gram eigensolve failed");
    const RVector& d = es.eigenvalues();
    const double dmax = d.cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < d.size(); ++k)
        if (d[k] > 1e-12 * dmax) keep.push_back(k);
    const auto r = static_cast<Eigen::Index>(keep.size());
    if (r == 0) return RVector();
    // ONB e_k = sum_j U_jk K(., x_j) / sqrt(d_k); <e_k, T*T e_l> = <T e_k, T e_l>_w
    // and T e_l = sqrt(d_l) U_l on the atoms.
    CMatrix te(op.gram().rows(), r);
    for (Eigen::Index k = 0; k < r; ++k) te.col(k) = std::sqrt(d[keep[static_cast<std::size_t>(k)]]) *
                                                     es.eigenvectors().col(keep[static_cast<std::size_t>(k)]);
    const CMatrix b = te.adjoint() * op.weights().asDiagonal() * te;
    Eigen::SelfAdjointEigenSolver<CMatrix> eb(b, Eigen::EigenvaluesOnly);
    RVector out = eb.eigenvalues().reverse();
    return out;
}

AdmissibilityReport check_admissible(const KernelSpec& kernel, std::shared_ptr<const DiscreteMeasure> measure,
                                     const L2Function& phi, std::size_t trials, std::uint64_t seed) {
    require(trials >= 1, "check_admissible: need at least one trial");
    const EmbeddingOperator op(kernel, std::move(measure));
    op.check_same_measure(phi);
    const CVector c = op.weights().asDiagonal() * phi.values;
    const CVector f_at_atoms = op.gram() * c;  // F_phi(x_i)
    const double c_phi = std::max(0.0, c.dot(f_at_atoms).real());

    AdmissibilityReport r{true, true, 0.0, c_phi, trials};
    const double scale = std::max(1.0, op.gram().cwiseAbs().maxCoeff());
    CounterRng rng(seed, 0x61646d);
    const auto n = static_cast<Eigen::Index>(op.size());
    for (std::size_t t = 0; t < trials; ++t) {
        CVector a(n);
        for (Eigen::Index i = 0; i < n; ++i) a[i] = rng.complex_normal();
        // <h, F> = sum_i conj(a_i) F(x_i) for h = sum_i a_i K(., x_i).
        const double lhs = std::norm(a.dot(f_at_atoms));
        const double rhs = a.dot(op.gram() * a).real();
        const double tiny = 1e-14 * scale * a.squaredNorm();
        if (rhs <= tiny) {
            if (lhs > tiny * std::max(1.0, c_phi)) throw NumericError("check_admissible: degenerate kernel (||h|| = 0 with nonzero functional)");
            continue;
        }
        r.worst_ratio = std::max(r.worst_ratio, lhs / rhs);
    }
    return r;
}

GraphPair graph_projection_apply(const EmbeddingOperator& op, double alpha, const CVector& u, const CVector& v) {
    require(alpha > 0 && std::isfinite(alpha), "graph projection: alpha must be positive");
    require(u.size() == op.gram().rows() && v.size() == op.gram().rows(), "graph projection: length mismatch");
    const RVector& w = op.weights();
    const RVector sw = w.cwiseSqrt();
    const RVector isw = sw.cwiseInverse();
    const CMatrix& g = op.gram();

    // (alpha I + W G)^{-1} x = W^{1/2} (alpha I + S)^{-1} W^{-1/2} x
    const auto inv_hk = [&](const CVector& x) -> CVector {
        return sw.asDiagonal() * op.solve_shifted(alpha, isw.asDiagonal() * x);
    };
    // (alpha I + G W)^{-1} x = W^{-1/2} (alpha I + S)^{-1} W^{1/2} x
    const auto inv_l2 = [&](const CVector& x) -> CVector {
        return isw.asDiagonal() * op.solve_shifted(alpha, sw.asDiagonal() * x);
    };

    const CVector ru = inv_hk(u);
    const CVector rv = inv_l2(v);
    GraphPair out;
    out.u = alpha * ru + w.asDiagonal() * rv;                    // alpha (a+T*T)^{-1} u + T*(a+TT*)^{-1} v
    out.v = alpha * (g * ru) + g * (w.asDiagonal() * rv);         // alpha T (a+T*T)^{-1} u + TT*(a+TT*)^{-1} v
    if (!out.u.allFinite() || !out.v.allFinite()) throw NumericError("graph projection produced non-finite values");
    return out;
}

Complex graph_inner(const EmbeddingOperator& op, double alpha, const GraphPair& a, const GraphPair& b) {
    return alpha * a.u.dot(op.gram() * b.u) + op.measure().l2_inner(a.v, b.v);
}

}  // namespace ksel
