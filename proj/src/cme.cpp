#include "kernelselect/cme.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace ksel {

namespace {

void check_distinct(const std::vector<Point>& pts, const char* what) {
    std::set<Point> seen;
    for (const Point& p : pts) {
        if (!seen.insert(p).second) throw ArgumentError(std::string(what) + ": duplicate state");
        if (p.dim() != pts.front().dim()) throw ArgumentError(std::string(what) + ": mixed dimensions");
    }
}

}  // namespace

JointDistribution::JointDistribution(std::vector<Point> x_states, std::vector<Point> y_states, RMatrix probs)
    : x_(std::move(x_states)), y_(std::move(y_states)), p_(std::move(probs)) {
    require(!x_.empty() && !y_.empty(), "joint distribution: need at least one x-state and one y-state");
    check_distinct(x_, "joint distribution x-states");
    check_distinct(y_, "joint distribution y-states");
    if (p_.rows() != static_cast<Eigen::Index>(x_.size()) || p_.cols() != static_cast<Eigen::Index>(y_.size())) {
        std::ostringstream os;
        os << "joint distribution: table is " << p_.rows() << "x" << p_.cols() << " but there are " << x_.size()
           << " x-states and " << y_.size() << " y-states";
        throw ArgumentError(os.str());
    }
    require(p_.allFinite() && p_.minCoeff() >= 0, "joint distribution: probabilities must be finite and nonnegative");
    const double total = p_.sum();
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << "joint distribution: probabilities sum to " << total << ", not 1";
        throw ArgumentError(os.str());
    }
}

RVector conditional(const JointDistribution& joint, std::size_t x_index) {
    require(x_index < joint.x_states().size(), "conditional: x index out of range");
    const RVector row = joint.probs().row(static_cast<Eigen::Index>(x_index)).transpose();
    const double mx = row.sum();
    if (!(mx > 0)) {
        std::ostringstream os;
        os << "conditioning on x-state " << x_index << " which has probability 0";
        throw DomainError(os.str());
    }
    return row / mx;
}

LBasis LBasis::build(const KernelSpec& L, const std::vector<Point>& y_states) {
    LBasis b;
    b.gram = ksel::gram(L, y_states).entries;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(b.gram);
    if (es.info() != Eigen::Success) throw NumericError("eigensolve of the L-Gram failed");
    const RVector& ev = es.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    if (ev.minCoeff() < -1e-10 * top) {
        std::ostringstream os;
        os << "kernel L is not positive definite on the y-states (min eigenvalue " << ev.minCoeff() << ")";
        throw DomainError(os.str());
    }
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = ev.size(); k-- > 0;)
        if (ev[k] > 1e-12 * top) keep.push_back(k);
    const auto r = static_cast<Eigen::Index>(keep.size());
    b.u.resize(b.gram.rows(), r);
    b.d.resize(r);
    for (Eigen::Index k = 0; k < r; ++k) {
        b.u.col(k) = es.eigenvectors().col(keep[static_cast<std::size_t>(k)]);
        b.d[k] = ev[keep[static_cast<std::size_t>(k)]];
    }
    b.rank_deficient = r < b.gram.rows();
    return b;
}

CVector LBasis::to_onb(const CVector& span_coeffs) const {
    require(span_coeffs.size() == gram.rows(), "span coefficients have the wrong length");
    return d.cwiseSqrt().asDiagonal() * (u.adjoint() * span_coeffs);
}

Complex Embedding::inner(const CMatrix& l_gram, const CVector& beta) const {
    require(beta.size() == coeffs.size(), "embedding inner product: coefficient length mismatch");
    return coeffs.cast<Complex>().dot(l_gram * beta);
}

Embedding embed(const JointDistribution& joint, const CMatrix& l_gram, std::size_t x_index) {
    Embedding e;
    e.x_index = x_index;
    e.coeffs = conditional(joint, x_index);
    e.x = joint.x_states()[x_index];
    const CVector c = e.coeffs.cast<Complex>();
    e.norm_sq = std::max(0.0, c.dot(l_gram * c).real());
    return e;
}

Embedding embed(const JointDistribution& joint, const KernelSpec& L, std::size_t x_index) {
    return embed(joint, gram(L, joint.y_states()).entries, x_index);
}

FinitenessReport finiteness_report(const JointDistribution& joint, const KernelSpec& L) {
    const CMatrix g = gram(L, joint.y_states()).entries;
    const RVector mx = joint.x_marginal();
    FinitenessReport r;
    for (std::size_t i = 0; i < joint.x_states().size(); ++i) {
        if (!(mx[static_cast<Eigen::Index>(i)] > 0)) continue;
        const Embedding e = embed(joint, g, i);
        r.x_indices.push_back(i);
        r.per_x.push_back(e.norm_sq);
        r.integrated += mx[static_cast<Eigen::Index>(i)] * e.norm_sq;
    }
    return r;
}

FinitenessReport finiteness_report(const JointDistribution& joint, const KernelSpec& L, std::size_t x_index) {
    const Embedding e = embed(joint, L, x_index);
    FinitenessReport r;
    r.x_indices = {x_index};
    r.per_x = {e.norm_sq};
    r.integrated = joint.x_marginal()[static_cast<Eigen::Index>(x_index)] * e.norm_sq;
    return r;
}

OperatorValuedKernel OperatorValuedKernel::tensor(KernelSpec k) {
    OperatorValuedKernel s;
    s.name_ = "tensor:" + k.describe();
    s.scalar_ = std::move(k);
    return s;
}

OperatorValuedKernel OperatorValuedKernel::general(BlockFn blocks, std::size_t dim, std::string name) {
    require(static_cast<bool>(blocks), "operator-valued kernel: missing block function");
    require(dim >= 1, "operator-valued kernel: dimension must be positive");
    OperatorValuedKernel s;
    s.blocks_ = std::move(blocks);
    s.dim_ = dim;
    s.name_ = std::move(name);
    return s;
}

const KernelSpec& OperatorValuedKernel::scalar() const {
    if (!scalar_) throw CapabilityError("operator-valued kernel '" + name_ + "' is not of tensor form");
    return *scalar_;
}

std::string OperatorValuedKernel::describe() const { return name_; }

CMatrix OperatorValuedKernel::block_gram(const std::vector<Point>& xs, std::size_t r) const {
    const auto n = static_cast<Eigen::Index>(xs.size());
    const auto rr = static_cast<Eigen::Index>(r);
    CMatrix out(n * rr, n * rr);
    if (scalar_) {
        const CMatrix k = gram(*scalar_, xs).entries;
        out.setZero();
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                out.block(i * rr, j * rr, rr, rr).diagonal().setConstant(k(i, j));
        return out;
    }
    if (dim_ != r) {
        std::ostringstream os;
        os << "operator-valued kernel '" << name_ << "' acts on dimension " << dim_ << " but H_L has rank " << r;
        throw ArgumentError(os.str());
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const CMatrix b = blocks_(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)]);
            if (b.rows() != rr || b.cols() != rr) throw ArgumentError("operator-valued kernel returned a block of the wrong size");
            if (!b.allFinite()) throw NumericError("operator-valued kernel returned non-finite entries");
            out.block(i * rr, j * rr, rr, rr) = b;
        }
    }
    const double scale = std::max(1.0, out.cwiseAbs().maxCoeff());
    const double asym = (out - out.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) {
        std::ostringstream os;
        os << "invalid operator-valued kernel '" << name_ << "': block Gram is not Hermitian (deviation " << asym << ")";
        throw ArgumentError(os.str());
    }
    const CMatrix sym = 0.5 * (out + out.adjoint());
    return sym;
}

HsGramReport hs_gram(const OperatorValuedKernel& S, const LBasis& basis, const std::vector<Point>& x_points,
                     const std::vector<CVector>& u_vectors) {
    require(!x_points.empty(), "hs_gram: need at least one x point");
    require(x_points.size() == u_vectors.size(), "hs_gram: one u vector per x point");
    const std::size_t r = basis.rank();
    HsGramReport rep;
    rep.blocks = S.block_gram(x_points, r);
    CVector u(static_cast<Eigen::Index>(x_points.size() * r));
    for (std::size_t i = 0; i < x_points.size(); ++i)
        u.segment(static_cast<Eigen::Index>(i * r), static_cast<Eigen::Index>(r)) = basis.to_onb(u_vectors[i]);
    rep.quadratic_form = u.dot(rep.blocks * u).real();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rep.blocks, Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = es.eigenvalues().size() > 0 ? es.eigenvalues().minCoeff() : 0.0;
    const double scale = es.eigenvalues().size() > 0 ? es.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
    rep.positive = rep.quadratic_form >= -1e-10 * std::max(1.0, scale * u.squaredNorm()) &&
                   rep.min_eigenvalue >= -1e-10 * std::max(1.0, scale);
    return rep;
}

CmeSolution cme_fit(const JointDistribution& joint, const KernelSpec& L, const OperatorValuedKernel& S, double alpha,
                    const std::optional<CMatrix>& target) {
    require(alpha > 0 && std::isfinite(alpha), "alpha must be positive");
    const LBasis basis = LBasis::build(L, joint.y_states());
    const RVector mx = joint.x_marginal();

    CmeSolution s;
    s.alpha = alpha;
    s.rank = basis.rank();
    s.rank_deficient = basis.rank_deficient;
    std::vector<Point> xs;
    for (std::size_t i = 0; i < joint.x_states().size(); ++i) {
        if (mx[static_cast<Eigen::Index>(i)] > 0) {
            s.x_indices.push_back(i);
            s.x_weights.push_back(mx[static_cast<Eigen::Index>(i)]);
            xs.push_back(joint.x_states()[i]);
        }
    }
    const auto n = static_cast<Eigen::Index>(xs.size());
    const auto r = static_cast<Eigen::Index>(s.rank);
    if (target) {
        require(target->rows() == n && target->cols() == r, "cme_fit: target has the wrong shape");
        s.target = *target;
    } else {
        s.target.resize(n, r);
        for (Eigen::Index i = 0; i < n; ++i)
            s.target.row(i) = basis.to_onb(conditional(joint, s.x_indices[static_cast<std::size_t>(i)]).cast<Complex>()).transpose();
    }

    const CMatrix big = S.block_gram(xs, s.rank);
    RVector sw(n * r);
    for (Eigen::Index i = 0; i < n; ++i) sw.segment(i * r, r).setConstant(std::sqrt(s.x_weights[static_cast<std::size_t>(i)]));

    // Flatten row-major: entry (i, k) -> i r + k.
    const auto flatten = [&](const CMatrix& m) {
        CVector v(n * r);
        for (Eigen::Index i = 0; i < n; ++i) v.segment(i * r, r) = m.row(i).transpose();
        return v;
    };
    const auto unflatten = [&](const CVector& v) {
        CMatrix m(n, r);
        for (Eigen::Index i = 0; i < n; ++i) m.row(i) = v.segment(i * r, r).transpose();
        return m;
    };

    const CMatrix shifted = sw.asDiagonal() * big * sw.asDiagonal() + alpha * CMatrix::Identity(n * r, n * r);
    Eigen::LLT<CMatrix> llt(shifted);
    if (llt.info() != Eigen::Success) throw NumericError("cme_fit: shifted block system is not positive definite");
    const CVector y = llt.solve(sw.asDiagonal() * flatten(s.target));
    const CVector beta = sw.cwiseInverse().asDiagonal() * y;
    const CVector u = sw.cwiseAbs2().asDiagonal() * beta;
    if (!u.allFinite()) throw NumericError("cme_fit produced non-finite coefficients");
    s.coeffs = unflatten(u);
    s.fitted = unflatten(big * u);
    s.rkhs_norm_sq = std::max(0.0, u.dot(big * u).real());
    s.residual_norm_sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        s.residual_norm_sq += s.x_weights[static_cast<std::size_t>(i)] * (s.fitted.row(i) - s.target.row(i)).squaredNorm();
    s.objective = s.residual_norm_sq + alpha * s.rkhs_norm_sq;
    return s;
}

double cme_objective(const CmeSolution& s, const CMatrix& block_gram, const CMatrix& coeffs) {
    const auto n = coeffs.rows();
    const auto r = coeffs.cols();
    CVector u(n * r);
    for (Eigen::Index i = 0; i < n; ++i) u.segment(i * r, r) = coeffs.row(i).transpose();
    const CVector fu = block_gram * u;
    double res = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        res += s.x_weights[static_cast<std::size_t>(i)] * (fu.segment(i * r, r) - s.target.row(i).transpose()).squaredNorm();
    return res + s.alpha * u.dot(fu).real();
}

FamilyResult cme_family_argmax(const JointDistribution& joint, const KernelSpec& L,
                               const std::vector<OperatorValuedKernel>& family, double alpha) {
    require(!family.empty(), "cme family is empty");
    FamilyResult r;
    for (std::size_t k = 0; k < family.size(); ++k) {
        r.rkhs_norm_sq.push_back(cme_fit(joint, L, family[k], alpha).rkhs_norm_sq);
        if (r.rkhs_norm_sq[k] > r.rkhs_norm_sq[r.argmax]) r.argmax = k;
    }
    return r;
}

}  // namespace ksel
