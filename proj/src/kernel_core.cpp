#include "kernelselect/kernel_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "kernelselect/simd/kernels.hpp"

namespace ksel {

Point::Point(std::vector<double> coords) : coords_(std::move(coords)) {
    require(!coords_.empty(), "point: need at least one coordinate");
    for (double c : coords_) require(std::isfinite(c), "point: coordinates must be finite");
}

DiscreteMeasure::DiscreteMeasure(std::vector<Point> atoms, std::vector<double> weights) {
    require(!atoms.empty(), "discrete measure: need at least one atom");
    require(atoms.size() == weights.size(), "discrete measure: atom and weight counts differ");
    const std::size_t d = atoms.front().dim();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        require(atoms[i].dim() == d, "discrete measure: atoms have different dimensions");
        require(weights[i] > 0 && std::isfinite(weights[i]), "discrete measure: weights must be positive");
        auto [it, inserted] = index_.try_emplace(atoms[i], atoms_.size());
        if (inserted) {
            atoms_.push_back(std::move(atoms[i]));
            weights_.push_back(weights[i]);
        } else {
            weights_[it->second] += weights[i];
        }
    }
}

DiscreteMeasure DiscreteMeasure::dirac(Point x, double weight) { return DiscreteMeasure({std::move(x)}, {weight}); }

RVector DiscreteMeasure::weight_vector() const {
    return Eigen::Map<const RVector>(weights_.data(), static_cast<Eigen::Index>(weights_.size()));
}

double DiscreteMeasure::total_mass() const {
    double s = 0.0;
    for (double w : weights_) s += w;
    return s;
}

std::optional<std::size_t> DiscreteMeasure::index_of(const Point& x) const {
    auto it = index_.find(x);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

double DiscreteMeasure::l2_norm_sq(const CVector& values) const {
    require(static_cast<std::size_t>(values.size()) == size(), "l2 norm: length does not match atom count");
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += weights_[i] * std::norm(values[static_cast<Eigen::Index>(i)]);
    return s;
}

Complex DiscreteMeasure::l2_inner(const CVector& a, const CVector& b) const {
    require(static_cast<std::size_t>(a.size()) == size() && static_cast<std::size_t>(b.size()) == size(),
            "l2 inner product: length does not match atom count");
    Complex s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        s += weights_[i] * std::conj(a[k]) * b[k];
    }
    return s;
}

GramKernel::GramKernel(std::vector<Point> points, CMatrix matrix) : points_(std::move(points)), matrix_(std::move(matrix)) {
    const auto n = static_cast<Eigen::Index>(points_.size());
    require(n > 0, "gram kernel: need at least one point");
    require(matrix_.rows() == n && matrix_.cols() == n, "gram kernel: matrix shape does not match point count");
    require(matrix_.allFinite(), "gram kernel: matrix entries must be finite");
    const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff());
    require((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "gram kernel: matrix is not Hermitian");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        require(index_.try_emplace(points_[i], i).second, "gram kernel: duplicate point");
    }
}

Complex GramKernel::eval(const Point& x, const Point& y) const {
    auto ix = index_.find(x);
    auto iy = index_.find(y);
    if (ix == index_.end() || iy == index_.end()) throw DomainError("gram kernel: point outside the kernel's point list");
    return matrix_(static_cast<Eigen::Index>(ix->second), static_cast<Eigen::Index>(iy->second));
}

SpectralKernel::SpectralKernel(RVector eigenvalues, CMatrix basis, std::shared_ptr<const DiscreteMeasure> measure,
                               bool normalized)
    : eigenvalues_(std::move(eigenvalues)), basis_(std::move(basis)), measure_(std::move(measure)), normalized_(normalized) {
    require(measure_ != nullptr, "spectral kernel: missing measure");
    require(eigenvalues_.size() >= 1, "spectral kernel: need at least one eigenvalue");
    require(basis_.rows() == eigenvalues_.size(), "spectral kernel: basis row count must equal eigenvalue count");
    require(static_cast<std::size_t>(basis_.cols()) == measure_->size(),
            "spectral kernel: basis column count must equal atom count");
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i)
        require(eigenvalues_[i] > 0 && std::isfinite(eigenvalues_[i]), "spectral kernel: eigenvalues must be positive");
    require(basis_.allFinite(), "spectral kernel: basis values must be finite");

    // sum_k w_k conj(e_i(x_k)) e_j(x_k) = delta_ij
    const RVector w = measure_->weight_vector();
    const CMatrix gramian = basis_.conjugate() * w.asDiagonal() * basis_.transpose();
    const double dev = (gramian - CMatrix::Identity(gramian.rows(), gramian.cols())).cwiseAbs().maxCoeff();
    if (dev > 1e-10) {
        std::ostringstream os;
        os << "spectral kernel: basis is not orthonormal in L2(mu) (max deviation " << dev << ")";
        throw ArgumentError(os.str());
    }
    if (normalized_ && std::abs(eigenvalues_.sum() - 1.0) > 1e-12)
        throw ArgumentError("spectral kernel: normalized kernel needs eigenvalues summing to 1");
}

Complex SpectralKernel::eval_index(std::size_t i, std::size_t j) const {
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    Complex s = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k) s += eigenvalues_[k] * basis_(k, a) * std::conj(basis_(k, b));
    return s;
}

Complex SpectralKernel::eval(const Point& x, const Point& y) const {
    const auto ix = measure_->index_of(x);
    const auto iy = measure_->index_of(y);
    if (!ix || !iy) throw DomainError("spectral kernel: point is not an atom of the kernel's measure");
    return eval_index(*ix, *iy);
}

SpectralKernel SpectralKernel::with_eigenvalues(RVector eigenvalues) const {
    return SpectralKernel(std::move(eigenvalues), basis_, measure_, false);
}

double ClosedFormKernel::eval(const Point& x, const Point& y) const {
    if (kind == Kind::constant) return param;
    if (x.dim() != y.dim()) throw DomainError("closed-form kernel: points have different dimensions");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i) {
        const double t = y[i] - x[i];
        d2 += t * t;
    }
    if (kind == Kind::gauss) return std::exp(-d2 / (2.0 * param * param));
    return std::exp(-std::sqrt(d2) / param);
}

KernelSpec::KernelSpec(ClosedFormKernel k) : v_(k) {
    require(std::isfinite(k.param), "closed-form kernel: parameter must be finite");
    if (k.kind != ClosedFormKernel::Kind::constant) require(k.param > 0, "closed-form kernel: scale must be positive");
}

std::string KernelSpec::describe() const {
    struct Visitor {
        std::string operator()(const GramKernel& k) const { return "gram[" + std::to_string(k.points().size()) + "]"; }
        std::string operator()(const SpectralKernel& k) const {
            return "spectral[" + std::to_string(k.eigenvalues().size()) + "]";
        }
        std::string operator()(const StationaryKernel& k) const { return "stationary[" + k.name() + "]"; }
        std::string operator()(const ClosedFormKernel& k) const {
            switch (k.kind) {
                case ClosedFormKernel::Kind::gauss: return "gauss";
                case ClosedFormKernel::Kind::laplace: return "laplace";
                default: return "constant";
            }
        }
    };
    return std::visit(Visitor{}, v_);
}

Complex KernelSpec::eval(const Point& x, const Point& y) const {
    struct Visitor {
        const Point& x;
        const Point& y;
        Complex operator()(const GramKernel& k) const { return k.eval(x, y); }
        Complex operator()(const SpectralKernel& k) const { return k.eval(x, y); }
        Complex operator()(const StationaryKernel& k) const {
            if (x.dim() != 1 || y.dim() != 1) throw DomainError("stationary kernel: points must be one-dimensional");
            return k.eval(x[0], y[0]);
        }
        Complex operator()(const ClosedFormKernel& k) const { return k.eval(x, y); }
    };
    return std::visit(Visitor{x, y}, v_);
}

namespace {

// Real fast path for gauss / laplace: squared distances and exponentials
// through the SIMD kernels, one row at a time.
bool closed_form_gram(const KernelSpec& spec, const std::vector<Point>& a, const std::vector<Point>& b, CMatrix& out) {
    const auto* k = std::get_if<ClosedFormKernel>(&spec.variant());
    if (k == nullptr || k->kind == ClosedFormKernel::Kind::constant) return false;
    const std::size_t dim = a.front().dim();
    for (const auto& p : a) if (p.dim() != dim) return false;
    for (const auto& p : b) if (p.dim() != dim) return false;

    const std::size_t nb = b.size();
    std::vector<double> coords(dim * nb);
    for (std::size_t j = 0; j < nb; ++j)
        for (std::size_t d = 0; d < dim; ++d) coords[d * nb + j] = b[j][d];

    std::vector<double> row(nb);
    std::vector<double> arg(nb);
    out.resize(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(nb));
    const bool gauss = k->kind == ClosedFormKernel::Kind::gauss;
    const double inv = gauss ? 1.0 / (2.0 * k->param * k->param) : 1.0 / k->param;
    for (std::size_t i = 0; i < a.size(); ++i) {
        simd::sq_distance_row(coords, dim, a[i].coords(), row);
        for (std::size_t j = 0; j < nb; ++j) arg[j] = gauss ? -row[j] * inv : -std::sqrt(row[j]) * inv;
        simd::exp(arg, row);
        for (std::size_t j = 0; j < nb; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
    return true;
}

}  // namespace

CMatrix cross_gram(const KernelSpec& spec, const std::vector<Point>& a, const std::vector<Point>& b) {
    require(!a.empty() && !b.empty(), "cross_gram: point lists must be nonempty");
    CMatrix out;
    if (!closed_form_gram(spec, a, b, out)) {
        out.resize(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = spec.eval(a[i], b[j]);
    }
    if (!out.allFinite()) throw NumericError("kernel evaluation produced a non-finite value");
    return out;
}

GramMatrix gram(const KernelSpec& spec, const std::vector<Point>& points) {
    require(!points.empty(), "gram: point list must be nonempty");
    const auto n = static_cast<Eigen::Index>(points.size());
    CMatrix g;
    if (!closed_form_gram(spec, points, points, g)) {
        g.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i; j < n; ++j) {
                const Complex v = spec.eval(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
                g(i, j) = v;
                g(j, i) = std::conj(v);
            }
        }
    }
    if (!g.allFinite()) throw NumericError("kernel evaluation produced a non-finite value");
    for (Eigen::Index i = 0; i < n; ++i) {
        g(i, i) = Complex(g(i, i).real(), 0.0);
        for (Eigen::Index j = i + 1; j < n; ++j) g(j, i) = std::conj(g(i, j));
    }
    return GramMatrix{points, std::move(g)};
}

RVector GramMatrix::eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(entries, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("gram eigensolve failed");
    return es.eigenvalues();
}

double GramMatrix::min_eigenvalue() const { return eigenvalues().minCoeff(); }

bool GramMatrix::is_numerically_pd() const {
    const RVector ev = eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    return ev.minCoeff() >= -1e-10 * scale;
}

PdReport check_pd(const KernelSpec& spec, const DiscreteMeasure& measure, const std::vector<CVector>& trials) {
    require(!trials.empty(), "check_pd: need at least one trial function");
    const GramMatrix g = gram(spec, measure.atoms());
    const RVector w = measure.weight_vector();
    const CMatrix weighted = w.asDiagonal() * g.entries * w.asDiagonal();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(weighted, Eigen::EigenvaluesOnly);
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();

    PdReport r{true, std::numeric_limits<double>::infinity()};
    for (const CVector& f : trials) {
        require(f.size() == weighted.rows(), "check_pd: trial length does not match atom count");
        const double q = f.dot(weighted * f).real();
        r.worst = std::min(r.worst, q);
        if (q < -1e-10 * scale * f.squaredNorm()) r.positive = false;
    }
    return r;
}

Complex rkhs_inner(const KernelSpec& spec, const KernelSpan& a, const KernelSpan& b) {
    require(static_cast<std::size_t>(a.coeffs.size()) == a.points.size(), "rkhs_inner: first span length mismatch");
    require(static_cast<std::size_t>(b.coeffs.size()) == b.points.size(), "rkhs_inner: second span length mismatch");
    if (a.points.empty() || b.points.empty()) return 0.0;
    const CMatrix c = cross_gram(spec, a.points, b.points);
    return a.coeffs.dot(c * b.coeffs);  // dot conjugates the left operand
}

Complex evaluate_span(const KernelSpec& spec, const KernelSpan& f, const Point& y) {
    require(static_cast<std::size_t>(f.coeffs.size()) == f.points.size(), "evaluate_span: length mismatch");
    Complex s = 0.0;
    for (std::size_t i = 0; i < f.points.size(); ++i) s += f.coeffs[static_cast<Eigen::Index>(i)] * spec.eval(y, f.points[i]);
    return s;
}

}  // namespace ksel
