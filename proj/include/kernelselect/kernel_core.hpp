#pragma once

#include <compare>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kernelselect/common.hpp"
#include "kernelselect/spectral_measure.hpp"

namespace ksel {

/// A point of X = R^d. Coordinates are finite.
class Point {
public:
    Point() = default;
    explicit Point(std::vector<double> coords);
    Point(std::initializer_list<double> coords) : Point(std::vector<double>(coords)) {}

    std::size_t dim() const { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    const std::vector<double>& coords() const { return coords_; }

    auto operator<=>(const Point&) const = default;

private:
    std::vector<double> coords_;
};

/// Finite atomic positive measure sum_i w_i delta_{x_i}. Atoms are pairwise
/// distinct (duplicates are merged at construction by summing weights).
class DiscreteMeasure {
public:
    DiscreteMeasure(std::vector<Point> atoms, std::vector<double> weights);

    static DiscreteMeasure dirac(Point x, double weight = 1.0);

    std::size_t size() const { return atoms_.size(); }
    std::size_t dim() const { return atoms_.front().dim(); }
    const std::vector<Point>& atoms() const { return atoms_; }
    const std::vector<double>& weights() const { return weights_; }
    RVector weight_vector() const;
    double total_mass() const;

    std::optional<std::size_t> index_of(const Point& x) const;

    /// sum_i w_i |phi_i|^2
    double l2_norm_sq(const CVector& values) const;
    /// sum_i w_i conj(a_i) b_i
    Complex l2_inner(const CVector& a, const CVector& b) const;

    bool operator==(const DiscreteMeasure& other) const {
        return atoms_ == other.atoms_ && weights_ == other.weights_;
    }

private:
    std::vector<Point> atoms_;
    std::vector<double> weights_;
    std::map<Point, std::size_t> index_;
};

/// Explicit Hermitian matrix over a fixed point list.
class GramKernel {
public:
    GramKernel(std::vector<Point> points, CMatrix matrix);

    const std::vector<Point>& points() const { return points_; }
    const CMatrix& matrix() const { return matrix_; }
    Complex eval(const Point& x, const Point& y) const;

private:
    std::vector<Point> points_;
    CMatrix matrix_;
    std::map<Point, std::size_t> index_;
};

/// Mercer kernel K(x, y) = sum_i l_i e_i(x) conj(e_i(y)) with {e_i} orthonormal in
/// L^2(mu) for an attached discrete measure mu. Defined on the atoms of mu only.
class SpectralKernel {
public:
    /// basis(i, k) = e_i(x_k). `normalized` additionally requires sum l_i = 1.
    SpectralKernel(RVector eigenvalues, CMatrix basis, std::shared_ptr<const DiscreteMeasure> measure,
                   bool normalized = false);

    const RVector& eigenvalues() const { return eigenvalues_; }
    const CMatrix& basis() const { return basis_; }
    const DiscreteMeasure& measure() const { return *measure_; }
    std::shared_ptr<const DiscreteMeasure> measure_ptr() const { return measure_; }
    bool normalized() const { return normalized_; }

    Complex eval(const Point& x, const Point& y) const;
    Complex eval_index(std::size_t i, std::size_t j) const;

    /// Same basis and measure, new eigenvalues.
    SpectralKernel with_eigenvalues(RVector eigenvalues) const;

private:
    RVector eigenvalues_;
    CMatrix basis_;
    std::shared_ptr<const DiscreteMeasure> measure_;
    bool normalized_;
};

/// Named closed-form kernels on R^d.
struct ClosedFormKernel {
    enum class Kind { gauss, laplace, constant };
    Kind kind;
    /// scale for gauss/laplace, the value for constant.
    double param;

    static ClosedFormKernel gauss(double scale = 1.0) { return {Kind::gauss, scale}; }
    static ClosedFormKernel laplace(double scale = 1.0) { return {Kind::laplace, scale}; }
    static ClosedFormKernel constant(double value) { return {Kind::constant, value}; }

    double eval(const Point& x, const Point& y) const;
};

/// A positive-definite kernel in one of its representations.
class KernelSpec {
public:
    using Variant = std::variant<GramKernel, SpectralKernel, StationaryKernel, ClosedFormKernel>;

    KernelSpec(GramKernel k) : v_(std::move(k)) {}
    KernelSpec(SpectralKernel k) : v_(std::move(k)) {}
    KernelSpec(StationaryKernel k) : v_(std::move(k)) {}
    KernelSpec(ClosedFormKernel k);

    const Variant& variant() const { return v_; }
    std::string describe() const;

    /// K(x, y). DomainError when x or y is outside the kernel's domain.
    Complex eval(const Point& x, const Point& y) const;

private:
    Variant v_;
};

/// Hermitian matrix G[i][j] = K(x_i, x_j).
struct GramMatrix {
    std::vector<Point> points;
    CMatrix entries;

    /// Ascending eigenvalues.
    RVector eigenvalues() const;
    double min_eigenvalue() const;
    /// min eigenvalue >= -1e-10 * max(|eigenvalue|).
    bool is_numerically_pd() const;
};

GramMatrix gram(const KernelSpec& spec, const std::vector<Point>& points);
/// Rectangular cross-Gram C[i][j] = K(a_i, b_j).
CMatrix cross_gram(const KernelSpec& spec, const std::vector<Point>& a, const std::vector<Point>& b);

struct PdReport {
    bool positive;
    /// Smallest weighted quadratic form encountered.
    double worst;
};

/// Checks sum_ij conj(f_i) w_i K(x_i, x_j) w_j f_j >= -tol for every trial f.
PdReport check_pd(const KernelSpec& spec, const DiscreteMeasure& measure, const std::vector<CVector>& trials);

/// Finite span sum_i c_i K(., x_i) in H_K.
struct KernelSpan {
    std::vector<Point> points;
    CVector coeffs;
};

/// <a, b>_{H_K} = sum_ij conj(a_i) b_j K(x_i, y_j).
Complex rkhs_inner(const KernelSpec& spec, const KernelSpan& a, const KernelSpan& b);

/// Evaluate the span at a point: sum_i c_i K(y, x_i).
Complex evaluate_span(const KernelSpec& spec, const KernelSpan& f, const Point& y);

}  // namespace ksel
