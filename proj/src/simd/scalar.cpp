#include <algorithm>
#include <cmath>

#include "kernelselect/simd/kernels.hpp"

namespace ksel::simd {
namespace {

double rkhs_sum(const double* lambda, const double* c, std::size_t n, double alpha) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = alpha + lambda[i];
        s += c[i] * (lambda[i] / (d * d));
    }
    return s;
}

double ambient_sum(const double* lambda, const double* c, std::size_t n, double alpha) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += c[i] * (lambda[i] / (alpha + lambda[i]));
    return s;
}

void ratios(const double* g, std::size_t n, double alpha, double* ratio_sq, double* ratio) {
    for (std::size_t i = 0; i < n; ++i) {
        const double inv = 1.0 / (alpha + g[i]);
        ratio[i] = g[i] * inv;
        ratio_sq[i] = ratio[i] * inv;
    }
}

void vexp(const double* x, std::size_t n, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void sq_distance(const double* coords, std::size_t n, std::size_t dim, const double* x, double* out) {
    std::fill(out, out + n, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
        const double* row = coords + d * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double t = row[j] - x[d];
            out[j] += t * t;
        }
    }
}

void maxplus(const double* a, std::size_t na, const double* b, std::size_t nb, double* out, std::size_t n_out) {
    for (std::size_t k = 0; k < nb && k < n_out; ++k) {
        const std::size_t len = std::min(na, n_out - k);
        double* o = out + k;
        const double bk = b[k];
        for (std::size_t t = 0; t < len; ++t) o[t] = std::max(o[t], a[t] + bk);
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable t{rkhs_sum, ambient_sum, ratios, vexp, sq_distance, maxplus};
    return t;
}

}  // namespace ksel::simd
