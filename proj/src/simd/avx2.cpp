// Built with -mavx2 -mfma -ffp-contract=off on x86-64. Only entered through the
// dispatch table after a CPUID check.

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernelselect/simd/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define KSEL_HAVE_AVX2 1
#endif

namespace ksel::simd {

#ifdef KSEL_HAVE_AVX2
namespace {

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double rkhs_sum(const double* lambda, const double* c, std::size_t n, double alpha) {
    const __m256d va = _mm256_set1_pd(alpha);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d l0 = _mm256_loadu_pd(lambda + i);
        const __m256d l1 = _mm256_loadu_pd(lambda + i + 4);
        const __m256d d0 = _mm256_add_pd(va, l0);
        const __m256d d1 = _mm256_add_pd(va, l1);
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(c + i), _mm256_div_pd(l0, _mm256_mul_pd(d0, d0)), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(c + i + 4), _mm256_div_pd(l1, _mm256_mul_pd(d1, d1)), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        const __m256d l0 = _mm256_loadu_pd(lambda + i);
        const __m256d d0 = _mm256_add_pd(va, l0);
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(c + i), _mm256_div_pd(l0, _mm256_mul_pd(d0, d0)), acc0);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = alpha + lambda[i];
        s += c[i] * (lambda[i] / (d * d));
    }
    return s;
}

double ambient_sum(const double* lambda, const double* c, std::size_t n, double alpha) {
    const __m256d va = _mm256_set1_pd(alpha);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d l = _mm256_loadu_pd(lambda + i);
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(c + i), _mm256_div_pd(l, _mm256_add_pd(va, l)), acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += c[i] * (lambda[i] / (alpha + lambda[i]));
    return s;
}

void ratios(const double* g, std::size_t n, double alpha, double* ratio_sq, double* ratio) {
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vg = _mm256_loadu_pd(g + i);
        const __m256d inv = _mm256_div_pd(one, _mm256_add_pd(va, vg));
        const __m256d r = _mm256_mul_pd(vg, inv);
        _mm256_storeu_pd(ratio + i, r);
        _mm256_storeu_pd(ratio_sq + i, _mm256_mul_pd(r, inv));
    }
    for (; i < n; ++i) {
        const double inv = 1.0 / (alpha + g[i]);
        ratio[i] = g[i] * inv;
        ratio_sq[i] = ratio[i] * inv;
    }
}

// 2^k for integer-valued k in [-1022, 1023].
__m256d pow2(__m256d k) {
    const __m256d magic = _mm256_set1_pd(0x1.8p52);
    const __m256i bits = _mm256_castpd_si256(_mm256_add_pd(_mm256_add_pd(k, _mm256_set1_pd(1023.0)), magic));
    return _mm256_castsi256_pd(_mm256_slli_epi64(bits, 52));
}

// Cody-Waite reduction x = n ln2 + r, |r| <= ln2/2, then a degree-13 Taylor
// polynomial (truncation below 1e-17 relative). The scale 2^n is applied in two
// halves so subnormal results come out right.
__m256d exp4(__m256d x) {
    const __m256d hi_lim = _mm256_set1_pd(709.782712893384);
    const __m256d lo_lim = _mm256_set1_pd(-745.2);
    const __m256d over = _mm256_cmp_pd(x, hi_lim, _CMP_GT_OQ);
    const __m256d under = _mm256_cmp_pd(x, lo_lim, _CMP_LT_OQ);
    const __m256d nan = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
    const __m256d xc = _mm256_max_pd(_mm256_min_pd(x, hi_lim), lo_lim);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(1.4426950408889634)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93147180369123816490e-01), xc);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.90821492927058770002e-10), r);

    static constexpr double coef[] = {
        1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0, 1.0 / 362880.0,
        1.0 / 40320.0,      1.0 / 5040.0,      1.0 / 720.0,      1.0 / 120.0,     1.0 / 24.0,
        1.0 / 6.0,          0.5,               1.0,              1.0};
    __m256d p = _mm256_set1_pd(coef[0]);
    for (int k = 1; k < 14; ++k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(coef[k]));

    const __m256d n1 = _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)));
    const __m256d n2 = _mm256_sub_pd(n, n1);
    __m256d y = _mm256_mul_pd(_mm256_mul_pd(p, pow2(n1)), pow2(n2));

    y = _mm256_blendv_pd(y, _mm256_set1_pd(std::numeric_limits<double>::infinity()), over);
    y = _mm256_blendv_pd(y, _mm256_setzero_pd(), under);
    y = _mm256_blendv_pd(y, x, nan);
    return y;
}

void vexp(const double* x, std::size_t n, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
    if (i < n) {
        alignas(32) double buf[4] = {0.0, 0.0, 0.0, 0.0};
        std::copy(x + i, x + n, buf);
        alignas(32) double res[4];
        _mm256_store_pd(res, exp4(_mm256_load_pd(buf)));
        std::copy(res, res + (n - i), out + i);
    }
}

void sq_distance(const double* coords, std::size_t n, std::size_t dim, const double* x, double* out) {
    std::fill(out, out + n, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
        const double* row = coords + d * n;
        const __m256d vx = _mm256_set1_pd(x[d]);
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            const __m256d t = _mm256_sub_pd(_mm256_loadu_pd(row + j), vx);
            _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_mul_pd(t, t)));
        }
        for (; j < n; ++j) {
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
        const __m256d vb = _mm256_set1_pd(bk);
        std::size_t t = 0;
        for (; t + 4 <= len; t += 4) {
            const __m256d cand = _mm256_add_pd(_mm256_loadu_pd(a + t), vb);
            const __m256d cur = _mm256_loadu_pd(o + t);
            // max(cur, cand) with the scalar tie rule: keep cur unless cand is larger.
            _mm256_storeu_pd(o + t, _mm256_blendv_pd(cur, cand, _mm256_cmp_pd(cur, cand, _CMP_LT_OQ)));
        }
        for (; t < len; ++t) o[t] = std::max(o[t], a[t] + bk);
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t{rkhs_sum, ambient_sum, ratios, vexp, sq_distance, maxplus};
    return t;
}

#else

const KernelTable& avx2_table() { return scalar_table(); }

#endif

}  // namespace ksel::simd
