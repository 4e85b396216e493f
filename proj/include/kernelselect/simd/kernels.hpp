#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference implementation
// and an AVX2+FMA variant; the variant is chosen once at runtime from CPUID and can
// be pinned with KERNELSELECT_SIMD=scalar|avx2. The two variants are tested for
// equivalence in tests/unit/test_simd.cpp.

#include <cstddef>
#include <span>
#include <string_view>

namespace ksel::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
    // sum_i c_i * l_i / (alpha + l_i)^2
    double (*spectral_sum_rkhs)(const double* lambda, const double* c, std::size_t n, double alpha);
    // sum_i c_i * l_i / (alpha + l_i)
    double (*spectral_sum_ambient)(const double* lambda, const double* c, std::size_t n, double alpha);
    // ratio_sq[i] = g[i] / (alpha + g[i])^2, ratio[i] = g[i] / (alpha + g[i])
    void (*ratio_columns)(const double* g, std::size_t n, double alpha, double* ratio_sq, double* ratio);
    // out[i] = exp(x[i])
    void (*exp)(const double* x, std::size_t n, double* out);
    // out[j] = sum_d (coords[d * n + j] - x[d])^2 ; coords is dimension-major (SoA)
    void (*sq_distance_row)(const double* coords, std::size_t n, std::size_t dim, const double* x, double* out);
    // out[t] = max(out[t], a[t - k] + b[k]) over all k < nb, t - k < na, t < n_out
    void (*maxplus_accumulate)(const double* a, std::size_t na, const double* b, std::size_t nb, double* out,
                               std::size_t n_out);
};

const KernelTable& scalar_table();
const KernelTable& avx2_table();

bool isa_available(Isa isa);
const KernelTable& table(Isa isa);

/// ISA used by the convenience wrappers below.
Isa active_isa();

// Convenience wrappers over the active table.
double spectral_sum_rkhs(std::span<const double> lambda, std::span<const double> c, double alpha);
double spectral_sum_ambient(std::span<const double> lambda, std::span<const double> c, double alpha);
void ratio_columns(std::span<const double> g, double alpha, std::span<double> ratio_sq, std::span<double> ratio);
void exp(std::span<const double> x, std::span<double> out);
void sq_distance_row(std::span<const double> coords, std::size_t dim, std::span<const double> x,
                     std::span<double> out);
void maxplus_accumulate(std::span<const double> a, std::span<const double> b, std::span<double> out);

}  // namespace ksel::simd
