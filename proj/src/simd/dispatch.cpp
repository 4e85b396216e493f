#include <cstdlib>
#include <string>

#include "kernelselect/common.hpp"
#include "kernelselect/simd/kernels.hpp"

namespace ksel::simd {

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) {
    if (isa == Isa::scalar) return true;
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    static const bool has = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return has;
#else
    return false;
#endif
}

const KernelTable& table(Isa isa) {
    if (isa == Isa::avx2 && isa_available(Isa::avx2)) return avx2_table();
    return scalar_table();
}

namespace {

Isa detect() {
    if (const char* env = std::getenv("KERNELSELECT_SIMD")) {
        const std::string v(env);
        if (v == "scalar") return Isa::scalar;
        if (v == "avx2" && isa_available(Isa::avx2)) return Isa::avx2;
    }
    return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

const KernelTable& active() {
    static const KernelTable& t = table(active_isa());
    return t;
}

}  // namespace

Isa active_isa() {
    static const Isa isa = detect();
    return isa;
}

double spectral_sum_rkhs(std::span<const double> lambda, std::span<const double> c, double alpha) {
    require(lambda.size() == c.size(), "spectral_sum_rkhs: length mismatch");
    return active().spectral_sum_rkhs(lambda.data(), c.data(), lambda.size(), alpha);
}

double spectral_sum_ambient(std::span<const double> lambda, std::span<const double> c, double alpha) {
    require(lambda.size() == c.size(), "spectral_sum_ambient: length mismatch");
    return active().spectral_sum_ambient(lambda.data(), c.data(), lambda.size(), alpha);
}

void ratio_columns(std::span<const double> g, double alpha, std::span<double> ratio_sq, std::span<double> ratio) {
    require(ratio_sq.size() == g.size() && ratio.size() == g.size(), "ratio_columns: length mismatch");
    active().ratio_columns(g.data(), g.size(), alpha, ratio_sq.data(), ratio.data());
}

void exp(std::span<const double> x, std::span<double> out) {
    require(out.size() == x.size(), "exp: length mismatch");
    active().exp(x.data(), x.size(), out.data());
}

void sq_distance_row(std::span<const double> coords, std::size_t dim, std::span<const double> x,
                     std::span<double> out) {
    require(x.size() == dim && coords.size() == dim * out.size(), "sq_distance_row: shape mismatch");
    active().sq_distance_row(coords.data(), out.size(), dim, x.data(), out.data());
}

void maxplus_accumulate(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    active().maxplus_accumulate(a.data(), a.size(), b.data(), b.size(), out.data(), out.size());
}

}  // namespace ksel::simd
