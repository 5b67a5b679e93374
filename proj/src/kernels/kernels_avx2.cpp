#include "fieldslab/kernels.hpp"

#if defined(__AVX2__)
#include <immintrin.h>
#endif
#include <cmath>

namespace fieldslab::kernels {

#if defined(__AVX2__)

namespace {

inline double hsum(__m256d v) {
    alignas(32) double t[4];
    _mm256_store_pd(t, v);
    return (t[0] + t[1]) + (t[2] + t[3]);
}

// Four-lane TwoSum accumulation; lanes are merged with Neumaier at the end.
double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d s = _mm256_setzero_pd();
    __m256d c = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d p = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        const __m256d t = _mm256_add_pd(s, p);
        const __m256d bp = _mm256_sub_pd(t, s);
        const __m256d err = _mm256_add_pd(_mm256_sub_pd(s, _mm256_sub_pd(t, bp)), _mm256_sub_pd(p, bp));
        c = _mm256_add_pd(c, err);
        s = t;
    }
    alignas(32) double sl[4], cl[4];
    _mm256_store_pd(sl, s);
    _mm256_store_pd(cl, c);
    double acc = 0.0, comp = cl[0] + cl[1] + cl[2] + cl[3];
    auto add = [&](double p) {
        const double t = acc + p;
        if (std::fabs(acc) >= std::fabs(p))
            comp += (acc - t) + p;
        else
            comp += (p - t) + acc;
        acc = t;
    };
    for (int l = 0; l < 4; ++l) add(sl[l]);
    for (; i < n; ++i) add(a[i] * b[i]);
    return acc + comp;
}

void multiply_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

// Same summation order as the scalar stencil, so results agree bit for bit.
void stencil_avx2(const double* in, const std::int32_t* nbr, int deg, std::size_t n, double* out) {
    const __m256d vdeg = _mm256_set1_pd(static_cast<double>(deg));
    alignas(16) std::int32_t idx[4];
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d s = _mm256_setzero_pd();
        for (int j = 0; j < deg; ++j) {
            for (int l = 0; l < 4; ++l) idx[l] = nbr[(i + l) * deg + j];
            const __m128i vi = _mm_load_si128(reinterpret_cast<const __m128i*>(idx));
            s = _mm256_add_pd(s, _mm256_i32gather_pd(in, vi, 8));
        }
        const __m256d self = _mm256_loadu_pd(in + i);
        _mm256_storeu_pd(out + i, _mm256_sub_pd(s, _mm256_mul_pd(vdeg, self)));
    }
    for (; i < n; ++i) {
        const std::int32_t* nb = nbr + i * deg;
        double s = 0.0;
        for (int j = 0; j < deg; ++j) s += in[nb[j]];
        out[i] = s - deg * in[i];
    }
}

void csr_matvec_avx2(const std::int64_t* rowptr, const std::int32_t* col, const double* val, const double* x,
                     double* y, std::size_t nrows) {
    for (std::size_t r = 0; r < nrows; ++r) {
        std::int64_t p = rowptr[r];
        const std::int64_t e = rowptr[r + 1];
        __m256d acc = _mm256_setzero_pd();
        for (; p + 4 <= e; p += 4) {
            const __m128i vi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(col + p));
            acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(val + p), _mm256_i32gather_pd(x, vi, 8)));
        }
        double s = hsum(acc);
        for (; p < e; ++p) s += val[p] * x[col[p]];
        y[r] = s;
    }
}

const KernelTable kAvx2{Isa::avx2, "avx2", dot_avx2, multiply_avx2, stencil_avx2, csr_matvec_avx2};

}  // namespace

const KernelTable* avx2_table() {
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2")) return &kAvx2;
    return nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace fieldslab::kernels
