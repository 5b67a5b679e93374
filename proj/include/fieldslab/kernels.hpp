#pragma once
// Hot loops with a scalar reference and an AVX2 variant chosen at run time.
// FIELDSLAB_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <cstdint>

namespace fieldslab::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
    Isa isa;
    const char* name;
    // Compensated sum of a[i]*b[i].
    double (*dot)(const double* a, const double* b, std::size_t n);
    // out[i] = a[i]*b[i]
    void (*multiply)(const double* a, const double* b, double* out, std::size_t n);
    // out[i] = sum_j in[nbr[i*deg + j]] - deg*in[i]   (graph Laplacian on the torus)
    void (*stencil)(const double* in, const std::int32_t* nbr, int deg, std::size_t n, double* out);
    // y = A x for a CSR matrix.
    void (*csr_matvec)(const std::int64_t* rowptr, const std::int32_t* col, const double* val, const double* x,
                       double* y, std::size_t nrows);
};

const KernelTable& scalar_table();
// nullptr when the build or the CPU lacks AVX2.
const KernelTable* avx2_table();

const KernelTable& active();
// Test hook: pin a particular ISA (falls back to scalar when unavailable).
void select(Isa isa);
void select_default();

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void multiply(const double* a, const double* b, double* out, std::size_t n) {
    active().multiply(a, b, out, n);
}
inline void stencil(const double* in, const std::int32_t* nbr, int deg, std::size_t n, double* out) {
    active().stencil(in, nbr, deg, n, out);
}
inline void csr_matvec(const std::int64_t* rowptr, const std::int32_t* col, const double* val, const double* x,
                       double* y, std::size_t nrows) {
    active().csr_matvec(rowptr, col, val, x, y, nrows);
}

}  // namespace fieldslab::kernels
