#include "fieldslab/kernels.hpp"

#include <cmath>

namespace fieldslab::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    // Neumaier summation of the products.
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = a[i] * b[i];
        const double t = s + p;
        if (std::fabs(s) >= std::fabs(p))
            c += (s - t) + p;
        else
            c += (p - t) + s;
        s = t;
    }
    return s + c;
}

void multiply_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void stencil_scalar(const double* in, const std::int32_t* nbr, int deg, std::size_t n, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t* nb = nbr + i * deg;
        double s = 0.0;
        for (int j = 0; j < deg; ++j) s += in[nb[j]];
        out[i] = s - deg * in[i];
    }
}

void csr_matvec_scalar(const std::int64_t* rowptr, const std::int32_t* col, const double* val, const double* x,
                       double* y, std::size_t nrows) {
    for (std::size_t r = 0; r < nrows; ++r) {
        double s = 0.0;
        for (std::int64_t p = rowptr[r]; p < rowptr[r + 1]; ++p) s += val[p] * x[col[p]];
        y[r] = s;
    }
}

const KernelTable kScalar{Isa::scalar, "scalar", dot_scalar, multiply_scalar, stencil_scalar, csr_matvec_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace fieldslab::kernels
