#include "fieldslab/partition.hpp"

#include <array>
#include <bit>
#include <mutex>
#include <stdexcept>

namespace fieldslab {

namespace {

void grow(int k, int i, std::vector<int>& label, int nblocks, std::vector<SetPartition>& out) {
    if (i == k) {
        SetPartition p;
        p.blocks.assign(nblocks, 0);
        for (int j = 0; j < k; ++j) p.blocks[label[j]] |= BlockMask{1} << j;
        out.push_back(std::move(p));
        return;
    }
    for (int b = 0; b <= nblocks; ++b) {
        label[i] = b;
        grow(k, i + 1, label, b == nblocks ? nblocks + 1 : nblocks, out);
    }
}

}  // namespace

const std::vector<SetPartition>& set_partitions(int k) {
    if (k < 0 || k > kMaxArity) throw std::out_of_range("set_partitions: arity out of range");
    static std::array<std::vector<SetPartition>, kMaxArity + 1> cache;
    static std::array<std::once_flag, kMaxArity + 1> once;
    std::call_once(once[k], [k] {
        std::vector<int> label(k, 0);
        grow(k, 0, label, 0, cache[k]);
    });
    return cache[k];
}

double mobius_block_weight(int m) {
    double f = 1.0;
    for (int j = 2; j < m; ++j) f *= j;
    return (m % 2 == 1) ? f : -f;
}

std::vector<double> block_functions_from_moments(const std::vector<double>& mom, int k) {
    std::vector<double> psi(k + 1, 0.0);
    for (int m = 1; m <= k; ++m) {
        long double s = 0.0L;
        for (const auto& p : set_partitions(m)) {
            long double term = mobius_block_weight(static_cast<int>(p.blocks.size()));
            for (BlockMask b : p.blocks) term *= mom[std::popcount(b)];
            s += term;
        }
        psi[m] = static_cast<double>(s);
    }
    return psi;
}

long double sum_over_partitions(int k, const long double* S) {
    long double total = 0.0L;
    for (const auto& p : set_partitions(k)) {
        long double term = 1.0L;
        for (BlockMask b : p.blocks) term *= S[b];
        total += term;
    }
    return total;
}

long double sum_over_partitions(int k, const long double* S, const double* w) {
    long double total = 0.0L;
    for (const auto& p : set_partitions(k)) {
        long double term = 1.0L;
        for (BlockMask b : p.blocks) term *= w[std::popcount(b)] * S[b];
        total += term;
    }
    return total;
}

}  // namespace fieldslab

namespace fieldslab {

long double partition_sum_delta(int k, const long double* S, const long double* D, const double* w) {
    long double total = 0.0L;
    long double suffix[kMaxArity + 1];
    for (const auto& p : set_partitions(k)) {
        const std::size_t r = p.blocks.size();
        suffix[r] = 1.0L;
        for (std::size_t j = r; j-- > 0;) {
            const BlockMask b = p.blocks[j];
            suffix[j] = suffix[j + 1] * (w[std::popcount(b)] * S[b]);
        }
        long double prefix = 1.0L;
        long double acc = 0.0L;
        for (std::size_t j = 0; j < r; ++j) {
            const BlockMask b = p.blocks[j];
            const long double wj = w[std::popcount(b)];
            acc += prefix * (wj * D[b]) * suffix[j + 1];
            prefix *= wj * (S[b] + D[b]);
        }
        total += acc;
    }
    return total;
}

}  // namespace fieldslab
