#pragma once
// Set partitions of [k] = {0..k-1}, blocks stored as bit masks.

#include <cstdint>
#include <vector>

namespace fieldslab {

inline constexpr int kMaxArity = 8;

using BlockMask = std::uint32_t;

struct SetPartition {
    std::vector<BlockMask> blocks;
};

// All set partitions of [k], k <= kMaxArity, in restricted-growth order.
const std::vector<SetPartition>& set_partitions(int k);

// (-1)^{m-1} (m-1)!
double mobius_block_weight(int m);

// Given per-site falling moments mom[a] = E[phi_a(eta(z))] for a = 1..k, the
// block functions psi_m = sum over partitions pi of [m] of
// (-1)^{|pi|-1}(|pi|-1)! prod_{B in pi} mom[|B|], for m = 1..k.
// Entry 0 of both arrays is unused.
std::vector<double> block_functions_from_moments(const std::vector<double>& mom, int k);

// sum_Q prod_{C in Q} S[C] over set partitions Q of [k]; S is indexed by mask.
long double sum_over_partitions(int k, const long double* S);
// Same, with each block also weighted by w[|C|].
long double sum_over_partitions(int k, const long double* S, const double* w);

}  // namespace fieldslab

namespace fieldslab {
// sum_Q [prod_C w[|C|](S[C] + D[C]) - prod_C w[|C|] S[C]], evaluated by
// telescoping so that small changes keep their relative accuracy.
long double partition_sum_delta(int k, const long double* S, const long double* D, const double* w);
}  // namespace fieldslab
