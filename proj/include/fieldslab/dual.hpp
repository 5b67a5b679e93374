#pragma once
// k-particle dual process: weights pi, the duality function, dual rates and
// dual expectations.

#include <cstdint>
#include <functional>

#include "fieldslab/exact.hpp"
#include "fieldslab/lattice.hpp"
#include "fieldslab/params.hpp"

namespace fieldslab {

// alpha (alpha + sigma c_2)(alpha + sigma c_3)... with c_j = #{i<j : x_i = x_j};
// zero on the exclusion-forbidden tuples.
double pi_weight(const LabeledTuple& x, int sigma, int alpha);

// [eta]_x / pi(x).  Throws when pi(x) = 0.
double duality_fn(const LabeledTuple& x, const Configuration& eta, int sigma, int alpha);

struct DualMove {
    int label;
    Site target;
    double rate;
};

// Label i jumps to each neighbour y at bond_rate N^2 (alpha + sigma #{j != i : x_j = y}).
std::vector<DualMove> dual_jump_rates(const LabeledTuple& x, const ModelParams& p);

enum class DualMethod { uniformization, montecarlo };

struct DualOptions {
    DualMethod method = DualMethod::uniformization;
    std::size_t state_cap = 200'000;
    double tol = 1e-12;
    std::uint64_t samples = 10'000;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct DualExpectation {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t samples = 0;
};

using DualObservable = std::function<double(const LabeledTuple&)>;

DualExpectation dual_semigroup_expect(const LabeledTuple& x0, const DualObservable& f, double t,
                                      const ModelParams& p, const DualOptions& opts = {});

// pi(x) E_x[D(X_t, eta0)] = E_{eta0}[[eta_t]_x].
DualExpectation expected_factorial_moment(const Configuration& eta0, const LabeledTuple& x, double t,
                                          const ModelParams& p, const DualOptions& opts = {});

// One labeled dual trajectory started at x0, run to time t.
LabeledTuple simulate_dual(const LabeledTuple& x0, double t, const ModelParams& p, std::uint64_t seed,
                           std::uint64_t stream);

}  // namespace fieldslab
