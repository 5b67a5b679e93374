#pragma once
// Small-system exact engine: explicit generators, duality and detailed
// balance as matrix identities, and uniformization.

#include <cstdint>
#include <map>
#include <vector>

#include "fieldslab/lattice.hpp"
#include "fieldslab/params.hpp"

namespace fieldslab {

struct ExactOptions {
    std::size_t state_cap = 200'000;
    // Test fixture: multiplies each configuration jump rate by
    // 1 + rate_perturbation * eta(y).  Zero for the true dynamics.
    double rate_perturbation = 0.0;
};

class CapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bijection between occupancy vectors (or tuples) and dense indices.
class StateIndex {
public:
    using State = std::vector<std::uint32_t>;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t add(State s);
    std::size_t find(const State& s) const;
    const State& state(std::size_t i) const { return states_[i]; }
    std::size_t size() const { return states_.size(); }

private:
    std::vector<State> states_;
    std::map<State, std::size_t> index_;
};

// CSR generator matrix; rows sum to zero.
struct SparseGenerator {
    std::size_t n = 0;
    std::vector<std::int64_t> rowptr{0};
    std::vector<std::int32_t> col;
    std::vector<double> val;

    double entry(std::size_t i, std::size_t j) const;
    double max_exit_rate() const;
    double max_row_sum_error() const;
    std::vector<double> apply(const std::vector<double>& f) const;            // Q f
    std::vector<double> apply_transpose(const std::vector<double>& mu) const;  // mu^T Q
};

// Builds CSR rows from per-row (column, rate) lists; duplicate columns are
// merged and the diagonal is set to minus the off-diagonal row sum.
SparseGenerator assemble_generator(const std::vector<std::vector<std::pair<std::int32_t, double>>>& rows);

// All configurations with n particles (occupancy <= alpha if sigma = -1).
StateIndex enumerate_sector(const Torus& T, int n, const ModelParams& p, std::size_t cap = 200'000);

struct ConfigGenerator {
    StateIndex states;
    SparseGenerator Q;
};

ConfigGenerator build_config_generator(const Torus& T, int n_particles, const ModelParams& p,
                                       const ExactOptions& opts = {});

struct DualGenerator {
    std::vector<LabeledTuple> tuples;  // admissible tuples only
    std::map<std::uint64_t, std::size_t> index;
    SparseGenerator Q;
    std::size_t find(const LabeledTuple& x, const Torus& T) const;
};

std::uint64_t tuple_code(const LabeledTuple& x, const Torus& T);
DualGenerator build_dual_generator(const Torus& T, int k, const ModelParams& p, const ExactOptions& opts = {});

struct DualityCheck {
    double max_abs = 0.0;
    double scale = 0.0;
    double relative = 0.0;
    double excluded_max = 0.0;  // largest |side| over excluded tuples
    std::size_t pairs = 0;
};

// pi(x) (A D(., eta))(x) against pi(x) (L D(x, .))(eta) for every tuple in
// T^k and every configuration with at most max_particles particles.
DualityCheck check_duality_identity(const Torus& T, int k, const ModelParams& p, int max_particles = 3,
                                    const ExactOptions& opts = {});

struct BalanceCheck {
    double detailed = 0.0;     // max relative |mu Q - mu' Q'|
    double stationarity = 0.0; // max relative |(mu^T Q)_j|
    std::size_t pairs = 0;
};

// Product-measure weight of one configuration under mu_theta.
double product_measure_weight(const std::vector<std::uint32_t>& occ, int sigma, int alpha, double theta);

BalanceCheck check_detailed_balance(const Torus& T, const ModelParams& p, double theta, int max_particles = 3,
                                    const ExactOptions& opts = {});

// exp(tQ) f by uniformization with Poisson tail below tol (relative to |f|_inf).
std::vector<double> uniformize_apply(const SparseGenerator& Q, const std::vector<double>& f, double t,
                                     double tol = 1e-12);

// E[f(eta_t)] from the initial distribution.
double evolve_exact(const SparseGenerator& Q, const std::vector<double>& initial, const std::vector<double>& f,
                    double t, double tol = 1e-12);
// Point-mass start.
double evolve_exact(const SparseGenerator& Q, std::size_t initial_state, const std::vector<double>& f, double t,
                    double tol = 1e-12);

// Matrix carre du champ Q(F^2) - 2 F QF.
std::vector<double> matrix_carre_du_champ(const SparseGenerator& Q, const std::vector<double>& F);

}  // namespace fieldslab
