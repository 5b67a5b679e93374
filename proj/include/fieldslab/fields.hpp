#pragma once
// kth-order fields <G, X^(k)N> = N^{-kd} sum_x G(x/N) [eta]_x, their fast
// incremental evaluation, coincidence terms, fluctuation fields and the
// carre du champ.

#include <cstdint>
#include <vector>

#include "fieldslab/lattice.hpp"
#include "fieldslab/params.hpp"
#include "fieldslab/testfn.hpp"

namespace fieldslab {

inline constexpr std::uint64_t kBruteForceCap = 50'000'000;

// prod_j (eta(x_j) - #{i<j : x_i = x_j}), zero as soon as a factor would be
// non-positive.  Exact in double up to 2^53.
double falling_factorial_joint(const Configuration& eta, const LabeledTuple& x);

// Direct k-fold sum over the torus. Oracle only.
double eval_field_bruteforce(const ProductTestFunction& G, const Configuration& eta, const Torus& T,
                             std::uint64_t cap = kBruteForceCap);
double eval_field_bruteforce(const TestFunctionSum& G, const Configuration& eta, const Torus& T,
                             std::uint64_t cap = kBruteForceCap);

// Configuration plus per-site product tables and linear accumulators
// A_t[C] = sum_z eta(z) prod_{i in C} g_i(z/N) for every registered term t and
// every non-empty subset C of its factors.  Single writer.
class FieldState {
public:
    using Handle = int;

    FieldState(const Torus& T, Configuration eta);
    FieldState(const ModelParams& p, Configuration eta) : FieldState(p.torus(), std::move(eta)) {}

    Handle add(const TestFunctionSum& G);
    Handle add(const ProductTestFunction& G) { return add(TestFunctionSum(G)); }

    const Configuration& config() const { return eta_; }
    const Torus& torus() const { return T_; }
    int arity(Handle h) const;

    long double value_ld(Handle h) const;
    double value(Handle h) const { return static_cast<double>(value_ld(h)); }
    // Field change if one particle moved z -> w.  Does not modify the state.
    long double delta_ld(Handle h, Site z, Site w) const;
    double delta(Handle h, Site z, Site w) const { return static_cast<double>(delta_ld(h, z, w)); }

    // Moves one particle and updates every accumulator.
    void apply_move(Site z, Site w);
    void reset(Configuration eta);
    // Recompute accumulators from scratch; returns the largest relative
    // discrepancy seen against the incrementally maintained values.
    double resync();

private:
    struct Term {
        int k;
        double coef;
        std::vector<std::vector<double>> P;  // P[mask][z]
        std::vector<double> sum, comp;       // Kahan accumulators per mask
    };
    struct Function {
        std::vector<int> terms;
    };

    void rebuild(Term& t) const;
    long double term_value(const Term& t) const;
    long double term_delta(const Term& t, Site z, Site w) const;

    Torus T_;
    Configuration eta_;
    std::vector<Term> terms_;
    std::vector<Function> fns_;
    std::uint64_t moves_ = 0;
};

double eval_field(const TestFunctionSum& G, const Configuration& eta, const Torus& T);
double eval_field(const ProductTestFunction& G, const Configuration& eta, const Torus& T);
double eval_field(const FieldState& state, FieldState::Handle h);
// Returns the field change for z -> w; commits the move when commit is set.
double field_delta_on_move(FieldState& state, FieldState::Handle h, Site z, Site w, bool commit = false);

// N^{-kd} sum_z-partition evaluation with arbitrary per-site block functions:
// sum_Q prod_{C in Q} sum_z psi[|C|][z] prod_{i in C} g_i(z/N).  With
// psi[m] = (-1)^{m-1}(m-1)! eta this is the field; with the Mobius
// combination of per-site falling moments it is an expectation under a
// product measure.
long double eval_with_block_functions(const ProductTestFunction& G, const Torus& T,
                                      const std::vector<std::vector<double>>& psi);

// The test function {G (x) H}^(k+l-h) as a sum of products.
TestFunctionSum coincidence_expansion(const ProductTestFunction& G, const ProductTestFunction& H, int h);

// <{G (x) H}^(k+l-h), X^(k+l-h)N> by direct summation over x and the
// uncoincident y coordinates. Oracle only; requires l <= k.
double eval_coincidence_term(const ProductTestFunction& G, const ProductTestFunction& H, int h,
                             const Configuration& eta, const Torus& T, std::uint64_t cap = kBruteForceCap);
double eval_coincidence_term_fast(const ProductTestFunction& G, const ProductTestFunction& H, int h,
                                  const Configuration& eta, const Torus& T);

struct ExpansionCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;  // lhs - rhs
};

// <G,X^(k)><H,X^(l)> against sum_h N^{-hd} (coincidence term h), both sides
// by direct summation.
ExpansionCheck check_product_expansion(const ProductTestFunction& G, const ProductTestFunction& H,
                                       const Configuration& eta, const Torus& T, std::uint64_t cap = kBruteForceCap);

// E_{mu_theta}[<G, X^(k)N>] in closed form.
long double equilibrium_field_mean(const TestFunctionSum& G, const ModelParams& p, double theta);

// N^{d/2} (<G,X^(k)N> - E_{mu_theta}<G,X^(k)N>)
double fluctuation_field_Y(const TestFunctionSum& G, const Configuration& eta, const ModelParams& p, double theta);
double fluctuation_field_Y(const FieldState& state, FieldState::Handle h, long double mean, const ModelParams& p);

// Orthogonal-polynomial centering, k <= 2, by direct summation.
double fluctuation_field_Z(const TestFunctionSum& G, const Configuration& eta, const ModelParams& p, double theta);

// sum over directed edges of jump_rate * (field change)^2.
double carre_du_champ(const TestFunctionSum& G, const Configuration& eta, const ModelParams& p);
double carre_du_champ(const FieldState& state, FieldState::Handle h, const ModelParams& p);

// (1/k!) sum over permutations, duplicate products merged.
TestFunctionSum symmetrize(const TestFunctionSum& G);

}  // namespace fieldslab
