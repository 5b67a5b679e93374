#include "fieldslab/fields.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <bit>
#include <cassert>
#include <cmath>
#include <map>
#include <numeric>

#include "fieldslab/dynamics.hpp"
#include "fieldslab/kernels.hpp"
#include "fieldslab/measures.hpp"
#include "fieldslab/partition.hpp"

namespace fieldslab {

namespace {

// (-1)^{m-1}(m-1)! indexed by block size.
const double* mobius_weights() {
    static const auto w = [] {
        std::array<double, kMaxArity + 1> a{};
        for (int m = 1; m <= kMaxArity; ++m) a[m] = mobius_block_weight(m);
        return a;
    }();
    return w.data();
}

const double* unit_weights() {
    static const std::array<double, kMaxArity + 1> w = [] {
        std::array<double, kMaxArity + 1> a{};
        a.fill(1.0);
        return a;
    }();
    return w.data();
}

long double inv_volume_power(const Torus& T, int k) {
    return std::pow(static_cast<long double>(T.num_sites()), -static_cast<long double>(k));
}

void check_arity(int k) {
    if (k < 0 || k > kMaxArity) throw DomainError("test function arity out of range");
}

std::vector<std::vector<double>> factor_tables(const ProductTestFunction& G, const Torus& T) {
    std::vector<std::vector<double>> tabs;
    tabs.reserve(G.factors.size());
    for (const auto& g : G.factors) {
        if (g->dim() != T.dim()) throw DomainError("test function dimension does not match the torus");
        tabs.push_back(tabulate(*g, T));
    }
    return tabs;
}

// P[mask][z] = prod_{i in mask} g_i(z/N)
std::vector<std::vector<double>> subset_products(const std::vector<std::vector<double>>& tabs, std::size_t n) {
    const int k = static_cast<int>(tabs.size());
    std::vector<std::vector<double>> P(std::size_t{1} << k);
    for (BlockMask m = 1; m < (BlockMask{1} << k); ++m) {
        const int i = std::countr_zero(m);
        const BlockMask rest = m & (m - 1);
        if (rest == 0) {
            P[m] = tabs[i];
        } else {
            P[m].resize(n);
            kernels::multiply(P[rest].data(), tabs[i].data(), P[m].data(), n);
        }
    }
    return P;
}

std::vector<double> as_double(const Configuration& eta) {
    const auto& o = eta.occupancy();
    return {o.begin(), o.end()};
}

inline void neumaier_add(double& s, double& c, double v) {
    const double t = s + v;
    if (std::fabs(s) >= std::fabs(v))
        c += (s - t) + v;
    else
        c += (v - t) + s;
    s = t;
}

template <class Visit>
void for_each_tuple(std::size_t nsites, int k, Visit&& visit) {
    LabeledTuple x(k, Site{0});
    if (k == 0) {
        visit(x);
        return;
    }
    while (true) {
        visit(x);
        int j = 0;
        while (j < k) {
            if (++x[j].id < nsites) break;
            x[j].id = 0;
            ++j;
        }
        if (j == k) return;
    }
}

void check_cap(const Torus& T, int k, std::uint64_t cap) {
    long double n = std::pow(static_cast<long double>(T.num_sites()), k);
    if (n > static_cast<long double>(cap)) throw DomainError("brute-force cap exceeded");
}

}  // namespace

double falling_factorial_joint(const Configuration& eta, const LabeledTuple& x) {
    double v = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        std::int64_t c = 0;
        for (std::size_t i = 0; i < j; ++i) c += (x[i] == x[j]);
        const std::int64_t f = static_cast<std::int64_t>(eta[x[j]]) - c;
        if (f <= 0) return 0.0;
        v *= static_cast<double>(f);
    }
    return v;
}

double eval_field_bruteforce(const ProductTestFunction& G, const Configuration& eta, const Torus& T,
                             std::uint64_t cap) {
    const int k = G.arity();
    check_cap(T, k, cap);
    const auto tabs = factor_tables(G, T);
    long double s = 0.0L;
    for_each_tuple(T.num_sites(), k, [&](const LabeledTuple& x) {
        const double ff = falling_factorial_joint(eta, x);
        if (ff == 0.0) return;
        long double g = 1.0L;
        for (int i = 0; i < k; ++i) g *= tabs[i][x[i].id];
        s += g * ff;
    });
    return static_cast<double>(s * inv_volume_power(T, k));
}

double eval_field_bruteforce(const TestFunctionSum& G, const Configuration& eta, const Torus& T, std::uint64_t cap) {
    long double s = 0.0L;
    for (const auto& t : G.terms) s += t.coef * static_cast<long double>(eval_field_bruteforce(t.fn, eta, T, cap));
    return static_cast<double>(s);
}

FieldState::FieldState(const Torus& T, Configuration eta) : T_(T), eta_(std::move(eta)) {
    if (eta_.size() != T_.num_sites()) throw DomainError("configuration size does not match the torus");
}

FieldState::Handle FieldState::add(const TestFunctionSum& G) {
    const int k = G.arity();
    check_arity(k);
    Function f;
    for (const auto& term : G.terms) {
        Term t;
        t.k = k;
        t.coef = term.coef;
        t.P = subset_products(factor_tables(term.fn, T_), T_.num_sites());
        rebuild(t);
        f.terms.push_back(static_cast<int>(terms_.size()));
        terms_.push_back(std::move(t));
    }
    fns_.push_back(std::move(f));
    return static_cast<Handle>(fns_.size() - 1);
}

int FieldState::arity(Handle h) const {
    const auto& f = fns_.at(h);
    return f.terms.empty() ? 0 : terms_[f.terms.front()].k;
}

void FieldState::rebuild(Term& t) const {
    const auto e = as_double(eta_);
    const std::size_t nm = std::size_t{1} << t.k;
    t.sum.assign(nm, 0.0);
    t.comp.assign(nm, 0.0);
    for (std::size_t m = 1; m < nm; ++m) t.sum[m] = kernels::dot(e.data(), t.P[m].data(), e.size());
}

long double FieldState::term_value(const Term& t) const {
    if (t.k == 0) return t.coef;
    long double S[std::size_t{1} << kMaxArity];
    for (std::size_t m = 1; m < t.sum.size(); ++m) S[m] = static_cast<long double>(t.sum[m]) + t.comp[m];
    return t.coef * sum_over_partitions(t.k, S, mobius_weights()) * inv_volume_power(T_, t.k);
}

long double FieldState::term_delta(const Term& t, Site z, Site w) const {
    if (t.k == 0 || z == w) return 0.0L;
    long double S[std::size_t{1} << kMaxArity];
    long double D[std::size_t{1} << kMaxArity];
    for (std::size_t m = 1; m < t.sum.size(); ++m) {
        S[m] = static_cast<long double>(t.sum[m]) + t.comp[m];
        D[m] = static_cast<long double>(t.P[m][w.id]) - t.P[m][z.id];
    }
    return t.coef * partition_sum_delta(t.k, S, D, mobius_weights()) * inv_volume_power(T_, t.k);
}

long double FieldState::value_ld(Handle h) const {
    long double s = 0.0L;
    for (int i : fns_.at(h).terms) s += term_value(terms_[i]);
    return s;
}

long double FieldState::delta_ld(Handle h, Site z, Site w) const {
    long double s = 0.0L;
    for (int i : fns_.at(h).terms) s += term_delta(terms_[i], z, w);
    return s;
}

void FieldState::apply_move(Site z, Site w) {
    eta_.move(z, w);
    if (z == w) return;
    for (auto& t : terms_) {
        for (std::size_t m = 1; m < t.sum.size(); ++m) {
            neumaier_add(t.sum[m], t.comp[m], t.P[m][w.id]);
            neumaier_add(t.sum[m], t.comp[m], -t.P[m][z.id]);
        }
    }
    ++moves_;
#ifndef NDEBUG
    if ((moves_ & 0xFFF) == 0) {
        for (const auto& t : terms_) {
            Term fresh = t;
            rebuild(fresh);
            for (std::size_t m = 1; m < t.sum.size(); ++m) {
                const double a = t.sum[m] + t.comp[m], b = fresh.sum[m];
                assert(std::fabs(a - b) <= 1e-9 * (1.0 + std::fabs(b)));
            }
        }
    }
#endif
}

void FieldState::reset(Configuration eta) {
    if (eta.size() != T_.num_sites()) throw DomainError("configuration size does not match the torus");
    eta_ = std::move(eta);
    for (auto& t : terms_) rebuild(t);
}

double FieldState::resync() {
    double worst = 0.0;
    for (auto& t : terms_) {
        const auto old_sum = t.sum;
        const auto old_comp = t.comp;
        rebuild(t);
        for (std::size_t m = 1; m < t.sum.size(); ++m) {
            const double a = old_sum[m] + old_comp[m];
            worst = std::max(worst, std::fabs(a - t.sum[m]) / std::max(1.0, std::fabs(t.sum[m])));
        }
    }
    return worst;
}

double eval_field(const TestFunctionSum& G, const Configuration& eta, const Torus& T) {
    FieldState st(T, eta);
    return st.value(st.add(G));
}

double eval_field(const ProductTestFunction& G, const Configuration& eta, const Torus& T) {
    return eval_field(TestFunctionSum(G), eta, T);
}

double eval_field(const FieldState& state, FieldState::Handle h) { return state.value(h); }

double field_delta_on_move(FieldState& state, FieldState::Handle h, Site z, Site w, bool commit) {
    if (state.config()[z] == 0) throw DomainError("move from an empty site");
    const double d = state.delta(h, z, w);
    if (commit) state.apply_move(z, w);
    return d;
}

long double eval_with_block_functions(const ProductTestFunction& G, const Torus& T,
                                      const std::vector<std::vector<double>>& psi) {
    const int k = G.arity();
    check_arity(k);
    if (k == 0) return 1.0L;
    if (static_cast<int>(psi.size()) < k + 1) throw DomainError("block functions missing");
    const std::size_t n = T.num_sites();
    const auto P = subset_products(factor_tables(G, T), n);
    long double S[std::size_t{1} << kMaxArity];
    for (BlockMask m = 1; m < (BlockMask{1} << k); ++m)
        S[m] = kernels::dot(psi[std::popcount(m)].data(), P[m].data(), n);
    return sum_over_partitions(k, S, unit_weights()) * inv_volume_power(T, k);
}

TestFunctionSum coincidence_expansion(const ProductTestFunction& G, const ProductTestFunction& H, int h) {
    const int k = G.arity(), l = H.arity();
    if (h < 0 || h > l || h > k) throw DomainError("coincidence order out of range");
    TestFunctionSum out;
    for (BlockMask J = 0; J < (BlockMask{1} << l); ++J) {
        if (std::popcount(J) != h) continue;
        std::vector<int> js;
        for (int j = 0; j < l; ++j)
            if (J >> j & 1) js.push_back(j);
        // Injective maps J -> [k] as ordered selections of h targets.
        std::vector<int> targets(h, 0);
        std::function<void(int, BlockMask)> rec = [&](int pos, BlockMask used) {
            if (pos == h) {
                ProductTestFunction f;
                for (int m = 0; m < k; ++m) {
                    FactorPtr fac = G.factors[m];
                    for (int q = 0; q < h; ++q)
                        if (targets[q] == m) fac = make_product(fac, H.factors[js[q]]);
                    f.factors.push_back(fac);
                }
                for (int j = 0; j < l; ++j)
                    if (!(J >> j & 1)) f.factors.push_back(H.factors[j]);
                out.terms.push_back({1.0, std::move(f)});
                return;
            }
            for (int m = 0; m < k; ++m) {
                if (used >> m & 1) continue;
                targets[pos] = m;
                rec(pos + 1, used | (BlockMask{1} << m));
            }
        };
        rec(0, 0);
    }
    return out;
}

double eval_coincidence_term(const ProductTestFunction& G, const ProductTestFunction& H, int h,
                             const Configuration& eta, const Torus& T, std::uint64_t cap) {
    const int k = G.arity(), l = H.arity();
    if (l > k) throw DomainError("coincidence terms need l <= k");
    if (h < 0 || h > l) throw DomainError("coincidence order out of range");
    check_cap(T, k + l - h, cap);
    const auto gt = factor_tables(G, T);
    const auto ht = factor_tables(H, T);
    long double s = 0.0L;
    for (BlockMask J = 0; J < (BlockMask{1} << l); ++J) {
        if (std::popcount(J) != h) continue;
        std::vector<int> js, free;
        for (int j = 0; j < l; ++j) (J >> j & 1 ? js : free).push_back(j);
        std::vector<int> targets(h);
        std::function<void(int, BlockMask)> rec = [&](int pos, BlockMask used) {
            if (pos == h) {
                // Sum over x in T^k and the free y coordinates; y_J = x_{targets}.
                for_each_tuple(T.num_sites(), k + static_cast<int>(free.size()), [&](const LabeledTuple& xy) {
                    const double ff = falling_factorial_joint(eta, xy);
                    if (ff == 0.0) return;
                    long double v = 1.0L;
                    for (int m = 0; m < k; ++m) v *= gt[m][xy[m].id];
                    for (int q = 0; q < h; ++q) v *= ht[js[q]][xy[targets[q]].id];
                    for (std::size_t q = 0; q < free.size(); ++q) v *= ht[free[q]][xy[k + q].id];
                    s += v * ff;
                });
                return;
            }
            for (int m = 0; m < k; ++m) {
                if (used >> m & 1) continue;
                targets[pos] = m;
                rec(pos + 1, used | (BlockMask{1} << m));
            }
        };
        rec(0, 0);
    }
    return static_cast<double>(s * inv_volume_power(T, k + l - h));
}

double eval_coincidence_term_fast(const ProductTestFunction& G, const ProductTestFunction& H, int h,
                                  const Configuration& eta, const Torus& T) {
    return eval_field(coincidence_expansion(G, H, h), eta, T);
}

ExpansionCheck check_product_expansion(const ProductTestFunction& G, const ProductTestFunction& H,
                                       const Configuration& eta, const Torus& T, std::uint64_t cap) {
    const int l = H.arity();
    ExpansionCheck r;
    r.lhs = eval_field_bruteforce(G, eta, T, cap) * eval_field_bruteforce(H, eta, T, cap);
    long double rhs = 0.0L;
    for (int h = 0; h <= l; ++h)
        rhs += static_cast<long double>(eval_coincidence_term(G, H, h, eta, T, cap)) * inv_volume_power(T, h);
    r.rhs = static_cast<double>(rhs);
    r.residual = static_cast<double>(static_cast<long double>(r.lhs) - rhs);
    return r;
}

long double equilibrium_field_mean(const TestFunctionSum& G, const ModelParams& p, double theta) {
    validate_theta(p.sigma, p.alpha, theta);
    const Torus T = p.torus();
    const int k = G.arity();
    check_arity(k);
    std::vector<double> mom(k + 1, 0.0);
    for (int a = 1; a <= k; ++a) mom[a] = marginal_falling_moment(a, {p.sigma, p.alpha, theta});
    const auto b = block_functions_from_moments(mom, k);
    std::vector<std::vector<double>> psi(k + 1);
    for (int m = 1; m <= k; ++m) psi[m].assign(T.num_sites(), b[m]);
    long double s = 0.0L;
    for (const auto& t : G.terms) s += t.coef * eval_with_block_functions(t.fn, T, psi);
    return s;
}

double fluctuation_field_Y(const FieldState& state, FieldState::Handle h, long double mean, const ModelParams& p) {
    const long double scale = std::sqrt(static_cast<long double>(state.torus().num_sites()));
    (void)p;
    return static_cast<double>(scale * (state.value_ld(h) - mean));
}

double fluctuation_field_Y(const TestFunctionSum& G, const Configuration& eta, const ModelParams& p, double theta) {
    FieldState st(p.torus(), eta);
    const auto h = st.add(G);
    return fluctuation_field_Y(st, h, equilibrium_field_mean(G, p, theta), p);
}

double fluctuation_field_Z(const TestFunctionSum& G, const Configuration& eta, const ModelParams& p, double theta) {
    validate_theta(p.sigma, p.alpha, theta);
    const int k = G.arity();
    if (k < 1 || k > 2) throw DomainError("Z field implemented for k <= 2 only");
    const Torus T = p.torus();
    const std::size_t n = T.num_sites();
    const long double vol = static_cast<long double>(n);
    const long double a = p.alpha, sg = p.sigma;
    if (k == 1) {
        long double x1 = 0.0L, sum_g = 0.0L;
        for (const auto& t : G.terms) {
            const auto g = tabulate(*t.fn.factors[0], T);
            for (std::size_t z = 0; z < n; ++z) {
                x1 += t.coef * static_cast<long double>(g[z]) * eta.at(z);
                sum_g += t.coef * static_cast<long double>(g[z]);
            }
        }
        return static_cast<double>(std::sqrt(vol) * (x1 / vol - theta * a * sum_g / vol));
    }
    // k = 2.  G^sym(x,y) = sum_t c_t (g1(x)g2(y) + g2(x)g1(y))/2.
    //   K21(x) = N^{-d} sum_y G^sym(x,y)(alpha + sigma 1{x=y})
    //   K20    = N^{-2d} sum_{x,y} G^sym(x,y) alpha(alpha + sigma 1{x=y})
    std::vector<long double> rowsum(n, 0.0L), diag(n, 0.0L);
    for (const auto& t : G.terms) {
        const auto g1 = tabulate(*t.fn.factors[0], T);
        const auto g2 = tabulate(*t.fn.factors[1], T);
        long double s1 = 0.0L, s2 = 0.0L;
        for (std::size_t z = 0; z < n; ++z) {
            s1 += g1[z];
            s2 += g2[z];
        }
        for (std::size_t z = 0; z < n; ++z) {
            rowsum[z] += t.coef * 0.5L * (g1[z] * s2 + g2[z] * s1);
            diag[z] += t.coef * static_cast<long double>(g1[z]) * g2[z];
        }
    }
    long double x1 = 0.0L, k20 = 0.0L;
    for (std::size_t z = 0; z < n; ++z) {
        const long double k21 = (a * rowsum[z] + sg * diag[z]) / vol;
        x1 += k21 * eta.at(z);
        k20 += a * (a * rowsum[z] + sg * diag[z]);
    }
    x1 /= vol;
    k20 /= vol * vol;
    FieldState st(T, eta);
    const long double x2 = st.value_ld(st.add(G));
    const long double th = theta;
    return static_cast<double>(vol * (x2 - 2.0L * th * x1 + th * th * k20));
}

double carre_du_champ(const FieldState& state, FieldState::Handle h, const ModelParams& p) {
    const Torus& T = state.torus();
    const Configuration& eta = state.config();
    const long double scale = p.time_scale();
    long double s = 0.0L;
    for (std::uint32_t x = 0; x < T.num_sites(); ++x) {
        const auto nx = eta[Site{x}];
        if (nx == 0) continue;
        for (Site y : T.neighbors(Site{x})) {
            const long double w = p.alpha + static_cast<long double>(p.sigma) * eta[y];
            if (w <= 0.0L) continue;
            const long double d = state.delta_ld(h, Site{x}, y);
            s += scale * nx * w * d * d;
        }
    }
    return static_cast<double>(s);
}

double carre_du_champ(const TestFunctionSum& G, const Configuration& eta, const ModelParams& p) {
    FieldState st(p.torus(), eta);
    const auto h = st.add(G);
    return carre_du_champ(st, h, p);
}

TestFunctionSum symmetrize(const TestFunctionSum& G) {
    const int k = G.arity();
    if (k > 6) throw DomainError("symmetrize supports k <= 6");
    double kfact = 1.0;
    for (int j = 2; j <= k; ++j) kfact *= j;
    TestFunctionSum out;
    std::map<std::vector<const Factor*>, std::size_t> index;
    std::vector<int> perm(k);
    for (const auto& t : G.terms) {
        std::iota(perm.begin(), perm.end(), 0);
        do {
            ProductTestFunction f;
            std::vector<const Factor*> key;
            for (int i = 0; i < k; ++i) {
                f.factors.push_back(t.fn.factors[perm[i]]);
                key.push_back(t.fn.factors[perm[i]].get());
            }
            auto it = index.find(key);
            if (it == index.end()) {
                index.emplace(key, out.terms.size());
                out.terms.push_back({t.coef / kfact, std::move(f)});
            } else {
                out.terms[it->second].coef += t.coef / kfact;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return out;
}

}  // namespace fieldslab
