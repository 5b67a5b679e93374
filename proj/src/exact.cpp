#include "fieldslab/exact.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "fieldslab/dual.hpp"
#include "fieldslab/dynamics.hpp"
#include "fieldslab/fields.hpp"
#include "fieldslab/kernels.hpp"

namespace fieldslab {

std::size_t StateIndex::add(State s) {
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    const std::size_t i = states_.size();
    index_.emplace(s, i);
    states_.push_back(std::move(s));
    return i;
}

std::size_t StateIndex::find(const State& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? npos : it->second;
}

double SparseGenerator::entry(std::size_t i, std::size_t j) const {
    for (std::int64_t p = rowptr[i]; p < rowptr[i + 1]; ++p)
        if (static_cast<std::size_t>(col[p]) == j) return val[p];
    return 0.0;
}

double SparseGenerator::max_exit_rate() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, -entry(i, i));
    return m;
}

double SparseGenerator::max_row_sum_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0, scale = 0.0;
        for (std::int64_t p = rowptr[i]; p < rowptr[i + 1]; ++p) {
            s += val[p];
            scale += std::fabs(val[p]);
        }
        worst = std::max(worst, scale > 0 ? std::fabs(s) / scale : 0.0);
    }
    return worst;
}

std::vector<double> SparseGenerator::apply(const std::vector<double>& f) const {
    std::vector<double> y(n);
    kernels::csr_matvec(rowptr.data(), col.data(), val.data(), f.data(), y.data(), n);
    return y;
}

std::vector<double> SparseGenerator::apply_transpose(const std::vector<double>& mu) const {
    std::vector<long double> y(n, 0.0L);
    for (std::size_t i = 0; i < n; ++i)
        for (std::int64_t p = rowptr[i]; p < rowptr[i + 1]; ++p) y[col[p]] += static_cast<long double>(mu[i]) * val[p];
    return {y.begin(), y.end()};
}

SparseGenerator assemble_generator(const std::vector<std::vector<std::pair<std::int32_t, double>>>& rows) {
    SparseGenerator Q;
    Q.n = rows.size();
    Q.rowptr.assign(1, 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto r = rows[i];
        std::sort(r.begin(), r.end());
        double exit = 0.0;
        std::vector<std::pair<std::int32_t, double>> merged;
        for (const auto& [j, v] : r) {
            if (static_cast<std::size_t>(j) == i || v == 0.0) continue;
            if (!merged.empty() && merged.back().first == j)
                merged.back().second += v;
            else
                merged.emplace_back(j, v);
            exit += v;
        }
        merged.emplace_back(static_cast<std::int32_t>(i), -exit);
        std::sort(merged.begin(), merged.end());
        for (const auto& [j, v] : merged) {
            Q.col.push_back(j);
            Q.val.push_back(v);
        }
        Q.rowptr.push_back(static_cast<std::int64_t>(Q.col.size()));
    }
    return Q;
}

StateIndex enumerate_sector(const Torus& T, int n, const ModelParams& p, std::size_t cap) {
    StateIndex idx;
    const std::size_t S = T.num_sites();
    const std::uint32_t per_site = p.sigma == -1 ? static_cast<std::uint32_t>(p.alpha) : static_cast<std::uint32_t>(n);
    std::vector<std::uint32_t> occ(S, 0);
    std::function<void(std::size_t, std::uint32_t)> rec = [&](std::size_t site, std::uint32_t left) {
        if (site + 1 == S) {
            if (left > per_site) return;
            occ[site] = left;
            if (idx.size() >= cap) throw CapExceeded("sector size exceeds the state cap");
            idx.add(occ);
            occ[site] = 0;
            return;
        }
        for (std::uint32_t v = 0; v <= std::min(left, per_site); ++v) {
            occ[site] = v;
            rec(site + 1, left - v);
        }
        occ[site] = 0;
    };
    if (n < 0) throw DomainError("negative particle number");
    rec(0, static_cast<std::uint32_t>(n));
    return idx;
}

ConfigGenerator build_config_generator(const Torus& T, int n_particles, const ModelParams& p,
                                       const ExactOptions& opts) {
    ConfigGenerator g;
    g.states = enumerate_sector(T, n_particles, p, opts.state_cap);
    std::vector<std::vector<std::pair<std::int32_t, double>>> rows(g.states.size());
    for (std::size_t i = 0; i < g.states.size(); ++i) {
        const Configuration eta(g.states.state(i));
        for (std::uint32_t x = 0; x < T.num_sites(); ++x) {
            if (eta[Site{x}] == 0) continue;
            for (Site y : T.neighbors(Site{x})) {
                if (y.id == x) continue;
                double r = jump_rate(eta, Site{x}, y, p, T);
                if (r <= 0.0) continue;
                r *= 1.0 + opts.rate_perturbation * eta[y];
                auto occ = g.states.state(i);
                --occ[x];
                ++occ[y.id];
                const std::size_t j = g.states.find(occ);
                if (j == StateIndex::npos) throw std::logic_error("jump leaves the sector");
                rows[i].emplace_back(static_cast<std::int32_t>(j), r);
            }
        }
    }
    g.Q = assemble_generator(rows);
    return g;
}

std::uint64_t tuple_code(const LabeledTuple& x, const Torus& T) {
    std::uint64_t c = 0;
    for (std::size_t i = x.size(); i-- > 0;) c = c * T.num_sites() + x[i].id;
    return c;
}

std::size_t DualGenerator::find(const LabeledTuple& x, const Torus& T) const {
    auto it = index.find(tuple_code(x, T));
    return it == index.end() ? StateIndex::npos : it->second;
}

DualGenerator build_dual_generator(const Torus& T, int k, const ModelParams& p, const ExactOptions& opts) {
    const long double total = std::pow(static_cast<long double>(T.num_sites()), k);
    if (total > static_cast<long double>(opts.state_cap)) throw CapExceeded("dual state space exceeds the state cap");
    DualGenerator g;
    const std::size_t n = static_cast<std::size_t>(total);
    LabeledTuple x(k);
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t r = c;
        for (int i = 0; i < k; ++i) {
            x[i] = Site{static_cast<std::uint32_t>(r % T.num_sites())};
            r /= T.num_sites();
        }
        if (pi_weight(x, p.sigma, p.alpha) == 0.0) continue;
        g.index.emplace(tuple_code(x, T), g.tuples.size());
        g.tuples.push_back(x);
    }
    std::vector<std::vector<std::pair<std::int32_t, double>>> rows(g.tuples.size());
    for (std::size_t i = 0; i < g.tuples.size(); ++i) {
        for (const auto& mv : dual_jump_rates(g.tuples[i], p)) {
            if (mv.rate <= 0.0) continue;
            LabeledTuple y = g.tuples[i];
            y[mv.label] = mv.target;
            const std::size_t j = g.find(y, T);
            if (j == StateIndex::npos) throw std::logic_error("dual move leaves the admissible set");
            rows[i].emplace_back(static_cast<std::int32_t>(j), mv.rate);
        }
    }
    g.Q = assemble_generator(rows);
    return g;
}

DualityCheck check_duality_identity(const Torus& T, int k, const ModelParams& p, int max_particles,
                                    const ExactOptions& opts) {
    DualityCheck out;
    const std::size_t S = T.num_sites();
    const long double total = std::pow(static_cast<long double>(S), k);
    if (total > static_cast<long double>(opts.state_cap)) throw CapExceeded("tuple space exceeds the state cap");
    const std::size_t ntup = static_cast<std::size_t>(total);
    // Dual rows restricted to admissible tuples.
    const DualGenerator dual = build_dual_generator(T, k, p, opts);
    std::vector<LabeledTuple> tuples(ntup, LabeledTuple(k));
    for (std::size_t c = 0; c < ntup; ++c) {
        std::size_t r = c;
        for (int i = 0; i < k; ++i) {
            tuples[c][i] = Site{static_cast<std::uint32_t>(r % S)};
            r /= S;
        }
    }
    for (int n = 0; n <= max_particles; ++n) {
        const ConfigGenerator cg = build_config_generator(T, n, p, opts);
        const std::size_t ns = cg.states.size();
        std::vector<Configuration> confs;
        confs.reserve(ns);
        for (std::size_t s = 0; s < ns; ++s) confs.emplace_back(cg.states.state(s));
        // ff[x][s] = [eta_s]_x
        std::vector<std::vector<double>> ff(ntup, std::vector<double>(ns));
        for (std::size_t c = 0; c < ntup; ++c)
            for (std::size_t s = 0; s < ns; ++s) ff[c][s] = falling_factorial_joint(confs[s], tuples[c]);
        for (std::size_t c = 0; c < ntup; ++c) {
            const double pix = pi_weight(tuples[c], p.sigma, p.alpha);
            const std::size_t di = pix > 0.0 ? dual.find(tuples[c], T) : StateIndex::npos;
            for (std::size_t s = 0; s < ns; ++s) {
                // Right side: L acting on eta -> [eta]_x.
                long double rhs = 0.0L, rscale = 0.0L;
                for (std::int64_t q = cg.Q.rowptr[s]; q < cg.Q.rowptr[s + 1]; ++q) {
                    const long double term = static_cast<long double>(cg.Q.val[q]) * ff[c][cg.Q.col[q]];
                    rhs += term;
                    rscale += std::fabs(term);
                }
                long double lhs = 0.0L, lscale = 0.0L;
                if (di != StateIndex::npos) {
                    for (std::int64_t q = dual.Q.rowptr[di]; q < dual.Q.rowptr[di + 1]; ++q) {
                        const LabeledTuple& y = dual.tuples[dual.Q.col[q]];
                        const long double D = duality_fn(y, confs[s], p.sigma, p.alpha);
                        const long double term = static_cast<long double>(pix) * dual.Q.val[q] * D;
                        lhs += term;
                        lscale += std::fabs(term);
                    }
                } else {
                    out.excluded_max = std::max(out.excluded_max, static_cast<double>(std::fabs(rhs)));
                }
                out.max_abs = std::max(out.max_abs, static_cast<double>(std::fabs(lhs - rhs)));
                out.scale = std::max({out.scale, static_cast<double>(lscale), static_cast<double>(rscale)});
                ++out.pairs;
            }
        }
    }
    out.relative = out.scale > 0.0 ? out.max_abs / out.scale : out.max_abs;
    return out;
}

double product_measure_weight(const std::vector<std::uint32_t>& occ, int sigma, int alpha, double theta) {
    long double logw = 0.0L;
    for (auto n : occ) {
        if (theta == 0.0) {
            if (n > 0) return 0.0;
            continue;
        }
        switch (sigma) {
            case -1:
                if (n > static_cast<std::uint32_t>(alpha)) return 0.0;
                if (theta == 1.0) {
                    if (n != static_cast<std::uint32_t>(alpha)) return 0.0;
                    continue;
                }
                logw += std::lgamma(alpha + 1.0L) - std::lgamma(n + 1.0L) - std::lgamma(alpha - n + 1.0L) +
                        n * std::log(static_cast<long double>(theta)) +
                        (alpha - n) * std::log1p(-static_cast<long double>(theta));
                break;
            case 0: {
                const long double lam = static_cast<long double>(alpha) * theta;
                logw += -lam + n * std::log(lam) - std::lgamma(n + 1.0L);
                break;
            }
            default: {
                const long double q = static_cast<long double>(theta) / (1.0L + theta);
                logw += std::lgamma(alpha + static_cast<long double>(n)) - std::lgamma(static_cast<long double>(alpha)) -
                        std::lgamma(n + 1.0L) + n * std::log(q) + alpha * std::log1p(-q);
                break;
            }
        }
    }
    return static_cast<double>(std::exp(logw));
}

BalanceCheck check_detailed_balance(const Torus& T, const ModelParams& p, double theta, int max_particles,
                                    const ExactOptions& opts) {
    validate_theta(p.sigma, p.alpha, theta);
    BalanceCheck out;
    for (int n = 0; n <= max_particles; ++n) {
        const ConfigGenerator cg = build_config_generator(T, n, p, opts);
        const std::size_t ns = cg.states.size();
        std::vector<double> mu(ns);
        for (std::size_t s = 0; s < ns; ++s) mu[s] = product_measure_weight(cg.states.state(s), p.sigma, p.alpha, theta);
        for (std::size_t i = 0; i < ns; ++i) {
            for (std::int64_t q = cg.Q.rowptr[i]; q < cg.Q.rowptr[i + 1]; ++q) {
                const std::size_t j = cg.Q.col[q];
                if (j == i) continue;
                const double a = mu[i] * cg.Q.val[q];
                const double b = mu[j] * cg.Q.entry(j, i);
                const double m = std::max(std::fabs(a), std::fabs(b));
                if (m == 0.0) continue;
                out.detailed = std::max(out.detailed, std::fabs(a - b) / m);
                ++out.pairs;
            }
        }
        const auto flow = cg.Q.apply_transpose(mu);
        std::vector<double> scale(ns, 0.0);
        for (std::size_t i = 0; i < ns; ++i)
            for (std::int64_t q = cg.Q.rowptr[i]; q < cg.Q.rowptr[i + 1]; ++q)
                scale[cg.Q.col[q]] += std::fabs(mu[i] * cg.Q.val[q]);
        for (std::size_t j = 0; j < ns; ++j)
            if (scale[j] > 0.0) out.stationarity = std::max(out.stationarity, std::fabs(flow[j]) / scale[j]);
    }
    return out;
}

std::vector<double> uniformize_apply(const SparseGenerator& Q, const std::vector<double>& f, double t, double tol) {
    if (t < 0.0) throw DomainError("negative time");
    if (f.size() != Q.n) throw DomainError("observable length does not match the generator");
    const double lambda_rate = Q.max_exit_rate();
    if (t == 0.0 || lambda_rate == 0.0) return f;
    const double lam_total = lambda_rate * t;
    const int chunks = std::max(1, static_cast<int>(std::ceil(lam_total / 20.0)));
    const double lam = lam_total / chunks;
    const long double chunk_tol = static_cast<long double>(tol) / chunks;
    std::vector<double> v = f, term(Q.n), qx(Q.n), acc(Q.n);
    for (int c = 0; c < chunks; ++c) {
        term = v;
        long double w = std::exp(-static_cast<long double>(lam));
        long double cum = w;
        for (std::size_t i = 0; i < Q.n; ++i) acc[i] = static_cast<double>(w * term[i]);
        for (int m = 1; 1.0L - cum > chunk_tol; ++m) {
            if (m > 100000) throw std::runtime_error("uniformization did not converge");
            // term <- P term, P = I + Q / Lambda
            kernels::csr_matvec(Q.rowptr.data(), Q.col.data(), Q.val.data(), term.data(), qx.data(), Q.n);
            for (std::size_t i = 0; i < Q.n; ++i) term[i] += qx[i] / lambda_rate;
            w *= static_cast<long double>(lam) / m;
            cum += w;
            for (std::size_t i = 0; i < Q.n; ++i) acc[i] += static_cast<double>(w * term[i]);
        }
        v = acc;
    }
    return v;
}

double evolve_exact(const SparseGenerator& Q, const std::vector<double>& initial, const std::vector<double>& f,
                    double t, double tol) {
    if (initial.size() != Q.n) throw DomainError("initial distribution length does not match the generator");
    const auto v = uniformize_apply(Q, f, t, tol);
    long double s = 0.0L;
    for (std::size_t i = 0; i < Q.n; ++i) s += static_cast<long double>(initial[i]) * v[i];
    return static_cast<double>(s);
}

double evolve_exact(const SparseGenerator& Q, std::size_t initial_state, const std::vector<double>& f, double t,
                    double tol) {
    if (initial_state >= Q.n) throw DomainError("initial state out of range");
    return uniformize_apply(Q, f, t, tol)[initial_state];
}

std::vector<double> matrix_carre_du_champ(const SparseGenerator& Q, const std::vector<double>& F) {
    std::vector<double> F2(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) F2[i] = F[i] * F[i];
    const auto QF2 = Q.apply(F2);
    const auto QF = Q.apply(F);
    std::vector<double> out(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) out[i] = QF2[i] - 2.0 * F[i] * QF[i];
    return out;
}

}  // namespace fieldslab
