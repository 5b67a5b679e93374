#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fieldslab/dual.hpp"
#include "fieldslab/dynamics.hpp"
#include "fieldslab/exact.hpp"
#include "fieldslab/fields.hpp"
#include "fieldslab/harness.hpp"
#include "fieldslab/measures.hpp"
#include "fieldslab/parallel.hpp"
#include "fieldslab/rng.hpp"
#include "fieldslab/theory.hpp"

namespace fieldslab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Trajectory streams: high half is the grid point, low half the trajectory.
std::uint64_t stream_id(std::size_t grid, std::uint64_t m) { return (static_cast<std::uint64_t>(grid) << 32) | m; }

std::vector<int> axis_mode(int d, int m) {
    std::vector<int> v(d, 0);
    v[0] = m;
    return v;
}

// Factors used by the exhaustive identity checks.
std::vector<FactorPtr> factor_pool(int d) {
    std::vector<double> c1(d, 0.3), c2(d, 0.6);
    std::vector<int> h2(d, 0);
    h2[0] = 2;
    return {make_sin(d, axis_mode(d, 1)),
            make_cos(d, axis_mode(d, 2), 1.0, 0.3),
            make_bump(d, c1, 0.1),
            make_hermite(d, h2, c2, 0.15),
            make_trig(d, 0.2, {{0.5, axis_mode(d, 3), 0.4}})};
}

ProductTestFunction pool_product(const std::vector<FactorPtr>& pool, int first, int k) {
    ProductTestFunction G;
    for (int i = 0; i < k; ++i) G.factors.push_back(pool[(first + i) % pool.size()]);
    return G;
}

double rel(double diff, double scale) { return std::abs(diff) / std::max(1.0, std::abs(scale)); }

ProfileSpec resolve_profile(const ExperimentConfig& cfg, int sigma, int alpha) {
    if (cfg.profile.is_null()) return ProfileSpec::constant(sigma, alpha, cfg.d, cfg.theta);
    return ProfileSpec{sigma, alpha, parse_factor(cfg.profile, cfg.d)};
}

std::vector<double> sorted_times(std::vector<double> t) {
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

std::string tuple_text(const std::vector<int>& x) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? " " : "") + std::to_string(x[i]);
    return s;
}

}  // namespace

Report cmd_exact_check(const ExperimentConfig& cfg) {
    Report rep;
    Table t{"exact_check",
            {"identity", "sigma", "alpha", "k", "l", "N", "theta", "instances", "max_residual", "tolerance", "pass"},
            {}};
    auto want = [&](const char* id) {
        return std::find(cfg.identities.begin(), cfg.identities.end(), id) != cfg.identities.end();
    };
    ExactOptions eo;
    eo.rate_perturbation = cfg.rate_perturbation;
    auto add = [&](const char* id, int s, int a, int k, int l, int N, double th, std::int64_t inst, double res) {
        const bool pass = res <= cfg.tolerance;
        rep.ok = rep.ok && pass;
        t.add_row({std::string(id), std::int64_t{s}, std::int64_t{a}, std::int64_t{k}, std::int64_t{l},
                   std::int64_t{N}, th, inst, res, cfg.tolerance, std::int64_t{pass}});
    };

    const auto pool = factor_pool(cfg.d);
    std::vector<std::pair<int, int>> product_pairs, expectation_pairs;
    for (int k : cfg.ks)
        for (int l : cfg.ks) {
            if (l <= k) product_pairs.emplace_back(k, l);
            expectation_pairs.emplace_back(k, l);
        }

    for (int s : cfg.sigmas)
        for (int a : cfg.alphas) {
            if (want("duality"))
                for (int k : cfg.ks)
                    for (int N : cfg.Ns) {
                        ModelParams p{s, a, cfg.d, N, cfg.bond_rate};
                        const auto r = check_duality_identity(p.torus(), k, p, cfg.max_particles, eo);
                        const double scale = std::max(r.scale, 1e-300);
                        add("duality", s, a, k, 0, N, kNaN, static_cast<std::int64_t>(r.pairs),
                            std::max(r.relative, r.excluded_max / scale));
                    }
            if (want("balance"))
                for (int N : cfg.Ns)
                    for (double th : cfg.thetas) {
                        if (s == -1 && th > 1.0) continue;
                        ModelParams p{s, a, cfg.d, N, cfg.bond_rate};
                        const auto r = check_detailed_balance(p.torus(), p, th, cfg.max_particles, eo);
                        add("balance", s, a, 0, 0, N, th, static_cast<std::int64_t>(r.pairs),
                            std::max(r.detailed, r.stationarity));
                    }
            if (want("product"))
                for (auto [k, l] : product_pairs)
                    for (int N : cfg.product_Ns)
                        for (double th : cfg.thetas) {
                            if (s == -1 && th > 1.0) continue;
                            ModelParams p{s, a, cfg.d, N, cfg.bond_rate};
                            const Torus T = p.torus();
                            const auto G = pool_product(pool, 0, k), H = pool_product(pool, k, l);
                            double worst = 0.0;
                            for (int c = 0; c < cfg.configs_per_point; ++c) {
                                const std::uint64_t stream = fnv1a64(
                                    "product/" + std::to_string(s) + "/" + std::to_string(a) + "/" + std::to_string(k) +
                                    std::to_string(l) + "/" + std::to_string(N) + "/" + format_double(th) + "/" +
                                    std::to_string(c));
                                const auto eta =
                                    sample_configuration(MarginalSpec{s, a, th}, T, Philox(cfg.seed, stream));
                                const auto r = check_product_expansion(G, H, eta, T);
                                worst = std::max(worst, rel(r.residual, std::max(std::abs(r.lhs), std::abs(r.rhs))));
                            }
                            add("product", s, a, k, l, N, th, cfg.configs_per_point, worst);
                        }
            if (want("expectation"))
                for (auto [k, l] : expectation_pairs)
                    for (int N : cfg.expectation_Ns)
                        for (double th : cfg.thetas) {
                            if (s == -1 && th > 1.0) continue;
                            ModelParams p{s, a, cfg.d, N, cfg.bond_rate};
                            const auto G = pool_product(pool, 0, k), H = pool_product(pool, k, l);
                            const auto r = check_expectation_expansion(G, H, p, th);
                            add("expectation", s, a, k, l, N, th, 1,
                                rel(r.residual, std::max(std::abs(r.lhs), std::abs(r.rhs))));
                        }
        }
    if (t.rows.empty()) throw ConfigError("no instances");
    double worst = 0.0;
    for (const auto& row : t.rows) worst = std::max(worst, std::get<double>(row[8]));
    rep.messages.push_back("max residual " + format_double(worst) + (rep.ok ? " (all pass)" : " (FAILED)"));
    rep.tables.push_back(std::move(t));
    return rep;
}

Report cmd_hydro_sweep(const ExperimentConfig& cfg) {
    if (cfg.functions.empty()) throw ConfigError("no instances");
    Report rep;
    Table t{"hydro_sweep",
            {"sigma", "alpha", "N", "t", "function", "k", "estimate", "std_error", "samples", "target", "z",
             "abs_error", "error_scale", "finite_target", "z_finite"},
            {}};
    const auto times = sorted_times(cfg.times);
    if (times.empty()) throw ConfigError("no instances");
    const std::size_t nf = cfg.functions.size(), nt = times.size();
    std::size_t grid = 0, big_z = 0, total = 0;
    for (int s : cfg.sigmas)
        for (int a : cfg.alphas)
            for (int N : cfg.Ns) {
                ModelParams p{s, a, cfg.d, N, cfg.bond_rate};
                const Torus T = p.torus();
                const ProfileSpec prof = resolve_profile(cfg, s, a);
                try {
                    prof.values(T);  // range check at every site
                } catch (const DomainError& e) {
                    throw ConfigError(std::string("profile: ") + e.what());
                }
                const std::size_t g = grid++;
                std::vector<double> vals(cfg.samples * nt * nf);
                parallel_for(cfg.samples, cfg.threads, [&](std::size_t m) {
                    const Philox rng(cfg.seed, stream_id(g, m));
                    const Configuration eta0 = sample_configuration(prof, T, rng);
                    FieldState st(T, eta0);
                    for (const auto& f : cfg.functions) st.add(f.fn);
                    std::size_t ti = 0;
                    simulate(eta0, times.back(), p, rng.split(substream::dynamics), times,
                             [&](double, const Configuration& eta) {
                                 st.reset(eta);
                                 for (std::size_t fi = 0; fi < nf; ++fi)
                                     vals[(m * nt + ti) * nf + fi] = st.value(static_cast<int>(fi));
                                 ++ti;
                             });
                });
                for (std::size_t ti = 0; ti < nt; ++ti)
                    for (std::size_t fi = 0; fi < nf; ++fi) {
                        const auto& f = cfg.functions[fi];
                        std::vector<double> xs(cfg.samples);
                        for (std::size_t m = 0; m < cfg.samples; ++m) xs[m] = vals[(m * nt + ti) * nf + fi];
                        const double target = hydro_prediction(f.fn, times[ti], prof, p);
                        const auto rec = make_record(f.name, xs, target);
                        double finite = kNaN;
                        if (f.fn.arity() == 1) finite = finite_N_first_order_mean(f.fn.factors[0], times[ti], prof, p);
                        else if (times[ti] == 0.0) finite = expected_field_under_profile(f.fn, prof, p);
                        const double zf = std::isnan(finite) ? kNaN : (rec.estimate - finite) / rec.std_error;
                        t.add_row({std::int64_t{s}, std::int64_t{a}, std::int64_t{N}, times[ti], f.name,
                                   std::int64_t{f.fn.arity()}, rec.estimate, rec.std_error,
                                   static_cast<std::int64_t>(rec.samples), target, rec.z(),
                                   std::abs(rec.estimate - target),
                                   1.0 / N + 1.0 / std::sqrt(static_cast<double>(cfg.samples)), finite, zf});
                        ++total;
                        if (std::abs(rec.z()) > 3.0) ++big_z;
                    }
            }
    if (t.rows.empty()) throw ConfigError("no instances");
    rep.messages.push_back(std::to_string(big_z) + " of " + std::to_string(total) + " rows with |z| > 3");
    rep.tables.push_back(std::move(t));
    return rep;
}

Report cmd_fluct_sweep(const ExperimentConfig& cfg) {
    if (cfg.functions.empty()) throw ConfigError("no instances");
    Report rep;
    Table t{"fluct_sweep",
            {"kind", "sigma", "alpha", "N", "t", "function", "estimate", "std_error", "samples", "target_finite",
             "target_limit", "z", "mean", "skewness", "excess_kurtosis", "jb_pvalue"},
            {}};
    const auto times = sorted_times(cfg.times);
    const std::size_t nf = cfg.functions.size(), nt = times.size();
    std::size_t grid = 0;
    for (int s : cfg.sigmas)
        for (int a : cfg.alphas)
            for (int N : cfg.Ns) {
                ModelParams p{s, a, cfg.d, N, cfg.bond_rate};
                const Torus T = p.torus();
                const MarginalSpec eq{s, a, cfg.theta};
                const std::size_t g = grid++;
                std::vector<long double> means(nf);
                for (std::size_t fi = 0; fi < nf; ++fi)
                    means[fi] = equilibrium_field_mean(cfg.functions[fi].fn, p, cfg.theta);
                auto make_state = [&](const Configuration& eta) {
                    FieldState st(T, eta);
                    for (const auto& f : cfg.functions) st.add(f.fn);
                    return st;
                };

                if (nt > 0) {
                    std::vector<double> ys(cfg.samples * nt * nf);
                    parallel_for(cfg.samples, cfg.threads, [&](std::size_t m) {
                        const Philox rng(cfg.seed, stream_id(g, m));
                        const Configuration eta0 = sample_configuration(eq, T, rng);
                        FieldState st = make_state(eta0);
                        std::size_t ti = 0;
                        simulate(eta0, times.back(), p, rng.split(substream::dynamics), times,
                                 [&](double, const Configuration& eta) {
                                     st.reset(eta);
                                     for (std::size_t fi = 0; fi < nf; ++fi)
                                         ys[(m * nt + ti) * nf + fi] =
                                             fluctuation_field_Y(st, static_cast<int>(fi), means[fi], p);
                                     ++ti;
                                 });
                    });
                    auto series = [&](std::size_t ti, std::size_t fi) {
                        std::vector<double> xs(cfg.samples);
                        for (std::size_t m = 0; m < cfg.samples; ++m) xs[m] = ys[(m * nt + ti) * nf + fi];
                        return xs;
                    };
                    for (std::size_t ti = 0; ti < nt; ++ti) {
                        for (std::size_t fi = 0; fi < nf; ++fi) {
                            const auto& f = cfg.functions[fi];
                            const auto st = describe(series(ti, fi));
                            const double fin = stationary_cov_finiteN(f.fn, f.fn, p, cfg.theta);
                            const double lim = equilibrium_covariance(f.fn, f.fn, p, cfg.theta);
                            const double z = st.variance_se > 0 ? (st.variance - fin) / st.variance_se : kNaN;
                            t.add_row({std::string("var"), std::int64_t{s}, std::int64_t{a}, std::int64_t{N},
                                       times[ti], f.name, st.variance, st.variance_se,
                                       static_cast<std::int64_t>(st.n), fin, lim, z, st.mean, st.skewness,
                                       st.excess_kurtosis, jarque_bera_pvalue(st)});
                        }
                        for (std::size_t i = 0; i < nf; ++i)
                            for (std::size_t j = i + 1; j < nf; ++j) {
                                const auto& f = cfg.functions[i];
                                const auto& h = cfg.functions[j];
                                double se = 0.0;
                                const double cov = sample_covariance(series(ti, i), series(ti, j), &se);
                                const double fin = stationary_cov_finiteN(f.fn, h.fn, p, cfg.theta);
                                const double lim = equilibrium_covariance(f.fn, h.fn, p, cfg.theta);
                                t.add_row({std::string("cov"), std::int64_t{s}, std::int64_t{a}, std::int64_t{N},
                                           times[ti], f.name + "|" + h.name, cov, se,
                                           static_cast<std::int64_t>(cfg.samples), fin, lim,
                                           se > 0 ? (cov - fin) / se : kNaN, kNaN, kNaN, kNaN, kNaN});
                            }
                    }
                }

                // Carre du champ: one independent equilibrium trajectory per batch,
                // time-averaged on a midpoint grid over [0, window].
                std::vector<double> snaps(cfg.gamma_points);
                for (int i = 0; i < cfg.gamma_points; ++i) snaps[i] = (i + 0.5) * cfg.window / cfg.gamma_points;
                const double vol = std::pow(static_cast<double>(N), cfg.d);
                std::vector<double> gam(static_cast<std::size_t>(cfg.batches) * nf);
                parallel_for(cfg.batches, cfg.threads, [&](std::size_t b) {
                    const Philox rng(cfg.seed, stream_id(g, (1ULL << 31) | b));
                    const Configuration eta0 = sample_configuration(eq, T, rng);
                    FieldState st = make_state(eta0);
                    std::vector<long double> acc(nf, 0.0L);
                    simulate(eta0, cfg.window, p, rng.split(substream::dynamics), snaps,
                             [&](double, const Configuration& eta) {
                                 st.reset(eta);
                                 for (std::size_t fi = 0; fi < nf; ++fi)
                                     acc[fi] += carre_du_champ(st, static_cast<int>(fi), p);
                             });
                    for (std::size_t fi = 0; fi < nf; ++fi)
                        gam[b * nf + fi] = static_cast<double>(vol * acc[fi] / cfg.gamma_points);
                });
                for (std::size_t fi = 0; fi < nf; ++fi) {
                    const auto& f = cfg.functions[fi];
                    std::vector<double> xs(cfg.batches);
                    for (int b = 0; b < cfg.batches; ++b) xs[b] = gam[b * nf + fi];
                    const double U = quadratic_variation_U(f.fn, p, cfg.theta);
                    const auto rec = make_record(f.name, xs, U);
                    t.add_row({std::string("gamma"), std::int64_t{s}, std::int64_t{a}, std::int64_t{N}, cfg.window,
                               f.name, rec.estimate, rec.std_error, static_cast<std::int64_t>(rec.samples), kNaN, U,
                               rec.z(), kNaN, kNaN, kNaN, kNaN});
                }
            }
    if (t.rows.empty()) throw ConfigError("no instances");
    rep.tables.push_back(std::move(t));
    return rep;
}

Report cmd_dual_check(const ExperimentConfig& cfg) {
    Report rep;
    Table t{"dual_check",
            {"sigma", "alpha", "N", "t", "tuple", "forward", "forward_se", "backward", "backward_se", "exact_dual",
             "exact_config", "z_forward_backward", "z_forward_exact", "z_backward_exact", "exact_residual", "pass"},
            {}};
    const auto times = sorted_times(cfg.times);
    std::size_t grid = 0;
    for (int s : cfg.sigmas)
        for (int a : cfg.alphas)
            for (int N : cfg.Ns) {
                ModelParams p{s, a, cfg.d, N, cfg.bond_rate};
                const Torus T = p.torus();
                const std::size_t g = grid++;
                std::vector<LabeledTuple> tuples;
                std::vector<std::string> names;
                for (const auto& raw : cfg.tuples) {
                    LabeledTuple x;
                    bool ok = true;
                    for (int v : raw) {
                        if (v < 0 || static_cast<std::size_t>(v) >= T.num_sites()) ok = false;
                        x.push_back(Site{static_cast<std::uint32_t>(std::max(v, 0))});
                    }
                    if (!ok || pi_weight(x, s, a) == 0.0) continue;
                    tuples.push_back(x);
                    names.push_back(tuple_text(raw));
                }
                if (tuples.empty()) continue;
                // One fixed starting configuration per grid point.
                const Configuration eta0 =
                    sample_configuration(MarginalSpec{s, a, cfg.theta}, T, Philox(cfg.seed, stream_id(g, 0xffffffffu)));
                const std::size_t nx = tuples.size();

                std::optional<ConfigGenerator> cg;
                if (N <= cfg.exact_N_max) {
                    try {
                        cg = build_config_generator(T, static_cast<int>(eta0.total()), p);
                    } catch (const CapExceeded&) {
                    }
                }

                for (std::size_t ti = 0; ti < times.size(); ++ti) {
                    const double tt = times[ti];
                    std::vector<double> fw(cfg.samples * nx);
                    parallel_for(cfg.samples, cfg.threads, [&](std::size_t m) {
                        const Philox rng(cfg.seed, stream_id(g, m));
                        const auto tr = simulate(eta0, tt, p, rng.split(substream::dynamics + ti * 16));
                        for (std::size_t i = 0; i < nx; ++i) fw[m * nx + i] = falling_factorial_joint(tr.terminal, tuples[i]);
                    });
                    for (std::size_t i = 0; i < nx; ++i) {
                        std::vector<double> xs(cfg.samples);
                        for (std::size_t m = 0; m < cfg.samples; ++m) xs[m] = fw[m * nx + i];
                        const auto F = describe(xs);

                        DualOptions mc;
                        mc.method = DualMethod::montecarlo;
                        mc.samples = cfg.samples;
                        mc.seed = fnv1a64("dual/" + std::to_string(cfg.seed) + "/" + std::to_string(g) + "/" +
                                          std::to_string(ti) + "/" + names[i]);
                        mc.threads = cfg.threads;
                        const auto B = expected_factorial_moment(eta0, tuples[i], tt, p, mc);

                        double ex_dual = kNaN, ex_cfg = kNaN;
                        try {
                            DualOptions uo;
                            uo.tol = 1e-14;
                            ex_dual = expected_factorial_moment(eta0, tuples[i], tt, p, uo).value;
                        } catch (const CapExceeded&) {
                        }
                        if (cg) {
                            const std::size_t idx = cg->states.find(eta0.occupancy());
                            std::vector<double> f(cg->states.size());
                            for (std::size_t j = 0; j < f.size(); ++j) {
                                f[j] = falling_factorial_joint(Configuration(cg->states.state(j)), tuples[i]);
                            }
                            ex_cfg = evolve_exact(cg->Q, idx, f, tt, 1e-14);
                        }
                        const double zfb = (F.mean - B.value) / std::hypot(F.std_error, B.std_error);
                        const double ref = std::isnan(ex_dual) ? ex_cfg : ex_dual;
                        const double zfe = std::isnan(ref) ? kNaN : (F.mean - ref) / F.std_error;
                        const double zbe = std::isnan(ref) ? kNaN : (B.value - ref) / B.std_error;
                        const double resid =
                            (std::isnan(ex_dual) || std::isnan(ex_cfg)) ? kNaN : rel(ex_dual - ex_cfg, ex_cfg);
                        const bool pass = std::isnan(resid) || resid <= 1e-10;
                        rep.ok = rep.ok && pass;
                        t.add_row({std::int64_t{s}, std::int64_t{a}, std::int64_t{N}, tt, names[i], F.mean,
                                   F.std_error, B.value, B.std_error, ex_dual, ex_cfg, zfb, zfe, zbe, resid,
                                   std::int64_t{pass}});
                    }
                }
            }
    if (t.rows.empty()) throw ConfigError("no instances");
    rep.tables.push_back(std::move(t));
    return rep;
}

Report run_command(const ExperimentConfig& cfg) {
    if (cfg.command == "exact-check") return cmd_exact_check(cfg);
    if (cfg.command == "hydro-sweep") return cmd_hydro_sweep(cfg);
    if (cfg.command == "fluct-sweep") return cmd_fluct_sweep(cfg);
    if (cfg.command == "dual-check") return cmd_dual_check(cfg);
    throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace fieldslab
