#include "fieldslab/theory.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>

#include "fieldslab/dual.hpp"
#include "fieldslab/fields.hpp"

namespace fieldslab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
using cd = std::complex<double>;
using TrigMap = std::map<std::vector<int>, cd>;

// FFTW planning is not thread safe.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

std::optional<TrigMap> as_trig(const Factor& f) {
    const int d = f.dim();
    if (auto c = dynamic_cast<const ConstantFactor*>(&f)) return TrigMap{{std::vector<int>(d, 0), cd(c->constant())}};
    if (auto t = dynamic_cast<const TrigFactor*>(&f)) {
        TrigMap m;
        m[std::vector<int>(d, 0)] += t->offset();
        for (const auto& term : t->terms()) {
            std::vector<int> neg(term.mode);
            for (auto& v : neg) v = -v;
            m[term.mode] += 0.5 * term.amplitude * std::polar(1.0, term.phase);
            m[neg] += 0.5 * term.amplitude * std::polar(1.0, -term.phase);
        }
        return m;
    }
    if (auto p = dynamic_cast<const ProductFactor*>(&f)) {
        auto a = as_trig(*p->left());
        auto b = as_trig(*p->right());
        if (!a || !b) return std::nullopt;
        TrigMap out;
        for (const auto& [ma, ca] : *a)
            for (const auto& [mb, cb] : *b) {
                std::vector<int> m(d);
                for (int j = 0; j < d; ++j) m[j] = ma[j] + mb[j];
                out[m] += ca * cb;
            }
        return out;
    }
    return std::nullopt;
}

int grid_points_per_dim(int d) {
    switch (d) {
        case 1: return 4096;
        case 2: return 256;
        case 3: return 32;
        default: return 12;
    }
}

void for_each_grid_point(int d, int n, const std::function<void(std::span<const double>)>& fn) {
    std::vector<int> idx(d, 0);
    std::vector<double> u(d, 0.0);
    while (true) {
        for (int j = 0; j < d; ++j) u[j] = static_cast<double>(idx[j]) / n;
        fn(u);
        int j = 0;
        while (j < d && ++idx[j] == n) idx[j++] = 0;
        if (j == d) return;
    }
}

double grid_mean(int d, const std::function<double(std::span<const double>)>& fn) {
    const int n = grid_points_per_dim(d);
    long double s = 0.0L;
    std::size_t count = 0;
    for_each_grid_point(d, n, [&](std::span<const double> u) {
        s += fn(u);
        ++count;
    });
    return static_cast<double>(s / count);
}

int factor_dim(const std::vector<FactorPtr>& fs) { return fs.empty() ? 1 : fs.front()->dim(); }

}  // namespace

double integrate_product(const std::vector<FactorPtr>& factors) {
    if (factors.empty()) return 1.0;
    const int d = factor_dim(factors);
    std::optional<TrigMap> acc = TrigMap{{std::vector<int>(d, 0), cd(1.0)}};
    for (const auto& f : factors) {
        auto t = as_trig(*f);
        if (!t) {
            acc.reset();
            break;
        }
        TrigMap out;
        for (const auto& [ma, ca] : *acc)
            for (const auto& [mb, cb] : *t) {
                std::vector<int> m(d);
                for (int j = 0; j < d; ++j) m[j] = ma[j] + mb[j];
                out[m] += ca * cb;
            }
        acc = std::move(out);
    }
    if (acc) {
        auto it = acc->find(std::vector<int>(d, 0));
        return it == acc->end() ? 0.0 : it->second.real();
    }
    return grid_mean(d, [&](std::span<const double> u) {
        double v = 1.0;
        for (const auto& f : factors) v *= f->value(u);
        return v;
    });
}

double integrate(const FactorPtr& g) { return integrate_product({g}); }

double integrate_gradient_dot(const FactorPtr& g, const FactorPtr& h) {
    const int d = g->dim();
    auto tg = as_trig(*g), th = as_trig(*h);
    if (tg && th) {
        double s = 0.0;
        for (const auto& [m, c] : *tg) {
            std::vector<int> neg(m);
            for (auto& v : neg) v = -v;
            auto it = th->find(neg);
            if (it == th->end()) continue;
            double m2 = 0.0;
            for (int v : m) m2 += static_cast<double>(v) * v;
            s += (kTwoPi * kTwoPi * m2 * c * it->second).real();
        }
        return s;
    }
    std::vector<double> gg(d), gh(d);
    return grid_mean(d, [&](std::span<const double> u) {
        g->gradient(u, gg);
        h->gradient(u, gh);
        double v = 0.0;
        for (int j = 0; j < d; ++j) v += gg[j] * gh[j];
        return v;
    });
}

HeatProfile::HeatProfile(const ProfileSpec& theta0, const ModelParams& p, double tol)
    : d_(p.d), D_(p.diffusivity()) {
    if (!theta0.theta) throw DomainError("profile has no theta function");
    if (theta0.theta->dim() != p.d) throw DomainError("profile dimension does not match the model");
    if (auto t = as_trig(*theta0.theta)) {
        for (const auto& [m, c] : *t)
            if (std::abs(c) > 0.0) modes_.push_back({m, static_cast<double>(p.alpha) * c});
        return;
    }
    const int n = std::min(grid_points_per_dim(d_), 1024);
    std::size_t total = 1;
    for (int j = 0; j < d_; ++j) total *= n;
    std::vector<cd> buf(total);
    std::size_t i = 0;
    // Index layout: first coordinate slowest, matching FFTW row-major order.
    std::vector<int> idx(d_, 0);
    std::vector<double> u(d_);
    for (i = 0; i < total; ++i) {
        std::size_t r = i;
        for (int j = d_ - 1; j >= 0; --j) {
            idx[j] = static_cast<int>(r % n);
            r /= n;
        }
        for (int j = 0; j < d_; ++j) u[j] = static_cast<double>(idx[j]) / n;
        buf[i] = p.alpha * theta0.theta->value(u);
    }
    std::vector<int> dims(d_, n);
    {
        std::lock_guard<std::mutex> lk(fftw_mutex());
        fftw_plan plan = fftw_plan_dft(d_, dims.data(), reinterpret_cast<fftw_complex*>(buf.data()),
                                       reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD, FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }
    double cmax = 0.0;
    for (auto& c : buf) {
        c /= static_cast<double>(total);
        cmax = std::max(cmax, std::abs(c));
    }
    for (i = 0; i < total; ++i) {
        if (std::abs(buf[i]) <= tol * std::max(cmax, 1.0)) continue;
        std::size_t r = i;
        std::vector<int> m(d_);
        for (int j = d_ - 1; j >= 0; --j) {
            int k = static_cast<int>(r % n);
            r /= n;
            m[j] = k > n / 2 ? k - n : k;
        }
        modes_.push_back({m, buf[i]});
    }
}

double HeatProfile::at(double t, std::span<const double> u) const {
    double s = 0.0;
    for (const auto& md : modes_) {
        double m2 = 0.0, arg = 0.0;
        for (int j = 0; j < d_; ++j) {
            m2 += static_cast<double>(md.m[j]) * md.m[j];
            arg += kTwoPi * md.m[j] * u[j];
        }
        s += (md.c * std::exp(-D_ * kTwoPi * kTwoPi * m2 * t) * std::polar(1.0, arg)).real();
    }
    return s;
}

double HeatProfile::mass() const {
    for (const auto& md : modes_) {
        bool zero = true;
        for (int v : md.m) zero = zero && v == 0;
        if (zero) return md.c.real();
    }
    return 0.0;
}

double heat_solution(const ProfileSpec& theta0, double t, std::span<const double> u, const ModelParams& p) {
    return HeatProfile(theta0, p).at(t, u);
}

double hydro_prediction(const ProductTestFunction& G, double t, const ProfileSpec& theta0, const ModelParams& p) {
    const HeatProfile rho(theta0, p);
    const double D = rho.diffusivity();
    long double prod = 1.0L;
    for (const auto& g : G.factors) {
        double val;
        if (auto tg = as_trig(*g)) {
            cd s = 0.0;
            for (const auto& md : rho.modes()) {
                std::vector<int> neg(md.m);
                double m2 = 0.0;
                for (auto& v : neg) {
                    m2 += static_cast<double>(v) * v;
                    v = -v;
                }
                auto it = tg->find(neg);
                if (it == tg->end()) continue;
                s += md.c * std::exp(-D * kTwoPi * kTwoPi * m2 * t) * it->second;
            }
            val = s.real();
        } else {
            val = grid_mean(p.d, [&](std::span<const double> u) { return g->value(u) * rho.at(t, u); });
        }
        prod *= val;
    }
    return static_cast<double>(prod);
}

double equilibrium_covariance(const ProductTestFunction& G, const ProductTestFunction& H, const ModelParams& p,
                              double theta) {
    validate_theta(p.sigma, p.alpha, theta);
    const double at = p.alpha * theta;
    const double mob = at * (1.0 + p.sigma * theta);
    const int k = G.arity(), l = H.arity();
    std::vector<double> mg(k), mh(l);
    for (int i = 0; i < k; ++i) mg[i] = at * integrate(G.factors[i]);
    for (int j = 0; j < l; ++j) mh[j] = at * integrate(H.factors[j]);
    long double s = 0.0L;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < l; ++j) {
            if (mob == 0.0) continue;
            long double term = mob * integrate_product({G.factors[i], H.factors[j]});
            for (int a = 0; a < k; ++a)
                if (a != i) term *= mg[a];
            for (int b = 0; b < l; ++b)
                if (b != j) term *= mh[b];
            s += term;
        }
    return static_cast<double>(s);
}

double quadratic_variation_U(const ProductTestFunction& G, const ModelParams& p, double theta) {
    validate_theta(p.sigma, p.alpha, theta);
    const double at = p.alpha * theta;
    const double mob = static_cast<double>(p.alpha) * p.alpha * theta * (1.0 + p.sigma * theta);
    const int k = G.arity();
    std::vector<double> mg(k);
    for (int i = 0; i < k; ++i) mg[i] = at * integrate(G.factors[i]);
    long double s = 0.0L;
    if (mob == 0.0) return 0.0;
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            long double term = mob * integrate_gradient_dot(G.factors[i], G.factors[j]);
            for (int a = 0; a < k; ++a)
                if (a != i) term *= mg[a];
            for (int b = 0; b < k; ++b)
                if (b != j) term *= mg[b];
            s += term;
        }
    return static_cast<double>(2.0L * p.bond_rate * s);
}

double stationary_cov_finiteN(const ProductTestFunction& G, const ProductTestFunction& H, const ModelParams& p,
                              double theta) {
    validate_theta(p.sigma, p.alpha, theta);
    const bool swap = H.arity() > G.arity();
    const ProductTestFunction& A = swap ? H : G;
    const ProductTestFunction& B = swap ? G : H;
    if (A.arity() > 3) throw DomainError("stationary_cov_finiteN supports k <= 3");
    const long double vol = std::pow(static_cast<long double>(p.N), p.d);
    long double s = 0.0L;
    for (int h = 1; h <= B.arity(); ++h) {
        const long double weight = 1.0L - std::pow(-static_cast<long double>(p.sigma) * theta, h);
        if (weight == 0.0L) continue;
        const long double e = equilibrium_field_mean(coincidence_expansion(A, B, h), p, theta);
        s += weight * e / std::pow(vol, h);
    }
    return static_cast<double>(vol * s);
}

ExpectationCheck check_expectation_expansion(const ProductTestFunction& G, const ProductTestFunction& H,
                                             const ModelParams& p, double theta) {
    validate_theta(p.sigma, p.alpha, theta);
    const bool swap = H.arity() > G.arity();
    const ProductTestFunction& A = swap ? H : G;
    const ProductTestFunction& B = swap ? G : H;
    const int k = A.arity(), l = B.arity();
    const Torus T = p.torus();
    const std::size_t S = T.num_sites();
    const long double vol = static_cast<long double>(S);
    if (std::pow(vol, k + l) > 5e7L) throw DomainError("torus sums too large for direct evaluation");
    std::vector<std::vector<double>> at(k), bt(l);
    for (int i = 0; i < k; ++i) at[i] = tabulate(*A.factors[i], T);
    for (int j = 0; j < l; ++j) bt[j] = tabulate(*B.factors[j], T);

    auto tuples = [&](int len, const std::function<void(const LabeledTuple&)>& fn) {
        LabeledTuple x(len, Site{0});
        std::size_t total = 1;
        for (int i = 0; i < len; ++i) total *= S;
        for (std::size_t c = 0; c < total; ++c) {
            std::size_t r = c;
            for (int i = 0; i < len; ++i) {
                x[i] = Site{static_cast<std::uint32_t>(r % S)};
                r /= S;
            }
            fn(x);
        }
    };
    auto mean_field = [&](const std::vector<std::vector<double>>& tab, int len) {
        long double s = 0.0L;
        tuples(len, [&](const LabeledTuple& x) {
            long double v = std::pow(static_cast<long double>(theta), len) * pi_weight(x, p.sigma, p.alpha);
            for (int i = 0; i < len; ++i) v *= tab[i][x[i].id];
            s += v;
        });
        return s / std::pow(vol, len);
    };
    ExpectationCheck out;
    const long double lhs = mean_field(at, k) * mean_field(bt, l);
    long double rhs = 0.0L;
    for (int h = 0; h <= l; ++h) {
        const long double pref = std::pow(static_cast<long double>(theta) * -p.sigma, h);
        if (pref == 0.0L) continue;
        long double s = 0.0L;
        for (std::uint32_t J = 0; J < (1u << l); ++J) {
            if (std::popcount(J) != h) continue;
            std::vector<int> js, fr;
            for (int j = 0; j < l; ++j) (J >> j & 1 ? js : fr).push_back(j);
            std::vector<int> tg(h);
            std::function<void(int, std::uint32_t)> rec = [&](int pos, std::uint32_t used) {
                if (pos == h) {
                    const int len = k + static_cast<int>(fr.size());
                    tuples(len, [&](const LabeledTuple& xy) {
                        long double v = std::pow(static_cast<long double>(theta), len) * pi_weight(xy, p.sigma, p.alpha);
                        if (v == 0.0L) return;
                        for (int m = 0; m < k; ++m) v *= at[m][xy[m].id];
                        for (int q = 0; q < h; ++q) v *= bt[js[q]][xy[tg[q]].id];
                        for (std::size_t q = 0; q < fr.size(); ++q) v *= bt[fr[q]][xy[k + q].id];
                        s += v;
                    });
                    return;
                }
                for (int m = 0; m < k; ++m) {
                    if (used >> m & 1) continue;
                    tg[pos] = m;
                    rec(pos + 1, used | (1u << m));
                }
            };
            rec(0, 0);
        }
        rhs += pref * s / std::pow(vol, k + l - h) / std::pow(vol, h);
    }
    out.lhs = static_cast<double>(lhs);
    out.rhs = static_cast<double>(rhs);
    out.residual = static_cast<double>(lhs - rhs);
    return out;
}

std::vector<double> discrete_heat_density(const ProfileSpec& theta0, double t, const ModelParams& p) {
    const Torus T = p.torus();
    const std::size_t n = T.num_sites();
    const auto th = theta0.values(T);
    std::vector<cd> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = p.alpha * th[i];
    std::vector<int> dims(p.d, p.N);
    fftw_plan fwd, bwd;
    {
        std::lock_guard<std::mutex> lk(fftw_mutex());
        auto* b = reinterpret_cast<fftw_complex*>(buf.data());
        fwd = fftw_plan_dft(p.d, dims.data(), b, b, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft(p.d, dims.data(), b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    const double rate = p.time_scale() * p.alpha;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = i;
        double lam = 0.0;
        for (int j = 0; j < p.d; ++j) {
            const std::size_t k = r % p.N;
            r /= p.N;
            lam += 2.0 * std::cos(kTwoPi * static_cast<double>(k) / p.N) - 2.0;
        }
        buf[i] *= std::exp(rate * lam * t) / static_cast<double>(n);
    }
    fftw_execute(bwd);
    {
        std::lock_guard<std::mutex> lk(fftw_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
    return out;
}

double finite_N_first_order_mean(const FactorPtr& g, double t, const ProfileSpec& theta0, const ModelParams& p) {
    const Torus T = p.torus();
    const auto rho = discrete_heat_density(theta0, t, p);
    const auto tab = tabulate(*g, T);
    long double s = 0.0L;
    for (std::size_t i = 0; i < rho.size(); ++i) s += static_cast<long double>(rho[i]) * tab[i];
    return static_cast<double>(s / rho.size());
}

}  // namespace fieldslab
