#include "fieldslab/dual.hpp"

#include <cmath>
#include <random>

#include "fieldslab/dynamics.hpp"
#include "fieldslab/fields.hpp"
#include "fieldslab/parallel.hpp"
#include "fieldslab/rng.hpp"

namespace fieldslab {

double pi_weight(const LabeledTuple& x, int sigma, int alpha) {
    double v = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        int c = 0;
        for (std::size_t i = 0; i < j; ++i) c += (x[i] == x[j]);
        const double f = alpha + sigma * c;
        if (f <= 0.0) return 0.0;
        v *= f;
    }
    return v;
}

double duality_fn(const LabeledTuple& x, const Configuration& eta, int sigma, int alpha) {
    const double pi = pi_weight(x, sigma, alpha);
    if (pi == 0.0) throw DomainError("duality function undefined on the excluded set");
    return falling_factorial_joint(eta, x) / pi;
}

std::vector<DualMove> dual_jump_rates(const LabeledTuple& x, const ModelParams& p) {
    if (!is_admissible(x, p.sigma, p.alpha)) throw DomainError("dual state is not admissible");
    const Torus T = p.torus();
    const double scale = p.time_scale();
    std::vector<DualMove> moves;
    moves.reserve(x.size() * T.degree());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (Site y : T.neighbors(x[i])) {
            int c = 0;
            for (std::size_t j = 0; j < x.size(); ++j) c += (j != i && x[j] == y);
            const double r = scale * (p.alpha + p.sigma * c);
            moves.push_back({static_cast<int>(i), y, r > 0.0 ? r : 0.0});
        }
    }
    return moves;
}

LabeledTuple simulate_dual(const LabeledTuple& x0, double t, const ModelParams& p, std::uint64_t seed,
                           std::uint64_t stream) {
    if (!is_admissible(x0, p.sigma, p.alpha)) throw DomainError("dual state is not admissible");
    const Torus T = p.torus();
    Philox base(seed, stream);
    Simulator sim(p, tuple_counts(x0, T.num_sites()), base.split(substream::dynamics));
    Philox label_rng = base.split(substream::labels);
    LabeledTuple x = x0;
    std::vector<std::size_t> here;
    sim.run_until(t, [&](const Event& ev) {
        // Given a jump z -> w every label at z is equally likely to be the mover.
        here.clear();
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] == ev.from) here.push_back(i);
        std::uniform_int_distribution<std::size_t> pick(0, here.size() - 1);
        x[here[pick(label_rng)]] = ev.to;
    });
    return x;
}

DualExpectation dual_semigroup_expect(const LabeledTuple& x0, const DualObservable& f, double t,
                                      const ModelParams& p, const DualOptions& opts) {
    if (t < 0.0) throw DomainError("negative time");
    if (!is_admissible(x0, p.sigma, p.alpha)) throw DomainError("dual state is not admissible");
    if (t == 0.0) return {f(x0), 0.0, 0};
    if (opts.method == DualMethod::uniformization) {
        const Torus T = p.torus();
        ExactOptions eo;
        eo.state_cap = opts.state_cap;
        const DualGenerator g = build_dual_generator(T, static_cast<int>(x0.size()), p, eo);
        std::vector<double> fv(g.tuples.size());
        for (std::size_t i = 0; i < fv.size(); ++i) fv[i] = f(g.tuples[i]);
        return {evolve_exact(g.Q, g.find(x0, T), fv, t, opts.tol), 0.0, 0};
    }
    if (opts.samples < 2) throw DomainError("Monte Carlo needs at least two samples");
    std::vector<double> vals(opts.samples);
    parallel_for(opts.samples, opts.threads,
                 [&](std::size_t m) { vals[m] = f(simulate_dual(x0, t, p, opts.seed, m)); });
    long double s = 0.0L;
    for (double v : vals) s += v;
    const long double mean = s / vals.size();
    long double ss = 0.0L;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double var = static_cast<double>(ss / (vals.size() - 1));
    return {static_cast<double>(mean), std::sqrt(var / vals.size()), opts.samples};
}

DualExpectation expected_factorial_moment(const Configuration& eta0, const LabeledTuple& x, double t,
                                          const ModelParams& p, const DualOptions& opts) {
    const double pi = pi_weight(x, p.sigma, p.alpha);
    if (pi == 0.0) throw DomainError("pi(x) = 0");
    auto D = [&](const LabeledTuple& y) { return duality_fn(y, eta0, p.sigma, p.alpha); };
    if (t == 0.0) return {falling_factorial_joint(eta0, x), 0.0, 0};
    DualExpectation e = dual_semigroup_expect(x, D, t, p, opts);
    e.value *= pi;
    e.std_error *= pi;
    return e;
}

}  // namespace fieldslab
