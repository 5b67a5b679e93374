#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "fieldslab/dual.hpp"
#include "fieldslab/dynamics.hpp"
#include "fieldslab/exact.hpp"
#include "fieldslab/fields.hpp"
#include "fieldslab/measures.hpp"

using namespace fieldslab;

namespace {

LabeledTuple tup(std::initializer_list<std::uint32_t> ids) {
    LabeledTuple x;
    for (auto i : ids) x.push_back(Site{i});
    return x;
}

std::vector<LabeledTuple> all_tuples(std::size_t nsites, int k) {
    std::vector<LabeledTuple> out{{}};
    for (int j = 0; j < k; ++j) {
        std::vector<LabeledTuple> next;
        for (const auto& x : out)
            for (std::uint32_t s = 0; s < nsites; ++s) {
                auto y = x;
                y.push_back(Site{s});
                next.push_back(y);
            }
        out = std::move(next);
    }
    return out;
}

double rate_to(const std::vector<DualMove>& mv, int label, std::uint32_t target) {
    double r = 0.0;
    for (const auto& m : mv)
        if (m.label == label && m.target.id == target) r += m.rate;
    return r;
}

}  // namespace

TEST_SUITE("dual") {
TEST_CASE("pi weight examples") {
    CHECK(pi_weight(tup({0, 3, 0}), 0, 2) == 8.0);
    CHECK(pi_weight(tup({1, 1}), 1, 1) == 2.0);
    CHECK(pi_weight(tup({1, 1}), -1, 1) == 0.0);
    CHECK(pi_weight(tup({1, 1, 1}), 1, 2) == 2.0 * 3.0 * 4.0);
    CHECK(pi_weight(tup({1, 1, 1}), -1, 2) == 0.0);
    CHECK(pi_weight(tup({1, 2, 1, 2}), -1, 2) == 4.0);
    CHECK(pi_weight({}, 1, 3) == 1.0);
    // permutation invariance, exhaustively for k <= 3
    bool ok = true;
    for (int s : {-1, 0, 1})
        for (int k = 1; k <= 3; ++k)
            for (auto x : all_tuples(3, k)) {
                const double w = pi_weight(x, s, 2);
                std::sort(x.begin(), x.end());
                do ok = ok && pi_weight(x, s, 2) == w;
                while (std::next_permutation(x.begin(), x.end()));
            }
    CHECK(ok);
}

TEST_CASE("duality function") {
    const Configuration eta({3, 0, 2});
    CHECK(duality_fn(tup({0}), eta, 1, 2) == 1.5);
    CHECK(duality_fn(tup({2}), eta, -1, 2) == 1.0);
    CHECK(duality_fn(tup({0, 0}), eta, 1, 1) == 3.0);
    CHECK(duality_fn(tup({2, 2}), eta, -1, 2) == 1.0);
    CHECK_THROWS_AS(duality_fn(tup({0, 0}), eta, -1, 1), DomainError);
    bool ok = true;
    for (int s : {-1, 0, 1})
        for (int k = 1; k <= 3; ++k)
            for (auto x : all_tuples(3, k)) {
                if (pi_weight(x, s, 2) == 0.0) continue;
                const double v = duality_fn(x, eta, s, 2);
                std::sort(x.begin(), x.end());
                do ok = ok && duality_fn(x, eta, s, 2) == v;
                while (std::next_permutation(x.begin(), x.end()));
            }
    CHECK(ok);
}

TEST_CASE("dual rates") {
    const int N = 5;
    for (int s : {-1, 0, 1}) {
        ModelParams p{s, 1, 1, N, 1.0};
        const auto mv = dual_jump_rates(tup({2}), p);
        CHECK(rate_to(mv, 0, 1) == N * N);
        CHECK(rate_to(mv, 0, 3) == N * N);
    }
    CHECK(rate_to(dual_jump_rates(tup({0, 1}), ModelParams{-1, 1, 1, N, 1.0}), 0, 1) == 0.0);
    CHECK(rate_to(dual_jump_rates(tup({0, 1}), ModelParams{1, 1, 1, N, 1.0}), 0, 1) == 2.0 * N * N);
    CHECK(rate_to(dual_jump_rates(tup({0, 1}), ModelParams{1, 1, 1, N, 1.0}), 0, 4) == 1.0 * N * N);
    CHECK_THROWS_AS(dual_jump_rates(tup({0, 0}), ModelParams{-1, 1, 1, N, 1.0}), DomainError);
    for (const auto& m : dual_jump_rates(tup({0, 1, 1}), ModelParams{-1, 2, 1, N, 1.0})) CHECK(m.rate >= 0.0);
}

TEST_CASE("semigroup basics") {
    ModelParams p{1, 1, 1, 4, 0.5};
    const auto x0 = tup({0, 2});
    const auto f = [](const LabeledTuple& x) { return 1.0 + x[0].id + 10.0 * x[1].id; };
    CHECK(dual_semigroup_expect(x0, f, 0.0, p).value == 21.0);
    CHECK(dual_semigroup_expect(x0, [](const LabeledTuple&) { return 1.0; }, 0.3, p).value ==
          doctest::Approx(1.0).epsilon(1e-12));
    DualOptions mc;
    mc.method = DualMethod::montecarlo;
    mc.samples = 200;
    const auto one = dual_semigroup_expect(x0, [](const LabeledTuple&) { return 1.0; }, 0.3, p, mc);
    CHECK(one.value == 1.0);
    CHECK(one.std_error == 0.0);
    CHECK_THROWS_AS(dual_semigroup_expect(x0, f, -1.0, p), DomainError);
    DualOptions tiny;
    tiny.state_cap = 10;
    CHECK_THROWS_AS(dual_semigroup_expect(x0, f, 0.1, p, tiny), CapExceeded);
}

TEST_CASE("semigroup against a dense matrix exponential") {
    const int N = 4;
    const double t = 0.01;
    for (int s : {-1, 0, 1}) {
        ModelParams p{s, 1, 1, N, 0.5};
        // one dual particle is a simple walk with rate time_scale * alpha per bond
        Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N);
        for (int i = 0; i < N; ++i) {
            Q(i, (i + 1) % N) += p.time_scale();
            Q(i, (i + N - 1) % N) += p.time_scale();
            Q(i, i) -= 2 * p.time_scale();
        }
        const Eigen::MatrixXd P = (Q * t).exp();
        for (std::uint32_t x0 = 0; x0 < N; ++x0) {
            const auto v =
                dual_semigroup_expect(tup({x0}), [&](const LabeledTuple& x) { return x[0].id == x0 ? 1.0 : 0.0; }, t, p);
            CHECK(std::abs(v.value - P(x0, x0)) < 1e-10);
        }
    }
}

TEST_CASE("factorial moments") {
    ModelParams p{1, 1, 1, 4, 0.5};
    const Configuration eta0({2, 0, 0, 0});
    CHECK(expected_factorial_moment(eta0, tup({0, 0}), 0.0, p).value == 2.0);
    CHECK_THROWS_AS(expected_factorial_moment(eta0, tup({0, 0}), 0.1, ModelParams{-1, 1, 1, 4, 0.5}), DomainError);

    // flat profile is preserved
    const Configuration flat({3, 3, 3, 3});
    for (double t : {0.01, 0.2}) CHECK(expected_factorial_moment(flat, tup({1}), t, ModelParams{0, 2, 1, 4}).value ==
                                       doctest::Approx(3.0).epsilon(1e-12));

    // against full configuration-space uniformization
    const auto cg = build_config_generator(p.torus(), 2, p);
    std::vector<double> f(cg.states.size());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = cg.states.state(j)[1];
    const double exact = evolve_exact(cg.Q, cg.states.find(eta0.occupancy()), f, 0.05);
    CHECK(std::abs(expected_factorial_moment(eta0, tup({1}), 0.05, p).value - exact) < 1e-10);
}

TEST_CASE("semigroup duality on every small instance") {
    const double t = 0.05;
    double worst = 0.0;
    for (int s : {-1, 0, 1})
        for (int a : {1, 2}) {
            ModelParams p{s, a, 1, 4, 0.5};
            const Torus T = p.torus();
            for (int n = 0; n <= 3; ++n) {
                const auto cg = build_config_generator(T, n, p);
                for (int k = 1; k <= 2; ++k)
                    for (const auto& x : all_tuples(4, k)) {
                        if (pi_weight(x, s, a) == 0.0) continue;
                        std::vector<double> f(cg.states.size());
                        for (std::size_t j = 0; j < f.size(); ++j)
                            f[j] = falling_factorial_joint(Configuration(cg.states.state(j)), x);
                        for (std::size_t i = 0; i < cg.states.size(); ++i) {
                            const Configuration eta0(cg.states.state(i));
                            const double lhs = evolve_exact(cg.Q, i, f, t);
                            const double rhs = expected_factorial_moment(eta0, x, t, p).value;
                            worst = std::max(worst, std::abs(lhs - rhs));
                        }
                    }
            }
        }
    INFO("worst=" << worst);
    CHECK(worst < 1e-10);
}

TEST_CASE("labeled Monte Carlo matches the dual generator") {
    ModelParams p{1, 1, 1, 4, 0.5};
    const Torus T = p.torus();
    const auto g = build_dual_generator(T, 2, p);
    const auto x0 = tup({0, 1});
    const double t = 0.02;
    const std::size_t i0 = g.find(x0, T);
    const int M = 20000;
    std::vector<double> count(g.tuples.size(), 0.0);
    for (int m = 0; m < M; ++m) count[g.find(simulate_dual(x0, t, p, 11, m), T)] += 1;
    double chi2 = 0.0;
    int df = -1;
    for (std::size_t j = 0; j < g.tuples.size(); ++j) {
        std::vector<double> f(g.tuples.size(), 0.0);
        f[j] = 1.0;
        const double pj = evolve_exact(g.Q, i0, f, t);
        if (pj * M < 5) continue;
        chi2 += std::pow(count[j] - M * pj, 2) / (M * pj);
        ++df;
    }
    // loose bound, roughly the 99.99% chi-square quantile
    INFO("chi2=" << chi2 << " df=" << df);
    CHECK(chi2 < df + 6.0 * std::sqrt(2.0 * df) + 10.0);
}

TEST_CASE("Monte Carlo dual agrees with uniformization") {
    for (int s : {-1, 0, 1}) {
        ModelParams p{s, 2, 1, 6, 0.5};
        const Configuration eta0({3, 1, 0, 2, 0, 1});
        const auto x = tup({1, 1});
        DualOptions mc;
        mc.method = DualMethod::montecarlo;
        mc.samples = 10000;
        mc.seed = 5;
        const auto a = expected_factorial_moment(eta0, x, 0.03, p, mc);
        const auto b = expected_factorial_moment(eta0, x, 0.03, p);
        INFO("sigma=" << s << " mc=" << a.value << "+-" << a.std_error << " exact=" << b.value);
        CHECK(std::abs(a.value - b.value) < 4 * a.std_error);
        mc.threads = 3;
        CHECK(expected_factorial_moment(eta0, x, 0.03, p, mc).value == a.value);
    }
}

TEST_CASE("stationary factorial moments") {
    const double theta = 0.5, t = 0.02;
    for (int s : {-1, 0, 1}) {
        ModelParams p{s, 2, 1, 8, 0.5};
        const auto x = tup({3, 3});
        const int M = 10000;
        double sum = 0, sum2 = 0;
        for (int m = 0; m < M; ++m) {
            Philox r(13, m);
            const auto eta0 = sample_configuration(MarginalSpec{s, 2, theta}, p.torus(), r);
            const auto eta = simulate(eta0, t, p, r.split(substream::dynamics)).terminal;
            const double v = falling_factorial_joint(eta, x);
            sum += v;
            sum2 += v * v;
        }
        const double mean = sum / M, se = std::sqrt((sum2 / M - mean * mean) / M);
        const double target = theta * theta * pi_weight(x, s, 2);
        INFO("sigma=" << s << " mean=" << mean << " se=" << se << " target=" << target);
        CHECK(std::abs(mean - target) < 4 * se);
    }
}
}
