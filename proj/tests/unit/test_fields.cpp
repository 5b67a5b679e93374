#include <doctest.h>

#include <cmath>

#include "fieldslab/dynamics.hpp"
#include "fieldslab/fields.hpp"
#include "fieldslab/measures.hpp"
#include "fieldslab/rng.hpp"
#include "fieldslab/theory.hpp"

using namespace fieldslab;

namespace {

Configuration random_config(const Torus& T, int particles, int sigma, int alpha, Philox& r) {
    Configuration eta(T.num_sites());
    int placed = 0;
    while (placed < particles) {
        const Site s{static_cast<std::uint32_t>(r() % T.num_sites())};
        if (sigma == -1 && eta[s] >= static_cast<std::uint32_t>(alpha)) continue;
        eta.add(s);
        ++placed;
    }
    return eta;
}

std::vector<FactorPtr> pool() {
    return {make_bump(1, {0.2}, 0.15), make_sin(1, {1}), make_cos(1, {2}, 1.0, 0.4), make_hermite(1, {1}, {0.6}, 0.2),
            make_bump(1, {0.7}, 0.1, 2.0)};
}

ProductTestFunction take(int first, int k) {
    const auto p = pool();
    ProductTestFunction G;
    for (int i = 0; i < k; ++i) G.factors.push_back(p[(first + i) % p.size()]);
    return G;
}

double relerr(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_SUITE("fields") {
TEST_CASE("joint falling factorial") {
    const Configuration eta({3, 2, 0});
    CHECK(falling_factorial_joint(eta, {Site{0}, Site{0}}) == 6.0);
    CHECK(falling_factorial_joint(eta, {Site{0}, Site{1}}) == 6.0);
    CHECK(falling_factorial_joint(Configuration({2}), {Site{0}, Site{0}, Site{0}}) == 0.0);
    CHECK(falling_factorial_joint(eta, {Site{2}}) == 0.0);
    CHECK(falling_factorial_joint(eta, {Site{0}, Site{1}, Site{0}}) == 12.0);
    CHECK(falling_factorial_joint(eta, {Site{1}, Site{0}, Site{0}}) == 12.0);
    CHECK(falling_factorial_joint(eta, {}) == 1.0);
}

TEST_CASE("field examples, brute force and fast") {
    Torus T2(1, 2);
    const auto one = make_constant(1, 1.0);
    const Configuration e11({1, 1});
    CHECK(eval_field_bruteforce(ProductTestFunction{one, one}, e11, T2) == doctest::Approx(0.5));
    CHECK(eval_field(ProductTestFunction{one, one}, e11, T2) == doctest::Approx(0.5));

    Torus T(1, 7);
    const Configuration eta({0, 2, 1, 0, 4, 0, 1});
    const auto g = make_bump(1, {0.3}, 0.2);
    double direct = 0.0;
    const auto tab = tabulate(*g, T);
    for (int x = 0; x < 7; ++x) direct += tab[x] * eta.at(x);
    CHECK(eval_field_bruteforce(ProductTestFunction{g}, eta, T) == doctest::Approx(direct / 7).epsilon(1e-14));
    CHECK(eval_field(ProductTestFunction{g}, eta, T) == doctest::Approx(direct / 7).epsilon(1e-14));

    const Configuration empty(7);
    for (int k = 1; k <= 3; ++k) {
        CHECK(eval_field_bruteforce(take(0, k), empty, T) == 0.0);
        CHECK(eval_field(take(0, k), empty, T) == 0.0);
    }
    Configuration single(7);
    single.add(Site{3});
    CHECK(std::abs(eval_field(ProductTestFunction{g, g}, single, T)) < 1e-17);
    CHECK(eval_field_bruteforce(ProductTestFunction{g, g}, single, T) == 0.0);
}

TEST_CASE("fast field equals the brute-force oracle") {
    Philox r(5);
    Torus T6(1, 6);
    const ProductTestFunction bumps{make_bump(1, {0.1}, 0.1), make_bump(1, {0.5}, 0.2), make_bump(1, {0.8}, 0.15)};
    for (int rep = 0; rep < 10; ++rep) {
        const auto eta = random_config(T6, 5, 0, 1, r);
        CHECK(relerr(eval_field(bumps, eta, T6), eval_field_bruteforce(bumps, eta, T6)) < 1e-10);
    }
    for (int s : {-1, 0, 1})
        for (int a : {1, 2})
            for (int k = 1; k <= 3; ++k)
                for (int N : {2, 4, 6}) {
                    Torus T(1, N);
                    const auto G = take(k, k);
                    for (int rep = 0; rep < 5; ++rep) {
                        const int n = static_cast<int>(r() % (s == -1 ? a * N + 1 : 3 * N));
                        const auto eta = random_config(T, n, s, a, r);
                        CHECK(relerr(eval_field(G, eta, T), eval_field_bruteforce(G, eta, T)) < 1e-10);
                    }
                }
    // d = 2
    Torus T2(2, 3);
    const ProductTestFunction G2{make_sin(2, {1, 1}), make_bump(2, {0.5, 0.5}, 0.3)};
    const auto eta2 = random_config(T2, 8, 1, 1, r);
    CHECK(relerr(eval_field(G2, eta2, T2), eval_field_bruteforce(G2, eta2, T2)) < 1e-10);
}

TEST_CASE("brute force refuses oversize sums") {
    Torus T(1, 400);
    CHECK_THROWS_AS(eval_field_bruteforce(take(0, 3), Configuration(400), T), DomainError);
}

TEST_CASE("field is invariant under factor permutation") {
    Philox r(8);
    Torus T(1, 9);
    const auto eta = random_config(T, 12, 1, 1, r);
    const auto p = pool();
    const double v = eval_field(ProductTestFunction{p[0], p[1], p[2]}, eta, T);
    CHECK(eval_field(ProductTestFunction{p[2], p[0], p[1]}, eta, T) == doctest::Approx(v).epsilon(1e-12));
    CHECK(eval_field(ProductTestFunction{p[1], p[2], p[0]}, eta, T) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("incremental deltas") {
    Philox r(9);
    Torus T(1, 8);
    const auto c = make_constant(1, 2.0);
    const auto g = make_sin(1, {1});
    auto eta = random_config(T, 6, 0, 1, r);
    FieldState st(T, eta);
    const int hc = st.add(ProductTestFunction{c});
    const int hg = st.add(ProductTestFunction{g});
    const int h2 = st.add(take(0, 2));
    const int h3 = st.add(take(1, 3));
    for (int step = 0; step < 200; ++step) {
        Site z{static_cast<std::uint32_t>(r() % 8)};
        if (st.config()[z] == 0) continue;
        const auto nb = T.neighbors(z);
        const Site w = nb[r() % nb.size()];
        CHECK(std::abs(field_delta_on_move(st, hc, z, w)) < 1e-15);
        const double expect = (g->value(T.position(w)) - g->value(T.position(z))) / 8;
        CHECK(field_delta_on_move(st, hg, z, w) == doctest::Approx(expect).epsilon(1e-12));

        auto moved = st.config();
        moved.move(z, w);
        const double b2 = eval_field_bruteforce(take(0, 2), moved, T) - eval_field_bruteforce(take(0, 2), st.config(), T);
        const double b3 = eval_field_bruteforce(take(1, 3), moved, T) - eval_field_bruteforce(take(1, 3), st.config(), T);
        CHECK(std::abs(field_delta_on_move(st, h2, z, w) - b2) < 1e-12);
        CHECK(std::abs(st.delta(h3, z, w) - b3) < 1e-12);
        field_delta_on_move(st, hg, z, w, true);
        CHECK(st.config() == moved);
    }
    CHECK(st.resync() < 1e-12);
    CHECK(st.value(h3) == doctest::Approx(eval_field_bruteforce(take(1, 3), st.config(), T)).epsilon(1e-11));
    Configuration e(8);
    e.add(Site{1});
    FieldState s2(T, e);
    const int hh = s2.add(ProductTestFunction{g});
    CHECK_THROWS_AS(field_delta_on_move(s2, hh, Site{0}, Site{1}), DomainError);
}

TEST_CASE("coincidence terms") {
    Philox r(12);
    Torus T(1, 5);
    const auto eta = random_config(T, 6, 1, 2, r);
    const auto G = take(0, 2), H = take(2, 1);
    CHECK(eval_coincidence_term(G, H, 0, eta, T) ==
          doctest::Approx(eval_field_bruteforce(tensor(G, H), eta, T)).epsilon(1e-12));
    const auto g = pool()[0], h = pool()[2];
    const auto tg = tabulate(*g, T), th = tabulate(*h, T);
    double direct = 0.0;
    for (int x = 0; x < 5; ++x) direct += tg[x] * th[x] * eta.at(x);
    CHECK(eval_coincidence_term(ProductTestFunction{g}, ProductTestFunction{h}, 1, eta, T) ==
          doctest::Approx(direct / 5).epsilon(1e-12));
    for (int k = 1; k <= 3; ++k)
        for (int l = 1; l <= k; ++l)
            for (int hh = 0; hh <= l; ++hh) {
                const auto A = take(0, k), B = take(3, l);
                CHECK(relerr(eval_coincidence_term_fast(A, B, hh, eta, T), eval_coincidence_term(A, B, hh, eta, T)) <
                      1e-11);
            }
    CHECK_THROWS_AS(eval_coincidence_term(take(0, 1), take(0, 2), 1, eta, T), DomainError);
}

TEST_CASE("product expansion identity") {
    Torus T4(1, 4);
    const auto one = make_constant(1, 1.0);
    const auto r0 = check_product_expansion(ProductTestFunction{one}, ProductTestFunction{one}, Configuration(4), T4);
    CHECK(r0.lhs == 0.0);
    CHECK(r0.rhs == 0.0);
    const auto r1 =
        check_product_expansion(ProductTestFunction{one}, ProductTestFunction{one}, Configuration({2, 1, 0, 0}), T4);
    CHECK(r1.lhs == doctest::Approx(0.5625));
    CHECK(r1.rhs == doctest::Approx(0.5625));
    Philox r(13);
    for (int rep = 0; rep < 20; ++rep) {
        const auto eta = random_config(T4, static_cast<int>(r() % 5), 0, 1, r);
        const auto res = check_product_expansion(take(0, 2), take(2, 1), eta, T4);
        CHECK(std::abs(res.residual) < 1e-10 * (1 + std::abs(res.lhs)));
    }
}

TEST_CASE("fluctuation field Y") {
    ModelParams p{0, 1, 1, 16, 0.5};
    const Torus T = p.torus();
    const auto one = make_constant(1, 1.0);
    Philox r(21);
    const auto eta = random_config(T, 11, 0, 1, r);
    CHECK(fluctuation_field_Y(ProductTestFunction{one}, eta, p, 0.5) ==
          doctest::Approx(4.0 * (11.0 / 16 - 0.5)).epsilon(1e-12));
    const auto flat = random_config(T, 8, 0, 1, r);
    CHECK(std::abs(fluctuation_field_Y(ProductTestFunction{one}, flat, p, 0.5)) < 1e-12);

    // centring under mu_theta, k = 2
    for (int s : {-1, 0, 1}) {
        ModelParams q{s, 2, 1, 12, 0.5};
        const auto G = take(0, 2);
        const int M = 4000;
        double sum = 0, sum2 = 0;
        for (int m = 0; m < M; ++m) {
            const auto e = sample_configuration(MarginalSpec{s, 2, 0.4}, q.torus(), Philox(31, m));
            const double y = fluctuation_field_Y(G, e, q, 0.4);
            sum += y;
            sum2 += y * y;
        }
        const double mean = sum / M, sd = std::sqrt(sum2 / M - mean * mean);
        CHECK(std::abs(mean) < 4 * sd / std::sqrt(M));
    }
}

TEST_CASE("Y variance for a bump pair at N=128") {
    ModelParams p{0, 1, 1, 128, 0.5};
    const auto b = make_bump(1, {0.5}, 0.2);
    const ProductTestFunction G{b, b};
    const long double mean = equilibrium_field_mean(G, p, 0.5);
    const int M = 1000;
    std::vector<double> ys(M);
    for (int m = 0; m < M; ++m) {
        FieldState st(p, sample_configuration(MarginalSpec{0, 1, 0.5}, p.torus(), Philox(77, m)));
        const int h = st.add(G);
        ys[m] = fluctuation_field_Y(st, h, mean, p);
    }
    double s = 0, s2 = 0, s4 = 0;
    for (double y : ys) s += y;
    const double mu = s / M;
    for (double y : ys) {
        s2 += (y - mu) * (y - mu);
        s4 += std::pow(y - mu, 4);
    }
    const double var = s2 / (M - 1), m2 = s2 / M, m4 = s4 / M;
    const double se = std::sqrt((m4 - m2 * m2 * (M - 3.0) / (M - 1)) / M);
    const double target = equilibrium_covariance(G, G, p, 0.5);
    INFO("var=" << var << " se=" << se << " target=" << target);
    CHECK(std::abs(var - target) < 3 * se);
}

TEST_CASE("fluctuation field Z") {
    ModelParams p{1, 2, 1, 10, 0.5};
    Philox r(41);
    const auto g = pool()[0];
    for (int rep = 0; rep < 10; ++rep) {
        const auto eta = random_config(p.torus(), 9, 1, 2, r);
        CHECK(fluctuation_field_Z(ProductTestFunction{g}, eta, p, 0.6) ==
              doctest::Approx(fluctuation_field_Y(ProductTestFunction{g}, eta, p, 0.6)).epsilon(1e-12));
        const auto G = take(0, 2);
        const double z0 = fluctuation_field_Z(G, eta, p, 0.0);
        const double sym = 0.5 * (eval_field(G, eta, p.torus()) + eval_field(take(0, 2), eta, p.torus()));
        CHECK(z0 == doctest::Approx(10.0 * sym).epsilon(1e-12));
    }
    CHECK_THROWS_AS(fluctuation_field_Z(take(0, 3), Configuration(10), p, 0.5), DomainError);

    for (int s : {-1, 0, 1}) {
        ModelParams q{s, 1, 1, 16, 0.5};
        const auto G = take(1, 2);
        const int M = 10000;
        double sum = 0, sum2 = 0;
        for (int m = 0; m < M; ++m) {
            const auto e = sample_configuration(MarginalSpec{s, 1, 0.45}, q.torus(), Philox(51, m));
            const double z = fluctuation_field_Z(G, e, q, 0.45);
            sum += z;
            sum2 += z * z;
        }
        const double mean = sum / M, sd = std::sqrt(sum2 / M - mean * mean);
        INFO("sigma=" << s << " mean=" << mean << " sd=" << sd);
        CHECK(std::abs(mean) < 4 * sd / std::sqrt(M));
    }
}

TEST_CASE("carre du champ") {
    ModelParams p{0, 1, 1, 12, 1.0};
    const Torus T = p.torus();
    Philox r(61);
    const auto eta = random_config(T, 7, 0, 1, r);
    CHECK(carre_du_champ(ProductTestFunction{make_constant(1, 3.0)}, eta, p) == 0.0);
    const auto g = make_bump(1, {0.1}, 0.15);
    Configuration single(12);
    single.add(Site{0});
    const double N = 12;
    const auto val = [&](double x) { return g->value(std::vector<double>{x / N}); };
    const double expect = N * N / (N * N) * (std::pow(val(1) - val(0), 2) + std::pow(val(-1) - val(0), 2));
    CHECK(carre_du_champ(ProductTestFunction{g}, single, p) == doctest::Approx(expect).epsilon(1e-12));

    // frozen exclusion: no move changes anything
    ModelParams q{-1, 1, 1, 6, 0.5};
    const Configuration full({1, 1, 1, 1, 1, 1});
    CHECK(carre_du_champ(take(0, 2), full, q) == 0.0);

    // state and function overloads agree, and Gamma >= 0
    for (int s : {-1, 0, 1}) {
        ModelParams m{s, 2, 1, 9, 0.5};
        const auto e = random_config(m.torus(), 10, s, 2, r);
        FieldState st(m, e);
        const int h = st.add(take(0, 2));
        const double a = carre_du_champ(take(0, 2), e, m), b = carre_du_champ(st, h, m);
        CHECK(a >= 0.0);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("symmetrization") {
    const auto p = pool();
    const ProductTestFunction GH{p[0], p[1]};
    const auto S = symmetrize(TestFunctionSum(GH));
    REQUIRE(S.terms.size() == 2);
    for (const auto& t : S.terms) CHECK(t.coef == doctest::Approx(0.5));
    Torus T(1, 6);
    for (std::uint32_t a = 0; a < 6; ++a)
        for (std::uint32_t b = 0; b < 6; ++b) {
            const LabeledTuple x{Site{a}, Site{b}};
            CHECK(S.value_at(x, T) == doctest::Approx(0.5 * (GH.value_at(x, T) + GH.value_at({Site{b}, Site{a}}, T))));
        }
    const ProductTestFunction GG{p[0], p[0]};
    const auto SG = symmetrize(TestFunctionSum(GG));
    REQUIRE(SG.terms.size() == 1);
    CHECK(SG.terms[0].coef == doctest::Approx(1.0));

    Philox r(71);
    const ProductTestFunction G3{p[0], p[1], p[3]};
    const auto S3 = symmetrize(TestFunctionSum(G3));
    for (int rep = 0; rep < 10; ++rep) {
        const auto eta = random_config(T, 9, 1, 1, r);
        CHECK(eval_field(S3, eta, T) == doctest::Approx(eval_field(G3, eta, T)).epsilon(1e-12));
    }
    CHECK_THROWS(symmetrize(TestFunctionSum(take(0, 7))));
}
}
