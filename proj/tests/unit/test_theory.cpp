#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "fieldslab/fields.hpp"
#include "fieldslab/measures.hpp"
#include "fieldslab/theory.hpp"

using namespace fieldslab;

namespace {

constexpr double pi = std::numbers::pi;

FactorPtr sine_profile(double c, double eps) { return make_trig(1, c, {TrigTerm{eps, {1}, -pi / 2}}); }

// Trapezoid on a fine grid, for smooth periodic integrands.
template <class F>
double quad(F f, int M = 4096) {
    double s = 0.0;
    for (int i = 0; i < M; ++i) s += f(static_cast<double>(i) / M);
    return s / M;
}

double val(const FactorPtr& g, double u) { return g->value(std::vector<double>{u}); }

// Single-site marginal law of mu_theta, truncated where the tail is negligible.
std::vector<double> marginal_pmf(int sigma, int alpha, double theta, int nmax) {
    std::vector<double> p(nmax + 1, 0.0);
    for (int n = 0; n <= nmax; ++n) {
        if (sigma == -1) {
            if (n > alpha) break;
            p[n] = std::exp(std::lgamma(alpha + 1.0) - std::lgamma(n + 1.0) - std::lgamma(alpha - n + 1.0)) *
                   std::pow(theta, n) * std::pow(1 - theta, alpha - n);
        } else if (sigma == 0) {
            p[n] = std::exp(-alpha * theta + n * std::log(alpha * theta) - std::lgamma(n + 1.0));
        } else {
            const double q = theta / (1 + theta);
            p[n] = std::exp(std::lgamma(n + alpha) - std::lgamma(n + 1.0) - std::lgamma(alpha) + n * std::log(q) +
                            alpha * std::log(1 - q));
        }
    }
    return p;
}

// N^d Cov(<G,X>, <H,X>) by enumerating all configurations on a small torus.
double enumerated_cov(const ProductTestFunction& G, const ProductTestFunction& H, const ModelParams& p, double theta,
                      int nmax) {
    const Torus T = p.torus();
    const auto pmf = marginal_pmf(p.sigma, p.alpha, theta, nmax);
    const std::size_t n = T.num_sites();
    std::vector<std::uint32_t> occ(n, 0);
    long double eg = 0, eh = 0, egh = 0;
    for (;;) {
        double w = 1.0;
        for (auto o : occ) w *= pmf[o];
        if (w > 0.0) {
            const Configuration eta(occ);
            const double a = eval_field_bruteforce(G, eta, T), b = eval_field_bruteforce(H, eta, T);
            eg += w * a;
            eh += w * b;
            egh += w * a * b;
        }
        std::size_t i = 0;
        while (i < n && ++occ[i] > static_cast<std::uint32_t>(nmax)) occ[i++] = 0;
        if (i == n) break;
    }
    return static_cast<double>(n * (egh - eg * eh));
}

}  // namespace

TEST_SUITE("theory") {
TEST_CASE("quadrature") {
    CHECK(integrate(make_sin(1, {1})) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(integrate(make_cos(1, {2}, 1.0, 0.4)) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(integrate_product({make_sin(1, {1}), make_sin(1, {1})}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(integrate_gradient_dot(make_sin(1, {1}), make_sin(1, {1})) == doctest::Approx(2 * pi * pi).epsilon(1e-12));
    const auto b = make_bump(1, {0.3}, 0.1);
    const auto h = make_hermite(1, {2}, {0.6}, 0.15);
    CHECK(integrate_product({b, h}) == doctest::Approx(quad([&](double u) { return val(b, u) * val(h, u); }, 20000)).epsilon(1e-12));
    const auto s2 = make_sin(2, {1, 1});
    CHECK(integrate_product({s2, s2}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(integrate_gradient_dot(s2, s2) == doctest::Approx(4 * pi * pi).epsilon(1e-10));
}

TEST_CASE("heat solution") {
    const ModelParams p{0, 2, 1, 16, 0.5};
    const double u[] = {0.37};
    CHECK(heat_solution(ProfileSpec::constant(0, 2, 1, 0.3), 0.4, u, p) == doctest::Approx(0.6).epsilon(1e-14));
    const ProfileSpec prof{0, 2, sine_profile(0.5, 0.2)};
    for (double t : {0.0, 0.01, 0.05}) {
        const double expect = 2 * 0.5 + 2 * 0.2 * std::exp(-2 * 2 * pi * pi * t) * std::sin(2 * pi * u[0]);
        CHECK(heat_solution(prof, t, u, p) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(heat_solution(prof, 50.0, u, p) == doctest::Approx(1.0).epsilon(1e-12));

    // method of lines with RK4, Richardson-extrapolated in the mesh
    const ProfileSpec bump{0, 1, make_bump(1, {0.4}, 0.1, 0.5)};
    const ModelParams q{0, 1, 1, 16, 0.5};
    const double t = 0.01;
    auto mol = [&](int M) {
        std::vector<double> r(M), k1(M), k2(M), k3(M), k4(M), tmp(M);
        for (int i = 0; i < M; ++i) r[i] = val(bump.theta, static_cast<double>(i) / M);
        const double h = 1.0 / M, D = q.diffusivity();
        const int steps = static_cast<int>(std::ceil(t / (0.2 * h * h / D)));
        const double dt = t / steps;
        auto rhs = [&](const std::vector<double>& x, std::vector<double>& out) {
            for (int i = 0; i < M; ++i) out[i] = D * (x[(i + 1) % M] - 2 * x[i] + x[(i + M - 1) % M]) / (h * h);
        };
        for (int s = 0; s < steps; ++s) {
            rhs(r, k1);
            for (int i = 0; i < M; ++i) tmp[i] = r[i] + 0.5 * dt * k1[i];
            rhs(tmp, k2);
            for (int i = 0; i < M; ++i) tmp[i] = r[i] + 0.5 * dt * k2[i];
            rhs(tmp, k3);
            for (int i = 0; i < M; ++i) tmp[i] = r[i] + dt * k3[i];
            rhs(tmp, k4);
            for (int i = 0; i < M; ++i) r[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        }
        return r;
    };
    const auto r1 = mol(256), r2 = mol(512);
    double worst = 0.0;
    for (int i = 0; i < 256; ++i) {
        const double uu[] = {i / 256.0};
        worst = std::max(worst, std::abs((4 * r2[2 * i] - r1[i]) / 3 - heat_solution(bump, t, uu, q)));
    }
    INFO("worst=" << worst);
    CHECK(worst < 1e-8);

    const HeatProfile hp(bump, q);
    CHECK(hp.mass() == doctest::Approx(integrate(bump.theta)).epsilon(1e-12));
    CHECK(hp.diffusivity() == 0.5);
    CHECK(quad([&](double x) { const double v[] = {x}; return hp.at(0.003, v); }) ==
          doctest::Approx(hp.mass()).epsilon(1e-10));
}

TEST_CASE("hydrodynamic prediction") {
    const ModelParams p{1, 2, 1, 16, 0.5};
    const auto one = make_constant(1, 1.0);
    const auto c = ProfileSpec::constant(1, 2, 1, 0.3);
    CHECK(hydro_prediction(ProductTestFunction{one, one, one}, 0.2, c, p) == doctest::Approx(0.216).epsilon(1e-12));
    CHECK(std::abs(hydro_prediction(ProductTestFunction{one, make_sin(1, {2})}, 0.1, c, p)) < 1e-14);
    const ProfileSpec prof{1, 2, sine_profile(0.5, 0.2)};
    for (double t : {0.0, 0.02})
        CHECK(hydro_prediction(ProductTestFunction{make_sin(1, {1})}, t, prof, p) ==
              doctest::Approx(2 * 0.2 * std::exp(-4 * pi * pi * t) / 2).epsilon(1e-12));
    // t = 0 against the finite-N expectation, gap O(1/N) from the diagonal
    const ProfileSpec bump{1, 1, make_bump(1, {0.4}, 0.1, 0.5)};
    const ProductTestFunction G{make_cos(1, {1}, 1.0, 0.5), make_bump(1, {0.5}, 0.2)};
    double prev = 1.0;
    for (int N : {16, 32, 64}) {
        const ModelParams q{1, 1, 1, N, 0.5};
        const double gap = std::abs(expected_field_under_profile(G, bump, q) - hydro_prediction(G, 0.0, bump, q));
        CHECK(gap < prev);
        CHECK(gap < 2.0 / N);
        prev = gap;
    }
}

TEST_CASE("equilibrium covariance") {
    const auto g = make_sin(1, {1});
    const ModelParams p0{0, 1, 1, 16, 0.5};
    CHECK(equilibrium_covariance(ProductTestFunction{g}, ProductTestFunction{g}, p0, 0.5) ==
          doctest::Approx(0.25).epsilon(1e-14));
    const ModelParams ex{-1, 1, 1, 16, 0.5};
    CHECK(equilibrium_covariance(ProductTestFunction{g, make_constant(1, 1)}, ProductTestFunction{g}, ex, 1.0) == 0.0);
    // k = 2, one zero-mean and one unit-mean factor: only the zero-mean pairing survives
    const ModelParams p1{1, 2, 1, 16, 0.5};
    const double th = 0.3, a = 2, mob = th * (1 + th);
    const ProductTestFunction G{g, make_cos(1, {2}, 0.5, 1.0)};
    CHECK(equilibrium_covariance(G, G, p1, th) == doctest::Approx(a * mob * 0.5 * (a * th) * (a * th)).epsilon(1e-12));
    // symmetry and non-negativity on random trigonometric products
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1, 1);
    std::uniform_int_distribution<int> mode(0, 3), arity(1, 3);
    auto rand_fn = [&] {
        ProductTestFunction F;
        const int k = arity(rng);
        for (int i = 0; i < k; ++i)
            F.factors.push_back(make_trig(1, U(rng), {TrigTerm{U(rng), {mode(rng)}, 3 * U(rng)},
                                                      TrigTerm{U(rng), {mode(rng)}, 3 * U(rng)}}));
        return F;
    };
    bool ok = true;
    for (int s : {-1, 0, 1})
        for (double theta : {0.2, 0.9}) {
            const ModelParams p{s, 1, 1, 16, 0.5};
            for (int rep = 0; rep < 1000; ++rep) {
                const auto F = rand_fn(), H = rand_fn();
                ok = ok && equilibrium_covariance(F, F, p, theta) >= -1e-12;
                ok = ok && quadratic_variation_U(F, p, theta) >= -1e-12;
                const double fh = equilibrium_covariance(F, H, p, theta), hf = equilibrium_covariance(H, F, p, theta);
                ok = ok && std::abs(fh - hf) < 1e-12 * (1 + std::abs(fh));
            }
        }
    CHECK(ok);
    const ModelParams full{-1, 1, 1, 16, 0.5};
    const auto F = rand_fn();
    CHECK(equilibrium_covariance(F, F, full, 1.0) == 0.0);
    CHECK(quadratic_variation_U(F, full, 1.0) == 0.0);
}

TEST_CASE("quadratic variation") {
    const ModelParams p{0, 1, 1, 16, 0.5};
    CHECK(quadratic_variation_U(ProductTestFunction{make_constant(1, 2.0)}, p, 0.5) == 0.0);
    CHECK(quadratic_variation_U(ProductTestFunction{make_sin(1, {1})}, p, 0.5) == doctest::Approx(pi * pi).epsilon(1e-12));
    CHECK(quadratic_variation_U(ProductTestFunction{make_sin(1, {1})}, ModelParams{0, 1, 1, 16, 1.0}, 0.5) ==
          doctest::Approx(2 * pi * pi).epsilon(1e-12));
    CHECK(quadratic_variation_U(ProductTestFunction{make_sin(1, {1})}, ModelParams{-1, 1, 1, 16, 0.5}, 1.0) == 0.0);
    // bump, numerically: alpha^2 theta (1 + sigma theta) int g'^2
    const auto b = make_bump(1, {0.5}, 0.1);
    const double h = 1e-5;
    const double g2 = quad([&](double u) { return std::pow((val(b, u + h) - val(b, u - h)) / (2 * h), 2); }, 20000);
    CHECK(quadratic_variation_U(ProductTestFunction{b}, ModelParams{1, 2, 1, 16, 0.5}, 0.4) ==
          doctest::Approx(4 * 0.4 * 1.4 * g2).epsilon(1e-6));
}

TEST_CASE("finite-N stationary covariance against enumeration") {
    const ProductTestFunction G{make_sin(1, {1}), make_bump(1, {0.3}, 0.2)};
    const ProductTestFunction H{make_cos(1, {1}, 1.0, 0.5)};
    const ProductTestFunction G3{make_sin(1, {1}), make_constant(1, 1.0), make_cos(1, {1}, 0.5, 0.5)};
    for (int s : {-1, 0, 1})
        for (int a : {1, 2}) {
            const ModelParams p{s, a, 1, 3, 0.5};
            const double theta = 0.3;
            const int nmax = s == -1 ? a : 24;
            for (const auto& pr : {std::pair{G, G}, std::pair{G, H}, std::pair{H, H}, std::pair{G3, H}}) {
                const double fast = stationary_cov_finiteN(pr.first, pr.second, p, theta);
                const double brute = enumerated_cov(pr.first, pr.second, p, theta, nmax);
                INFO("sigma=" << s << " alpha=" << a << " fast=" << fast << " brute=" << brute);
                CHECK(std::abs(fast - brute) < 1e-10 * std::max(1.0, std::abs(brute)));
            }
        }
}

TEST_CASE("finite-N covariance converges") {
    const auto g = make_bump(1, {0.5}, 0.15);
    const ProductTestFunction G{make_sin(1, {1}), make_cos(1, {1}, 1.0, 1.0)};
    const ProductTestFunction H{g};
    CHECK(stationary_cov_finiteN(ProductTestFunction{make_constant(1, 0.0)}, G, ModelParams{1, 1, 1, 16}, 0.4) == 0.0);
    // k = 1 Poisson: Riemann sum
    const ModelParams p0{0, 2, 1, 16, 0.5};
    double rs = 0.0;
    for (int x = 0; x < 16; ++x) rs += val(g, x / 16.0) * std::sin(2 * pi * x / 16.0);
    CHECK(stationary_cov_finiteN(H, ProductTestFunction{make_sin(1, {1})}, p0, 0.3) ==
          doctest::Approx(rs / 16 * 2 * 0.3).epsilon(1e-12));
    for (int s : {-1, 0, 1}) {
        const double theta = 0.4;
        const double lim = equilibrium_covariance(G, G, ModelParams{s, 1, 1, 16}, theta);
        std::vector<double> lx, ly;
        for (int N : {16, 32, 64, 128}) {
            const double gap = std::abs(stationary_cov_finiteN(G, G, ModelParams{s, 1, 1, N}, theta) - lim);
            lx.push_back(std::log(N));
            ly.push_back(std::log(gap));
        }
        const double mx = (lx[0] + lx[1] + lx[2] + lx[3]) / 4, my = (ly[0] + ly[1] + ly[2] + ly[3]) / 4;
        double sxy = 0, sxx = 0;
        for (int i = 0; i < 4; ++i) {
            sxy += (lx[i] - mx) * (ly[i] - my);
            sxx += (lx[i] - mx) * (lx[i] - mx);
        }
        const double order = -sxy / sxx;
        const double ratio = std::exp(ly[2] - ly[3]);
        INFO("sigma=" << s << " order=" << order << " ratio=" << ratio);
        CHECK(order >= 0.9);
        CHECK(ratio == doctest::Approx(2.0).epsilon(0.2));
    }
}

TEST_CASE("expectation expansion") {
    const auto one = make_constant(1, 1.0);
    const ModelParams inc{1, 1, 1, 4, 0.5};
    const auto r = check_expectation_expansion(ProductTestFunction{one}, ProductTestFunction{one}, inc, 0.7);
    CHECK(r.lhs == doctest::Approx(0.49).epsilon(1e-14));
    CHECK(std::abs(r.residual) < 1e-12);
    const ProductTestFunction G{make_sin(1, {1}), make_bump(1, {0.2}, 0.2)}, H{make_cos(1, {1}, 1.0, 0.3)};
    const auto r0 = check_expectation_expansion(G, H, ModelParams{0, 2, 1, 4}, 0.4);
    CHECK(std::abs(r0.residual) < 1e-12 * (1 + std::abs(r0.lhs)));
    const auto r1 = check_expectation_expansion(G, H, ModelParams{-1, 2, 1, 4}, 0.4);
    CHECK(std::abs(r1.residual) < 1e-10 * (1 + std::abs(r1.lhs)));
    for (int s : {-1, 0, 1})
        for (int N : {3, 5}) {
            const auto rr = check_expectation_expansion(G, G, ModelParams{s, 2, 1, N}, 0.35);
            CHECK(std::abs(rr.residual) < 1e-10 * (1 + std::abs(rr.lhs)));
        }
}

TEST_CASE("discrete heat density against the one-particle walk") {
    const ProfileSpec prof{1, 2, make_bump(1, {0.4}, 0.2, 0.6)};
    const int N = 8;
    const double t = 0.01;
    for (int s : {-1, 0, 1}) {
        const ModelParams p{s, 2, 1, N, 0.5};
        const ProfileSpec ps{s, 2, prof.theta};
        Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N);
        for (int i = 0; i < N; ++i) {
            Q(i, (i + 1) % N) += p.time_scale() * p.alpha;
            Q(i, (i + N - 1) % N) += p.time_scale() * p.alpha;
            Q(i, i) -= 2 * p.time_scale() * p.alpha;
        }
        Eigen::VectorXd rho0(N);
        for (int i = 0; i < N; ++i) rho0[i] = p.alpha * val(prof.theta, static_cast<double>(i) / N);
        const Eigen::VectorXd rho = (Q * t).exp() * rho0;
        const auto got = discrete_heat_density(ps, t, p);
        for (int i = 0; i < N; ++i) CHECK(got[i] == doctest::Approx(rho[i]).epsilon(1e-10));
        double m = 0.0;
        for (int i = 0; i < N; ++i) m += rho[i] * std::cos(2 * pi * i / N);
        CHECK(finite_N_first_order_mean(make_cos(1, {1}), t, ps, p) == doctest::Approx(m / N).epsilon(1e-10));
    }
    // the finite-N mean approaches the hydrodynamic limit
    const ProfileSpec sp{0, 1, sine_profile(0.5, 0.3)};
    const auto g = make_sin(1, {1});
    double prev = 1.0;
    for (int N : {16, 32, 64}) {
        const ModelParams p{0, 1, 1, N, 0.5};
        const double gap =
            std::abs(finite_N_first_order_mean(g, 0.02, sp, p) - hydro_prediction(ProductTestFunction{g}, 0.02, sp, p));
        CHECK(gap < prev);
        prev = gap;
    }
}
}
