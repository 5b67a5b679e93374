#include "fieldslab/measures.hpp"

#include <cmath>
#include <random>

#include "fieldslab/fields.hpp"
#include "fieldslab/partition.hpp"

namespace fieldslab {

void MarginalSpec::validate() const {
    ModelParams p;
    p.sigma = sigma;
    p.alpha = alpha;
    p.validate();
    validate_theta(sigma, alpha, theta);
}

ProfileSpec ProfileSpec::constant(int sigma, int alpha, int d, double theta) {
    validate_theta(sigma, alpha, theta);
    return ProfileSpec{sigma, alpha, make_constant(d, theta)};
}

std::vector<double> ProfileSpec::values(const Torus& T) const {
    if (!theta) throw DomainError("profile has no theta function");
    auto v = tabulate(*theta, T);
    for (double t : v) validate_theta(sigma, alpha, t);
    return v;
}

std::uint32_t sample_marginal(int sigma, int alpha, double theta, Philox& rng) {
    if (theta == 0.0) return 0;
    switch (sigma) {
        case -1: {
            std::binomial_distribution<std::uint32_t> b(static_cast<std::uint32_t>(alpha), theta);
            return b(rng);
        }
        case 0: {
            std::poisson_distribution<std::uint32_t> d(alpha * theta);
            return d(rng);
        }
        default: {
            std::gamma_distribution<double> g(static_cast<double>(alpha), theta);
            const double lambda = g(rng);
            if (!(lambda > 0.0)) return 0;
            std::poisson_distribution<std::uint32_t> d(lambda);
            return d(rng);
        }
    }
}

namespace {
template <class ThetaAt>
Configuration sample_sites(int sigma, int alpha, const Torus& T, const Philox& rng, ThetaAt theta_at) {
    Configuration eta(T.num_sites());
    for (std::uint32_t x = 0; x < T.num_sites(); ++x) {
        Philox r(rng.seed(), rng.stream(), substream::sampling_base + x);
        eta.set(Site{x}, sample_marginal(sigma, alpha, theta_at(x), r));
    }
    return eta;
}
}  // namespace

Configuration sample_configuration(const MarginalSpec& spec, const Torus& T, const Philox& rng) {
    spec.validate();
    return sample_sites(spec.sigma, spec.alpha, T, rng, [&](std::uint32_t) { return spec.theta; });
}

Configuration sample_configuration(const ProfileSpec& spec, const Torus& T, const Philox& rng) {
    MarginalSpec{spec.sigma, spec.alpha, 0.0}.validate();
    const auto th = spec.values(T);
    return sample_sites(spec.sigma, spec.alpha, T, rng, [&](std::uint32_t x) { return th[x]; });
}

double marginal_falling_moment(int r, const MarginalSpec& spec) {
    if (r < 1) throw DomainError("falling moment order must be positive");
    double v = 1.0;
    for (int j = 0; j < r; ++j) {
        const double f = spec.alpha + j * spec.sigma;
        if (f <= 0.0) return 0.0;
        v *= f * spec.theta;
    }
    return v;
}

namespace {

std::vector<std::vector<double>> profile_block_functions(int k, const ProfileSpec& profile, const Torus& T) {
    const auto th = profile.values(T);
    std::vector<std::vector<double>> psi(k + 1, std::vector<double>(T.num_sites()));
    std::vector<double> mom(k + 1);
    for (std::size_t z = 0; z < th.size(); ++z) {
        for (int a = 1; a <= k; ++a) mom[a] = marginal_falling_moment(a, {profile.sigma, profile.alpha, th[z]});
        const auto b = block_functions_from_moments(mom, k);
        for (int m = 1; m <= k; ++m) psi[m][z] = b[m];
    }
    return psi;
}

}  // namespace

double expected_field_under_profile(const ProductTestFunction& G, const ProfileSpec& profile, const ModelParams& p) {
    return expected_field_under_profile(TestFunctionSum(G), profile, p);
}

double expected_field_under_profile(const TestFunctionSum& G, const ProfileSpec& profile, const ModelParams& p) {
    const Torus T = p.torus();
    const int k = G.arity();
    if (k > 6) throw DomainError("expected field supports k <= 6");
    const auto psi = profile_block_functions(k, profile, T);
    long double s = 0.0L;
    for (const auto& t : G.terms) s += t.coef * eval_with_block_functions(t.fn, T, psi);
    return static_cast<double>(s);
}

}  // namespace fieldslab
