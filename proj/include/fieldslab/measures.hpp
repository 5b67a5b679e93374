#pragma once
// Reversible product measures mu_theta and product measures with a slowly
// varying profile: sampling and closed-form falling moments.

#include "fieldslab/lattice.hpp"
#include "fieldslab/params.hpp"
#include "fieldslab/rng.hpp"
#include "fieldslab/testfn.hpp"

namespace fieldslab {

// Site marginal: Binomial(alpha, theta) for sigma = -1, Poisson(alpha theta)
// for sigma = 0, Negative-Binomial(shape alpha, p = theta/(1+theta)) for
// sigma = +1.
struct MarginalSpec {
    int sigma = 0;
    int alpha = 1;
    double theta = 0.0;
    void validate() const;
};

// theta(u) on [0,1)^d; a constant factor gives mu_theta.
struct ProfileSpec {
    int sigma = 0;
    int alpha = 1;
    FactorPtr theta;

    static ProfileSpec constant(int sigma, int alpha, int d, double theta);
    static ProfileSpec from(const MarginalSpec& m, int d) { return constant(m.sigma, m.alpha, d, m.theta); }
    // theta at every torus site, range-checked.
    std::vector<double> values(const Torus& T) const;
};

std::uint32_t sample_marginal(int sigma, int alpha, double theta, Philox& rng);

// Independent draws per site; site x uses its own substream of rng's stream.
Configuration sample_configuration(const MarginalSpec& spec, const Torus& T, const Philox& rng);
Configuration sample_configuration(const ProfileSpec& spec, const Torus& T, const Philox& rng);

// E[eta(eta-1)...(eta-r+1)] = theta^r alpha(alpha+sigma)...(alpha+(r-1)sigma)
double marginal_falling_moment(int r, const MarginalSpec& spec);

// N^{-kd} sum_x G(x/N) prod_i theta(x_i/N) pi(x), i.e. the mean of the kth
// order field under the profile product measure.
double expected_field_under_profile(const ProductTestFunction& G, const ProfileSpec& profile, const ModelParams& p);
double expected_field_under_profile(const TestFunctionSum& G, const ProfileSpec& profile, const ModelParams& p);

}  // namespace fieldslab
