#pragma once
// Scaling-limit targets: heat semigroup, limiting covariance, quadratic
// variation, finite-N stationary covariance and the closed-form equilibrium
// expectation identity.

#include <complex>
#include <span>
#include <vector>

#include "fieldslab/measures.hpp"
#include "fieldslab/params.hpp"
#include "fieldslab/testfn.hpp"

namespace fieldslab {

// Fourier modes of rho(t,.) solving d/dt rho = D Lap rho, rho(0) = alpha theta0.
class HeatProfile {
public:
    struct Mode {
        std::vector<int> m;
        std::complex<double> c;
    };

    HeatProfile(const ProfileSpec& theta0, const ModelParams& p, double tol = 1e-15);

    double at(double t, std::span<const double> u) const;
    // Mass int rho(t,u) du (constant in t).
    double mass() const;
    double diffusivity() const { return D_; }
    const std::vector<Mode>& modes() const { return modes_; }

private:
    int d_;
    double D_;
    std::vector<Mode> modes_;
};

double heat_solution(const ProfileSpec& theta0, double t, std::span<const double> u, const ModelParams& p);

// prod_i int g_i(u) rho(t,u) du
double hydro_prediction(const ProductTestFunction& G, double t, const ProfileSpec& theta0, const ModelParams& p);

// int_{[0,1)^d} prod of factors; analytic when every factor is trigonometric.
double integrate_product(const std::vector<FactorPtr>& factors);
double integrate(const FactorPtr& g);
// int grad g . grad h
double integrate_gradient_dot(const FactorPtr& g, const FactorPtr& h);

double equilibrium_covariance(const ProductTestFunction& G, const ProductTestFunction& H, const ModelParams& p,
                              double theta);

// Limit of N^d times the carre du champ, scaled by 2 bond_rate (the usual U at 1/2).
double quadratic_variation_U(const ProductTestFunction& G, const ModelParams& p, double theta);

// Exact E_{mu_theta}[<G,Y><H,Y>] at the torus size of p.
double stationary_cov_finiteN(const ProductTestFunction& G, const ProductTestFunction& H, const ModelParams& p,
                              double theta);

struct ExpectationCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
};

// E[<G,X^(k)>] E[<H,X^(l)>] against sum_h theta^h (-sigma)^h N^{-hd} E[coincidence term h],
// all expectations by direct summation with E[[eta]_x] = theta^|x| pi(x).
ExpectationCheck check_expectation_expansion(const ProductTestFunction& G, const ProductTestFunction& H,
                                             const ModelParams& p, double theta);

// E[eta_t(x)] at every site, starting from the profile product measure.  The
// one-point function solves the discrete heat equation for every sigma.
std::vector<double> discrete_heat_density(const ProfileSpec& theta0, double t, const ModelParams& p);

// Exact finite-N mean of the first-order field at time t.
double finite_N_first_order_mean(const FactorPtr& g, double t, const ProfileSpec& theta0, const ModelParams& p);

}  // namespace fieldslab
