#pragma once
// Smooth periodic test functions on [0,1)^d with exact derivatives, and the
// discrete generator operators acting on product test functions.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fieldslab/lattice.hpp"
#include "fieldslab/params.hpp"

namespace fieldslab {

class Factor {
public:
    explicit Factor(int d) : d_(d) {}
    virtual ~Factor() = default;

    int dim() const { return d_; }
    virtual double value(std::span<const double> u) const = 0;
    virtual void gradient(std::span<const double> u, std::span<double> grad) const = 0;
    virtual double laplacian(std::span<const double> u) const = 0;
    virtual std::string describe() const = 0;
    virtual bool is_constant() const { return false; }

private:
    int d_;
};

using FactorPtr = std::shared_ptr<const Factor>;

class ConstantFactor final : public Factor {
public:
    ConstantFactor(int d, double c) : Factor(d), c_(c) {}
    double value(std::span<const double>) const override { return c_; }
    void gradient(std::span<const double>, std::span<double> g) const override;
    double laplacian(std::span<const double>) const override { return 0.0; }
    std::string describe() const override;
    bool is_constant() const override { return true; }
    double constant() const { return c_; }

private:
    double c_;
};

// offset + sum_j amplitude_j cos(2 pi m_j . u + phase_j)
struct TrigTerm {
    double amplitude = 1.0;
    std::vector<int> mode;
    double phase = 0.0;
};

class TrigFactor final : public Factor {
public:
    TrigFactor(int d, double offset, std::vector<TrigTerm> terms);
    double value(std::span<const double> u) const override;
    void gradient(std::span<const double> u, std::span<double> g) const override;
    double laplacian(std::span<const double> u) const override;
    std::string describe() const override;
    bool is_constant() const override { return terms_.empty(); }

    double offset() const { return offset_; }
    const std::vector<TrigTerm>& terms() const { return terms_; }

private:
    double offset_;
    std::vector<TrigTerm> terms_;
};

// Tensor product of one-dimensional periodized profiles, times an amplitude.
class SeparableFactor : public Factor {
public:
    using Factor::Factor;
    double value(std::span<const double> u) const override;
    void gradient(std::span<const double> u, std::span<double> g) const override;
    double laplacian(std::span<const double> u) const override;

protected:
    // f, f', f'' of the profile along axis j at v in [0,1).
    virtual void profile(int axis, double v, double& f, double& df, double& d2f) const = 0;
    double amplitude_ = 1.0;
};

// Periodized Gaussian bump sum_m exp(-|u - c + m|^2 / (2 w^2)).
class BumpFactor final : public SeparableFactor {
public:
    BumpFactor(int d, std::vector<double> center, double width, double amplitude = 1.0);
    std::string describe() const override;

protected:
    void profile(int axis, double v, double& f, double& df, double& d2f) const override;

private:
    std::vector<double> center_;
    double width_;
    int images_;
};

// Periodized Hermite function prod_j sum_m s^{-1/2} h_{n_j}((u_j - c_j + m)/s),
// with h_n the L^2(R)-normalized Hermite function.
class HermiteFactor final : public SeparableFactor {
public:
    HermiteFactor(int d, std::vector<int> order, std::vector<double> center, double scale);
    std::string describe() const override;

protected:
    void profile(int axis, double v, double& f, double& df, double& d2f) const override;

private:
    std::vector<int> order_;
    std::vector<double> center_;
    double scale_;
    std::vector<int> images_;
};

// h_0..h_n at x (L^2(R)-normalized Hermite functions).
void hermite_functions(int n, double x, std::vector<double>& out);

// Pointwise product a(u) b(u).
class ProductFactor final : public Factor {
public:
    ProductFactor(FactorPtr a, FactorPtr b);
    double value(std::span<const double> u) const override;
    void gradient(std::span<const double> u, std::span<double> g) const override;
    double laplacian(std::span<const double> u) const override;
    std::string describe() const override;
    bool is_constant() const override { return a_->is_constant() && b_->is_constant(); }
    const FactorPtr& left() const { return a_; }
    const FactorPtr& right() const { return b_; }

private:
    FactorPtr a_, b_;
};

class CustomFactor final : public Factor {
public:
    using ValueFn = std::function<double(std::span<const double>)>;
    using GradFn = std::function<void(std::span<const double>, std::span<double>)>;
    CustomFactor(int d, std::string name, ValueFn f, GradFn grad, ValueFn lap);
    double value(std::span<const double> u) const override { return f_(u); }
    void gradient(std::span<const double> u, std::span<double> g) const override { grad_(u, g); }
    double laplacian(std::span<const double> u) const override { return lap_(u); }
    std::string describe() const override { return name_; }

private:
    std::string name_;
    ValueFn f_;
    GradFn grad_;
    ValueFn lap_;
};

FactorPtr make_constant(int d, double c);
// amplitude * sin(2 pi m . u)
FactorPtr make_sin(int d, std::vector<int> mode, double amplitude = 1.0);
FactorPtr make_cos(int d, std::vector<int> mode, double amplitude = 1.0, double offset = 0.0);
FactorPtr make_trig(int d, double offset, std::vector<TrigTerm> terms);
FactorPtr make_bump(int d, std::vector<double> center, double width, double amplitude = 1.0);
FactorPtr make_hermite(int d, std::vector<int> order, std::vector<double> center, double scale);
FactorPtr make_product(FactorPtr a, FactorPtr b);

// G = g_1 (x) ... (x) g_k
struct ProductTestFunction {
    std::vector<FactorPtr> factors;

    ProductTestFunction() = default;
    ProductTestFunction(std::initializer_list<FactorPtr> f) : factors(f) {}
    explicit ProductTestFunction(std::vector<FactorPtr> f) : factors(std::move(f)) {}

    int arity() const { return static_cast<int>(factors.size()); }
    int dim() const;
    // u holds k points of dimension d, concatenated.
    double value(std::span<const double> u) const;
    double value_at(const LabeledTuple& x, const Torus& T) const;
};

// G (x) H: factors of G followed by factors of H.
ProductTestFunction tensor(const ProductTestFunction& G, const ProductTestFunction& H);

struct TestFunctionTerm {
    double coef = 1.0;
    ProductTestFunction fn;
};

// Linear combination of product test functions of a common arity.
struct TestFunctionSum {
    std::vector<TestFunctionTerm> terms;

    TestFunctionSum() = default;
    TestFunctionSum(const ProductTestFunction& G) : terms{{1.0, G}} {}
    int arity() const;
    double value(std::span<const double> u) const;
    double value_at(const LabeledTuple& x, const Torus& T) const;
};

// Values of a factor at the torus points x/N.
std::vector<double> tabulate(const Factor& g, const Torus& T);

// Discrete dual generator applied to G(./N) at x: independent moves at rate
// bond_rate N^2 alpha plus sigma times the attraction/repulsion moves onto
// occupied neighbours.
double discrete_generator_apply(const ProductTestFunction& G, const LabeledTuple& x, const ModelParams& p);
double discrete_generator_apply(const TestFunctionSum& G, const LabeledTuple& x, const ModelParams& p);

// sum_i D * Lap g_i(u_i) prod_{l != i} g_l(u_l), D = bond_rate * alpha.
double continuum_generator_apply(const ProductTestFunction& G, std::span<const double> u, const ModelParams& p);

// N (g(x_j/N) - g(x_i/N)) 1{x_i ~ x_j}
double discrete_gradient(const Factor& g, Site xi, Site xj, const Torus& T);
// Double gradient of the pair (g_i at x_i, g_j at x_j):
// discrete_gradient(g_i, x_i, x_j) * discrete_gradient(g_j, x_j, x_i).
double discrete_gradient_pair(const Factor& gi, const Factor& gj, Site xi, Site xj, const Torus& T);

struct ConsistencyGap {
    double sup = 0.0;   // max_x |A^N g_i(x) - D Lap g_i(x/N)|, summed over factors
    double mean = 0.0;  // N^{-d} sum_x |...|, summed over factors
};

// Distance between the one-particle discrete generator and its continuum
// counterpart on each non-constant factor of G.
ConsistencyGap generator_consistency_gap(const ProductTestFunction& G, const ModelParams& p);

}  // namespace fieldslab
