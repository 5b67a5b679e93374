#include "fieldslab/testfn.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fieldslab/kernels.hpp"

namespace fieldslab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string join(const std::vector<double>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

std::string join(const std::vector<int>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

void check_len(std::size_t n, int d, const char* what) {
    if (static_cast<int>(n) != d) throw DomainError(std::string(what) + " must have length d");
}
}  // namespace

void ConstantFactor::gradient(std::span<const double>, std::span<double> g) const {
    for (auto& v : g) v = 0.0;
}

std::string ConstantFactor::describe() const {
    std::ostringstream os;
    os << "const(" << c_ << ")";
    return os.str();
}

TrigFactor::TrigFactor(int d, double offset, std::vector<TrigTerm> terms)
    : Factor(d), offset_(offset), terms_(std::move(terms)) {
    for (const auto& t : terms_) check_len(t.mode.size(), d, "trig mode");
}

double TrigFactor::value(std::span<const double> u) const {
    double s = offset_;
    for (const auto& t : terms_) {
        double arg = t.phase;
        for (int j = 0; j < dim(); ++j) arg += kTwoPi * t.mode[j] * u[j];
        s += t.amplitude * std::cos(arg);
    }
    return s;
}

void TrigFactor::gradient(std::span<const double> u, std::span<double> g) const {
    for (auto& v : g) v = 0.0;
    for (const auto& t : terms_) {
        double arg = t.phase;
        for (int j = 0; j < dim(); ++j) arg += kTwoPi * t.mode[j] * u[j];
        const double s = std::sin(arg);
        for (int j = 0; j < dim(); ++j) g[j] -= t.amplitude * kTwoPi * t.mode[j] * s;
    }
}

double TrigFactor::laplacian(std::span<const double> u) const {
    double s = 0.0;
    for (const auto& t : terms_) {
        double arg = t.phase, m2 = 0.0;
        for (int j = 0; j < dim(); ++j) {
            arg += kTwoPi * t.mode[j] * u[j];
            m2 += static_cast<double>(t.mode[j]) * t.mode[j];
        }
        s -= t.amplitude * kTwoPi * kTwoPi * m2 * std::cos(arg);
    }
    return s;
}

std::string TrigFactor::describe() const {
    std::ostringstream os;
    os << "trig(" << offset_;
    for (const auto& t : terms_) os << ";" << t.amplitude << "*cos[" << join(t.mode) << "," << t.phase << "]";
    os << ")";
    return os.str();
}

double SeparableFactor::value(std::span<const double> u) const {
    double v = amplitude_;
    for (int j = 0; j < dim(); ++j) {
        double f, df, d2f;
        profile(j, u[j], f, df, d2f);
        v *= f;
    }
    return v;
}

void SeparableFactor::gradient(std::span<const double> u, std::span<double> g) const {
    const int d = dim();
    std::vector<double> f(d), df(d), d2f(d);
    for (int j = 0; j < d; ++j) profile(j, u[j], f[j], df[j], d2f[j]);
    for (int j = 0; j < d; ++j) {
        double v = amplitude_ * df[j];
        for (int l = 0; l < d; ++l)
            if (l != j) v *= f[l];
        g[j] = v;
    }
}

double SeparableFactor::laplacian(std::span<const double> u) const {
    const int d = dim();
    std::vector<double> f(d), df(d), d2f(d);
    for (int j = 0; j < d; ++j) profile(j, u[j], f[j], df[j], d2f[j]);
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
        double v = d2f[j];
        for (int l = 0; l < d; ++l)
            if (l != j) v *= f[l];
        s += v;
    }
    return amplitude_ * s;
}

BumpFactor::BumpFactor(int d, std::vector<double> center, double width, double amplitude)
    : SeparableFactor(d), center_(std::move(center)), width_(width) {
    check_len(center_.size(), d, "bump center");
    if (!(width > 0) || width > 1.0) throw DomainError("bump width must lie in (0,1]");
    amplitude_ = amplitude;
    // exp(-r^2/2) < 1e-14 beyond r = 8.03 widths.
    images_ = static_cast<int>(std::ceil(8.1 * width_)) + 1;
}

void BumpFactor::profile(int axis, double v, double& f, double& df, double& d2f) const {
    const double w2 = width_ * width_;
    const double base = v - center_[axis];
    f = df = d2f = 0.0;
    for (int m = -images_; m <= images_; ++m) {
        const double s = base + m;
        const double e = std::exp(-s * s / (2.0 * w2));
        f += e;
        df += -s / w2 * e;
        d2f += (s * s / (w2 * w2) - 1.0 / w2) * e;
    }
}

std::string BumpFactor::describe() const {
    std::ostringstream os;
    os << "bump([" << join(center_) << "]," << width_ << "," << amplitude_ << ")";
    return os.str();
}

void hermite_functions(int n, double x, std::vector<double>& out) {
    out.assign(n + 2, 0.0);
    out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
    if (n + 1 >= 1) out[1] = std::sqrt(2.0) * x * out[0];
    for (int j = 1; j + 1 <= n + 1; ++j)
        out[j + 1] = std::sqrt(2.0 / (j + 1)) * x * out[j] - std::sqrt(static_cast<double>(j) / (j + 1)) * out[j - 1];
}

HermiteFactor::HermiteFactor(int d, std::vector<int> order, std::vector<double> center, double scale)
    : SeparableFactor(d), order_(std::move(order)), center_(std::move(center)), scale_(scale) {
    check_len(order_.size(), d, "hermite order");
    check_len(center_.size(), d, "hermite center");
    if (!(scale > 0) || scale > 1.0) throw DomainError("hermite scale must lie in (0,1]");
    for (int n : order_) {
        if (n < 0 || n > 40) throw DomainError("hermite order must lie in [0,40]");
        // h_n(xi) is below 1e-14 once |xi| exceeds the turning point by ~9.
        const double reach = std::sqrt(2.0 * n + 1.0) + 10.0;
        images_.push_back(static_cast<int>(std::ceil(reach * scale_)) + 1);
    }
}

void HermiteFactor::profile(int axis, double v, double& f, double& df, double& d2f) const {
    const int n = order_[axis];
    const double s = scale_;
    const double c0 = 1.0 / std::sqrt(s);
    std::vector<double> h;
    f = df = d2f = 0.0;
    for (int m = -images_[axis]; m <= images_[axis]; ++m) {
        const double xi = (v - center_[axis] + m) / s;
        hermite_functions(n, xi, h);
        const double hm1 = n > 0 ? h[n - 1] : 0.0;
        const double d1 = std::sqrt(n / 2.0) * hm1 - std::sqrt((n + 1) / 2.0) * h[n + 1];
        const double d2 = (xi * xi - (2.0 * n + 1.0)) * h[n];
        f += c0 * h[n];
        df += c0 / s * d1;
        d2f += c0 / (s * s) * d2;
    }
}

std::string HermiteFactor::describe() const {
    std::ostringstream os;
    os << "hermite([" << join(order_) << "],[" << join(center_) << "]," << scale_ << ")";
    return os.str();
}

ProductFactor::ProductFactor(FactorPtr a, FactorPtr b) : Factor(a->dim()), a_(std::move(a)), b_(std::move(b)) {
    if (a_->dim() != b_->dim()) throw DomainError("product of factors with different dimensions");
}

double ProductFactor::value(std::span<const double> u) const { return a_->value(u) * b_->value(u); }

void ProductFactor::gradient(std::span<const double> u, std::span<double> g) const {
    const int d = dim();
    std::vector<double> ga(d), gb(d);
    a_->gradient(u, ga);
    b_->gradient(u, gb);
    const double va = a_->value(u), vb = b_->value(u);
    for (int j = 0; j < d; ++j) g[j] = ga[j] * vb + va * gb[j];
}

double ProductFactor::laplacian(std::span<const double> u) const {
    const int d = dim();
    std::vector<double> ga(d), gb(d);
    a_->gradient(u, ga);
    b_->gradient(u, gb);
    double cross = 0.0;
    for (int j = 0; j < d; ++j) cross += ga[j] * gb[j];
    return a_->laplacian(u) * b_->value(u) + 2.0 * cross + a_->value(u) * b_->laplacian(u);
}

std::string ProductFactor::describe() const { return "(" + a_->describe() + "*" + b_->describe() + ")"; }

CustomFactor::CustomFactor(int d, std::string name, ValueFn f, GradFn grad, ValueFn lap)
    : Factor(d), name_(std::move(name)), f_(std::move(f)), grad_(std::move(grad)), lap_(std::move(lap)) {}

FactorPtr make_constant(int d, double c) { return std::make_shared<ConstantFactor>(d, c); }

FactorPtr make_sin(int d, std::vector<int> mode, double amplitude) {
    return std::make_shared<TrigFactor>(d, 0.0,
                                        std::vector<TrigTerm>{{amplitude, std::move(mode), -std::numbers::pi / 2}});
}

FactorPtr make_cos(int d, std::vector<int> mode, double amplitude, double offset) {
    return std::make_shared<TrigFactor>(d, offset, std::vector<TrigTerm>{{amplitude, std::move(mode), 0.0}});
}

FactorPtr make_trig(int d, double offset, std::vector<TrigTerm> terms) {
    return std::make_shared<TrigFactor>(d, offset, std::move(terms));
}

FactorPtr make_bump(int d, std::vector<double> center, double width, double amplitude) {
    return std::make_shared<BumpFactor>(d, std::move(center), width, amplitude);
}

FactorPtr make_hermite(int d, std::vector<int> order, std::vector<double> center, double scale) {
    return std::make_shared<HermiteFactor>(d, std::move(order), std::move(center), scale);
}

FactorPtr make_product(FactorPtr a, FactorPtr b) { return std::make_shared<ProductFactor>(std::move(a), std::move(b)); }

int ProductTestFunction::dim() const { return factors.empty() ? 1 : factors.front()->dim(); }

double ProductTestFunction::value(std::span<const double> u) const {
    const int d = dim();
    double v = 1.0;
    for (std::size_t i = 0; i < factors.size(); ++i) v *= factors[i]->value(u.subspan(i * d, d));
    return v;
}

double ProductTestFunction::value_at(const LabeledTuple& x, const Torus& T) const {
    std::vector<double> u(T.dim());
    double v = 1.0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        T.position(x[i], u);
        v *= factors[i]->value(u);
    }
    return v;
}

ProductTestFunction tensor(const ProductTestFunction& G, const ProductTestFunction& H) {
    ProductTestFunction out = G;
    out.factors.insert(out.factors.end(), H.factors.begin(), H.factors.end());
    return out;
}

int TestFunctionSum::arity() const {
    if (terms.empty()) return 0;
    const int k = terms.front().fn.arity();
    for (const auto& t : terms)
        if (t.fn.arity() != k) throw DomainError("test function terms with different arity");
    return k;
}

double TestFunctionSum::value(std::span<const double> u) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.coef * t.fn.value(u);
    return s;
}

double TestFunctionSum::value_at(const LabeledTuple& x, const Torus& T) const {
    double s = 0.0;
    for (const auto& t : terms) s += t.coef * t.fn.value_at(x, T);
    return s;
}

std::vector<double> tabulate(const Factor& g, const Torus& T) {
    std::vector<double> out(T.num_sites());
    std::vector<double> u(T.dim());
    for (std::size_t i = 0; i < out.size(); ++i) {
        T.position(Site{static_cast<std::uint32_t>(i)}, u);
        out[i] = g.value(u);
    }
    return out;
}

namespace {

template <class Fn>
double generator_on(const Fn& value_at, std::size_t k, const LabeledTuple& x, const ModelParams& p, const Torus& T) {
    if (x.size() != k) throw DomainError("tuple length does not match test function arity");
    const double rate = p.time_scale();
    const double g0 = value_at(x);
    LabeledTuple y = x;
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (Site z : T.neighbors(x[i])) {
            y[i] = z;
            s += rate * p.alpha * (value_at(y) - g0);
        }
        y[i] = x[i];
    }
    if (p.sigma != 0) {
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                if (i == j) continue;
                const int m = T.edge_multiplicity(x[i], x[j]);
                if (m == 0) continue;
                y[i] = x[j];
                s += p.sigma * m * rate * (value_at(y) - g0);
                y[i] = x[i];
            }
    }
    return s;
}

}  // namespace

double discrete_generator_apply(const ProductTestFunction& G, const LabeledTuple& x, const ModelParams& p) {
    const Torus T = p.torus();
    return generator_on([&](const LabeledTuple& y) { return G.value_at(y, T); }, G.factors.size(), x, p, T);
}

double discrete_generator_apply(const TestFunctionSum& G, const LabeledTuple& x, const ModelParams& p) {
    const Torus T = p.torus();
    return generator_on([&](const LabeledTuple& y) { return G.value_at(y, T); }, G.arity(), x, p, T);
}

double continuum_generator_apply(const ProductTestFunction& G, std::span<const double> u, const ModelParams& p) {
    const int d = G.dim();
    const std::size_t k = G.factors.size();
    if (u.size() != k * d) throw DomainError("point length does not match k*d");
    std::vector<double> vals(k), laps(k);
    for (std::size_t i = 0; i < k; ++i) {
        vals[i] = G.factors[i]->value(u.subspan(i * d, d));
        laps[i] = G.factors[i]->laplacian(u.subspan(i * d, d));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double term = laps[i];
        for (std::size_t l = 0; l < k; ++l)
            if (l != i) term *= vals[l];
        s += term;
    }
    return p.diffusivity() * s;
}

double discrete_gradient(const Factor& g, Site xi, Site xj, const Torus& T) {
    if (!T.adjacent(xi, xj)) return 0.0;
    return T.side() * (g.value(T.position(xj)) - g.value(T.position(xi)));
}

double discrete_gradient_pair(const Factor& gi, const Factor& gj, Site xi, Site xj, const Torus& T) {
    return discrete_gradient(gi, xi, xj, T) * discrete_gradient(gj, xj, xi, T);
}

ConsistencyGap generator_consistency_gap(const ProductTestFunction& G, const ModelParams& p) {
    const Torus T = p.torus();
    const std::size_t n = T.num_sites();
    const double rate = p.time_scale() * p.alpha;
    const double D = p.diffusivity();
    ConsistencyGap gap;
    std::vector<double> lap(n), u(T.dim());
    for (const auto& g : G.factors) {
        if (g->is_constant()) continue;
        const auto tab = tabulate(*g, T);
        kernels::stencil(tab.data(), T.neighbor_table().data(), T.degree(), n, lap.data());
        double sup = 0.0, sum = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            T.position(Site{static_cast<std::uint32_t>(x)}, u);
            const double diff = std::fabs(rate * lap[x] - D * g->laplacian(u));
            sup = std::max(sup, diff);
            sum += diff;
        }
        gap.sup += sup;
        gap.mean += sum / static_cast<double>(n);
    }
    return gap;
}

}  // namespace fieldslab
