#include "fieldslab/lattice.hpp"

#include <algorithm>
#include <limits>

namespace fieldslab {

Torus::Torus(int d, int N) : d_(d), N_(N) {
    if (d < 1 || N < 1) throw DomainError("torus needs d >= 1 and N >= 1");
    long double n = 1;
    for (int j = 0; j < d; ++j) n *= N;
    if (n > static_cast<long double>(std::numeric_limits<std::int32_t>::max()))
        throw DomainError("torus too large");
    nsites_ = static_cast<std::size_t>(n);
    stride_.resize(d);
    std::size_t s = 1;
    for (int j = 0; j < d; ++j) {
        stride_[j] = s;
        s *= static_cast<std::size_t>(N);
    }
    nbr_.resize(nsites_ * degree());
    nbr_idx_.resize(nsites_ * degree());
    for (std::size_t i = 0; i < nsites_; ++i) {
        for (int j = 0; j < d; ++j) {
            const std::size_t c = (i / stride_[j]) % N;
            const std::size_t base = i - c * stride_[j];
            const std::size_t up = base + ((c + 1) % N) * stride_[j];
            const std::size_t dn = base + ((c + N - 1) % N) * stride_[j];
            nbr_[i * degree() + 2 * j] = Site{static_cast<std::uint32_t>(up)};
            nbr_[i * degree() + 2 * j + 1] = Site{static_cast<std::uint32_t>(dn)};
        }
    }
    for (std::size_t i = 0; i < nbr_.size(); ++i) nbr_idx_[i] = static_cast<std::int32_t>(nbr_[i].id);
}

Site Torus::site(std::span<const int> coords) const {
    if (static_cast<int>(coords.size()) != d_) throw DomainError("coordinate length does not match dimension");
    std::size_t id = 0;
    for (int j = 0; j < d_; ++j) {
        int c = coords[j] % N_;
        if (c < 0) c += N_;
        id += static_cast<std::size_t>(c) * stride_[j];
    }
    return Site{static_cast<std::uint32_t>(id)};
}

std::vector<int> Torus::coords(Site s) const {
    std::vector<int> c(d_);
    for (int j = 0; j < d_; ++j) c[j] = static_cast<int>((s.id / stride_[j]) % N_);
    return c;
}

void Torus::position(Site s, std::span<double> u) const {
    for (int j = 0; j < d_; ++j)
        u[j] = static_cast<double>((s.id / stride_[j]) % N_) / N_;
}

std::vector<double> Torus::position(Site s) const {
    std::vector<double> u(d_);
    position(s, u);
    return u;
}

int Torus::edge_multiplicity(Site a, Site b) const {
    int m = 0;
    for (Site y : neighbors(a)) m += (y == b);
    return m;
}

std::vector<Site> neighbors(Site s, const Torus& T) {
    auto n = T.neighbors(s);
    return {n.begin(), n.end()};
}

Configuration::Configuration(std::vector<value_type> occ) : occ_(std::move(occ)) {
    for (auto v : occ_) total_ += v;
}

void Configuration::set(Site s, value_type n) {
    total_ -= occ_[s.id];
    occ_[s.id] = n;
    total_ += n;
}

void Configuration::add(Site s, value_type n) {
    if (occ_[s.id] > std::numeric_limits<value_type>::max() - n) throw std::overflow_error("occupancy overflow");
    occ_[s.id] += n;
    total_ += n;
}

void Configuration::move(Site z, Site w) {
    if (occ_[z.id] == 0) throw DomainError("move from an empty site");
    if (occ_[w.id] == std::numeric_limits<value_type>::max()) throw std::overflow_error("occupancy overflow");
    --occ_[z.id];
    ++occ_[w.id];
}

bool is_admissible(const Configuration& eta, int sigma, int alpha) {
    if (sigma != -1) return true;
    const auto& o = eta.occupancy();
    return std::all_of(o.begin(), o.end(), [alpha](auto v) { return v <= static_cast<std::uint32_t>(alpha); });
}

void require_admissible(const Configuration& eta, int sigma, int alpha) {
    if (!is_admissible(eta, sigma, alpha)) throw DomainError("configuration exceeds the exclusion cap");
}

bool is_admissible(const LabeledTuple& x, int sigma, int alpha) {
    if (sigma != -1) return true;
    for (std::size_t i = 0; i < x.size(); ++i) {
        int c = 0;
        for (std::size_t j = 0; j < x.size(); ++j) c += (x[j] == x[i]);
        if (c > alpha) return false;
    }
    return true;
}

Configuration tuple_counts(const LabeledTuple& x, std::size_t nsites) {
    Configuration c(nsites);
    for (Site s : x) c.add(s);
    return c;
}

}  // namespace fieldslab

#include "fieldslab/params.hpp"
#include <cmath>

namespace fieldslab {

void ModelParams::validate() const {
    if (sigma < -1 || sigma > 1) throw DomainError("sigma must be -1, 0 or +1");
    if (alpha < 1) throw DomainError("alpha must be a positive integer");
    if (d < 1) throw DomainError("d must be positive");
    if (N < 2) throw DomainError("N must be at least 2");
    if (!(bond_rate > 0) || !std::isfinite(bond_rate)) throw DomainError("bond_rate must be positive");
}

void validate_theta(int sigma, int alpha, double theta) {
    (void)alpha;
    if (!std::isfinite(theta) || theta < 0) throw DomainError("theta must be a non-negative real");
    if (sigma == -1 && theta > 1) throw DomainError("exclusion requires theta in [0,1]");
}

}  // namespace fieldslab
