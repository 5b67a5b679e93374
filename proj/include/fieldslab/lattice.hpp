#pragma once
// Torus geometry, occupation configurations and labeled tuples.

#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fieldslab {

// Flat site index; coordinates are recovered through the owning Torus.
struct Site {
    std::uint32_t id = 0;
    auto operator<=>(const Site&) const = default;
};

class Torus {
public:
    Torus(int d, int N);

    int dim() const { return d_; }
    int side() const { return N_; }
    std::size_t num_sites() const { return nsites_; }
    int degree() const { return 2 * d_; }

    Site site(std::span<const int> coords) const;
    std::vector<int> coords(Site s) const;
    // Macroscopic position x/N in [0,1)^d.
    void position(Site s, std::span<double> u) const;
    std::vector<double> position(Site s) const;

    // 2d neighbours, order: +e_0, -e_0, +e_1, -e_1, ...  For N = 2 the two
    // directions along an axis coincide and both are returned.
    std::span<const Site> neighbors(Site s) const {
        return {nbr_.data() + static_cast<std::size_t>(s.id) * degree(), static_cast<std::size_t>(degree())};
    }
    // Number of directed edges from a to b (0, 1, or 2 when N = 2).
    int edge_multiplicity(Site a, Site b) const;
    bool adjacent(Site a, Site b) const { return edge_multiplicity(a, b) > 0; }

    const std::vector<std::int32_t>& neighbor_table() const { return nbr_idx_; }

private:
    int d_;
    int N_;
    std::size_t nsites_;
    std::vector<std::size_t> stride_;
    std::vector<Site> nbr_;
    std::vector<std::int32_t> nbr_idx_;
};

std::vector<Site> neighbors(Site s, const Torus& T);

class Configuration {
public:
    using value_type = std::uint32_t;

    Configuration() = default;
    explicit Configuration(std::size_t nsites) : occ_(nsites, 0) {}
    explicit Configuration(std::vector<value_type> occ);

    std::size_t size() const { return occ_.size(); }
    value_type operator[](Site s) const { return occ_[s.id]; }
    value_type at(std::size_t i) const { return occ_.at(i); }
    std::uint64_t total() const { return total_; }
    const std::vector<value_type>& occupancy() const { return occ_; }

    void set(Site s, value_type n);
    void add(Site s, value_type n = 1);
    // Moves one particle from z to w. Throws when z is empty.
    void move(Site z, Site w);

    bool operator==(const Configuration&) const = default;

private:
    std::vector<value_type> occ_;
    std::uint64_t total_ = 0;
};

bool is_admissible(const Configuration& eta, int sigma, int alpha);
void require_admissible(const Configuration& eta, int sigma, int alpha);

using LabeledTuple = std::vector<Site>;

// True iff no site holds more than alpha labels when sigma = -1.
bool is_admissible(const LabeledTuple& x, int sigma, int alpha);
// Occupation counts of a tuple (the unlabeled dual configuration).
Configuration tuple_counts(const LabeledTuple& x, std::size_t nsites);

class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace fieldslab
