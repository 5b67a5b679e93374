#pragma once
// Continuous-time simulation of the exclusion / independent-walker /
// inclusion dynamics on the torus, sped up by N^2 (t is macroscopic time).

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fieldslab/lattice.hpp"
#include "fieldslab/params.hpp"
#include "fieldslab/rng.hpp"

namespace fieldslab {

// Rate of one particle jumping along one directed bond x -> y:
// bond_rate N^2 eta(x)(alpha + sigma eta(y)) if y is a neighbour of x, else 0.
// On N = 2 the two bonds between x and y each carry this rate.
double jump_rate(const Configuration& eta, Site x, Site y, const ModelParams& p);
double jump_rate(const Configuration& eta, Site x, Site y, const ModelParams& p, const Torus& T);

struct Event {
    double t;
    Site from;
    Site to;
};

struct Trajectory {
    Configuration initial;
    std::vector<Event> events;
    Configuration terminal;
    double t_end = 0.0;
};

struct SimOptions {
    std::uint32_t occupancy_ceiling = 1'000'000;
};

class RateOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Simulator {
public:
    Simulator(const ModelParams& p, Configuration eta0, Philox rng, SimOptions opts = {});

    double time() const { return t_; }
    const Configuration& config() const { return eta_; }
    const Torus& torus() const { return T_; }
    std::uint64_t events() const { return nevents_; }
    // Total jump rate out of the current state.
    double total_rate() const;

    // Advances to the next event if it happens no later than t_end; otherwise
    // moves the clock to t_end and returns false.
    bool step(double t_end, Event& ev);

    template <class OnEvent>
    void run_until(double t_end, OnEvent&& on_event) {
        Event ev;
        while (step(t_end, ev)) on_event(ev);
    }
    void run_until(double t_end) {
        run_until(t_end, [](const Event&) {});
    }

private:
    std::int64_t site_weight(std::uint32_t x) const;
    std::int64_t target_weight(std::uint32_t y) const;
    void refresh(std::uint32_t x);
    void fenwick_add(std::size_t i, std::int64_t v);
    std::size_t fenwick_find(std::int64_t u) const;

    ModelParams p_;
    Torus T_;
    Configuration eta_;
    Philox rng_;
    SimOptions opts_;
    double t_ = 0.0;
    double next_ = -1.0;  // pending event time, < 0 when none
    std::uint64_t nevents_ = 0;
    std::vector<std::int64_t> rate_;
    std::vector<std::int64_t> tree_;
    std::int64_t total_ = 0;
    std::size_t top_bit_ = 1;
};

using SnapshotObserver = std::function<void(double t, const Configuration& eta)>;

// Runs one trajectory to t_end.  The observer sees the state at every
// snapshot time (right-continuous).  Events are logged when record is set.
Trajectory simulate(const Configuration& eta0, double t_end, const ModelParams& p, Philox rng,
                    std::span<const double> snapshot_times = {}, const SnapshotObserver& observer = {},
                    bool record = false, SimOptions opts = {});

}  // namespace fieldslab
