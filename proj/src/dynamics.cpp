#include "fieldslab/dynamics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <string>

namespace fieldslab {

double jump_rate(const Configuration& eta, Site x, Site y, const ModelParams& p) {
    return jump_rate(eta, x, y, p, p.torus());
}

double jump_rate(const Configuration& eta, Site x, Site y, const ModelParams& p, const Torus& T) {
    if (!T.adjacent(x, y)) return 0.0;
    const double w = p.alpha + p.sigma * static_cast<double>(eta[y]);
    if (w <= 0.0) return 0.0;
    return p.time_scale() * static_cast<double>(eta[x]) * w;
}

Simulator::Simulator(const ModelParams& p, Configuration eta0, Philox rng, SimOptions opts)
    : p_(p), T_(p.torus()), eta_(std::move(eta0)), rng_(std::move(rng)), opts_(opts) {
    p_.validate();
    if (eta_.size() != T_.num_sites()) throw DomainError("configuration size does not match the torus");
    require_admissible(eta_, p_.sigma, p_.alpha);
    for (auto v : eta_.occupancy())
        if (v > opts_.occupancy_ceiling) throw RateOverflow("initial occupancy above the ceiling");
    const std::size_t n = T_.num_sites();
    rate_.assign(n, 0);
    tree_.assign(n + 1, 0);
    while (top_bit_ * 2 <= n) top_bit_ *= 2;
    for (std::uint32_t x = 0; x < n; ++x) {
        rate_[x] = site_weight(x);
        fenwick_add(x, rate_[x]);
        total_ += rate_[x];
    }
}

double Simulator::total_rate() const { return p_.time_scale() * static_cast<double>(total_); }

std::int64_t Simulator::target_weight(std::uint32_t y) const {
    const std::int64_t w = p_.alpha + static_cast<std::int64_t>(p_.sigma) * eta_[Site{y}];
    return w > 0 ? w : 0;
}

std::int64_t Simulator::site_weight(std::uint32_t x) const {
    const std::int64_t n = eta_[Site{x}];
    if (n == 0) return 0;
    std::int64_t s = 0;
    for (Site y : T_.neighbors(Site{x})) s += target_weight(y.id);
    return n * s;
}

void Simulator::fenwick_add(std::size_t i, std::int64_t v) {
    for (std::size_t j = i + 1; j < tree_.size(); j += j & (~j + 1)) tree_[j] += v;
}

// Smallest index i with prefix(i+1) > u, for 0 <= u < total.
std::size_t Simulator::fenwick_find(std::int64_t u) const {
    std::size_t pos = 0;
    for (std::size_t b = top_bit_; b > 0; b >>= 1) {
        const std::size_t nxt = pos + b;
        if (nxt < tree_.size() && tree_[nxt] <= u) {
            pos = nxt;
            u -= tree_[nxt];
        }
    }
    return pos;
}

void Simulator::refresh(std::uint32_t x) {
    const std::int64_t r = site_weight(x);
    if (r != rate_[x]) {
        fenwick_add(x, r - rate_[x]);
        total_ += r - rate_[x];
        rate_[x] = r;
    }
}

bool Simulator::step(double t_end, Event& ev) {
    if (total_ == 0 || t_ >= t_end) {
        t_ = std::max(t_, t_end);
        return false;
    }
    // The clock drawn before a snapshot is kept, so the path does not depend
    // on which snapshot times were requested.
    if (next_ < 0.0) next_ = t_ - std::log(rng_.uniform_pos()) / total_rate();
    if (next_ > t_end) {
        t_ = t_end;
        return false;
    }
    t_ = next_;
    next_ = -1.0;
    std::uniform_int_distribution<std::int64_t> pick(0, total_ - 1);
    const std::uint32_t x = static_cast<std::uint32_t>(fenwick_find(pick(rng_)));
    const auto nb = T_.neighbors(Site{x});
    std::int64_t wsum = 0;
    for (Site y : nb) wsum += target_weight(y.id);
    std::uniform_int_distribution<std::int64_t> pick_y(0, wsum - 1);
    std::int64_t v = pick_y(rng_);
    Site y = nb.back();
    for (Site c : nb) {
        const std::int64_t w = target_weight(c.id);
        if (v < w) {
            y = c;
            break;
        }
        v -= w;
    }
    if (eta_[y] >= opts_.occupancy_ceiling)
        throw RateOverflow("occupancy ceiling " + std::to_string(opts_.occupancy_ceiling) + " exceeded at site " +
                           std::to_string(y.id) + " (t=" + std::to_string(t_) + ")");
    eta_.move(Site{x}, y);
#ifndef NDEBUG
    assert(is_admissible(eta_, p_.sigma, p_.alpha));
#endif
    refresh(x);
    refresh(y.id);
    for (Site s : T_.neighbors(Site{x})) refresh(s.id);
    for (Site s : T_.neighbors(y)) refresh(s.id);
    ++nevents_;
    ev = Event{t_, Site{x}, y};
    return true;
}

Trajectory simulate(const Configuration& eta0, double t_end, const ModelParams& p, Philox rng,
                    std::span<const double> snapshot_times, const SnapshotObserver& observer, bool record,
                    SimOptions opts) {
    if (!(t_end >= 0.0)) throw DomainError("t_end must be non-negative");
    std::vector<double> snaps(snapshot_times.begin(), snapshot_times.end());
    std::sort(snaps.begin(), snaps.end());
    for (double s : snaps)
        if (s < 0.0 || s > t_end) throw DomainError("snapshot time outside [0, t_end]");
    Simulator sim(p, eta0, std::move(rng), opts);
    Trajectory tr;
    tr.initial = eta0;
    tr.t_end = t_end;
#ifndef NDEBUG
    const std::uint64_t total0 = eta0.total();
#endif
    auto on_event = [&](const Event& ev) {
        if (record) tr.events.push_back(ev);
#ifndef NDEBUG
        assert(sim.config().total() == total0);
#endif
    };
    for (double s : snaps) {
        sim.run_until(s, on_event);
        if (observer) observer(s, sim.config());
    }
    sim.run_until(t_end, on_event);
    tr.terminal = sim.config();
    return tr;
}

}  // namespace fieldslab
