#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmpk/errors.hpp"
#include "dmpk/noise.hpp"

namespace dmpk {

/// A diagonal-noise SDE  dx_k = drift_k(x) ds + diffusion_k(x) dB_k  whose
/// coordinates are pairwise distinct and confined to (lower, upper).
template <class M>
concept EulerModel = requires(const M& m, std::span<const double> x, std::span<double> out) {
  { m.dimension() } -> std::convertible_to<std::size_t>;
  { m.lower_bound() } -> std::convertible_to<double>;
  { m.upper_bound() } -> std::convertible_to<double>;
  m.evaluate(x, out, out);
};

/// Models that also accept the distances to the upper bound, which the
/// integrator keeps at full relative precision next to the coordinates.
template <class M>
concept UpperGapModel = EulerModel<M> &&
    requires(const M& m, std::span<const double> x, std::span<double> out) { m.evaluate(x, x, out, out); };

/// Models whose nearest-neighbour gap behaves, close to a collision, like a
/// Bessel process of the returned integer dimension: the singular part of
/// drift_j - drift_i is (dim - 1) (diffusion_i^2 + diffusion_j^2) / (2 gap)
/// up to a bounded remainder.
template <class M>
concept PairBesselModel = EulerModel<M> && requires(const M& m) {
  { m.pair_dimension() } -> std::convertible_to<int>;
};

struct StepControl {
  double eta = 0.1;
  int max_halvings = 40;
  /// Deepest level the guard alone may request; below it only rejections halve.
  int guard_depth = 24;
  /// A neighbour pair whose gap is below pair_ratio times both outer gaps is
  /// advanced as a pair (see AdaptiveEuler). Zero disables; must be below 1.
  double pair_ratio = 0.125;
};

struct StepStats {
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  /// Smallest gap (consecutive or boundary) over all accepted states.
  double min_gap = std::numeric_limits<double>::infinity();
  int deepest_level = 0;
  /// Steps where the guard asked for more than guard_depth halvings.
  std::uint64_t guard_capped = 0;
  /// Accepted steps that advanced at least one close pair as a pair.
  std::uint64_t pair_steps = 0;
};

/// Euler-Maruyama with a gap guard, driven by a dyadic BrownianPath.
///
/// The state holds `blocks` copies of the model (each of dimension n) driven
/// by the same n Brownian motions; with two blocks this is the synchronous
/// coupling used for ordering tests. Each accepted step of length dt
/// satisfies, for every coordinate k with local gap g_k (distance to its
/// nearest neighbour),
///     |drift_k| dt <= eta g_k   and   |diffusion_k| sqrt(dt) <= eta g_k,
/// and drift pointing at a bound moves at most eta times the distance to it.
/// With several blocks, the difference between the same coordinate of
/// neighbouring blocks obeys the same two bounds relative to its own size.
/// The diffusion is not bounded by the distance to a bound: near T = 1 the
/// distance behaves like a critical squared Bessel process, which comes
/// arbitrarily close without hitting, so such a bound has no finite depth.
/// The guard is capped at guard_depth halvings and rejection takes over below.
///
/// For PairBesselModel models, a close neighbour pair (gap below pair_ratio
/// times both outer gaps) is moved in mean and gap coordinates instead: the
/// mean by Euler, the gap r by
///     r' = |(r + b dt + dX) e_1 + sigma dV|,
/// the Bessel step with frozen coefficients. Here dX is the pair's relative
/// noise, sigma^2 its rate, b the bounded part of the gap drift and dV has
/// dim - 1 components taken from an auxiliary Brownian tree (one block of
/// channels per pair slot, shared by all blocks). For these two coordinates
/// the guard sees only the outer gaps, so a near-collision at beta = 1 (a
/// critical Bessel gap) does not force unbounded refinement.
///
/// With a finite upper bound, each coordinate is stored twice: as x and as
/// upper - x. Whichever is smaller is authoritative and the other is
/// recomputed from it, so coordinates close to the upper bound keep their
/// relative precision, and differences of two such coordinates are taken
/// from the stored distances.
///
/// A step at level l ends on the next point of the grid h / 2^l (h the coarse
/// step), so it is at most h / 2^l long and both end points are dyadic: every
/// increment is a difference of values of the same Brownian tree. A proposal
/// that changes the ordering, touches a bound or produces a tie is rejected
/// and the step halved.
template <EulerModel Model>
class AdaptiveEuler {
 public:
  AdaptiveEuler(const Model& model, std::size_t blocks, BrownianPath noise, StepControl control,
                std::vector<double> x0, std::vector<std::size_t> channel_map = {})
      : model_(model),
        n_(model.dimension()),
        blocks_(blocks),
        lo_(model.lower_bound()),
        hi_(model.upper_bound()),
        half_(std::isfinite(lo_) && std::isfinite(hi_) ? 0.5 * (hi_ - lo_) : std::numeric_limits<double>::infinity()),
        noise_(std::move(noise)),
        control_(control),
        x_(std::move(x0)),
        map_(std::move(channel_map)) {
    if (x_.size() != n_ * blocks_) throw DomainError("initial state has wrong length");
    if (noise_.channels() != n_) throw DomainError("noise channel count does not match model");
    if (control_.max_halvings < 1 || control_.max_halvings > kMaxLevel) {
      throw DomainError("max_halvings out of range");
    }
    if (!(control_.pair_ratio >= 0.0 && control_.pair_ratio < 1.0)) throw DomainError("pair_ratio must be in [0, 1)");
    if (map_.empty()) {
      map_.resize(n_);
      std::iota(map_.begin(), map_.end(), std::size_t{0});
    }
    if (map_.size() != n_) throw DomainError("channel map has wrong length");
    c_.resize(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) c_[i] = hi_ - x_[i];
    order_.resize(n_ * blocks_);
    for (std::size_t b = 0; b < blocks_; ++b) {
      auto first = order_.begin() + static_cast<std::ptrdiff_t>(b * n_);
      std::iota(first, first + static_cast<std::ptrdiff_t>(n_), b * n_);
      std::sort(first, first + static_cast<std::ptrdiff_t>(n_),
                [this](std::size_t i, std::size_t j) { return x_[i] < x_[j]; });
    }
    if (!admissible(x_, c_)) throw DomainError("initial state is not strictly ordered inside the domain");
    if constexpr (PairBesselModel<Model>) {
      const int dim = model.pair_dimension();
      if (control_.pair_ratio > 0.0 && dim > 1 && n_ > 1) {
        aux_dim_ = static_cast<std::size_t>(dim - 1);
        aux_.emplace(BrownianPath(noise_.path().stream(), (n_ - 1) * aux_dim_, kAuxLane));
        a_now_.resize((n_ - 1) * aux_dim_);
        a_next_.resize((n_ - 1) * aux_dim_);
      }
    }
    partner_.assign(x_.size(), kNone);
    drift_.resize(x_.size());
    diffusion_.resize(x_.size());
    effective_.resize(x_.size());
    spread_.resize(x_.size());
    delta_.resize(x_.size());
    px_.resize(x_.size());
    pc_.resize(x_.size());
    dW_.resize(n_);
    w_now_.assign(n_, 0.0);
    w_next_.resize(n_);
    stats_.min_gap = min_gap(x_, c_);
  }

  double time() const noexcept { return time_; }
  std::span<const double> state() const noexcept { return x_; }
  /// upper - x for every coordinate, accurate close to the upper bound.
  std::span<const double> upper_gaps() const noexcept { return c_; }
  const StepStats& stats() const noexcept { return stats_; }

  /// Opens a segment ending at s_target, cut into coarse intervals of length <= dt_base.
  void set_target(double s_target, double dt_base) {
    if (s_target < time_) throw DomainError("cannot integrate backwards");
    const double span = s_target - time_;
    segment_start_ = time_;
    target_ = s_target;
    coarse_in_segment_ = 0;
    position_ = 0;
    std::fill(w_now_.begin(), w_now_.end(), 0.0);
    coarse_count_ = span > 0.0 ? static_cast<std::uint64_t>(std::ceil(span / dt_base - 1e-9)) : 0;
    if (span > 0.0 && coarse_count_ == 0) coarse_count_ = 1;
    coarse_step_ = coarse_count_ > 0 ? span / static_cast<double>(coarse_count_) : 0.0;
  }

  /// One accepted step towards the current target. Returns false once the
  /// target has been reached.
  bool step() {
    if (coarse_in_segment_ >= coarse_count_) return false;
    for (std::size_t b = 0; b < blocks_; ++b) {
      if constexpr (UpperGapModel<Model>) {
        model_.evaluate(block(x_, b), block(c_, b), block(drift_, b), block(diffusion_, b));
      } else {
        model_.evaluate(block(x_, b), block(drift_, b), block(diffusion_, b));
      }
    }
    find_pairs();
    const double dt_guard = guard_step();
    constexpr std::uint64_t full = std::uint64_t{1} << kMaxLevel;
    int level = 0;
    const int cap = std::min(control_.guard_depth, control_.max_halvings);
    while (level < cap && coarse_step_ * std::ldexp(1.0, -level) > dt_guard) ++level;
    if (level == cap && coarse_step_ * std::ldexp(1.0, -level) > dt_guard) ++stats_.guard_capped;

    if (!pairs_.empty()) aux_->value(coarse_index_, coarse_step_, position_, a_now_);
    std::uint64_t previous = 0;
    for (;; ++level) {
      if (level > control_.max_halvings) {
        throw StepFailure("adaptive step exceeded max_halvings at s=" + std::to_string(time_), time_, x_);
      }
      // Step to the next grid point of this level; from an unaligned
      // position this is shorter than the nominal h / 2^level.
      const std::uint64_t unit = std::uint64_t{1} << (kMaxLevel - level);
      const std::uint64_t next = (position_ / unit + 1) * unit;
      if (next == previous) continue;
      previous = next;
      const double dt = coarse_step_ * std::ldexp(static_cast<double>(next - position_), -kMaxLevel);
      noise_.value(coarse_index_, coarse_step_, next, w_next_);
      for (std::size_t k = 0; k < n_; ++k) dW_[k] = w_next_[k] - w_now_[k];
      for (std::size_t b = 0; b < blocks_; ++b) {
        for (std::size_t k = 0; k < n_; ++k) {
          const std::size_t i = b * n_ + k;
          delta_[i] = drift_[i] * dt + diffusion_[i] * dW_[map_[k]];
        }
      }
      if (!pairs_.empty()) {
        aux_->value(coarse_index_, coarse_step_, next, a_next_);
        for (const Pair& pr : pairs_) pair_increment(pr, dt);
      }
      for (std::size_t i = 0; i < x_.size(); ++i) {
        px_[i] = x_[i] + delta_[i];
        pc_[i] = c_[i] - delta_[i];
        if (pc_[i] < half_) {
          px_[i] = hi_ - pc_[i];
        } else {
          pc_[i] = hi_ - px_[i];
        }
      }
      if (admissible(px_, pc_)) {
        x_.swap(px_);
        c_.swap(pc_);
        w_now_.swap(w_next_);
        position_ = next;
        ++stats_.accepted;
        stats_.deepest_level = std::max(stats_.deepest_level, level);
        stats_.min_gap = std::min(stats_.min_gap, min_gap(x_, c_));
        if (!pairs_.empty()) ++stats_.pair_steps;
        break;
      }
      ++stats_.rejected;
    }

    if (position_ == full) {
      position_ = 0;
      std::fill(w_now_.begin(), w_now_.end(), 0.0);
      ++coarse_in_segment_;
      ++coarse_index_;
    }
    if (coarse_in_segment_ >= coarse_count_) {
      time_ = target_;
    } else {
      time_ = segment_start_ + coarse_step_ * (static_cast<double>(coarse_in_segment_) +
                                               std::ldexp(static_cast<double>(position_), -kMaxLevel));
    }
    return true;
  }

  void advance_to(double s_target, double dt_base) {
    set_target(s_target, dt_base);
    while (step()) {
    }
  }

 private:
  static constexpr int kMaxLevel = BrownianPath::kResolution;
  static constexpr std::uint32_t kAuxLane = 1u << 20;
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  struct Pair {
    std::size_t slot;  // sorted position of the lower member
    std::size_t lo, hi;
    double rate;       // sigma^2
    double gap_drift;  // b
  };

  template <class V>
  auto block(V& v, std::size_t b) const {
    return std::span(v).subspan(b * n_, n_);
  }

  // x[j] - x[i], from the upper distances when both are close to the bound.
  double diff(std::span<const double> x, std::span<const double> c, std::size_t i, std::size_t j) const {
    return c[i] < half_ && c[j] < half_ ? c[i] - c[j] : x[j] - x[i];
  }

  // Marks close neighbour pairs and fills the drift used by the guard.
  void find_pairs() {
    pairs_.clear();
    std::copy(drift_.begin(), drift_.end(), effective_.begin());
    std::fill(spread_.begin(), spread_.end(), 0.0);
    std::fill(partner_.begin(), partner_.end(), kNone);
    if (!aux_) return;
    const double ratio = control_.pair_ratio;
    const double dim = static_cast<double>(aux_dim_ + 1);
    for (std::size_t b = 0; b < blocks_; ++b) {
      const std::size_t* ord = order_.data() + b * n_;
      for (std::size_t p = 0; p + 1 < n_; ++p) {
        const std::size_t i = ord[p], j = ord[p + 1];
        const double gap = diff(x_, c_, i, j);
        const double below = p == 0 ? x_[i] - lo_ : diff(x_, c_, ord[p - 1], i);
        const double above = p + 2 == n_ ? c_[j] : diff(x_, c_, j, ord[p + 2]);
        if (!(gap < ratio * below && gap < ratio * above)) continue;
        const double rate = diffusion_[i] * diffusion_[i] + diffusion_[j] * diffusion_[j];
        const double b_gap = drift_[j] - drift_[i] - 0.5 * (dim - 1.0) * rate / gap;
        pairs_.push_back({p, i, j, rate, b_gap});
        partner_[i] = j;
        partner_[j] = i;
        effective_[i] = effective_[j] = 0.5 * (drift_[i] + drift_[j]);
        spread_[i] = spread_[j] = 0.5 * std::abs(b_gap);
      }
    }
  }

  // Replaces the Euler increments of a close pair by the mean/gap step.
  void pair_increment(const Pair& pr, double dt) {
    const std::size_t base = pr.lo - pr.lo % n_;
    const double di = diffusion_[pr.lo] * dW_[map_[pr.lo - base]];
    const double dj = diffusion_[pr.hi] * dW_[map_[pr.hi - base]];
    const double gap = diff(x_, c_, pr.lo, pr.hi);
    const double radial = gap + pr.gap_drift * dt + (dj - di);
    double sum = radial * radial;
    const double sigma = std::sqrt(pr.rate);
    for (std::size_t a = 0; a < aux_dim_; ++a) {
      const std::size_t c = pr.slot * aux_dim_ + a;
      const double z = sigma * (a_next_[c] - a_now_[c]);
      sum += z * z;
    }
    const double mean = 0.5 * (drift_[pr.lo] + drift_[pr.hi]) * dt + 0.5 * (di + dj);
    const double widen = 0.5 * (std::sqrt(sum) - gap);
    delta_[pr.lo] = mean - widen;
    delta_[pr.hi] = mean + widen;
  }

  double guard_step() const {
    const double eta = control_.eta;
    const double inf = std::numeric_limits<double>::infinity();
    double dt = inf;
    for (std::size_t b = 0; b < blocks_; ++b) {
      for (std::size_t p = 0; p < n_; ++p) {
        const std::size_t i = order_[b * n_ + p];
        const double v = effective_[i];
        const double speed = std::abs(v) + spread_[i];
        const double d = std::abs(diffusion_[i]);
        const std::size_t prev = p == 0 ? kNone : order_[b * n_ + p - 1];
        const std::size_t next = p + 1 == n_ ? kNone : order_[b * n_ + p + 1];
        const double below = prev == kNone || partner_[i] == prev ? inf : diff(x_, c_, prev, i);
        const double above = next == kNone || partner_[i] == next ? inf : diff(x_, c_, i, next);
        const double room = eta * std::min(below, above);
        if (std::isfinite(room)) {
          if (speed != 0.0) dt = std::min(dt, room / speed);
          if (d > 0.0) dt = std::min(dt, (room / d) * (room / d));
        }
        if (p == 0 && v < 0.0) dt = std::min(dt, eta * (x_[i] - lo_) / -v);
        if (p + 1 == n_ && v > 0.0) dt = std::min(dt, eta * c_[i] / v);
      }
    }
    // Coupled copies: the difference of coordinate k between neighbouring
    // blocks must move by at most eta times itself.
    for (std::size_t b = 0; b + 1 < blocks_; ++b) {
      for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t i = b * n_ + k, j = i + n_;
        const double room = eta * std::abs(diff(x_, c_, i, j));
        if (room == 0.0) continue;
        const double dv = std::abs(effective_[j] - effective_[i]) + spread_[i] + spread_[j];
        const double dd = std::abs(diffusion_[j] - diffusion_[i]);
        if (dv > 0.0) dt = std::min(dt, room / dv);
        if (dd > 0.0) dt = std::min(dt, (room / dd) * (room / dd));
      }
    }
    return dt;
  }

  bool admissible(std::span<const double> x, std::span<const double> c) const {
    for (std::size_t b = 0; b < blocks_; ++b) {
      const std::size_t* ord = order_.data() + b * n_;
      if (!(x[ord[0]] > lo_) || !(c[ord[n_ - 1]] > 0.0)) return false;
      for (std::size_t p = 0; p + 1 < n_; ++p) {
        if (!(diff(x, c, ord[p], ord[p + 1]) > 0.0)) return false;
      }
    }
    return true;
  }

  double min_gap(std::span<const double> x, std::span<const double> c) const {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < blocks_; ++b) {
      const std::size_t* ord = order_.data() + b * n_;
      gap = std::min({gap, x[ord[0]] - lo_, c[ord[n_ - 1]]});
      for (std::size_t p = 0; p + 1 < n_; ++p) gap = std::min(gap, diff(x, c, ord[p], ord[p + 1]));
    }
    return gap;
  }

  const Model& model_;
  std::size_t n_;
  std::size_t blocks_;
  double lo_, hi_;
  // Distances to the upper bound below this value are authoritative.
  double half_;
  BrownianCursor noise_;
  StepControl control_;
  std::vector<double> x_;
  // hi_ - x_, see the class comment.
  std::vector<double> c_;
  std::vector<std::size_t> map_;
  std::vector<std::size_t> order_;
  std::vector<double> drift_, diffusion_, delta_, px_, pc_, dW_;
  // Guard inputs: pair members carry the pair's mean drift plus half the gap drift.
  std::vector<double> effective_, spread_;
  std::vector<std::size_t> partner_;
  std::vector<Pair> pairs_;
  std::size_t aux_dim_ = 0;
  std::optional<BrownianCursor> aux_;
  std::vector<double> a_now_, a_next_;
  // Brownian values at the current position and at the proposed end point.
  std::vector<double> w_now_, w_next_;
  StepStats stats_;

  double time_ = 0.0;
  double segment_start_ = 0.0;
  double target_ = 0.0;
  double coarse_step_ = 0.0;
  std::uint64_t coarse_count_ = 0;
  std::uint64_t coarse_in_segment_ = 0;
  std::uint64_t coarse_index_ = 0;
  std::uint64_t position_ = 0;
};

}  // namespace dmpk
