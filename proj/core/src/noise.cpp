#include "dmpk/noise.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "dmpk/errors.hpp"

namespace dmpk {

namespace {

constexpr std::uint32_t kAddressedSpace = 0x80000000u;

void require_nonnegative(double ds) {
  if (!(ds >= 0.0)) throw DomainError("noise increment requested for negative length");
}

std::complex<double> complex_normal(NoiseStream& stream, double scale) {
  const double re = stream.next_normal();
  const double im = stream.next_normal();
  return {scale * re, scale * im};
}

}  // namespace

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t path_index)
    : master_seed_(master_seed), path_index_(path_index), key_(derive_path_key(master_seed, path_index)) {}

PhiloxCounter NoiseStream::next_block() {
  const PhiloxCounter ctr{0u, static_cast<std::uint32_t>(draws_ >> 32), static_cast<std::uint32_t>(draws_), 0u};
  ++draws_;
  return philox4x32_10(ctr, key_);
}

double NoiseStream::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const auto pair = box_muller(next_block());
  spare_ = pair[1];
  has_spare_ = true;
  return pair[0];
}

double NoiseStream::next_uniform() {
  const auto block = next_block();
  return uniform_open(block[0], block[1]);
}

std::array<double, 2> NoiseStream::addressed_normals(std::uint32_t lane, std::uint64_t coarse_index,
                                                     std::uint64_t node) const noexcept {
  const PhiloxCounter ctr{
      kAddressedSpace | (lane & 0x7FFFFFFFu),
      static_cast<std::uint32_t>(coarse_index),
      static_cast<std::uint32_t>(node),
      static_cast<std::uint32_t>(((coarse_index >> 32) & 0xFFFFu) << 16 | ((node >> 32) & 0xFFFFu)),
  };
  return box_muller(philox4x32_10(ctr, key_));
}

ComplexMatrix NoiseIncrement::matrix() const {
  const Eigen::Index n = da_plus.rows();
  ComplexMatrix out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = da_plus;
  out.topRightCorner(n, n) = db;
  out.bottomLeftCorner(n, n) = db.adjoint();
  out.bottomRightCorner(n, n) = da_minus;
  return out;
}

ComplexMatrix sample_a_increment(const SymmetryClass& cls, double ds, NoiseStream& stream) {
  require_nonnegative(ds);
  const Eigen::Index n = cls.channels();
  const double off = std::sqrt(ds / (2.0 * n));
  const double diag = std::sqrt(ds / n);
  ComplexMatrix a = ComplexMatrix::Zero(n, n);
  for (Eigen::Index mu = 0; mu < n; ++mu) {
    a(mu, mu) = {0.0, diag * stream.next_normal()};
    for (Eigen::Index nu = mu + 1; nu < n; ++nu) {
      a(mu, nu) = complex_normal(stream, off);
      a(nu, mu) = -std::conj(a(mu, nu));
    }
  }
  return a;
}

ComplexMatrix sample_b_increment(const SymmetryClass& cls, double ds, NoiseStream& stream,
                                 std::span<const double> diag_real) {
  require_nonnegative(ds);
  const Eigen::Index n = cls.channels();
  if (static_cast<Eigen::Index>(diag_real.size()) != n) {
    throw DomainError("diagonal override has wrong length");
  }
  ComplexMatrix b(n, n);
  if (cls.beta() == 1) {
    const double off = std::sqrt(ds / (2.0 * (n + 1)));
    const double diag = std::sqrt(ds / (n + 1.0));
    for (Eigen::Index mu = 0; mu < n; ++mu) {
      b(mu, mu) = {diag_real[mu], diag * stream.next_normal()};
      for (Eigen::Index nu = mu + 1; nu < n; ++nu) {
        b(mu, nu) = complex_normal(stream, off);
        b(nu, mu) = b(mu, nu);
      }
    }
  } else {
    const double scale = std::sqrt(ds / (2.0 * n));
    for (Eigen::Index mu = 0; mu < n; ++mu) {
      for (Eigen::Index nu = 0; nu < n; ++nu) {
        if (mu == nu) {
          b(mu, mu) = {diag_real[mu], scale * stream.next_normal()};
        } else {
          b(mu, nu) = complex_normal(stream, scale);
        }
      }
    }
  }
  return b;
}

ComplexMatrix sample_b_increment(const SymmetryClass& cls, double ds, NoiseStream& stream) {
  require_nonnegative(ds);
  const double diag_scale =
      cls.beta() == 1 ? std::sqrt(ds / (cls.channels() + 1.0)) : std::sqrt(ds / (2.0 * cls.channels()));
  std::vector<double> diag(cls.size());
  for (double& d : diag) d = diag_scale * stream.next_normal();
  return sample_b_increment(cls, ds, stream, diag);
}

NoiseIncrement assemble_L_increment(const SymmetryClass& cls, double ds, NoiseStream& stream,
                                    std::span<const double> diag_real) {
  NoiseIncrement inc;
  inc.ds = ds;
  inc.da_plus = sample_a_increment(cls, ds, stream);
  inc.da_minus = cls.beta() == 1 ? ComplexMatrix(inc.da_plus.conjugate()) : sample_a_increment(cls, ds, stream);
  inc.db = sample_b_increment(cls, ds, stream, diag_real);
  return inc;
}

NoiseIncrement assemble_L_increment(const SymmetryClass& cls, double ds, NoiseStream& stream) {
  NoiseIncrement inc;
  inc.ds = ds;
  inc.da_plus = sample_a_increment(cls, ds, stream);
  inc.da_minus = cls.beta() == 1 ? ComplexMatrix(inc.da_plus.conjugate()) : sample_a_increment(cls, ds, stream);
  inc.db = sample_b_increment(cls, ds, stream);
  return inc;
}

std::vector<double> driving_brownian(std::span<const double> db_diag_real, const SymmetryClass& cls) {
  const double scale = -std::sqrt(cls.denominator());
  std::vector<double> out(db_diag_real.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = scale * db_diag_real[k];
  return out;
}

std::vector<double> b_diagonal_from_brownian(std::span<const double> dB, const SymmetryClass& cls) {
  const double scale = -1.0 / std::sqrt(cls.denominator());
  std::vector<double> out(dB.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = scale * dB[k];
  return out;
}

BrownianPath::BrownianPath(const NoiseStream& stream, std::size_t channels, std::uint32_t first_lane)
    : stream_(stream), channels_(channels), first_lane_(first_lane) {}

void BrownianPath::increment(std::uint64_t coarse_index, double coarse_step, int level, std::uint64_t node,
                             std::span<double> out) const {
  if (out.size() != channels_) throw DomainError("Brownian increment buffer has wrong length");
  if (level < 0 || level > kResolution) throw DomainError("Brownian refinement level out of range");
  const std::size_t lanes = (channels_ + 1) / 2;
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    // Root draw lives at node address 0; bisection of heap node p uses address p.
    auto root = stream_.addressed_normals(first_lane_ + static_cast<std::uint32_t>(lane), coarse_index, 0);
    double w0 = std::sqrt(coarse_step) * root[0];
    double w1 = std::sqrt(coarse_step) * root[1];
    double length = coarse_step;
    std::uint64_t heap = 1;
    for (int l = level - 1; l >= 0; --l) {
      const auto z = stream_.addressed_normals(first_lane_ + static_cast<std::uint32_t>(lane), coarse_index, heap);
      const double spread = 0.5 * std::sqrt(length);
      const double left0 = 0.5 * w0 + spread * z[0];
      const double left1 = 0.5 * w1 + spread * z[1];
      const bool right = (node >> l) & 1u;
      w0 = right ? w0 - left0 : left0;
      w1 = right ? w1 - left1 : left1;
      heap = 2 * heap + (right ? 1 : 0);
      length *= 0.5;
    }
    out[2 * lane] = w0;
    if (2 * lane + 1 < channels_) out[2 * lane + 1] = w1;
  }
}

void BrownianPath::value(std::uint64_t coarse_index, double coarse_step, std::uint64_t position,
                         std::span<double> out) const {
  if (out.size() != channels_) throw DomainError("Brownian value buffer has wrong length");
  constexpr std::uint64_t full = std::uint64_t{1} << kResolution;
  if (position > full) throw DomainError("Brownian position beyond the coarse interval");
  if (position == 0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const int shift = position == full ? kResolution : std::countr_zero(position);
  const int level = kResolution - shift;
  const std::uint64_t node = position >> shift;
  const std::size_t lanes = (channels_ + 1) / 2;
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    auto root = stream_.addressed_normals(first_lane_ + static_cast<std::uint32_t>(lane), coarse_index, 0);
    double w0 = std::sqrt(coarse_step) * root[0];
    double w1 = std::sqrt(coarse_step) * root[1];
    double acc0 = 0.0, acc1 = 0.0;
    double length = coarse_step;
    std::uint64_t heap = 1;
    // Descend towards the left end point of node `node` at `level`; every
    // right turn adds the left sibling to the running value.
    for (int l = level - 1; l >= 0; --l) {
      const auto z = stream_.addressed_normals(first_lane_ + static_cast<std::uint32_t>(lane), coarse_index, heap);
      const double spread = 0.5 * std::sqrt(length);
      const double left0 = 0.5 * w0 + spread * z[0];
      const double left1 = 0.5 * w1 + spread * z[1];
      const bool right = (node >> l) & 1u;
      if (right) {
        acc0 += left0;
        acc1 += left1;
      }
      w0 = right ? w0 - left0 : left0;
      w1 = right ? w1 - left1 : left1;
      heap = 2 * heap + (right ? 1 : 0);
      length *= 0.5;
    }
    // position == full ends on the whole interval.
    if (position == full) {
      acc0 = w0;
      acc1 = w1;
    }
    out[2 * lane] = acc0;
    if (2 * lane + 1 < channels_) out[2 * lane + 1] = acc1;
  }
}

BrownianCursor::BrownianCursor(BrownianPath path)
    : path_(std::move(path)),
      lanes_((path_.channels() + 1) / 2),
      node_(BrownianPath::kResolution + 1),
      width_((BrownianPath::kResolution + 1) * 2 * lanes_),
      left_((BrownianPath::kResolution + 1) * 2 * lanes_) {}

void BrownianCursor::reset(std::uint64_t coarse_index, double coarse_step) {
  coarse_index_ = coarse_index;
  coarse_step_ = coarse_step;
  const double root_scale = std::sqrt(coarse_step);
  for (std::size_t lane = 0; lane < lanes_; ++lane) {
    const auto root = path_.stream().addressed_normals(path_.first_lane() + static_cast<std::uint32_t>(lane), coarse_index, 0);
    width_[2 * lane] = root_scale * root[0];
    width_[2 * lane + 1] = root_scale * root[1];
    left_[2 * lane] = 0.0;
    left_[2 * lane + 1] = 0.0;
  }
  node_[0] = 0;
  valid_ = 0;
}

void BrownianCursor::value(std::uint64_t coarse_index, double coarse_step, std::uint64_t position,
                           std::span<double> out) {
  constexpr int kRes = BrownianPath::kResolution;
  constexpr std::uint64_t full = std::uint64_t{1} << kRes;
  const std::size_t channels = path_.channels();
  if (out.size() != channels) throw DomainError("Brownian value buffer has wrong length");
  if (position > full) throw DomainError("Brownian position beyond the coarse interval");
  if (coarse_index != coarse_index_ || coarse_step != coarse_step_ || valid_ < 0) reset(coarse_index, coarse_step);
  if (position == 0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (position == full) {
    for (std::size_t c = 0; c < channels; ++c) out[c] = width_[c];
    return;
  }

  const int level = kRes - std::countr_zero(position);
  const std::size_t stride = 2 * lanes_;
  int l = 1;
  while (l <= valid_ && l <= level && node_[static_cast<std::size_t>(l)] == position >> (kRes - l)) ++l;
  for (; l <= level; ++l) {
    const std::uint64_t node = position >> (kRes - l);
    const std::uint64_t parent = node >> 1;
    const bool right = node & 1u;
    const double spread = 0.5 * std::sqrt(std::ldexp(coarse_step, -(l - 1)));
    const std::uint64_t heap = (std::uint64_t{1} << (l - 1)) + parent;
    const double* pw = &width_[static_cast<std::size_t>(l - 1) * stride];
    const double* pl = &left_[static_cast<std::size_t>(l - 1) * stride];
    double* w = &width_[static_cast<std::size_t>(l) * stride];
    double* lv = &left_[static_cast<std::size_t>(l) * stride];
    for (std::size_t lane = 0; lane < lanes_; ++lane) {
      const auto z = path_.stream().addressed_normals(path_.first_lane() + static_cast<std::uint32_t>(lane), coarse_index, heap);
      for (std::size_t c = 0; c < 2; ++c) {
        const std::size_t i = 2 * lane + c;
        const double first = 0.5 * pw[i] + spread * z[c];
        w[i] = right ? pw[i] - first : first;
        lv[i] = right ? pl[i] + first : pl[i];
      }
    }
    node_[static_cast<std::size_t>(l)] = node;
  }
  valid_ = std::max(valid_, level);
  // Anything cached below `level` belongs to a different branch unless it
  // extends this node.
  if (valid_ > level && node_[static_cast<std::size_t>(level) + 1] >> 1 != node_[static_cast<std::size_t>(level)])
    valid_ = level;
  const double* lv = &left_[static_cast<std::size_t>(level) * stride];
  for (std::size_t c = 0; c < channels; ++c) out[c] = lv[c];
}

}  // namespace dmpk

