#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "dmpk/rng.hpp"
#include "dmpk/types.hpp"

namespace dmpk {

using ComplexMatrix = Eigen::MatrixXcd;

/// Reproducible Gaussian source for one Monte-Carlo path.
///
/// All randomness is a pure function of (master_seed, path_index, address):
/// the Philox key is derived from the pair, and the 128-bit counter carries an
/// address. Two address spaces are used. The sequential space backs
/// `next_normal()` with a running draw index. The addressed space serves
/// `addressed_normals()` and is what the Brownian paths of the SDE engines are
/// built from, so that every engine asking for the same interval sees the same
/// increment regardless of how it got there.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t path_index);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t path_index() const noexcept { return path_index_; }

  double next_normal();
  /// Uniform on (0, 1).
  double next_uniform();

  /// Pair of normals at a fixed address; does not advance the stream.
  std::array<double, 2> addressed_normals(std::uint32_t lane, std::uint64_t coarse_index,
                                          std::uint64_t node) const noexcept;

 private:
  PhiloxCounter next_block();

  std::uint64_t master_seed_;
  std::uint64_t path_index_;
  PhiloxKey key_;
  std::uint64_t draws_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// One Brownian increment of the block generator L = [[a+, b], [b*, a-]].
struct NoiseIncrement {
  ComplexMatrix da_plus;
  ComplexMatrix da_minus;
  ComplexMatrix db;
  double ds = 0.0;

  /// The assembled 2N x 2N increment.
  ComplexMatrix matrix() const;
};

/// Anti-hermitian block: off-diagonal real and imaginary parts with variance
/// ds/(2N), purely imaginary diagonal with variance ds/N.
ComplexMatrix sample_a_increment(const SymmetryClass& cls, double ds, NoiseStream& stream);

/// b block. beta=1: complex symmetric, off-diagonal parts with variance
/// ds/(2(N+1)), diagonal parts ds/(N+1). beta=2: i.i.d. entries, parts ds/(2N).
ComplexMatrix sample_b_increment(const SymmetryClass& cls, double ds, NoiseStream& stream);

/// As above, but the real parts of the diagonal are supplied by the caller.
/// Used to drive the matrix engine from the same Brownian motions B_k as the
/// SDE engine (see `driving_brownian`).
ComplexMatrix sample_b_increment(const SymmetryClass& cls, double ds, NoiseStream& stream,
                                 std::span<const double> diag_real);

NoiseIncrement assemble_L_increment(const SymmetryClass& cls, double ds, NoiseStream& stream);
NoiseIncrement assemble_L_increment(const SymmetryClass& cls, double ds, NoiseStream& stream,
                                    std::span<const double> diag_real);

/// Delta B_k = -sqrt(beta(N-1)+2) * Re(db_kk).
std::vector<double> driving_brownian(std::span<const double> db_diag_real, const SymmetryClass& cls);
/// Inverse map: Re(db_kk) from Delta B_k.
std::vector<double> b_diagonal_from_brownian(std::span<const double> dB, const SymmetryClass& cls);

/// N independent standard Brownian motions, sampled on a dyadic tree.
///
/// Time is cut into coarse intervals (indexed globally along the path). The
/// increment over a coarse interval of length h is drawn directly; a dyadic
/// sub-interval at refinement level l is obtained by Brownian-bridge
/// bisection, where every bisection node owns a fixed address in the stream.
/// The realized path therefore does not depend on which refinement levels an
/// adaptive stepper happens to visit, and sub-increments always sum to their
/// parent.
class BrownianPath {
 public:
  /// Channels are drawn from stream lanes first_lane, first_lane + 1, ...
  /// Paths on disjoint lane ranges of the same stream are independent.
  BrownianPath(const NoiseStream& stream, std::size_t channels, std::uint32_t first_lane = 0);

  std::size_t channels() const noexcept { return channels_; }

  /// Increment over sub-interval `node` (0 <= node < 2^level) of coarse
  /// interval `coarse_index` of length `coarse_step`.
  void increment(std::uint64_t coarse_index, double coarse_step, int level, std::uint64_t node,
                 std::span<double> out) const;

  /// W(t) - W(coarse start) at t = position * coarse_step / 2^kResolution,
  /// 0 <= position <= 2^kResolution. Consistent with increment(): the
  /// difference of two values is the sum of the nodes between them.
  void value(std::uint64_t coarse_index, double coarse_step, std::uint64_t position, std::span<double> out) const;

  static constexpr int kResolution = 46;

  const NoiseStream& stream() const noexcept { return stream_; }
  std::uint32_t first_lane() const noexcept { return first_lane_; }

 private:
  NoiseStream stream_;
  std::size_t channels_;
  std::uint32_t first_lane_;
};

/// Evaluates BrownianPath::value with the descent path cached, so that
/// neighbouring queries only recompute the levels where they differ.
class BrownianCursor {
 public:
  explicit BrownianCursor(BrownianPath path);

  std::size_t channels() const noexcept { return path_.channels(); }
  const BrownianPath& path() const noexcept { return path_; }

  /// Same result as path().value(...), bit for bit.
  void value(std::uint64_t coarse_index, double coarse_step, std::uint64_t position, std::span<double> out);

 private:
  void reset(std::uint64_t coarse_index, double coarse_step);

  BrownianPath path_;
  std::size_t lanes_;
  std::uint64_t coarse_index_ = 0;
  double coarse_step_ = -1.0;
  // Levels 0..valid_ are cached; node_[l] is the node index at level l.
  int valid_ = -1;
  std::vector<std::uint64_t> node_;
  // Per level, per channel (padded to 2 * lanes): increment over the node and
  // value at its left end point.
  std::vector<double> width_, left_;
};

}  // namespace dmpk
