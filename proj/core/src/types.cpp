#include "dmpk/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmpk/errors.hpp"

namespace dmpk {

SymmetryClass::SymmetryClass(int beta, int channels) : beta_(beta), channels_(channels) {
  if (beta != 1 && beta != 2) {
    throw DomainError("symmetry class beta must be 1 or 2, got " + std::to_string(beta));
  }
  if (channels < 1) {
    throw DomainError("channel count must be >= 1, got " + std::to_string(channels));
  }
}

void SolverConfig::validate(const SymmetryClass& cls) const {
  if (!(dt_base > 0.0) || !std::isfinite(dt_base)) throw DomainError("dt_base must be positive");
  if (!(eta_gap > 0.0 && eta_gap < 1.0)) throw DomainError("eta_gap must lie in (0, 1)");
  if (max_halvings < 1 || max_halvings > 46) throw DomainError("max_halvings must lie in [1, 46]");
  if (reproject_every < 1) throw DomainError("reproject_every must be >= 1");
  if (degenerate_n && *degenerate_n < cls.channels() + 1) {
    throw DomainError("degenerate_n must be >= N + 1");
  }
  for (double s : record_grid) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("record grid values must be finite and >= 0");
  }
}

int SolverConfig::resolved_degenerate_n(const SymmetryClass& cls) const {
  if (degenerate_n) return *degenerate_n;
  return std::max(cls.channels() + 1, 100 * cls.channels());
}

LambdaState to_lambda(const TransmissionState& state) {
  LambdaState out{state.s, {}};
  out.lambda.reserve(state.T.size());
  for (double t : state.T) {
    if (!(t > 0.0) || t > 1.0) {
      throw DomainError("transmission eigenvalue outside (0, 1]: " + std::to_string(t));
    }
    out.lambda.push_back(1.0 / t);
  }
  return out;
}

TransmissionState to_transmission(const LambdaState& state) {
  TransmissionState out{state.s, {}};
  out.T.reserve(state.lambda.size());
  for (double l : state.lambda) {
    if (!(l >= 1.0)) throw DomainError("lambda below one: " + std::to_string(l));
    out.T.push_back(1.0 / l);
  }
  return out;
}

double min_domain_gap(std::span<const double> T) {
  if (T.empty()) return 0.0;
  double gap = std::min(T.front(), 1.0 - T.back());
  for (std::size_t k = 0; k + 1 < T.size(); ++k) gap = std::min(gap, T[k + 1] - T[k]);
  return gap;
}

bool in_open_domain(std::span<const double> T, double gap_tol) {
  if (T.empty()) return false;
  if (!(T.front() > gap_tol) || !(1.0 - T.back() > gap_tol)) return false;
  for (std::size_t k = 0; k + 1 < T.size(); ++k) {
    if (!(T[k + 1] - T[k] > gap_tol)) return false;
  }
  return true;
}

bool in_open_domain(const TransmissionState& state, double gap_tol) {
  return in_open_domain(std::span<const double>(state.T), gap_tol);
}

bool is_degenerate_start(const TransmissionState& state) {
  return !state.T.empty() &&
         std::all_of(state.T.begin(), state.T.end(), [](double t) { return t == 1.0; });
}

}  // namespace dmpk
