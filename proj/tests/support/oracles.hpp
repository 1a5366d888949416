#pragma once

// Straightforward reference implementations used as test oracles. They
// follow the defining formulas directly, in long double, with no reuse of
// library code.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

/// v_k = -T_k + 2T_k/den (1 - T_k + beta/2 sum_{j != k} (T_k + T_j - 2 T_k T_j)/(T_k - T_j)).
inline std::vector<double> dmpk_drift(const std::vector<double>& T, int beta) {
  const std::size_t n = T.size();
  const long double den = beta * (static_cast<long double>(n) - 1) + 2;
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    long double sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      const long double tk = T[k], tj = T[j];
      sum += (tk + tj - 2 * tk * tj) / (tk - tj);
    }
    const long double tk = T[k];
    out[k] = static_cast<double>(-tk + 2 * tk / den * (1 - tk + beta / 2.0L * sum));
  }
  return out;
}

inline std::vector<double> dmpk_diffusion(const std::vector<double>& T, int beta) {
  const long double den = beta * (static_cast<long double>(T.size()) - 1) + 2;
  std::vector<double> out;
  for (double t : T) out.push_back(static_cast<double>(std::sqrt(4.0L * t * t * (1 - t) / den)));
  return out;
}

inline double lyapunov_f(const std::vector<double>& T) {
  long double f = 0;
  for (std::size_t k = 0; k < T.size(); ++k) {
    f += -2 * std::log(static_cast<long double>(T[k])) - 2 * std::log(1.0L - T[k]);
    for (std::size_t l = 0; l < T.size(); ++l) {
      if (l != k) f -= std::log(std::fabs(static_cast<long double>(T[k]) - T[l]));
    }
  }
  return static_cast<double>(f);
}

/// Sample mean and unbiased variance, two-pass.
inline std::pair<double, double> mean_variance(const std::vector<double>& x) {
  long double mean = 0;
  for (double v : x) mean += v;
  mean /= x.size();
  long double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {static_cast<double>(mean), static_cast<double>(ss / (x.size() - 1))};
}

/// sup |F_a - F_b| evaluated at every sample point.
inline double ks_distance(const std::vector<double>& a, const std::vector<double>& b) {
  auto ecdf = [](const std::vector<double>& s, double x) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [x](double v) { return v <= x; })) / s.size();
  };
  double d = 0;
  for (const auto* s : {&a, &b}) {
    for (double x : *s) d = std::max(d, std::fabs(ecdf(a, x) - ecdf(b, x)));
  }
  return d;
}

}  // namespace oracle
