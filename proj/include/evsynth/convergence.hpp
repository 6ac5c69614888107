#pragma once

// Split-R-hat and effective sample size. Both report std::nullopt for a
// constant (zero-variance) input instead of a number.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace evsynth {

namespace detail {

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs, double m) {
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

}  // namespace detail

// Potential scale reduction over the given segments (already split). Segments
// are truncated to the shortest length.
inline std::optional<double> rhat(const std::vector<std::span<const double>>& segments) {
  if (segments.size() < 2) throw std::invalid_argument("rhat needs at least two segments");
  std::size_t n = segments.front().size();
  for (const auto& s : segments) n = std::min(n, s.size());
  if (n < 2) throw std::invalid_argument("rhat segments need length >= 2");
  const double m = static_cast<double>(segments.size());
  const double nd = static_cast<double>(n);
  std::vector<double> means, vars;
  for (const auto& s : segments) {
    const auto seg = s.first(n);
    means.push_back(detail::mean(seg));
    vars.push_back(detail::sample_variance(seg, means.back()));
  }
  const double grand = detail::mean(means);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= nd / (m - 1.0);
  const double w = detail::mean(vars);
  if (!(w > 0.0)) return std::nullopt;
  const double var_plus = (nd - 1.0) / nd * w + b / nd;
  return std::sqrt(var_plus / w);
}

// Splits each chain into two halves and applies rhat.
inline std::optional<double> split_rhat(const std::vector<std::span<const double>>& chains) {
  std::vector<std::span<const double>> segs;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    segs.push_back(c.first(half));
    segs.push_back(c.subspan(c.size() - half, half));
  }
  return rhat(segs);
}

// Geyer initial-positive-sequence estimator with the monotone adjustment,
// clamped to at most N.
inline std::optional<double> ess(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 10) throw std::invalid_argument("ess needs at least 10 values");
  const double m = detail::mean(xs);
  double c0 = 0.0;
  for (double x : xs) c0 += (x - m) * (x - m);
  if (!(c0 > 0.0)) return std::nullopt;
  auto rho = [&](std::size_t lag) {
    double c = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) c += (xs[i] - m) * (xs[i + lag] - m);
    return c / c0;
  };
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double g = rho(2 * k) + rho(2 * k + 1);
    if (g <= 0.0) break;
    g = std::min(g, prev);
    prev = g;
    sum += g;
  }
  const double nd = static_cast<double>(n);
  const double tau = -1.0 + 2.0 * sum;
  if (!(tau > 0.0)) return nd;
  return std::min(nd, nd / tau);
}

}  // namespace evsynth
