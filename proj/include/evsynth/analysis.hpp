#pragma once

// Posterior summaries: rate-ratio matrices, treatment rankings and alpha sweeps.
//
// Rate ratios are summarised per draw (the posterior of exp(d_1i - d_1j)),
// not by exponentiating a summary of d; the two differ because exp is convex.
// Quantiles use linear interpolation between order statistics (type 7).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evsynth/error.hpp"
#include "evsynth/model.hpp"
#include "evsynth/network.hpp"
#include "evsynth/sampler.hpp"
#include "evsynth/text.hpp"

namespace evsynth {

struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;

  double width() const { return q975 - q025; }
};

// Type-7 quantile of an ascending-sorted sample.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline SummaryStats summarize(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("summarize: empty input");
  SummaryStats s;
  const double n = static_cast<double>(xs.size());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  s.median = quantile_sorted(sorted, 0.5);
  s.q025 = quantile_sorted(sorted, 0.025);
  s.q975 = quantile_sorted(sorted, 0.975);
  return s;
}

// Per-draw basic parameters for every treatment; column 0 (reference) is 0.
inline std::vector<std::vector<double>> basic_parameter_draws(const Draws& draws, const Network& net) {
  const auto t = net.treatment_count();
  std::vector<std::size_t> cols;
  for (std::size_t k = 1; k < t; ++k) {
    const auto c = draws.column_index("d[" + net.treatments[k] + "]");
    if (!c) throw AnalysisError("draws are missing column d[" + net.treatments[k] + "]");
    cols.push_back(*c);
  }
  std::vector<std::vector<double>> out(draws.rows(), std::vector<double>(t, 0.0));
  for (std::size_t r = 0; r < draws.rows(); ++r)
    for (std::size_t k = 1; k < t; ++k) out[r][k] = draws.at(r, cols[k - 1]);
  return out;
}

struct RateRatioMatrix {
  std::vector<std::string> labels;
  std::vector<std::optional<SummaryStats>> cells;  // row-major T x T, diagonal empty

  std::size_t size() const { return labels.size(); }
  const std::optional<SummaryStats>& at(std::size_t i, std::size_t j) const { return cells[i * size() + j]; }
};

// Entry (i, j) summarises exp(d_1i - d_1j): treatment i relative to treatment j.
inline RateRatioMatrix arrr_matrix(const Draws& draws, const Network& net) {
  const auto basic = basic_parameter_draws(draws, net);
  const auto t = net.treatment_count();
  RateRatioMatrix m{net.treatments, std::vector<std::optional<SummaryStats>>(t * t)};
  std::vector<double> series(basic.size());
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < t; ++j) {
      if (i == j) continue;
      for (std::size_t r = 0; r < basic.size(); ++r) series[r] = std::exp(contrast(basic[r][i], basic[r][j]));
      m.cells[i * t + j] = summarize(series);
    }
  return m;
}

inline std::string format_cell(const SummaryStats& s) {
  return text::fixed(s.mean, 3) + " (" + text::fixed(s.q025, 3) + ", " + text::fixed(s.q975, 3) + ")";
}

// Two-triangle layout: the cell in row i, column j always reports the
// later-listed treatment relative to the earlier one. The upper triangle comes
// from `upper`, the lower from `lower` (pass the same matrix twice for one fit).
inline std::string matrix_csv(const RateRatioMatrix& upper, const RateRatioMatrix& lower) {
  if (upper.labels != lower.labels) throw std::invalid_argument("matrix labels differ");
  const auto t = upper.size();
  std::string out = "treatment";
  for (const auto& l : upper.labels) out += "," + text::csv_field(l);
  out += '\n';
  for (std::size_t i = 0; i < t; ++i) {
    out += text::csv_field(upper.labels[i]);
    for (std::size_t j = 0; j < t; ++j) {
      out += ',';
      if (i == j) continue;
      const auto& cell = i < j ? upper.at(j, i) : lower.at(i, j);
      out += text::csv_field(format_cell(*cell));
    }
    out += '\n';
  }
  return out;
}

// Per-treatment ARRR vs the reference.
inline std::vector<SummaryStats> arrr_vs_reference(const Draws& draws, const Network& net) {
  const auto basic = basic_parameter_draws(draws, net);
  std::vector<SummaryStats> out;
  std::vector<double> series(basic.size());
  for (std::size_t k = 1; k < net.treatment_count(); ++k) {
    for (std::size_t r = 0; r < basic.size(); ++r) series[r] = std::exp(basic[r][k]);
    out.push_back(summarize(series));
  }
  return out;
}

inline std::string summary_csv(const Draws& draws, const Network& net) {
  const auto rows = arrr_vs_reference(draws, net);
  std::string out = "treatment,reference,arrr_mean,arrr_sd,arrr_median,arrr_q025,arrr_q975\n";
  for (std::size_t k = 1; k < net.treatment_count(); ++k) {
    const auto& s = rows[k - 1];
    out += text::csv_field(net.treatments[k]) + ',' + text::csv_field(net.reference()) + ',' + text::num(s.mean, 8) +
           ',' + text::num(s.sd, 8) + ',' + text::num(s.median, 8) + ',' + text::num(s.q025, 8) + ',' +
           text::num(s.q975, 8) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rankings.

struct RankTable {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> prob;  // [treatment][rank - 1]
  std::vector<double> mean_rank;
  std::vector<std::size_t> modal_rank;    // 1-based most probable rank per treatment
};

// Ranks each draw's scores (rank 1 = best); ties go to the lower index.
inline RankTable rank_scores(const std::vector<std::vector<double>>& scores, std::vector<std::string> labels,
                             bool lower_is_better = true) {
  const auto t = labels.size();
  RankTable table{std::move(labels), std::vector<std::vector<double>>(t, std::vector<double>(t, 0.0)),
                  std::vector<double>(t, 0.0), std::vector<std::size_t>(t, 1)};
  if (scores.empty()) throw std::invalid_argument("rank_scores: no draws");
  std::vector<std::size_t> order(t);
  for (const auto& row : scores) {
    if (row.size() != t) throw std::invalid_argument("rank_scores: score row has wrong length");
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return lower_is_better ? row[a] < row[b] : row[a] > row[b];
    });
    for (std::size_t r = 0; r < t; ++r) table.prob[order[r]][r] += 1.0;
  }
  const double n = static_cast<double>(scores.size());
  for (std::size_t k = 0; k < t; ++k) {
    std::size_t best = 0;
    for (std::size_t r = 0; r < t; ++r) {
      table.prob[k][r] /= n;
      table.mean_rank[k] += static_cast<double>(r + 1) * table.prob[k][r];
      if (table.prob[k][r] > table.prob[k][best]) best = r;
    }
    table.modal_rank[k] = best + 1;
  }
  return table;
}

// Ranks on d_1k: a shared baseline rate makes this order-equivalent to ranking
// absolute rates.
inline RankTable rank_treatments(const Draws& draws, const Network& net, bool lower_is_better = true) {
  return rank_scores(basic_parameter_draws(draws, net), net.treatments, lower_is_better);
}

inline std::string ranks_csv(const RankTable& table, std::optional<double> alpha = {}) {
  std::string out = alpha ? "alpha,treatment,rank,probability\n" : "treatment,rank,probability\n";
  for (std::size_t k = 0; k < table.labels.size(); ++k)
    for (std::size_t r = 0; r < table.labels.size(); ++r) {
      if (alpha) out += text::num(*alpha, 6) + ',';
      out += text::csv_field(table.labels[k]) + ',' + std::to_string(r + 1) + ',' + text::num(table.prob[k][r], 8) +
             '\n';
    }
  return out;
}

// ---------------------------------------------------------------------------
// Alpha sweep.

struct AlphaSweepRow {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::vector<SummaryStats> arrr;  // treatments 1..T-1 vs reference
  std::optional<SummaryStats> between_sd;
  RankTable ranks;
};

inline std::vector<double> default_alpha_grid() {
  return {0.001, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
}

// Seed for the fit at one alpha: the run seed mixed with alpha's bit pattern.
inline std::uint64_t sweep_seed(std::uint64_t seed, double alpha) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &alpha, sizeof bits);
  return derive_seed(seed, bits ^ 0x5eedULL);
}

inline AlphaSweepRow summarize_fit(double alpha, std::uint64_t seed, const Model& model, const Draws& draws) {
  AlphaSweepRow row;
  row.alpha = alpha;
  row.seed = seed;
  row.arrr = arrr_vs_reference(draws, model.network());
  if (const auto idx = model.between_sd_index()) row.between_sd = summarize(draws.column(model.coordinates()[*idx].name));
  row.ranks = rank_treatments(draws, model.network());
  return row;
}

// One full fit per alpha with an independent seed per alpha (see sweep_seed).
inline std::vector<AlphaSweepRow> alpha_sweep(const Network& net, const ModelSpec& spec_template,
                                              const std::vector<double>& alphas, SamplerConfig cfg) {
  if (!spec_template.uses_alpha()) throw InputError("alpha sweep needs the power or hier-power variant");
  if (alphas.empty()) throw InputError("alpha grid is empty");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0 && alphas[i] <= 1.0)) throw InputError("alpha values must lie in [0, 1]");
    if (i && !(alphas[i] > alphas[i - 1])) throw InputError("alpha grid must be strictly increasing");
  }
  cfg.reduced_retention = true;
  const auto base_seed = cfg.seed;
  std::vector<AlphaSweepRow> rows;
  for (double a : alphas) {
    auto spec = spec_template;
    spec.alpha = a;
    cfg.seed = sweep_seed(base_seed, a);
    try {
      const Model model(net, spec);
      const auto fit = run_ensemble(model, cfg);
      rows.push_back(summarize_fit(a, cfg.seed, model, fit.draws));
    } catch (const std::exception& e) {
      throw AnalysisError("alpha sweep failed at alpha=" + text::num(a) + ": " + e.what());
    }
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<AlphaSweepRow>& rows, const Network& net) {
  std::string out = "alpha,treatment,mean,q025,q975,between_sd\n";
  for (const auto& row : rows)
    for (std::size_t k = 1; k < net.treatment_count(); ++k) {
      const auto& s = row.arrr[k - 1];
      out += text::num(row.alpha, 6) + ',' + text::csv_field(net.treatments[k]) + ',' + text::num(s.mean, 8) + ',' +
             text::num(s.q025, 8) + ',' + text::num(s.q975, 8) + ',' +
             (row.between_sd ? text::num(row.between_sd->median, 8) : std::string("NA")) + '\n';
    }
  return out;
}

}  // namespace evsynth
