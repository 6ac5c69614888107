#pragma once

// Ground-truth network generation and a brute-force quadrature oracle used to
// check the sampler on low-dimensional models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "evsynth/config.hpp"
#include "evsynth/error.hpp"
#include "evsynth/model.hpp"
#include "evsynth/network.hpp"
#include "evsynth/sampler.hpp"

namespace evsynth {

// One comparison in the study layout: the treatments compared and how many
// RCT and RWE studies make that comparison.
struct LayoutEntry {
  std::vector<std::size_t> treatments;
  std::size_t rct = 0;
  std::size_t rwe = 0;
};

struct TruthSpec {
  std::vector<std::string> treatments;          // [0] is the reference
  std::vector<double> d;                        // d_1k per treatment, d[0] = 0
  double tau = 0.0;
  std::vector<double> baseline_log_rate{-0.7};  // cycled over studies
  std::vector<double> exposure{100.0};          // cycled over arms
  std::vector<LayoutEntry> layout;
  std::vector<double> rwe_bias;                 // per treatment, added to RWE effects; empty = none

  void validate() const {
    const auto t = treatments.size();
    if (t < 2) throw InputError("truth needs at least two treatments");
    if (d.size() != t) throw InputError("truth d must list one value per treatment");
    if (d.front() != 0.0) throw InputError("truth d for the reference must be 0");
    if (!(tau >= 0.0)) throw InputError("truth tau must be non-negative");
    if (baseline_log_rate.empty() || exposure.empty()) throw InputError("truth needs baseline rates and exposures");
    for (double e : exposure)
      if (!(e > 0.0)) throw InputError("truth exposures must be positive");
    if (!rwe_bias.empty() && rwe_bias.size() != t) throw InputError("rwe_bias must list one value per treatment");
    if (layout.empty()) throw InputError("truth layout is empty");
    Network probe;
    probe.treatments = treatments;
    for (const auto& e : layout) {
      if (e.treatments.size() < 2) throw InputError("layout comparisons need at least two treatments");
      if (e.rct + e.rwe == 0) throw InputError("layout comparison without studies");
      Study s{"probe", Design::Rct, {}};
      for (auto k : e.treatments) {
        if (k >= t) throw InputError("layout references an unknown treatment");
        if (s.contains(k)) throw InputError("layout comparison repeats a treatment");
        s.arms.push_back(Arm{k, 0, 1.0});
      }
      probe.studies.push_back(std::move(s));
    }
    if (!unused_treatments(probe).empty() || connected_components(probe).size() != 1)
      throw InputError("truth layout does not give a connected network");
  }
};

struct RealizedStudy {
  std::string id;
  Design design = Design::Rct;
  double mu = 0.0;
  std::vector<double> delta;  // per non-baseline arm, ascending treatment order
};

struct SyntheticData {
  Network network;
  std::vector<RealizedStudy> realized;
};

// Runs the Poisson/log-link/random-effects model forwards. Studies follow the
// layout order, RCTs before RWE within each comparison.
inline SyntheticData generate_network(const TruthSpec& truth, std::uint64_t seed) {
  truth.validate();
  std::mt19937_64 rng(derive_seed(seed, 0x9e17ULL));
  SyntheticData out;
  out.network.treatments = truth.treatments;
  std::size_t study_no = 0, arm_no = 0;
  auto bias = [&](std::size_t k) { return truth.rwe_bias.empty() ? 0.0 : truth.rwe_bias[k]; };
  for (const auto& entry : truth.layout) {
    auto treatments = entry.treatments;
    std::sort(treatments.begin(), treatments.end());
    for (std::size_t n = 0; n < entry.rct + entry.rwe; ++n) {
      const Design design = n < entry.rct ? Design::Rct : Design::Rwe;
      char id[32];
      std::snprintf(id, sizeof id, "S%03zu", study_no + 1);
      const double mu = truth.baseline_log_rate[study_no % truth.baseline_log_rate.size()];
      ++study_no;
      const auto b = treatments.front();
      std::vector<double> means;
      for (std::size_t j = 1; j < treatments.size(); ++j) {
        const auto k = treatments[j];
        double m = contrast(truth.d[k], truth.d[b]);
        if (design == Design::Rwe) m += bias(k) - bias(b);
        means.push_back(m);
      }
      const auto delta = sample_multi_arm(means, truth.tau, rng);
      Study study{id, design, {}};
      for (std::size_t j = 0; j < treatments.size(); ++j) {
        const double exposure = truth.exposure[arm_no++ % truth.exposure.size()];
        const double lambda = arm_rate(mu, j == 0 ? 0.0 : delta[j - 1]) * exposure;
        std::poisson_distribution<long> pois(lambda);
        study.arms.push_back(Arm{treatments[j], pois(rng), exposure});
      }
      out.network.studies.push_back(std::move(study));
      out.realized.push_back(RealizedStudy{id, design, mu, delta});
    }
  }
  return out;
}

// [truth] and [layout] sections; see README for the grammar.
inline TruthSpec parse_truth(const KeyValueDocument& doc) {
  TruthSpec t;
  auto need = [&](const std::string& key) {
    const auto v = doc.get("truth", key);
    if (!v) throw InputError("missing truth." + key);
    return *v;
  };
  t.treatments = config::to_labels(need("treatments"));
  t.d = config::to_doubles(need("d"), "truth.d");
  if (const auto v = doc.get("truth", "tau")) t.tau = config::to_double(*v, "truth.tau");
  if (const auto v = doc.get("truth", "baseline_log_rate")) t.baseline_log_rate = config::to_doubles(*v, "truth.baseline_log_rate");
  if (const auto v = doc.get("truth", "exposure")) t.exposure = config::to_doubles(*v, "truth.exposure");
  if (const auto v = doc.get("truth", "rwe_bias")) t.rwe_bias = config::to_doubles(*v, "truth.rwe_bias");
  auto index = [&](const std::string& label) {
    for (std::size_t i = 0; i < t.treatments.size(); ++i)
      if (t.treatments[i] == label) return i;
    throw InputError("layout names unknown treatment '" + label + "'");
  };
  for (const auto& [key, value] : doc.items("layout")) {
    LayoutEntry e;
    for (const auto& label : config::to_labels(key)) e.treatments.push_back(index(label));
    for (const auto& part : config::to_labels(value)) {
      const auto colon = part.find(':');
      if (colon == std::string::npos) throw InputError("layout counts look like 'rct:2, rwe:1'");
      const auto design = text::lower(text::trim(part.substr(0, colon)));
      const long n = config::to_long(std::string(text::trim(part.substr(colon + 1))), "layout count");
      if (n < 0) throw InputError("layout counts must be non-negative");
      if (design == "rct") e.rct = static_cast<std::size_t>(n);
      else if (design == "rwe") e.rwe = static_cast<std::size_t>(n);
      else throw InputError("unknown design '" + design + "' in layout");
    }
    t.layout.push_back(std::move(e));
  }
  t.validate();
  return t;
}

// ---------------------------------------------------------------------------
// Quadrature oracle.

struct OracleResult {
  std::vector<std::string> names;  // free parameters, in model order
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<double> mode;        // grid point of highest density
  std::size_t points_per_axis = 0;
};

inline constexpr std::size_t kOracleMaxDims = 3;

// Tensor-product trapezoid rule over `box` of an unnormalised log density.
// Sums are kept relative to the running maximum to avoid underflow.
inline OracleResult grid_oracle(const std::function<double(std::span<const double>)>& log_density,
                                const std::vector<Interval>& box, std::size_t points) {
  const std::size_t dims = box.size();
  if (dims == 0 || dims > kOracleMaxDims) throw AnalysisError("oracle supports 1 to 3 free parameters");
  if (points < 3) throw std::invalid_argument("oracle needs at least 3 points per axis");
  std::vector<double> h(dims);
  for (std::size_t i = 0; i < dims; ++i) {
    if (!std::isfinite(box[i].width()) || !(box[i].width() > 0.0)) throw AnalysisError("oracle needs a bounded box");
    h[i] = box[i].width() / static_cast<double>(points - 1);
  }
  auto weight = [&](std::size_t i, std::size_t n) { return (n == 0 || n + 1 == points) ? 0.5 * h[i] : h[i]; };

  double top = -std::numeric_limits<double>::infinity();
  double s0 = 0.0;
  std::vector<double> s1(dims, 0.0), s2(dims, 0.0), x(dims), mode(dims);
  std::vector<std::size_t> idx(dims, 0);
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < dims; ++i) {
      x[i] = box[i].lower + h[i] * static_cast<double>(idx[i]);
      w *= weight(i, idx[i]);
    }
    const double l = log_density(x);
    if (l > top) {
      const double scale = std::isfinite(top) ? std::exp(top - l) : 0.0;
      s0 *= scale;
      for (std::size_t i = 0; i < dims; ++i) {
        s1[i] *= scale;
        s2[i] *= scale;
      }
      top = l;
      mode = x;
    }
    if (std::isfinite(l)) {
      const double p = w * std::exp(l - top);
      s0 += p;
      for (std::size_t i = 0; i < dims; ++i) {
        s1[i] += p * x[i];
        s2[i] += p * x[i] * x[i];
      }
    }
    std::size_t axis = 0;
    while (axis < dims && ++idx[axis] == points) idx[axis++] = 0;
    if (axis == dims) break;
  }
  if (!std::isfinite(top) || !(s0 > 0.0)) throw AnalysisError("posterior is not finite anywhere on the grid");
  OracleResult res;
  res.points_per_axis = points;
  res.mode = mode;
  for (std::size_t i = 0; i < dims; ++i) {
    const double m = s1[i] / s0;
    res.mean.push_back(m);
    res.sd.push_back(std::sqrt(std::max(0.0, s2[i] / s0 - m * m)));
  }
  return res;
}

// 2001 points per axis for up to two free parameters; 3-D grids default to 401
// to stay tractable. Pinned coordinates are held at their point.
inline OracleResult grid_posterior_oracle(const Model& model, std::size_t points = 0) {
  const auto& coords = model.coordinates();
  std::vector<std::size_t> free;
  std::vector<Interval> box;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i].support.is_point()) continue;
    free.push_back(i);
    box.push_back(coords[i].support);
  }
  if (free.size() > kOracleMaxDims)
    throw AnalysisError("oracle supports at most 3 free parameters, model has " + std::to_string(free.size()));
  for (const auto& b : box)
    if (!std::isfinite(b.width())) throw AnalysisError("oracle cannot integrate an unbounded parameter");
  if (points == 0) points = free.size() <= 2 ? 2001 : 401;
  std::vector<double> full(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) full[i] = coords[i].support.lower;
  auto density = [&](std::span<const double> x) {
    for (std::size_t i = 0; i < free.size(); ++i) full[free[i]] = x[i];
    return model.log_posterior(full);
  };
  auto res = grid_oracle(density, box, points);
  for (auto i : free) res.names.push_back(coords[i].name);
  return res;
}

inline OracleResult grid_posterior_oracle(const Network& net, const ModelSpec& spec, std::size_t points = 0) {
  return grid_posterior_oracle(Model(net, spec), points);
}

}  // namespace evsynth
