#pragma once

// Synthesis models and their exact unnormalised log posterior.
//
// Arm-level likelihood: r ~ Poisson(gamma * E), log(gamma) = mu_b + delta_bk
// (delta = 0 on the baseline arm). Random effects delta_bk are centred on the
// consistency contrast d_1k - d_1b and correlated within multi-arm studies via
// the conditional-normal chain. Variants differ in which studies enter, how
// RWE likelihood terms are weighted and where the heterogeneity SD lives:
//
//   RctOnly    RWE studies dropped.
//   Pooled     every study at face value, one SD tau.
//   PowerPrior RWE log-likelihood multiplied by alpha; alpha = 0 drops RWE.
//   Hier2      both designs' effects around shared d with design-level SD sigma.
//   Hier3      per-design means d^j ~ N(d, sigma^2), study effects ~ N(d^j, tau^2).
//   HierPower  Hier2 with the RWE variance inflated to sigma^2 / alpha.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evsynth/error.hpp"
#include "evsynth/network.hpp"

namespace evsynth {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class Variant { RctOnly, Pooled, PowerPrior, Hier2, Hier3, HierPower };
enum class Effects { Random, Fixed };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::RctOnly: return "rct-only";
    case Variant::Pooled: return "pooled";
    case Variant::PowerPrior: return "power";
    case Variant::Hier2: return "hier";
    case Variant::Hier3: return "hier3";
    case Variant::HierPower: return "hier-power";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
  const auto v = text::lower(s);
  if (v == "rct-only" || v == "rctonly" || v == "rct") return Variant::RctOnly;
  if (v == "pooled" || v == "naive") return Variant::Pooled;
  if (v == "power" || v == "powerprior" || v == "power-prior") return Variant::PowerPrior;
  if (v == "hier" || v == "hier2") return Variant::Hier2;
  if (v == "hier3") return Variant::Hier3;
  if (v == "hier-power" || v == "hierpower") return Variant::HierPower;
  return std::nullopt;
}

inline std::string_view to_string(Effects e) { return e == Effects::Random ? "random" : "fixed"; }

struct Interval {
  double lower = 0.0;
  double upper = 1.0;

  double width() const { return upper - lower; }
  bool contains(double x) const { return x >= lower && x <= upper; }
  // A collapsed interval pins the parameter to a single value.
  bool is_point() const { return lower == upper; }
  double quantile(double p) const { return lower + p * width(); }
  // log of the uniform density; 0 for a pinned parameter (point mass).
  double log_density() const { return is_point() ? 0.0 : -std::log(width()); }
};

struct PriorSpec {
  Interval mu{-10.0, 10.0};
  Interval d{-10.0, 10.0};
  Interval tau{0.0, 2.0};
  Interval sigma{0.0, 2.0};

  void validate() const {
    for (const auto* iv : {&mu, &d, &tau, &sigma})
      if (!(iv->lower <= iv->upper) || !std::isfinite(iv->lower) || !std::isfinite(iv->upper))
        throw InputError("prior interval must satisfy lower <= upper with finite bounds");
    if (tau.lower < 0.0 || sigma.lower < 0.0) throw InputError("heterogeneity SD bounds must be non-negative");
  }
};

struct ModelSpec {
  Variant variant = Variant::Pooled;
  double alpha = 1.0;
  PriorSpec priors;
  Effects effects = Effects::Random;
  bool tau_per_design = false;  // Hier3 only; experimental

  bool uses_alpha() const { return variant == Variant::PowerPrior || variant == Variant::HierPower; }

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in [0, 1]");
    if (tau_per_design && variant != Variant::Hier3) throw InputError("tau_per_design applies to hier3 only");
    priors.validate();
  }
};

// Direct comparison split out for node-splitting; b is the lower index.
struct SplitEdge {
  std::size_t b = 0;
  std::size_t k = 0;
};

// One point in parameter space, by role. Sizes follow the compiled Model:
// mu/delta are indexed by active study, d and d_design by treatment 1..T-1.
struct ParameterState {
  std::vector<double> mu;
  std::vector<std::vector<double>> delta;
  std::vector<double> d;
  std::vector<std::vector<double>> d_design;  // [rct, rwe]; Hier3 only
  std::vector<double> tau;                    // empty, one shared, or [rct, rwe]
  std::optional<double> sigma;
  std::optional<double> d_direct;
};

// ---------------------------------------------------------------------------
// Scalar building blocks.

inline double arm_rate(double mu, double delta_or_zero) { return std::exp(mu + delta_or_zero); }

// alpha * log Poisson(r | gamma * E).
inline double arm_log_lik(long r, double exposure, double gamma, double alpha) {
  if (alpha == 0.0) return 0.0;
  const double lambda = gamma * exposure;
  const double rd = static_cast<double>(r);
  const double r_log_lambda = r == 0 ? 0.0 : rd * std::log(lambda);
  return alpha * (r_log_lambda - lambda - std::lgamma(rd + 1.0));
}

// d_bk from the basic parameters under consistency.
inline double contrast(double d_1k, double d_1b) { return d_1k - d_1b; }

struct NormalMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Conditional law of the n-th (1-based) random effect of a multi-arm study
// given the first n-1. `d` holds the contrast means for at least n effects.
inline NormalMoments multi_arm_conditional(std::span<const double> d, std::span<const double> delta_prev,
                                           double het_sd, std::size_t n) {
  if (n < 1 || d.size() < n || delta_prev.size() != n - 1)
    throw std::invalid_argument("multi_arm_conditional: dimension mismatch");
  if (n == 1) return {d[0], het_sd * het_sd};
  double shift = 0.0;
  for (std::size_t t = 0; t + 1 < n; ++t) shift += delta_prev[t] - d[t];
  const double nn = static_cast<double>(n);
  return {d[n - 1] + shift / nn, (nn + 1.0) / (2.0 * nn) * het_sd * het_sd};
}

// Draws a full vector of correlated study effects through the conditional chain.
template <class Rng>
std::vector<double> sample_multi_arm(std::span<const double> d, double het_sd, Rng& rng) {
  std::vector<double> out;
  out.reserve(d.size());
  std::normal_distribution<double> z(0.0, 1.0);
  for (std::size_t n = 1; n <= d.size(); ++n) {
    const auto m = multi_arm_conditional(d, out, het_sd, n);
    out.push_back(m.mean + std::sqrt(m.variance) * z(rng));
  }
  return out;
}

inline double normal_log_density(double x, double mean, double variance) {
  if (!(variance > 0.0)) return kNegInf;
  const double z = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + z * z / variance);
}

// ---------------------------------------------------------------------------
// Compiled model: parameter layout plus per-study likelihood terms.

class Model {
 public:
  enum class Kind { Mu, Delta, D, DDesign, Tau, Sigma, DDirect };

  struct Coordinate {
    Kind kind;
    std::string name;
    Interval support;          // infinite for random effects
    std::vector<std::size_t> studies;  // active-study terms that depend on it
    bool hyper = false;        // Hier3 design-mean term depends on it
  };

  struct ActiveStudy {
    std::size_t study = 0;           // index into network().studies
    Design design = Design::Rct;
    double weight = 1.0;             // likelihood exponent
    std::size_t baseline_pos = 0;    // position of the baseline arm
    std::vector<std::size_t> effect_pos;  // positions of non-baseline arms
    std::vector<double> log_exposure;
    std::vector<double> log_r_factorial;
    std::size_t mu_index = 0;
    std::size_t delta_offset = 0;    // valid with random effects
    int het_index = -1;              // SD parameter for the random effects
    double het_scale = 1.0;          // multiplies the SD (HierPower RWE: 1/sqrt(alpha))
    bool split = false;              // contains both ends of the split edge
  };

  Model(Network net, ModelSpec spec, std::optional<SplitEdge> split = {})
      : net_(std::move(net)), spec_(spec), split_(split) {
    spec_.validate();
    if (net_.treatment_count() < 2) throw InputError("network needs at least two treatments");
    if (split_) {
      if (split_->b > split_->k) std::swap(split_->b, split_->k);
      if (split_->b == split_->k || split_->k >= net_.treatment_count())
        throw InputError("invalid split edge");
    }
    build();
  }

  const Network& network() const { return net_; }
  const ModelSpec& spec() const { return spec_; }
  const std::optional<SplitEdge>& split() const { return split_; }
  const std::vector<ActiveStudy>& active() const { return active_; }
  const std::vector<Coordinate>& coordinates() const { return coords_; }
  std::size_t dimension() const { return coords_.size(); }
  bool random_effects() const { return spec_.effects == Effects::Random; }
  bool has_hyper_term() const { return spec_.variant == Variant::Hier3; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(coords_.size());
    for (const auto& c : coords_) out.push_back(c.name);
    return out;
  }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < coords_.size(); ++i)
      if (coords_[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t d_index(std::size_t treatment) const { return d_offset_ + treatment - 1; }
  std::optional<std::size_t> d_direct_index() const { return d_direct_index_; }
  std::optional<std::size_t> between_sd_index() const {
    if (sigma_index_ >= 0 && spec_.variant != Variant::Hier3) return static_cast<std::size_t>(sigma_index_);
    if (tau_offset_ >= 0) return static_cast<std::size_t>(tau_offset_);
    if (sigma_index_ >= 0) return static_cast<std::size_t>(sigma_index_);
    return std::nullopt;
  }

  // Refuses configurations where some treatment has no data path to the
  // reference among the studies this variant keeps.
  void check_identifiable() const {
    std::vector<bool> keep(net_.studies.size(), false);
    for (const auto& a : active_) keep[a.study] = true;
    const auto* first = net_.studies.data();
    const auto comps = connected_components(
        net_, [&](const Study& s) { return keep[static_cast<std::size_t>(&s - first)]; });
    if (comps.size() > 1) {
      std::string msg = "non-identifiable configuration: treatments without evidence linking them to '" +
                        net_.reference() + "' under " + std::string(to_string(spec_.variant));
      if (spec_.uses_alpha()) msg += " (alpha=" + text::num(spec_.alpha) + ")";
      msg += ":";
      for (std::size_t c = 1; c < comps.size(); ++c)
        for (auto t : comps[c]) msg += " " + net_.treatments[t];
      throw AnalysisError(msg);
    }
  }

  // -- packing ---------------------------------------------------------------

  std::vector<double> pack(const ParameterState& s) const {
    auto mismatch = [] { throw std::invalid_argument("parameter state does not match model dimensions"); };
    std::vector<double> x(dimension(), 0.0);
    if (s.mu.size() != active_.size()) mismatch();
    if (random_effects() && s.delta.size() != active_.size()) mismatch();
    if (!random_effects() && !s.delta.empty()) mismatch();
    if (s.d.size() != net_.treatment_count() - 1) mismatch();
    for (std::size_t a = 0; a < active_.size(); ++a) {
      x[active_[a].mu_index] = s.mu[a];
      if (random_effects()) {
        if (s.delta[a].size() != active_[a].effect_pos.size()) mismatch();
        for (std::size_t j = 0; j < s.delta[a].size(); ++j) x[active_[a].delta_offset + j] = s.delta[a][j];
      }
    }
    for (std::size_t k = 0; k < s.d.size(); ++k) x[d_offset_ + k] = s.d[k];
    if (has_hyper_term()) {
      if (s.d_design.size() != 2) mismatch();
      for (std::size_t j = 0; j < 2; ++j) {
        if (s.d_design[j].size() != s.d.size()) mismatch();
        for (std::size_t k = 0; k < s.d.size(); ++k) x[d_design_offset_ + j * s.d.size() + k] = s.d_design[j][k];
      }
    } else if (!s.d_design.empty()) {
      mismatch();
    }
    if (s.tau.size() != tau_count_) mismatch();
    for (std::size_t i = 0; i < tau_count_; ++i) x[tau_offset_ + i] = s.tau[i];
    if (s.sigma.has_value() != (sigma_index_ >= 0)) mismatch();
    if (s.sigma) x[sigma_index_] = *s.sigma;
    if (s.d_direct.has_value() != d_direct_index_.has_value()) mismatch();
    if (s.d_direct) x[*d_direct_index_] = *s.d_direct;
    return x;
  }

  ParameterState unpack(std::span<const double> x) const {
    if (x.size() != dimension()) throw std::invalid_argument("flat state has wrong length");
    ParameterState s;
    const auto t1 = net_.treatment_count() - 1;
    for (const auto& a : active_) {
      s.mu.push_back(x[a.mu_index]);
      if (random_effects())
        s.delta.emplace_back(x.begin() + a.delta_offset, x.begin() + a.delta_offset + a.effect_pos.size());
    }
    s.d.assign(x.begin() + d_offset_, x.begin() + d_offset_ + t1);
    if (has_hyper_term())
      for (std::size_t j = 0; j < 2; ++j)
        s.d_design.emplace_back(x.begin() + d_design_offset_ + j * t1, x.begin() + d_design_offset_ + (j + 1) * t1);
    for (std::size_t i = 0; i < tau_count_; ++i) s.tau.push_back(x[tau_offset_ + i]);
    if (sigma_index_ >= 0) s.sigma = x[sigma_index_];
    if (d_direct_index_) s.d_direct = x[*d_direct_index_];
    return s;
  }

  // -- densities ---------------------------------------------------------------

  // Sum of uniform log densities; -inf outside the support.
  double log_prior(std::span<const double> x) const {
    double lp = 0.0;
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      const auto& c = coords_[i];
      if (c.kind == Kind::Delta) continue;
      if (!c.support.contains(x[i])) return kNegInf;
      lp += c.support.log_density();
    }
    return lp;
  }

  bool in_support(std::size_t i, double v) const {
    const auto& c = coords_[i];
    return c.kind == Kind::Delta ? std::isfinite(v) : c.support.contains(v);
  }

  // Contrast mean (vs the study baseline) of effect j in active study a.
  double effect_mean(std::size_t a, std::size_t j, std::span<const double> x) const {
    const auto& st = active_[a];
    const auto& arms = net_.studies[st.study].arms;
    const auto b = arms[st.baseline_pos].treatment;
    const auto k = arms[st.effect_pos[j]].treatment;
    if (st.split && k == split_->k) return x[*d_direct_index_];
    return basic(k, st.design, x) - basic(b, st.design, x);
  }

  // log(gamma) for arm position `pos` of active study a.
  double arm_log_rate(std::size_t a, std::size_t pos, std::span<const double> x) const {
    const auto& st = active_[a];
    const double mu = x[st.mu_index];
    if (pos == st.baseline_pos) return mu;
    std::size_t j = 0;
    while (st.effect_pos[j] != pos) ++j;
    return mu + (random_effects() ? x[st.delta_offset + j] : effect_mean(a, j, x));
  }

  // Weighted Poisson log-likelihood of one study plus its random-effects density.
  double study_term(std::size_t a, std::span<const double> x) const {
    const auto& st = active_[a];
    const auto& arms = net_.studies[st.study].arms;
    const double mu = x[st.mu_index];
    const std::size_t p = st.effect_pos.size();
    double ll = 0.0;
    auto add_arm = [&](std::size_t pos, double eta) {
      const auto& arm = arms[pos];
      const double lambda = std::exp(eta) * arm.exposure;
      const double rd = static_cast<double>(arm.relapses);
      const double r_log_lambda = arm.relapses == 0 ? 0.0 : rd * (eta + st.log_exposure[pos]);
      ll += r_log_lambda - lambda - st.log_r_factorial[pos];
    };
    add_arm(st.baseline_pos, mu);
    double re = 0.0;
    if (random_effects()) {
      const double sd = x[het_index_of(st)] * st.het_scale;
      const double var0 = sd * sd;
      double shift = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double delta = x[st.delta_offset + j];
        const double m = effect_mean(a, j, x);
        add_arm(st.effect_pos[j], mu + delta);
        const double n = static_cast<double>(j + 1);
        const double cond_mean = m + shift / n;
        const double cond_var = j == 0 ? var0 : (n + 1.0) / (2.0 * n) * var0;
        re += normal_log_density(delta, cond_mean, cond_var);
        shift += delta - m;
      }
    } else {
      for (std::size_t j = 0; j < p; ++j) add_arm(st.effect_pos[j], mu + effect_mean(a, j, x));
    }
    const double v = st.weight * ll + re;
    return std::isnan(v) ? kNegInf : v;
  }

  // Hier3: design-level basic parameters around the overall ones.
  double hyper_term(std::span<const double> x) const {
    if (!has_hyper_term()) return 0.0;
    const auto t1 = net_.treatment_count() - 1;
    const double sd = x[sigma_index_];
    double v = 0.0;
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < t1; ++k)
        v += normal_log_density(x[d_design_offset_ + j * t1 + k], x[d_offset_ + k], sd * sd);
    return v;
  }

  double log_likelihood_terms(std::span<const double> x) const {
    double v = hyper_term(x);
    for (std::size_t a = 0; a < active_.size(); ++a) v += study_term(a, x);
    return v;
  }

  double log_posterior(std::span<const double> x) const {
    if (x.size() != dimension()) throw std::invalid_argument("flat state has wrong length");
    const double lp = log_prior(x);
    if (lp == kNegInf) return kNegInf;
    const double v = lp + log_likelihood_terms(x);
    return std::isnan(v) ? kNegInf : v;
  }

  double log_prior(const ParameterState& s) const { return log_prior(std::span<const double>(pack(s))); }
  double log_posterior(const ParameterState& s) const { return log_posterior(std::span<const double>(pack(s))); }

  // Reasonable starting point: mu at crude baseline log rates, effects at 0,
  // SDs at 0.1, all clamped into the support.
  std::vector<double> initial_state() const {
    std::vector<double> x(dimension(), 0.0);
    for (const auto& st : active_) {
      const auto& arm = net_.studies[st.study].arms[st.baseline_pos];
      x[st.mu_index] = std::log((static_cast<double>(arm.relapses) + 0.5) / arm.exposure);
    }
    for (std::size_t i = 0; i < coords_.size(); ++i)
      if (coords_[i].kind == Kind::Tau || coords_[i].kind == Kind::Sigma) x[i] = 0.1;
    clamp_into_support(x);
    for (std::size_t a = 0; a < active_.size() && random_effects(); ++a)
      for (std::size_t j = 0; j < active_[a].effect_pos.size(); ++j) x[active_[a].delta_offset + j] = effect_mean(a, j, x);
    return x;
  }

  void clamp_into_support(std::vector<double>& x) const {
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      const auto& c = coords_[i];
      if (c.kind == Kind::Delta) continue;
      x[i] = std::min(std::max(x[i], c.support.lower), c.support.upper);
    }
  }

  // Basic parameter d_1t (0 for the reference) as seen by a study of `design`.
  double basic(std::size_t t, Design design, std::span<const double> x) const {
    if (t == 0) return 0.0;
    if (has_hyper_term()) {
      const auto t1 = net_.treatment_count() - 1;
      return x[d_design_offset_ + (design == Design::Rct ? 0 : t1) + t - 1];
    }
    return x[d_offset_ + t - 1];
  }

 private:
  std::size_t het_index_of(const ActiveStudy& st) const { return static_cast<std::size_t>(st.het_index); }

  void build() {
    const auto& v = spec_.variant;
    const bool exclude_rwe = v == Variant::RctOnly || (spec_.uses_alpha() && spec_.alpha == 0.0);
    const auto& pr = spec_.priors;
    const auto t1 = net_.treatment_count() - 1;
    constexpr double inf = std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < net_.studies.size(); ++i) {
      const auto& s = net_.studies[i];
      if (exclude_rwe && s.design == Design::Rwe) continue;
      if (s.arms.size() < 2) throw InputError("study '" + s.id + "' has fewer than 2 arms");
      ActiveStudy st;
      st.study = i;
      st.design = s.design;
      st.weight = (v == Variant::PowerPrior && s.design == Design::Rwe) ? spec_.alpha : 1.0;
      st.split = split_ && s.contains(split_->b) && s.contains(split_->k);
      st.baseline_pos = 0;
      if (st.split)
        for (std::size_t p = 0; p < s.arms.size(); ++p)
          if (s.arms[p].treatment == split_->b) st.baseline_pos = p;
      for (std::size_t p = 0; p < s.arms.size(); ++p) {
        if (p != st.baseline_pos) st.effect_pos.push_back(p);
        st.log_exposure.push_back(std::log(s.arms[p].exposure));
        st.log_r_factorial.push_back(std::lgamma(static_cast<double>(s.arms[p].relapses) + 1.0));
      }
      if (v == Variant::HierPower && s.design == Design::Rwe) st.het_scale = 1.0 / std::sqrt(spec_.alpha);
      active_.push_back(std::move(st));
    }
    if (active_.empty()) throw AnalysisError("no studies remain under " + std::string(to_string(v)));

    auto add = [&](Kind kind, std::string name, Interval support) {
      coords_.push_back(Coordinate{kind, std::move(name), support, {}, false});
      return coords_.size() - 1;
    };
    for (auto& st : active_) st.mu_index = add(Kind::Mu, "mu[" + net_.studies[st.study].id + "]", pr.mu);
    if (random_effects()) {
      for (auto& st : active_) {
        const auto& s = net_.studies[st.study];
        st.delta_offset = coords_.size();
        for (auto pos : st.effect_pos)
          add(Kind::Delta, "delta[" + s.id + "," + net_.treatments[s.arms[pos].treatment] + "]", Interval{-inf, inf});
      }
    }
    d_offset_ = coords_.size();
    for (std::size_t k = 1; k <= t1; ++k) add(Kind::D, "d[" + net_.treatments[k] + "]", pr.d);
    if (has_hyper_term()) {
      d_design_offset_ = coords_.size();
      for (const char* tag : {"d_rct[", "d_rwe["})
        for (std::size_t k = 1; k <= t1; ++k) add(Kind::DDesign, tag + net_.treatments[k] + "]", pr.d);
    }
    const bool tau_used = random_effects() && (v == Variant::RctOnly || v == Variant::Pooled ||
                                                v == Variant::PowerPrior || v == Variant::Hier3);
    if (tau_used) {
      tau_offset_ = static_cast<int>(coords_.size());
      if (spec_.tau_per_design) {
        add(Kind::Tau, "tau[rct]", pr.tau);
        add(Kind::Tau, "tau[rwe]", pr.tau);
        tau_count_ = 2;
      } else {
        add(Kind::Tau, "tau", pr.tau);
        tau_count_ = 1;
      }
    }
    const bool sigma_used = v == Variant::Hier3 || (random_effects() && (v == Variant::Hier2 || v == Variant::HierPower));
    if (sigma_used) sigma_index_ = static_cast<int>(add(Kind::Sigma, "sigma", pr.sigma));
    if (split_) {
      d_direct_index_ = add(Kind::DDirect,
                            "d_direct[" + net_.treatments[split_->b] + "," + net_.treatments[split_->k] + "]", pr.d);
    }

    for (auto& st : active_) {
      if (!random_effects()) continue;
      if (tau_used)
        st.het_index = tau_offset_ + ((spec_.tau_per_design && st.design == Design::Rwe) ? 1 : 0);
      else
        st.het_index = sigma_index_;
    }

    // Dependency lists for incremental updates.
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const auto& st = active_[a];
      const auto& s = net_.studies[st.study];
      coords_[st.mu_index].studies.push_back(a);
      if (random_effects()) {
        for (std::size_t j = 0; j < st.effect_pos.size(); ++j) coords_[st.delta_offset + j].studies.push_back(a);
        coords_[st.het_index].studies.push_back(a);
      }
      for (const auto& arm : s.arms) {
        if (arm.treatment == 0) continue;
        const auto idx = has_hyper_term()
                             ? d_design_offset_ + (st.design == Design::Rct ? 0 : t1) + arm.treatment - 1
                             : d_offset_ + arm.treatment - 1;
        coords_[idx].studies.push_back(a);
      }
      if (st.split) coords_[*d_direct_index_].studies.push_back(a);
    }
    if (has_hyper_term()) {
      for (std::size_t i = d_offset_; i < d_offset_ + t1; ++i) coords_[i].hyper = true;
      for (std::size_t i = d_design_offset_; i < d_design_offset_ + 2 * t1; ++i) coords_[i].hyper = true;
      coords_[sigma_index_].hyper = true;
    }
  }

  Network net_;
  ModelSpec spec_;
  std::optional<SplitEdge> split_;
  std::vector<ActiveStudy> active_;
  std::vector<Coordinate> coords_;
  std::size_t d_offset_ = 0;
  std::size_t d_design_offset_ = 0;
  int tau_offset_ = -1;
  std::size_t tau_count_ = 0;
  int sigma_index_ = -1;
  std::optional<std::size_t> d_direct_index_;
};

// Free-function forms over (state, network, spec).
inline double log_prior(const ParameterState& state, const Network& net, const ModelSpec& spec) {
  return Model(net, spec).log_prior(state);
}

inline double log_posterior(const ParameterState& state, const Network& net, const ModelSpec& spec) {
  return Model(net, spec).log_posterior(state);
}

}  // namespace evsynth
