#pragma once

// Adaptive random-walk Metropolis-within-Gibbs.
//
// Every free coordinate gets its own Gaussian random-walk proposal. During
// burn-in the log proposal scale follows a Robbins-Monro recursion toward the
// target acceptance rate; afterwards the scales are frozen so the retained
// draws come from a fixed, posterior-invariant kernel. Proposals outside the
// prior support are rejected. Only the likelihood terms that depend on the
// updated coordinate are re-evaluated.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "evsynth/convergence.hpp"
#include "evsynth/error.hpp"
#include "evsynth/model.hpp"

namespace evsynth {

struct SamplerConfig {
  std::size_t n_burn = 10000;
  std::size_t n_iter = 20000;
  std::size_t n_chains = 3;
  std::size_t thin = 1;
  std::uint64_t seed = 20240101;
  double target_accept = 0.44;
  bool reduced_retention = false;  // keep only d / d_design / d_direct / SD columns
  std::optional<double> init_quantile;  // overrides the per-chain start pattern
  std::size_t threads = 0;              // 0: EVSYNTH_THREADS or hardware concurrency

  void validate() const {
    if (n_burn == 0 || n_iter == 0 || n_chains == 0 || thin == 0)
      throw InputError("sampler counts must be positive");
    if (!(target_accept > 0.0 && target_accept < 1.0)) throw InputError("target_accept must lie in (0, 1)");
    if (init_quantile && !(*init_quantile >= 0.0 && *init_quantile <= 1.0))
      throw InputError("init_quantile must lie in [0, 1]");
  }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t chain_seed(std::uint64_t seed, std::size_t chain) { return derive_seed(seed, chain); }

// Retained posterior draws, row-major. Rows from different chains are stored
// contiguously in chain order.
struct Draws {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<std::size_t> chain;      // per row
  std::vector<std::size_t> iteration;  // per row, 1-based post-burn-in iteration
  std::vector<double> log_post;        // per row
  std::vector<std::vector<double>> acceptance;  // [chain][column] post-burn-in
  std::vector<std::vector<double>> scales;      // [chain][column] frozen proposal SDs
  std::vector<std::vector<double>> burn_end_scales;  // [chain][column] when adaptation stopped
  std::vector<std::uint64_t> chain_seeds;
  std::uint64_t seed = 0;
  std::size_t n_burn = 0;
  std::size_t n_iter = 0;
  std::size_t thin = 1;

  std::size_t rows() const { return chain.size(); }
  std::size_t cols() const { return names.size(); }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols(), cols()}; }

  std::optional<std::size_t> column_index(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return std::nullopt;
  }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
    return out;
  }

  std::vector<double> column(std::string_view name) const {
    const auto c = column_index(name);
    if (!c) throw AnalysisError("draws have no column '" + std::string(name) + "'");
    return column(*c);
  }

  std::size_t chain_count() const { return chain.empty() ? 0 : chain.back() + 1; }

  std::vector<std::vector<double>> column_by_chain(std::size_t c) const {
    std::vector<std::vector<double>> out(chain_count());
    for (std::size_t r = 0; r < rows(); ++r) out[chain[r]].push_back(at(r, c));
    return out;
  }
};

struct ParameterConvergence {
  std::string name;
  std::optional<double> rhat;  // nullopt: degenerate (constant)
  std::optional<double> ess;
};

struct ConvergenceReport {
  std::vector<ParameterConvergence> parameters;
  std::vector<std::string> flagged;  // split-R-hat above the threshold
  double threshold = 1.05;
};

namespace detail {

inline bool kept_in_reduced(Model::Kind k) {
  return k != Model::Kind::Mu && k != Model::Kind::Delta;
}

inline std::vector<double> starting_point(const Model& model, std::optional<double> quantile) {
  auto x = model.initial_state();
  if (!quantile) return x;
  const auto& coords = model.coordinates();
  for (std::size_t i = 0; i < coords.size(); ++i) {
    switch (coords[i].kind) {
      case Model::Kind::D:
      case Model::Kind::DDesign:
      case Model::Kind::DDirect:
      case Model::Kind::Tau:
      case Model::Kind::Sigma: x[i] = coords[i].support.quantile(*quantile); break;
      default: break;
    }
  }
  for (std::size_t a = 0; a < model.active().size() && model.random_effects(); ++a)
    for (std::size_t j = 0; j < model.active()[a].effect_pos.size(); ++j)
      x[model.active()[a].delta_offset + j] = model.effect_mean(a, j, x);
  return x;
}

inline std::optional<double> chain_start_quantile(const SamplerConfig& cfg, std::size_t chain_index) {
  if (cfg.init_quantile) return cfg.init_quantile;
  switch (chain_index % 3) {
    case 1: return 0.25;
    case 2: return 0.75;
    default: return std::nullopt;
  }
}

}  // namespace detail

// One chain. Identical (model, cfg, chain_index) gives bit-identical draws.
inline Draws run_chain(const Model& model, const SamplerConfig& cfg, std::size_t chain_index) {
  cfg.validate();
  model.check_identifiable();
  const auto& coords = model.coordinates();
  const std::size_t dim = coords.size();
  const std::size_t n_active = model.active().size();

  Draws out;
  out.seed = cfg.seed;
  out.n_burn = cfg.n_burn;
  out.n_iter = cfg.n_iter;
  out.thin = cfg.thin;
  out.chain_seeds = {chain_seed(cfg.seed, chain_index)};
  std::mt19937_64 rng(out.chain_seeds.front());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < dim; ++i)
    if (!cfg.reduced_retention || detail::kept_in_reduced(coords[i].kind)) {
      kept.push_back(i);
      out.names.push_back(coords[i].name);
    }

  auto x = detail::starting_point(model, detail::chain_start_quantile(cfg, chain_index));
  constexpr int kMaxRetries = 50;
  for (int attempt = 0; model.log_posterior(x) == kNegInf; ++attempt) {
    if (attempt == kMaxRetries)
      throw AnalysisError("could not find a starting point with finite log posterior");
    x = model.initial_state();
    for (std::size_t i = 0; i < dim; ++i)
      if (!coords[i].support.is_point()) x[i] += 0.1 * normal(rng);
    model.clamp_into_support(x);
  }

  std::vector<double> cache(n_active);
  for (std::size_t a = 0; a < n_active; ++a) cache[a] = model.study_term(a, x);
  double hyper = model.hyper_term(x);

  std::vector<double> log_scale(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const auto& s = coords[i].support;
    const double w = std::isfinite(s.width()) ? s.width() : 20.0;
    log_scale[i] = std::log(std::min(0.1, w / 4.0 + 1e-12));
  }
  std::vector<std::size_t> accepted(dim, 0);
  std::vector<double> fresh(n_active);
  std::vector<double> burn_end_log_scale;

  const std::size_t total = cfg.n_burn + cfg.n_iter;
  for (std::size_t it = 0; it < total; ++it) {
    const bool burning = it < cfg.n_burn;
    for (std::size_t i = 0; i < dim; ++i) {
      const auto& c = coords[i];
      if (c.support.is_point()) continue;
      const double old = x[i];
      const double prop = old + std::exp(log_scale[i]) * normal(rng);
      const double u = unif(rng);
      bool accept = false;
      if (model.in_support(i, prop)) {
        x[i] = prop;
        double delta = 0.0;
        for (auto a : c.studies) {
          fresh[a] = model.study_term(a, x);
          delta += fresh[a] - cache[a];
        }
        double new_hyper = hyper;
        if (c.hyper) {
          new_hyper = model.hyper_term(x);
          delta += new_hyper - hyper;
        }
        accept = std::isfinite(delta) ? std::log(u) < delta : delta > 0.0;
        if (accept) {
          for (auto a : c.studies) cache[a] = fresh[a];
          hyper = new_hyper;
        } else {
          x[i] = old;
        }
      }
      if (burning) {
        const double gain = std::pow(static_cast<double>(it + 1), -0.6);
        log_scale[i] += gain * ((accept ? 1.0 : 0.0) - cfg.target_accept);
        log_scale[i] = std::clamp(log_scale[i], std::log(1e-6), std::log(50.0));
      } else if (accept) {
        ++accepted[i];
      }
    }
    if (burning) continue;
    if (it == cfg.n_burn) burn_end_log_scale = log_scale;
    const std::size_t post = it - cfg.n_burn + 1;
    if (post % cfg.thin != 0) continue;
    const double lp = model.log_posterior(x);
    if (!std::isfinite(lp)) throw AnalysisError("sampler reached a state with non-finite log posterior");
    for (auto i : kept) out.values.push_back(x[i]);
    out.chain.push_back(chain_index);
    out.iteration.push_back(post);
    out.log_post.push_back(lp);
  }

  std::vector<double> acc, scl, frozen;
  for (auto i : kept) {
    frozen.push_back(std::exp(burn_end_log_scale[i]));
    acc.push_back(coords[i].support.is_point() ? 0.0
                                               : static_cast<double>(accepted[i]) / static_cast<double>(cfg.n_iter));
    scl.push_back(std::exp(log_scale[i]));
  }
  out.acceptance.push_back(std::move(acc));
  out.scales.push_back(std::move(scl));
  out.burn_end_scales.push_back(std::move(frozen));
  return out;
}

inline Draws run_chain(const Network& net, const ModelSpec& spec, const SamplerConfig& cfg, std::size_t chain_index) {
  return run_chain(Model(net, spec), cfg, chain_index);
}

// Concatenates single-chain draws in chain order.
inline Draws merge_draws(std::vector<Draws> parts) {
  if (parts.empty()) throw std::invalid_argument("nothing to merge");
  Draws out = std::move(parts.front());
  for (std::size_t p = 1; p < parts.size(); ++p) {
    auto& d = parts[p];
    if (d.names != out.names) throw std::invalid_argument("draw columns differ between chains");
    out.values.insert(out.values.end(), d.values.begin(), d.values.end());
    out.chain.insert(out.chain.end(), d.chain.begin(), d.chain.end());
    out.iteration.insert(out.iteration.end(), d.iteration.begin(), d.iteration.end());
    out.log_post.insert(out.log_post.end(), d.log_post.begin(), d.log_post.end());
    out.acceptance.insert(out.acceptance.end(), d.acceptance.begin(), d.acceptance.end());
    out.scales.insert(out.scales.end(), d.scales.begin(), d.scales.end());
    out.burn_end_scales.insert(out.burn_end_scales.end(), d.burn_end_scales.begin(), d.burn_end_scales.end());
    out.chain_seeds.insert(out.chain_seeds.end(), d.chain_seeds.begin(), d.chain_seeds.end());
  }
  return out;
}

inline ConvergenceReport convergence_report(const Draws& draws, double threshold = 1.05) {
  ConvergenceReport rep;
  rep.threshold = threshold;
  for (std::size_t c = 0; c < draws.cols(); ++c) {
    const auto by_chain = draws.column_by_chain(c);
    std::vector<std::span<const double>> spans(by_chain.begin(), by_chain.end());
    ParameterConvergence pc{draws.names[c], std::nullopt, std::nullopt};
    bool long_enough = true;
    for (const auto& s : spans) long_enough = long_enough && s.size() >= 10;
    if (long_enough) {
      pc.rhat = split_rhat(spans);
      double total = 0.0;
      bool degenerate = false;
      for (const auto& s : spans) {
        const auto e = ess(s);
        if (!e) degenerate = true;
        else total += *e;
      }
      if (!degenerate) pc.ess = total;
    }
    if (pc.rhat && *pc.rhat > threshold) rep.flagged.push_back(pc.name);
    rep.parameters.push_back(std::move(pc));
  }
  return rep;
}

inline std::size_t thread_budget(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EVSYNTH_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct EnsembleResult {
  Draws draws;
  ConvergenceReport convergence;
};

// n_chains independent chains (derived seeds, spread starting points), run
// concurrently up to the thread budget and merged in chain order.
inline EnsembleResult run_ensemble(const Model& model, const SamplerConfig& cfg) {
  cfg.validate();
  model.check_identifiable();
  std::vector<Draws> parts(cfg.n_chains);
  std::vector<std::exception_ptr> errors(cfg.n_chains);
  const std::size_t workers = std::min(thread_budget(cfg.threads), cfg.n_chains);
  if (workers <= 1) {
    for (std::size_t c = 0; c < cfg.n_chains; ++c) parts[c] = run_chain(model, cfg, c);
  } else {
    for (std::size_t start = 0; start < cfg.n_chains; start += workers) {
      std::vector<std::thread> pool;
      for (std::size_t c = start; c < std::min(cfg.n_chains, start + workers); ++c)
        pool.emplace_back([&, c] {
          try {
            parts[c] = run_chain(model, cfg, c);
          } catch (...) {
            errors[c] = std::current_exception();
          }
        });
      for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  EnsembleResult res{merge_draws(std::move(parts)), {}};
  res.convergence = convergence_report(res.draws);
  return res;
}

inline EnsembleResult run_ensemble(const Network& net, const ModelSpec& spec, const SamplerConfig& cfg) {
  return run_ensemble(Model(net, spec), cfg);
}

}  // namespace evsynth
