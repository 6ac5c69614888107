#pragma once

// Model fit: Poisson residual deviance, DIC and node-splitting.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "evsynth/analysis.hpp"
#include "evsynth/error.hpp"
#include "evsynth/model.hpp"
#include "evsynth/sampler.hpp"
#include "json.hpp"

namespace evsynth {

// Saturated-model deviance of one arm; the r*log(r/lambda) term is 0 at r = 0.
inline double poisson_residual_deviance(long r, double lambda) {
  if (!(lambda > 0.0)) throw std::logic_error("residual deviance needs a positive fitted rate");
  const double rd = static_cast<double>(r);
  const double log_term = r == 0 ? 0.0 : rd * std::log(rd / lambda);
  return 2.0 * (lambda - rd + log_term);
}

struct ArmDeviance {
  std::string study;
  std::string treatment;
  Design design = Design::Rct;
  long relapses = 0;
  double weight = 1.0;
  double mean_lambda = 0.0;
  double mean_deviance = 0.0;
};

struct DicSummary {
  double dbar = 0.0;  // posterior mean of -2 log L
  double dhat = 0.0;  // -2 log L at the posterior mean of the parameters
  double pd = 0.0;
  double dic = 0.0;
};

struct DevianceReport {
  std::vector<ArmDeviance> arms;
  double total = 0.0;           // unweighted, all retained arms
  double total_rct = 0.0;
  double total_weighted = 0.0;  // RWE arms scaled by their likelihood weight
  DicSummary dic;
  DicSummary dic_weighted;
};

namespace detail {

inline void require_full_columns(const Draws& draws, const Model& model) {
  if (draws.names != model.names())
    throw AnalysisError("draws are missing parameter columns needed to reconstruct arm rates");
}

// -2 log L over all arms of the model at flat state x.
inline double minus_two_log_lik(const Model& model, std::span<const double> x, bool weighted) {
  double ll = 0.0;
  for (std::size_t a = 0; a < model.active().size(); ++a) {
    const auto& st = model.active()[a];
    const auto& arms = model.network().studies[st.study].arms;
    for (std::size_t pos = 0; pos < arms.size(); ++pos) {
      const double gamma = std::exp(model.arm_log_rate(a, pos, x));
      ll += arm_log_lik(arms[pos].relapses, arms[pos].exposure, gamma, weighted ? st.weight : 1.0);
    }
  }
  return -2.0 * ll;
}

}  // namespace detail

inline DicSummary dic(const Draws& draws, const Model& model, bool weighted = false) {
  detail::require_full_columns(draws, model);
  if (draws.rows() == 0) throw AnalysisError("no draws");
  DicSummary s;
  std::vector<double> mean(draws.cols(), 0.0);
  for (std::size_t r = 0; r < draws.rows(); ++r) {
    const auto row = draws.row(r);
    s.dbar += detail::minus_two_log_lik(model, row, weighted);
    for (std::size_t c = 0; c < row.size(); ++c) mean[c] += row[c];
  }
  const double n = static_cast<double>(draws.rows());
  s.dbar /= n;
  for (auto& m : mean) m /= n;
  s.dhat = detail::minus_two_log_lik(model, mean, weighted);
  s.pd = s.dbar - s.dhat;
  s.dic = s.dbar + s.pd;
  return s;
}

inline DevianceReport residual_deviance(const Draws& draws, const Model& model) {
  detail::require_full_columns(draws, model);
  if (draws.rows() == 0) throw AnalysisError("no draws");
  DevianceReport rep;
  const auto& net = model.network();
  for (std::size_t a = 0; a < model.active().size(); ++a) {
    const auto& st = model.active()[a];
    const auto& study = net.studies[st.study];
    for (std::size_t pos = 0; pos < study.arms.size(); ++pos) {
      const auto& arm = study.arms[pos];
      ArmDeviance ad{study.id, net.treatments[arm.treatment], study.design, arm.relapses, st.weight, 0.0, 0.0};
      for (std::size_t r = 0; r < draws.rows(); ++r) {
        const double lambda = std::exp(model.arm_log_rate(a, pos, draws.row(r))) * arm.exposure;
        ad.mean_lambda += lambda;
        ad.mean_deviance += poisson_residual_deviance(arm.relapses, lambda);
      }
      ad.mean_lambda /= static_cast<double>(draws.rows());
      ad.mean_deviance /= static_cast<double>(draws.rows());
      rep.total += ad.mean_deviance;
      if (study.design == Design::Rct) rep.total_rct += ad.mean_deviance;
      rep.total_weighted += st.weight * ad.mean_deviance;
      rep.arms.push_back(std::move(ad));
    }
  }
  rep.dic = dic(draws, model, false);
  rep.dic_weighted = dic(draws, model, true);
  return rep;
}

inline std::string deviance_csv(const DevianceReport& rep) {
  std::string out = "study_id,design,treatment,r,weight,mean_lambda,mean_dev\n";
  for (const auto& a : rep.arms)
    out += text::csv_field(a.study) + ',' + std::string(to_string(a.design)) + ',' + text::csv_field(a.treatment) +
           ',' + std::to_string(a.relapses) + ',' + text::num(a.weight, 6) + ',' + text::num(a.mean_lambda, 8) + ',' +
           text::num(a.mean_deviance, 8) + '\n';
  return out;
}

inline nlohmann::ordered_json to_json(const DicSummary& s) {
  return {{"dbar", s.dbar}, {"dhat", s.dhat}, {"pd", s.pd}, {"dic", s.dic}};
}

inline nlohmann::ordered_json to_json(const DevianceReport& rep) {
  return {{"arms", rep.arms.size()},
          {"total_residual_deviance", rep.total},
          {"total_residual_deviance_rct", rep.total_rct},
          {"total_residual_deviance_weighted", rep.total_weighted},
          {"dic", to_json(rep.dic)},
          {"dic_weighted", to_json(rep.dic_weighted)}};
}

// ---------------------------------------------------------------------------
// Node-splitting.

struct NodeSplitResult {
  SplitEdge edge;
  std::string b_label;
  std::string k_label;
  std::size_t direct_studies = 0;
  SummaryStats direct;
  SummaryStats indirect;
  SummaryStats difference;  // direct - indirect
  double p_value = 1.0;
};

// Throws AnalysisError("not splittable: ...") unless the edge has direct
// evidence and b, k stay connected without the studies that compare them.
inline void check_splittable(const Network& net, SplitEdge edge) {
  if (edge.b == edge.k || edge.b >= net.treatment_count() || edge.k >= net.treatment_count())
    throw InputError("invalid edge");
  auto both = [&](const Study& s) { return s.contains(edge.b) && s.contains(edge.k); };
  const bool direct = std::any_of(net.studies.begin(), net.studies.end(), both);
  const auto name = net.treatments[edge.b] + " vs " + net.treatments[edge.k];
  if (!direct) throw AnalysisError("not splittable: no direct evidence for " + name);
  const auto comps = connected_components(net, [&](const Study& s) { return !both(s); });
  for (const auto& c : comps) {
    const bool has_b = std::find(c.begin(), c.end(), edge.b) != c.end();
    const bool has_k = std::find(c.begin(), c.end(), edge.k) != c.end();
    if (has_b != has_k) throw AnalysisError("not splittable: no indirect path for " + name);
    if (has_b) return;
  }
}

// Two-sided tail probability of omega around 0 from draws; each tail is
// floored at 1/(2N).
inline double split_p_value(std::span<const double> omega) {
  const double n = static_cast<double>(omega.size());
  double pos = 0.0, neg = 0.0;
  for (double w : omega) {
    if (w > 0.0) pos += 1.0;
    else if (w < 0.0) neg += 1.0;
  }
  const double floor = 1.0 / (2.0 * n);
  const double tail = std::min(std::max(pos / n, floor), std::max(neg / n, floor));
  return std::min(1.0, 2.0 * tail);
}

inline NodeSplitResult node_split(const Network& net, const ModelSpec& spec, SplitEdge edge, SamplerConfig cfg) {
  if (edge.b > edge.k) std::swap(edge.b, edge.k);
  check_splittable(net, edge);
  const Model model(net, spec, edge);
  cfg.reduced_retention = true;
  const auto fit = run_ensemble(model, cfg);
  const auto& draws = fit.draws;
  const auto direct = draws.column(model.coordinates()[*model.d_direct_index()].name);
  const auto basic = basic_parameter_draws(draws, net);
  std::vector<double> indirect(draws.rows()), omega(draws.rows());
  for (std::size_t r = 0; r < draws.rows(); ++r) {
    indirect[r] = contrast(basic[r][edge.k], basic[r][edge.b]);
    omega[r] = direct[r] - indirect[r];
  }
  NodeSplitResult res;
  res.edge = edge;
  res.b_label = net.treatments[edge.b];
  res.k_label = net.treatments[edge.k];
  for (const auto& s : net.studies)
    if (s.contains(edge.b) && s.contains(edge.k)) ++res.direct_studies;
  res.direct = summarize(direct);
  res.indirect = summarize(indirect);
  res.difference = summarize(omega);
  res.p_value = split_p_value(omega);
  return res;
}

inline nlohmann::ordered_json to_json(const SummaryStats& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"median", s.median}, {"q025", s.q025}, {"q975", s.q975}};
}

inline nlohmann::ordered_json to_json(const NodeSplitResult& r) {
  return {{"edge", {r.b_label, r.k_label}},
          {"direct_studies", r.direct_studies},
          {"direct", to_json(r.direct)},
          {"indirect", to_json(r.indirect)},
          {"difference", to_json(r.difference)},
          {"p_value", r.p_value}};
}

}  // namespace evsynth
