#pragma once

// Command-line front end. Every command resolves its configuration into a
// canonical key-value document (all defaults explicit, dataset path absolute)
// which is recorded in run.json; passing that run.json back as --config
// reproduces the outputs byte for byte.
//
// Exit codes: 0 ok, 1 analysis error, 2 input or I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "evsynth/analysis.hpp"
#include "evsynth/config.hpp"
#include "evsynth/error.hpp"
#include "evsynth/fit_diagnostics.hpp"
#include "evsynth/model.hpp"
#include "evsynth/network.hpp"
#include "evsynth/sampler.hpp"
#include "evsynth/svg.hpp"
#include "evsynth/synthetic.hpp"
#include "evsynth/text.hpp"
#include "json.hpp"

#ifndef EVSYNTH_VERSION
#define EVSYNTH_VERSION "0.0.0"
#endif

namespace evsynth::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline constexpr int kOk = 0;
inline constexpr int kAnalysisError = 1;
inline constexpr int kInputError = 2;

inline const std::string kDefaultOutDir = "evsynth-out";

// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<std::string> alphas;
  std::optional<std::string> model;
  std::optional<std::string> out;
  std::optional<std::string> edge;
  bool draws = false;
};

struct Settings {
  std::string command;
  fs::path dataset;
  std::string reference;  // resolved label
  ModelSpec spec;
  std::vector<double> alphas;  // sweep only
  SamplerConfig sampler;
  bool write_draws = false;
  std::optional<std::pair<std::string, std::string>> edge;
  fs::path out_dir;
};

inline const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"data", {"dataset", "reference"}},
      {"model", {"variant", "alpha", "alphas", "effects", "mu_bounds", "d_bounds", "tau_bounds", "sigma_bounds",
                 "tau_per_design"}},
      {"sampler", {"burn", "iter", "chains", "thin", "seed", "target_accept", "threads"}},
      {"output", {"dir", "draws"}},
      {"nodesplit", {"edge"}},
      {"truth", {"treatments", "d", "tau", "baseline_log_rate", "exposure", "rwe_bias"}},
      {"layout", {}},
  };
  return keys;
}

// A loaded --config: the document plus the directory relative paths resolve
// against and, for run.json input, the recorded dataset fingerprint.
struct LoadedConfig {
  KeyValueDocument doc;
  fs::path base_dir;
  std::optional<std::string> dataset_hash;
};

inline bool looks_like_dataset(std::string_view content) {
  auto first = content.substr(0, content.find('\n'));
  if (first.substr(0, 3) == "\xEF\xBB\xBF") first.remove_prefix(3);
  return text::lower(text::trim(first)) == kDatasetHeader;
}

inline LoadedConfig load_config(const fs::path& path) {
  const auto content = text::read_file(path.string());
  LoadedConfig lc;
  lc.base_dir = fs::absolute(path).parent_path();
  const auto trimmed = text::trim(content);
  if (!trimmed.empty() && trimmed.front() == '{') {
    Json j;
    try {
      j = Json::parse(content);
    } catch (const nlohmann::json::exception& e) {
      throw InputError("cannot parse '" + path.string() + "' as JSON: " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object())
      throw InputError("'" + path.string() + "' has no \"config\" object");
    for (const auto& [section, keys] : j["config"].items()) {
      if (!keys.is_object()) throw InputError("run.json section '" + section + "' is not an object");
      for (const auto& [key, value] : keys.items())
        lc.doc.set(section, key, value.is_string() ? value.get<std::string>() : value.dump());
    }
    if (j.contains("dataset") && j["dataset"].contains("fnv1a64"))
      lc.dataset_hash = j["dataset"]["fnv1a64"].get<std::string>();
  } else if (looks_like_dataset(content)) {
    lc.doc.set("data", "dataset", fs::absolute(path).string());
  } else {
    lc.doc = KeyValueDocument::parse(content);
  }
  lc.doc.require_known(known_keys());
  return lc;
}

namespace detail {

inline Interval to_interval(const std::string& v, const std::string& what) {
  const auto xs = config::to_doubles(v, what);
  if (xs.size() != 2) throw InputError("'" + what + "' needs two numbers: lower, upper");
  return {xs[0], xs[1]};
}

inline std::string interval_text(const Interval& iv) { return text::repr(iv.lower) + ", " + text::repr(iv.upper); }

inline std::string join_doubles(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + text::repr(xs[i]);
  return out;
}

inline std::uint64_t to_seed(const std::string& v) {
  std::uint64_t out = 0;
  const auto s = text::trim(v);
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) throw InputError("seed must be a non-negative integer: '" + v + "'");
  return out;
}

inline std::string safe_file_part(std::string_view label) {
  std::string out;
  for (char c : label) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  return out;
}

}  // namespace detail

inline bool needs_dataset(const std::string& command) { return command != "simulate"; }

// Applies overrides and defaults. Reads the dataset only to resolve the
// reference label.
inline Settings resolve(const std::string& command, LoadedConfig& lc, const Overrides& ov, Network* net_out = nullptr) {
  auto& doc = lc.doc;
  if (ov.seed) doc.set("sampler", "seed", std::to_string(*ov.seed));
  if (ov.alpha) doc.set("model", "alpha", text::repr(*ov.alpha));
  if (ov.alphas) doc.set("model", "alphas", *ov.alphas);
  if (ov.model) doc.set("model", "variant", *ov.model);
  if (ov.edge) doc.set("nodesplit", "edge", *ov.edge);
  if (ov.draws) doc.set("output", "draws", "true");

  Settings s;
  s.command = command;
  auto get = [&](const char* sec, const char* key) { return doc.get(sec, key); };

  if (ov.out) s.out_dir = *ov.out;
  else if (const auto v = get("output", "dir")) s.out_dir = lc.base_dir / *v;
  else s.out_dir = kDefaultOutDir;
  if (const auto v = get("output", "draws")) s.write_draws = config::to_bool(*v, "output.draws");

  const std::string default_variant = command == "sweep" ? "power" : "pooled";
  const auto variant_text = get("model", "variant").value_or(default_variant);
  const auto variant = parse_variant(variant_text);
  if (!variant) throw InputError("unknown model variant '" + variant_text + "'");
  s.spec.variant = *variant;
  if (const auto v = get("model", "alpha")) s.spec.alpha = config::to_double(*v, "model.alpha");
  if (const auto v = get("model", "effects")) {
    const auto e = text::lower(*v);
    if (e == "random") s.spec.effects = Effects::Random;
    else if (e == "fixed") s.spec.effects = Effects::Fixed;
    else throw InputError("model.effects must be 'random' or 'fixed'");
  }
  if (const auto v = get("model", "mu_bounds")) s.spec.priors.mu = detail::to_interval(*v, "model.mu_bounds");
  if (const auto v = get("model", "d_bounds")) s.spec.priors.d = detail::to_interval(*v, "model.d_bounds");
  if (const auto v = get("model", "tau_bounds")) s.spec.priors.tau = detail::to_interval(*v, "model.tau_bounds");
  if (const auto v = get("model", "sigma_bounds")) s.spec.priors.sigma = detail::to_interval(*v, "model.sigma_bounds");
  if (const auto v = get("model", "tau_per_design")) s.spec.tau_per_design = config::to_bool(*v, "model.tau_per_design");
  s.spec.validate();
  if (command == "sweep") {
    s.alphas = default_alpha_grid();
    if (const auto v = get("model", "alphas")) s.alphas = config::to_doubles(*v, "model.alphas");
  }

  auto& sc = s.sampler;
  if (const auto v = get("sampler", "burn")) sc.n_burn = config::to_count(*v, "sampler.burn");
  if (const auto v = get("sampler", "iter")) sc.n_iter = config::to_count(*v, "sampler.iter");
  if (const auto v = get("sampler", "chains")) sc.n_chains = config::to_count(*v, "sampler.chains");
  if (const auto v = get("sampler", "thin")) sc.thin = config::to_count(*v, "sampler.thin");
  if (const auto v = get("sampler", "seed")) sc.seed = detail::to_seed(*v);
  if (const auto v = get("sampler", "target_accept")) sc.target_accept = config::to_double(*v, "sampler.target_accept");
  if (const auto v = get("sampler", "threads")) sc.threads = config::to_count(*v, "sampler.threads");
  sc.validate();

  if (const auto v = get("nodesplit", "edge")) {
    const auto parts = config::to_labels(*v);
    if (parts.size() != 2) throw InputError("nodesplit.edge needs two treatment labels: 'A, B'");
    s.edge = std::make_pair(parts[0], parts[1]);
  }

  if (needs_dataset(command)) {
    const auto ds = get("data", "dataset");
    if (!ds) throw InputError("config has no data.dataset");
    s.dataset = (lc.base_dir / *ds).lexically_normal();
    const auto csv = text::read_file(s.dataset.string());
    if (lc.dataset_hash && *lc.dataset_hash != text::fnv1a64(csv))
      throw InputError("dataset '" + s.dataset.string() + "' differs from the one recorded in run.json");
    std::optional<std::string> ref = get("data", "reference");
    auto net = parse_dataset(csv, ref);
    if (!ref && net.index_of("placebo")) net = parse_dataset(csv, std::string("placebo"));
    s.reference = net.reference();
    if (net_out) *net_out = std::move(net);
  }
  return s;
}

// The resolved configuration with every setting explicit.
inline Json canonical_config(const Settings& s, const KeyValueDocument& doc) {
  Json c = Json::object();
  if (needs_dataset(s.command)) c["data"] = {{"dataset", s.dataset.string()}, {"reference", s.reference}};
  if (s.command == "fit" || s.command == "sweep" || s.command == "nodesplit") {
    Json m = {{"variant", std::string(to_string(s.spec.variant))},
              {"alpha", text::repr(s.spec.alpha)},
              {"effects", std::string(to_string(s.spec.effects))},
              {"mu_bounds", detail::interval_text(s.spec.priors.mu)},
              {"d_bounds", detail::interval_text(s.spec.priors.d)},
              {"tau_bounds", detail::interval_text(s.spec.priors.tau)},
              {"sigma_bounds", detail::interval_text(s.spec.priors.sigma)},
              {"tau_per_design", s.spec.tau_per_design ? "true" : "false"}};
    if (s.command == "sweep") m["alphas"] = detail::join_doubles(s.alphas);
    c["model"] = m;
    c["sampler"] = {{"burn", std::to_string(s.sampler.n_burn)},
                    {"iter", std::to_string(s.sampler.n_iter)},
                    {"chains", std::to_string(s.sampler.n_chains)},
                    {"thin", std::to_string(s.sampler.thin)},
                    {"seed", std::to_string(s.sampler.seed)},
                    {"target_accept", text::repr(s.sampler.target_accept)}};
  }
  if (s.command == "fit") c["output"] = {{"draws", s.write_draws ? "true" : "false"}};
  if (s.command == "nodesplit" && s.edge) c["nodesplit"] = {{"edge", s.edge->first + ", " + s.edge->second}};
  if (s.command == "simulate") {
    c["sampler"] = {{"seed", std::to_string(s.sampler.seed)}};
    for (const char* sec : {"truth", "layout"}) {
      Json part = Json::object();
      for (const auto& [k, v] : doc.items(sec)) part[k] = v;
      c[sec] = part;
    }
  }
  return c;
}

inline std::string run_json(const Settings& s, const KeyValueDocument& doc) {
  Json j;
  j["command"] = s.command;
  j["versions"] = {{"evsynth", EVSYNTH_VERSION},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"cli11", CLI11_VERSION}};
  j["seed"] = s.sampler.seed;
  if (needs_dataset(s.command))
    j["dataset"] = {{"path", s.dataset.string()}, {"fnv1a64", text::fnv1a64(text::read_file(s.dataset.string()))}};
  j["config"] = canonical_config(s, doc);
  return j.dump(2) + "\n";
}

using Files = std::vector<std::pair<std::string, std::string>>;

// Writes everything at once, after all computation has finished.
inline void write_outputs(const fs::path& dir, const Files& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
  for (const auto& [name, content] : files) text::write_file((dir / name).string(), content);
}

inline std::string draws_csv(const Draws& d) {
  std::string out = "chain,iter";
  for (const auto& n : d.names) out += "," + text::csv_field(n);
  out += '\n';
  for (std::size_t r = 0; r < d.rows(); ++r) {
    out += std::to_string(d.chain[r]) + "," + std::to_string(d.iteration[r]);
    for (double v : d.row(r)) out += "," + text::repr(v);
    out += '\n';
  }
  return out;
}

inline Json convergence_json(const Draws& d, const ConvergenceReport& rep) {
  Json params = Json::array();
  for (std::size_t c = 0; c < rep.parameters.size(); ++c) {
    const auto& p = rep.parameters[c];
    Json acc = Json::array();
    for (const auto& chain : d.acceptance) acc.push_back(chain[c]);
    params.push_back({{"name", p.name},
                      {"rhat", p.rhat ? Json(*p.rhat) : Json(nullptr)},
                      {"ess", p.ess ? Json(*p.ess) : Json(nullptr)},
                      {"acceptance", acc}});
  }
  return {{"threshold", rep.threshold},
          {"chains", d.chain_count()},
          {"draws_per_chain", d.chain_count() ? d.rows() / d.chain_count() : 0},
          {"chain_seeds", d.chain_seeds},
          {"flagged", rep.flagged},
          {"parameters", params}};
}

inline void report_convergence(const ConvergenceReport& rep, std::ostream& err) {
  if (rep.flagged.empty()) return;
  err << "warning: split R-hat above " << rep.threshold << " for " << rep.flagged.size() << " parameter(s):";
  for (std::size_t i = 0; i < rep.flagged.size() && i < 8; ++i) err << ' ' << rep.flagged[i];
  if (rep.flagged.size() > 8) err << " ...";
  err << '\n';
}

inline void require_valid(const Network& net, std::ostream& err) {
  const auto rep = validate_network(net);
  for (const auto& w : rep.warnings) err << "warning: " << w << '\n';
  if (!rep.ok()) {
    std::string msg = "invalid network";
    for (const auto& e : rep.errors) msg += "; " + e;
    throw AnalysisError(msg);
  }
}

// ---------------------------------------------------------------------------
// Commands. Each returns the files to write.

inline int cmd_validate(const fs::path& config_path, const Overrides& ov, std::ostream& out) {
  auto lc = load_config(config_path);
  Network net;
  const auto s = resolve("validate", lc, ov, &net);
  const auto rep = validate_network(net);
  out << "dataset: " << s.dataset.string() << '\n'
      << "studies: " << net.studies.size() << " (" << net.count(Design::Rct) << " RCT, " << net.count(Design::Rwe)
      << " RWE), arms: " << net.arm_count() << ", treatments: " << net.treatment_count() << '\n'
      << "reference: " << net.reference() << '\n';
  for (const auto& e : rep.errors) out << "error: " << e << '\n';
  for (const auto& w : rep.warnings) out << "warning: " << w << '\n';
  out << (rep.ok() ? "valid" : "invalid") << '\n';
  if (ov.out || lc.doc.get("output", "dir")) {
    Json j = {{"dataset", s.dataset.string()},
              {"studies", net.studies.size()},
              {"rct", net.count(Design::Rct)},
              {"rwe", net.count(Design::Rwe)},
              {"treatments", net.treatments},
              {"ok", rep.ok()},
              {"errors", rep.errors},
              {"warnings", rep.warnings}};
    write_outputs(s.out_dir, {{"validation.json", j.dump(2) + "\n"}});
  }
  return rep.ok() ? kOk : kAnalysisError;
}

inline int cmd_fit(const fs::path& config_path, const Overrides& ov, std::ostream& out, std::ostream& err) {
  auto lc = load_config(config_path);
  Network net;
  const auto s = resolve("fit", lc, ov, &net);
  require_valid(net, err);
  const Model model(net, s.spec);
  const auto fit = run_ensemble(model, s.sampler);
  const auto& draws = fit.draws;
  report_convergence(fit.convergence, err);

  // Two-triangle matrix: this fit above the diagonal, an RCT-only fit with the
  // same sampler settings below it whenever the RCTs alone identify every
  // treatment; otherwise this fit fills both triangles.
  const auto matrix = arrr_matrix(draws, net);
  auto lower = matrix;
  std::string lower_source = std::string(to_string(s.spec.variant));
  if (s.spec.variant != Variant::RctOnly && net.count(Design::Rwe) > 0) {
    auto rct_spec = s.spec;
    rct_spec.variant = Variant::RctOnly;
    try {
      lower = arrr_matrix(run_ensemble(Model(net, rct_spec), s.sampler).draws, net);
      lower_source = std::string(to_string(Variant::RctOnly));
    } catch (const AnalysisError& e) {
      err << "note: matrix.csv lower triangle repeats this fit (" << e.what() << ")\n";
    }
  }
  const auto ranks = rank_treatments(draws, net);
  const auto dev = residual_deviance(draws, model);
  Json fit_json = {{"variant", std::string(to_string(s.spec.variant))},
                   {"alpha", s.spec.alpha},
                   {"effects", std::string(to_string(s.spec.effects))},
                   {"reference", net.reference()},
                   {"parameters", model.dimension()},
                   {"matrix", {{"upper", std::string(to_string(s.spec.variant))}, {"lower", lower_source}}},
                   {"deviance", to_json(dev)}};
  if (const auto idx = model.between_sd_index())
    fit_json["between_sd"] = to_json(summarize(draws.column(model.coordinates()[*idx].name)));
  Json rank_json = Json::array();
  for (std::size_t k = 0; k < ranks.labels.size(); ++k)
    rank_json.push_back({{"treatment", ranks.labels[k]}, {"mean_rank", ranks.mean_rank[k]},
                         {"modal_rank", ranks.modal_rank[k]}});
  fit_json["ranks"] = rank_json;

  Files files = {{"summary.csv", summary_csv(draws, net)},
                 {"matrix.csv", matrix_csv(matrix, lower)},
                 {"ranks.csv", ranks_csv(ranks)},
                 {"deviance.csv", deviance_csv(dev)},
                 {"convergence.json", convergence_json(draws, fit.convergence).dump(2) + "\n"},
                 {"fit.json", fit_json.dump(2) + "\n"}};
  if (s.write_draws) files.emplace_back("draws.csv", draws_csv(draws));
  files.emplace_back("run.json", run_json(s, lc.doc));
  write_outputs(s.out_dir, files);

  out << "fit " << to_string(s.spec.variant);
  if (s.spec.uses_alpha()) out << " (alpha=" << text::num(s.spec.alpha) << ")";
  out << ": " << draws.rows() << " draws, residual deviance " << text::fixed(dev.total, 2) << " over "
      << dev.arms.size() << " arms, DIC " << text::fixed(dev.dic.dic, 2) << '\n';
  const auto rows = arrr_vs_reference(draws, net);
  for (std::size_t k = 1; k < net.treatment_count(); ++k)
    out << "  " << net.treatments[k] << " vs " << net.reference() << ": " << format_cell(rows[k - 1]) << '\n';
  out << "wrote " << files.size() << " files to " << s.out_dir.string() << '\n';
  return kOk;
}

inline int cmd_sweep(const fs::path& config_path, const Overrides& ov, std::ostream& out, std::ostream& err) {
  auto lc = load_config(config_path);
  Network net;
  const auto s = resolve("sweep", lc, ov, &net);
  require_valid(net, err);
  const auto rows = alpha_sweep(net, s.spec, s.alphas, s.sampler);

  Files files = {{"sweep.csv", sweep_csv(rows, net)}};
  std::string ranks = "alpha,treatment,rank,probability\n";
  for (const auto& r : rows) {
    const auto part = ranks_csv(r.ranks, r.alpha);
    ranks += part.substr(part.find('\n') + 1);
  }
  files.emplace_back("ranks.csv", ranks);

  std::vector<double> xs;
  for (const auto& r : rows) xs.push_back(r.alpha);
  for (std::size_t k = 1; k < net.treatment_count(); ++k) {
    svg::BandSeries band{xs, {}, {}, {}};
    for (const auto& r : rows) {
      band.mid.push_back(r.arrr[k - 1].mean);
      band.lower.push_back(r.arrr[k - 1].q025);
      band.upper.push_back(r.arrr[k - 1].q975);
    }
    files.emplace_back("sweep_" + detail::safe_file_part(net.treatments[k]) + ".svg",
                       svg::band_plot(net.treatments[k] + " vs " + net.reference() + ": ARRR by alpha", "alpha",
                                      "ARRR (95% CrI)", band));
  }
  if (rows.front().between_sd) {
    svg::BandSeries band{xs, {}, {}, {}};
    for (const auto& r : rows) {
      band.mid.push_back(r.between_sd->median);
      band.lower.push_back(r.between_sd->q025);
      band.upper.push_back(r.between_sd->q975);
    }
    files.emplace_back("sweep_between_sd.svg", svg::band_plot("Between-study SD by alpha", "alpha",
                                                              "SD (median, 95% CrI)", band, kNegInf));
  }
  std::vector<std::string> cols;
  std::vector<std::vector<double>> mean_rank(net.treatment_count());
  for (const auto& r : rows) {
    cols.push_back(text::num(r.alpha, 3));
    for (std::size_t k = 0; k < net.treatment_count(); ++k) mean_rank[k].push_back(r.ranks.mean_rank[k]);
  }
  files.emplace_back("ranks.svg", svg::heatmap("Mean rank by alpha (1 = lowest relapse rate)", net.treatments, cols,
                                               mean_rank, 1.0, static_cast<double>(net.treatment_count()),
                                               "mean rank"));
  files.emplace_back("run.json", run_json(s, lc.doc));
  write_outputs(s.out_dir, files);

  out << "sweep " << to_string(s.spec.variant) << " over " << rows.size() << " alpha values\n";
  for (const auto& r : rows) {
    out << "  alpha=" << text::num(r.alpha, 3);
    if (r.between_sd) out << "  between-study SD median " << text::fixed(r.between_sd->median, 3);
    out << '\n';
  }
  out << "wrote " << files.size() << " files to " << s.out_dir.string() << '\n';
  return kOk;
}

inline int cmd_nodesplit(const fs::path& config_path, const Overrides& ov, std::ostream& out, std::ostream& err) {
  auto lc = load_config(config_path);
  Network net;
  const auto s = resolve("nodesplit", lc, ov, &net);
  require_valid(net, err);
  std::vector<SplitEdge> edges;
  if (s.edge) {
    const auto b = net.index_of(s.edge->first), k = net.index_of(s.edge->second);
    if (!b || !k) throw InputError("nodesplit edge names an unknown treatment");
    edges.push_back({*b, *k});
  } else {
    for (const auto& [pair, c] : comparison_counts(net)) {
      try {
        check_splittable(net, {pair.first, pair.second});
        edges.push_back({pair.first, pair.second});
      } catch (const AnalysisError&) {
      }
    }
    if (edges.empty()) throw AnalysisError("not splittable: no comparison has both direct and indirect evidence");
  }
  Json results = Json::array();
  for (const auto& e : edges) {
    const auto r = node_split(net, s.spec, e, s.sampler);
    results.push_back(to_json(r));
    out << r.b_label << " vs " << r.k_label << ": direct " << text::fixed(r.direct.mean, 3) << ", indirect "
        << text::fixed(r.indirect.mean, 3) << ", difference " << text::fixed(r.difference.mean, 3)
        << ", p = " << text::fixed(r.p_value, 4) << '\n';
  }
  Json j = {{"variant", std::string(to_string(s.spec.variant))}, {"alpha", s.spec.alpha}, {"splits", results}};
  write_outputs(s.out_dir, {{"nodesplit.json", j.dump(2) + "\n"}, {"run.json", run_json(s, lc.doc)}});
  return kOk;
}

inline int cmd_diagram(const fs::path& config_path, const Overrides& ov, std::ostream& out) {
  auto lc = load_config(config_path);
  Network net;
  const auto s = resolve("diagram", lc, ov, &net);
  write_outputs(s.out_dir, {{"network.dot", export_dot(net)}, {"network.svg", svg::network_diagram(net)}});
  out << "wrote network.dot and network.svg to " << s.out_dir.string() << '\n';
  return kOk;
}

inline int cmd_simulate(const fs::path& config_path, const Overrides& ov, std::ostream& out) {
  auto lc = load_config(config_path);
  const auto s = resolve("simulate", lc, ov);
  const auto truth = parse_truth(lc.doc);
  const auto data = generate_network(truth, s.sampler.seed);
  std::string realized = "study_id,design,mu,treatment,delta\n";
  for (std::size_t i = 0; i < data.realized.size(); ++i) {
    const auto& r = data.realized[i];
    const auto& study = data.network.studies[i];
    for (std::size_t j = 1; j < study.arms.size(); ++j)
      realized += text::csv_field(r.id) + "," + std::string(to_string(r.design)) + "," + text::repr(r.mu) + "," +
                  text::csv_field(data.network.treatments[study.arms[j].treatment]) + "," + text::repr(r.delta[j - 1]) +
                  "\n";
  }
  write_outputs(s.out_dir, {{"dataset.csv", serialize_dataset(data.network)},
                            {"realized.csv", realized},
                            {"run.json", run_json(s, lc.doc)}});
  out << "simulated " << data.network.studies.size() << " studies to " << (s.out_dir / "dataset.csv").string()
      << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bayesian evidence synthesis of RCT and real-world Poisson rate data", "evsynth"};
  app.set_version_flag("--version", EVSYNTH_VERSION);
  app.require_subcommand(1);

  std::string config;
  Overrides ov;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  std::string alphas, model, out_dir, edge;

  struct Cmd {
    const char* name;
    const char* help;
  };
  const Cmd cmds[] = {{"validate", "check a dataset and its comparison graph"},
                      {"fit", "fit one model and write summaries, rate-ratio matrix and diagnostics"},
                      {"sweep", "fit a power-prior model over a grid of alpha values"},
                      {"nodesplit", "compare direct and indirect evidence for one or all comparisons"},
                      {"diagram", "write the evidence network as DOT and SVG"},
                      {"simulate", "generate a synthetic dataset from a file of true effects and a study layout"}};
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config, "config file, dataset CSV or run.json")->required();
    sub->add_option("--out", out_dir, "output directory");
    if (std::string(c.name) != "validate" && std::string(c.name) != "diagram")
      sub->add_option("--seed", seed, "random seed");
    if (std::string(c.name) == "fit" || std::string(c.name) == "sweep" || std::string(c.name) == "nodesplit") {
      auto* a = sub->add_option("--alpha", alpha, "power-prior weight in [0, 1]");
      auto* as = sub->add_option("--alphas", alphas, "comma-separated alpha grid (sweep)");
      a->excludes(as);
      sub->add_option("--model", model, "rct-only, pooled, power, hier, hier3 or hier-power");
    }
    if (std::string(c.name) == "nodesplit") sub->add_option("--edge", edge, "comparison to split, e.g. 'A,B'");
    if (std::string(c.name) == "fit") sub->add_flag("--draws", ov.draws, "also write draws.csv");
    subs[c.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  std::string command;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) command = name;
  auto* sub = subs[command];
  auto given = [sub](const char* name) {
    const auto* o = sub->get_option_no_throw(name);
    return o != nullptr && o->count() > 0;
  };
  if (given("--seed")) ov.seed = seed;
  if (given("--alpha")) ov.alpha = alpha;
  if (given("--alphas")) ov.alphas = alphas;
  if (given("--model")) ov.model = model;
  if (given("--out")) ov.out = out_dir;
  if (given("--edge")) ov.edge = edge;

  try {
    if (command == "validate") return cmd_validate(config, ov, out);
    if (command == "fit") return cmd_fit(config, ov, out, err);
    if (command == "sweep") return cmd_sweep(config, ov, out, err);
    if (command == "nodesplit") return cmd_nodesplit(config, ov, out, err);
    if (command == "diagram") return cmd_diagram(config, ov, out);
    return cmd_simulate(config, ov, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const AnalysisError& e) {
    err << "error: " << e.what() << '\n';
    return kAnalysisError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kAnalysisError;
  }
}

}  // namespace evsynth::cli
