#pragma once

// Evidence network: arm-level count data grouped into RCT and RWE studies.
//
// Treatments are indexed densely from 0; index 0 is the reference treatment
// against which the basic parameters are defined. Within each study the arms
// are kept in ascending treatment order, so the first arm is the study
// baseline.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evsynth/error.hpp"
#include "evsynth/text.hpp"

namespace evsynth {

enum class Design { Rct, Rwe };

inline std::string_view to_string(Design d) { return d == Design::Rct ? "rct" : "rwe"; }

struct Arm {
  std::size_t treatment = 0;
  long relapses = 0;
  double exposure = 1.0;  // person-years

  friend bool operator==(const Arm&, const Arm&) = default;
};

struct Study {
  std::string id;
  Design design = Design::Rct;
  std::vector<Arm> arms;  // ascending treatment index

  std::size_t baseline() const { return arms.front().treatment; }

  bool contains(std::size_t t) const {
    return std::any_of(arms.begin(), arms.end(), [t](const Arm& a) { return a.treatment == t; });
  }

  friend bool operator==(const Study&, const Study&) = default;
};

struct Network {
  std::vector<std::string> treatments;  // label per index; [0] is the reference
  std::vector<Study> studies;

  std::size_t treatment_count() const { return treatments.size(); }
  const std::string& reference() const { return treatments.front(); }

  std::optional<std::size_t> index_of(std::string_view label) const {
    for (std::size_t i = 0; i < treatments.size(); ++i)
      if (treatments[i] == label) return i;
    return std::nullopt;
  }

  std::size_t count(Design d) const {
    return static_cast<std::size_t>(std::count_if(
        studies.begin(), studies.end(), [d](const Study& s) { return s.design == d; }));
  }

  std::size_t arm_count() const {
    std::size_t n = 0;
    for (const auto& s : studies) n += s.arms.size();
    return n;
  }

  friend bool operator==(const Network&, const Network&) = default;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  std::vector<std::size_t> rwe_only;  // treatments unidentifiable once RWE is excluded

  bool ok() const { return errors.empty(); }
};

inline constexpr std::string_view kDatasetHeader = "study_id,design,treatment,relapses,exposure_py";

namespace detail {

inline bool parse_long(std::string_view s, long& out) {
  s = text::trim(s);
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

inline bool parse_double(std::string_view s, double& out) {
  s = text::trim(s);
  if (s.empty()) return false;
  // from_chars for double is available in libstdc++ 11.
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

}  // namespace detail

// Parses the flat arm-level CSV. Every malformed row is collected and reported
// together in a ParseError. When `reference` is given that label becomes
// treatment 0; otherwise treatments are indexed in order of first appearance.
inline Network parse_dataset(std::string_view csv, std::optional<std::string> reference = {}) {
  std::vector<std::string> problems;
  struct Row {
    std::string study, treatment;
    Design design;
    long relapses;
    double exposure;
    std::size_t line;
  };
  std::vector<Row> rows;

  std::size_t line_no = 0;
  bool header_seen = false;
  std::istringstream in{std::string(csv)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (text::trim(line).empty()) continue;
    if (!header_seen) {
      std::string norm;
      for (const auto& f : text::split(line, ',')) {
        if (!norm.empty()) norm += ',';
        norm += text::lower(text::trim(f));
      }
      if (norm != kDatasetHeader) {
        throw ParseError({"line " + std::to_string(line_no) + ": expected header '" +
                          std::string(kDatasetHeader) + "'"});
      }
      header_seen = true;
      continue;
    }
    const auto fields = text::split(line, ',');
    const auto where = ", line " + std::to_string(line_no);
    if (fields.size() != 5) {
      problems.push_back("wrong number of fields (" + std::to_string(fields.size()) + ", expected 5)" + where);
      continue;
    }
    Row row{std::string(text::trim(fields[0])), std::string(text::trim(fields[2])), Design::Rct, 0, 0.0, line_no};
    bool good = true;
    if (row.study.empty()) { problems.push_back("empty study_id" + where); good = false; }
    if (row.treatment.empty()) { problems.push_back("empty treatment" + where); good = false; }
    const auto design = text::lower(text::trim(fields[1]));
    if (design == "rct") row.design = Design::Rct;
    else if (design == "rwe") row.design = Design::Rwe;
    else { problems.push_back("unknown design '" + std::string(text::trim(fields[1])) + "'" + where); good = false; }
    if (!detail::parse_long(fields[3], row.relapses)) {
      problems.push_back("non-integer relapses" + where);
      good = false;
    } else if (row.relapses < 0) {
      problems.push_back("negative relapses" + where);
      good = false;
    }
    if (!detail::parse_double(fields[4], row.exposure)) {
      problems.push_back("non-numeric exposure" + where);
      good = false;
    } else if (row.exposure <= 0.0) {
      problems.push_back("non-positive exposure" + where);
      good = false;
    }
    if (good) rows.push_back(std::move(row));
  }
  if (!header_seen) throw ParseError({"empty dataset: missing header"});

  Network net;
  std::map<std::string, std::size_t, std::less<>> tindex;
  if (reference) {
    const bool present = std::any_of(rows.begin(), rows.end(), [&](const Row& r) { return r.treatment == *reference; });
    if (!present && problems.empty()) problems.push_back("reference treatment '" + *reference + "' not found");
    tindex.emplace(*reference, 0);
    net.treatments.push_back(*reference);
  }
  for (const auto& r : rows) {
    if (tindex.emplace(r.treatment, net.treatments.size()).second) net.treatments.push_back(r.treatment);
  }

  std::map<std::string, std::size_t, std::less<>> sindex;
  std::vector<std::size_t> first_line;
  for (const auto& r : rows) {
    auto [it, fresh] = sindex.emplace(r.study, net.studies.size());
    if (fresh) {
      net.studies.push_back(Study{r.study, r.design, {}});
      first_line.push_back(r.line);
    }
    auto& study = net.studies[it->second];
    const auto where = ", line " + std::to_string(r.line);
    if (study.design != r.design) {
      problems.push_back("study '" + r.study + "' mixes designs" + where);
      continue;
    }
    const auto t = tindex.at(r.treatment);
    if (study.contains(t)) {
      problems.push_back("duplicate (study, treatment) pair ('" + r.study + "', '" + r.treatment + "')" + where);
      continue;
    }
    study.arms.push_back(Arm{t, r.relapses, r.exposure});
  }
  for (std::size_t i = 0; i < net.studies.size(); ++i) {
    auto& s = net.studies[i];
    if (s.arms.size() < 2) {
      problems.push_back("study '" + s.id + "' has fewer than 2 arms, line " + std::to_string(first_line[i]));
    }
    std::sort(s.arms.begin(), s.arms.end(), [](const Arm& a, const Arm& b) { return a.treatment < b.treatment; });
  }
  if (problems.empty() && net.studies.empty()) problems.push_back("dataset contains no studies");
  if (!problems.empty()) throw ParseError(std::move(problems));
  return net;
}

// Writes the network back in the ingestion CSV format (studies in order, arms
// ascending by treatment index).
inline std::string serialize_dataset(const Network& net) {
  std::string out(kDatasetHeader);
  out += '\n';
  for (const auto& s : net.studies) {
    for (const auto& a : s.arms) {
      out += text::csv_field(s.id) + ',' + std::string(to_string(s.design)) + ',' +
             text::csv_field(net.treatments[a.treatment]) + ',' + std::to_string(a.relapses) + ',' +
             text::num(a.exposure, 17) + '\n';
    }
  }
  return out;
}

// Partition of treatments by reachability through within-study comparisons.
// Only studies accepted by `keep` contribute edges. Components are sorted by
// their smallest member; members ascend.
template <class StudyFilter>
std::vector<std::vector<std::size_t>> connected_components(const Network& net, StudyFilter keep) {
  const auto n = net.treatment_count();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& s : net.studies) {
    if (!keep(s)) continue;
    for (std::size_t i = 0; i < s.arms.size(); ++i)
      for (std::size_t j = i + 1; j < s.arms.size(); ++j) {
        adj[s.arms[i].treatment].push_back(s.arms[j].treatment);
        adj[s.arms[j].treatment].push_back(s.arms[i].treatment);
      }
  }
  std::vector<int> comp(n, -1);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    std::queue<std::size_t> q;
    q.push(start);
    comp[start] = id;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      out.back().push_back(u);
      for (auto v : adj[u])
        if (comp[v] < 0) {
          comp[v] = id;
          q.push(v);
        }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

inline std::vector<std::vector<std::size_t>> connected_components(const Network& net) {
  return connected_components(net, [](const Study&) { return true; });
}

// Treatments that no study mentions.
inline std::vector<std::size_t> unused_treatments(const Network& net) {
  std::vector<bool> seen(net.treatment_count(), false);
  for (const auto& s : net.studies)
    for (const auto& a : s.arms) seen[a.treatment] = true;
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < seen.size(); ++t)
    if (!seen[t]) out.push_back(t);
  return out;
}

inline ValidationReport validate_network(const Network& net) {
  ValidationReport report;
  if (net.treatments.empty() || net.studies.empty()) {
    report.errors.push_back("network has no studies");
    return report;
  }
  for (auto t : unused_treatments(net))
    report.errors.push_back("treatment '" + net.treatments[t] + "' appears in no study");
  for (const auto& s : net.studies) {
    if (s.arms.size() < 2) report.errors.push_back("study '" + s.id + "' has fewer than 2 arms");
    for (const auto& a : s.arms) {
      if (a.relapses < 0) report.errors.push_back("study '" + s.id + "' has negative relapses");
      if (!(a.exposure > 0.0)) report.errors.push_back("study '" + s.id + "' has non-positive exposure");
    }
  }

  const auto comps = connected_components(net);
  if (comps.size() > 1) {
    std::string msg = "comparison graph is disconnected: ";
    for (std::size_t c = 0; c < comps.size(); ++c) {
      msg += c ? " | {" : "{";
      for (std::size_t i = 0; i < comps[c].size(); ++i) msg += (i ? ", " : "") + net.treatments[comps[c][i]];
      msg += "}";
    }
    report.errors.push_back(msg);
  }

  // A treatment is RWE-only when it is not connected to the reference through
  // RCTs alone; at alpha = 0 its effect has no data behind it.
  const auto rct = connected_components(net, [](const Study& s) { return s.design == Design::Rct; });
  for (const auto& comp : rct) {
    if (comp.front() == 0) continue;  // the reference's component
    for (auto t : comp) report.rwe_only.push_back(t);
  }
  std::sort(report.rwe_only.begin(), report.rwe_only.end());
  for (auto t : report.rwe_only)
    report.warnings.push_back("treatment '" + net.treatments[t] + "' is supported only by RWE: unidentifiable at alpha=0");
  return report;
}

// RCT/RWE study counts per unordered treatment pair (i < j).
struct PairCount {
  std::size_t rct = 0;
  std::size_t rwe = 0;
  std::size_t total() const { return rct + rwe; }
};

inline std::map<std::pair<std::size_t, std::size_t>, PairCount> comparison_counts(const Network& net) {
  std::map<std::pair<std::size_t, std::size_t>, PairCount> out;
  for (const auto& s : net.studies)
    for (std::size_t i = 0; i < s.arms.size(); ++i)
      for (std::size_t j = i + 1; j < s.arms.size(); ++j) {
        auto& c = out[{s.arms[i].treatment, s.arms[j].treatment}];
        (s.design == Design::Rct ? c.rct : c.rwe) += 1;
      }
  return out;
}

inline std::vector<double> exposure_per_treatment(const Network& net) {
  std::vector<double> out(net.treatment_count(), 0.0);
  for (const auto& s : net.studies)
    for (const auto& a : s.arms) out[a.treatment] += a.exposure;
  return out;
}

// Graphviz DOT: node width scales with total exposure, edge penwidth with the
// number of direct comparisons. Output is deterministic.
inline std::string export_dot(const Network& net) {
  auto quoted = [](const std::string& label) {
    std::string q;
    for (char c : label) {
      if (c == '"' || c == '\\') q += '\\';
      q += c;
    }
    return q;
  };
  const auto exposure = exposure_per_treatment(net);
  const double max_e = exposure.empty() ? 1.0 : std::max(1e-300, *std::max_element(exposure.begin(), exposure.end()));
  std::string out = "graph evidence {\n  layout=circo;\n  node [shape=circle, fixedsize=true];\n";
  for (std::size_t t = 0; t < net.treatment_count(); ++t) {
    const double width = 0.5 + 1.5 * exposure[t] / max_e;
    out += "  n" + std::to_string(t) + " [label=\"" + quoted(net.treatments[t]) + "\", width=" + text::fixed(width, 3) +
           ", exposure=" + text::fixed(exposure[t], 1) + "];\n";
  }
  for (const auto& [pair, c] : comparison_counts(net)) {
    if (c.total() == 0) continue;
    out += "  n" + std::to_string(pair.first) + " -- n" + std::to_string(pair.second) + " [label=\"RCT:" +
           std::to_string(c.rct) + "/RWE:" + std::to_string(c.rwe) + "\", penwidth=" + std::to_string(c.total()) +
           "];\n";
  }
  out += "}\n";
  return out;
}

}  // namespace evsynth
