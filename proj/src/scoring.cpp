#include "rootkgd/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "rootkgd/error.hpp"

namespace rootkgd::scoring {

using nlohmann::json;

bool CandidateFilter::admits(const kg::Entity& entity) const {
  if (!ids.empty()) return std::find(ids.begin(), ids.end(), entity.id) != ids.end();
  switch (entity.kind) {
    case kg::EntityKind::Variable: return variables;
    case kg::EntityKind::Stream: return streams;
    case kg::EntityKind::Device: return devices;
    case kg::EntityKind::Substance: return substances;
  }
  return false;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("cosine of vectors with different lengths");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

double score_index(const kg::KnowledgeGraph& graph, const rfpa::RfpaParams& params,
                   const features::ContributionVector& contributions,
                   std::span<const std::size_t> roster_index, std::size_t candidate,
                   const ScoringOptions& options) {
  const std::string& id = graph.entity(candidate).id;
  double s_0 = options.constant_s0;
  std::optional<std::size_t> own;
  for (std::size_t i = 0; i < contributions.roster.size(); ++i) {
    if (contributions.roster[i] == id) {
      own = i;
      const double c = contributions.scores(static_cast<Eigen::Index>(i));
      if (c > 0.0) s_0 = c;
      break;
    }
  }

  const rfpa::PropagationResult result = rfpa::propagate(graph, params, candidate, s_0);
  std::vector<double> simulated;
  std::vector<double> observed;
  simulated.reserve(roster_index.size());
  observed.reserve(roster_index.size());
  for (std::size_t i = 0; i < roster_index.size(); ++i) {
    if (options.exclude_candidate && own == i) continue;
    simulated.push_back(result.quantities[roster_index[i]]);
    observed.push_back(contributions.scores(static_cast<Eigen::Index>(i)));
  }
  return cosine(simulated, observed);
}

std::vector<std::size_t> resolve_roster(const kg::KnowledgeGraph& graph,
                                        const features::ContributionVector& contributions) {
  if (contributions.roster.empty()) throw ValidationError("contribution roster is empty");
  if (static_cast<Eigen::Index>(contributions.roster.size()) != contributions.scores.size()) {
    throw ValidationError("contribution roster and scores differ in length");
  }
  if (!contributions.scores.allFinite() || (contributions.scores.array() < 0.0).any()) {
    throw ValidationError("contribution scores must be finite and nonnegative");
  }
  std::vector<std::size_t> out;
  out.reserve(contributions.roster.size());
  for (const auto& id : contributions.roster) out.push_back(graph.index_of(id));
  return out;
}

}  // namespace

double root_score(const kg::KnowledgeGraph& graph, const rfpa::RfpaParams& params,
                  const features::ContributionVector& contributions, std::string_view candidate,
                  const ScoringOptions& options) {
  const auto roster_index = resolve_roster(graph, contributions);
  return score_index(graph, params, contributions, roster_index, graph.index_of(candidate), options);
}

RootCauseRanking rank_all(const kg::KnowledgeGraph& graph, const rfpa::RfpaParams& params,
                          const features::ContributionVector& contributions,
                          const CandidateFilter& filter, const ScoringOptions& options,
                          unsigned jobs) {
  params.check();
  const auto roster_index = resolve_roster(graph, contributions);
  for (const auto& id : filter.ids) graph.index_of(id);

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    if (filter.admits(graph.entity(i))) candidates.push_back(i);
  }
  std::vector<double> scores(candidates.size(), 0.0);

  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(candidates.size(), 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < candidates.size(); k = next++) {
      try {
        scores[k] = score_index(graph, params, contributions, roster_index, candidates[k], options);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  RootCauseRanking ranking;
  ranking.metadata.params = params;
  ranking.metadata.scoring = options;
  ranking.entries.reserve(candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& e = graph.entity(candidates[k]);
    ranking.entries.push_back({e.id, e.kind, scores[k]});
  }
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const RankingEntry& a, const RankingEntry& b) {
              const auto ka = tie_key(a.score), kb = tie_key(b.score);
              if (ka != kb) return ka > kb;
              return a.id < b.id;
            });
  return ranking;
}

namespace {

std::string_view init_mode_name(rfpa::InitMode mode) {
  return mode == rfpa::InitMode::Baseline ? "baseline" : "seed_only";
}

json to_json(const RootCauseRanking& ranking) {
  const auto& meta = ranking.metadata;
  json doc;
  doc["graph"] = meta.graph;
  doc["params"] = {{"sigma_r", meta.params.sigma_r},
                   {"p_max", meta.params.p_max},
                   {"delta_s_min_ratio", meta.params.delta_s_min_ratio},
                   {"init_mode", std::string(init_mode_name(meta.params.init_mode))},
                   {"constant_s0", meta.scoring.constant_s0},
                   {"exclude_candidate", meta.scoring.exclude_candidate}};
  if (meta.window) {
    doc["window"] = {{"start", meta.window->start},
                     {"length", meta.window->length},
                     {"statistic", meta.window->statistic},
                     {"normalization", meta.window->normalization}};
  } else {
    doc["window"] = json::object();
  }
  doc["ranking"] = json::array();
  for (const auto& e : ranking.entries) {
    doc["ranking"].push_back(
        {{"id", e.id}, {"kind", std::string(kg::to_string(e.kind))}, {"score", e.score}});
  }
  return doc;
}

std::string fixed5(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5f", value);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string format_text(const RootCauseRanking& ranking, std::size_t top_k) {
  std::vector<const RankingEntry*> variables;
  std::vector<const RankingEntry*> physical;
  for (const auto& e : ranking.entries) {
    auto& column = kg::is_physical(e.kind) ? physical : variables;
    if (column.size() < top_k) column.push_back(&e);
  }

  const std::string var_header = "Variable";
  const std::string phys_header = "Stream and Device";
  std::size_t var_width = var_header.size();
  std::size_t phys_width = phys_header.size();
  for (const auto* e : variables) var_width = std::max(var_width, e->id.size());
  for (const auto* e : physical) phys_width = std::max(phys_width, e->id.size());
  // "-0.12345" is the widest score.
  constexpr std::size_t score_width = 8;

  auto score_cell = [](const std::string& s) {
    return std::string(s.size() < score_width ? score_width - s.size() : 0, ' ') + s;
  };

  std::string out;
  if (!ranking.metadata.graph.empty()) out += "graph: " + ranking.metadata.graph + "\n";
  out += pad(var_header, var_width) + "  " + score_cell("Score") + "    " +
         pad(phys_header, phys_width) + "  " + score_cell("Score") + "\n";
  const std::size_t rows = std::max(variables.size(), physical.size());
  for (std::size_t i = 0; i < rows; ++i) {
    std::string line;
    if (i < variables.size()) {
      line += pad(variables[i]->id, var_width) + "  " + score_cell(fixed5(variables[i]->score));
    } else {
      line += std::string(var_width + 2 + score_width, ' ');
    }
    if (i < physical.size()) {
      line += "    " + pad(physical[i]->id, phys_width) + "  " + score_cell(fixed5(physical[i]->score));
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

}  // namespace

std::string format_report(const RootCauseRanking& ranking, std::size_t top_k, ReportMode mode) {
  if (top_k == 0) throw ValidationError("top_k must be at least 1");
  if (mode == ReportMode::Json) return to_json(ranking).dump(2) + "\n";
  return format_text(ranking, top_k);
}

RootCauseRanking parse_report(std::string_view json_text) {
  RootCauseRanking ranking;
  try {
    const json doc = json::parse(json_text);
    auto& meta = ranking.metadata;
    meta.graph = doc.at("graph").get<std::string>();
    const json& params = doc.at("params");
    meta.params.sigma_r = params.at("sigma_r").get<double>();
    meta.params.p_max = params.at("p_max").get<long>();
    meta.params.delta_s_min_ratio = params.at("delta_s_min_ratio").get<double>();
    meta.params.init_mode = params.at("init_mode").get<std::string>() == "baseline"
                                ? rfpa::InitMode::Baseline
                                : rfpa::InitMode::SeedOnly;
    meta.scoring.constant_s0 = params.at("constant_s0").get<double>();
    meta.scoring.exclude_candidate = params.at("exclude_candidate").get<bool>();
    const json& window = doc.at("window");
    if (!window.empty()) {
      meta.window = WindowInfo{window.at("start").get<long>(), window.at("length").get<long>(),
                               window.at("statistic").get<std::string>(),
                               window.at("normalization").get<std::string>()};
    }
    for (const json& item : doc.at("ranking")) {
      const std::string kind = item.at("kind").get<std::string>();
      auto parsed = kg::parse_kind(kind);
      if (!parsed) throw ParseError("unknown entity kind '" + kind + "' in report");
      ranking.entries.push_back({item.at("id").get<std::string>(), *parsed, item.at("score").get<double>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
  return ranking;
}

}  // namespace rootkgd::scoring
