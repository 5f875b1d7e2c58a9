#include "rootkgd/pipeline.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "rootkgd/error.hpp"
#include "rootkgd/io.hpp"

namespace rootkgd::pipeline {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError("config key '" + key + "' has the wrong type");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

void parse_candidates(const json& node, scoring::CandidateFilter& filter) {
  if (!node.is_object()) throw ParseError("config key 'candidates' must be an object");
  for (const auto& [key, value] : node.items()) {
    if (key == "ids") {
      filter.ids = get_as<std::vector<std::string>>(node, key);
    } else if (key == "variables") {
      filter.variables = get_as<bool>(node, key);
    } else if (key == "streams") {
      filter.streams = get_as<bool>(node, key);
    } else if (key == "devices") {
      filter.devices = get_as<bool>(node, key);
    } else if (key == "substances") {
      filter.substances = get_as<bool>(node, key);
    } else {
      throw ParseError("unknown key 'candidates." + key + "'");
    }
  }
}

}  // namespace

DiagnosisConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("config must be a JSON object");

  DiagnosisConfig c;
  for (const auto& [key, value] : doc.items()) {
    if (key == "graph") {
      c.graph_path = resolve(base_dir, get_as<std::string>(doc, key));
    } else if (key == "normal_data") {
      c.normal_data_path = resolve(base_dir, get_as<std::string>(doc, key));
    } else if (key == "fault_data") {
      c.fault_data_path = resolve(base_dir, get_as<std::string>(doc, key));
    } else if (key == "model") {
      c.model_path = resolve(base_dir, get_as<std::string>(doc, key));
    } else if (key == "json") {
      c.json_path = resolve(base_dir, get_as<std::string>(doc, key));
    } else if (key == "bindings") {
      c.column_bindings = get_as<std::map<std::string, std::string>>(doc, key);
    } else if (key == "extra_model_columns") {
      c.extra_model_columns = get_as<std::vector<std::string>>(doc, key);
    } else if (key == "relations") {
      if (!value.is_object()) throw ParseError("config key 'relations' must be an object");
      for (const auto& [name, spec] : value.items()) {
        RelationOverride o;
        if (!spec.is_object()) throw ParseError("relation override '" + name + "' must be an object");
        for (const auto& [field, v] : spec.items()) {
          if (field == "d" && v.is_number()) {
            o.distance = v.get<double>();
          } else if (field == "o" && v.is_number_integer()) {
            o.priority_offset = v.get<long>();
          } else {
            throw ParseError("bad field '" + field + "' in relation override '" + name + "'");
          }
        }
        c.relation_overrides[name] = o;
      }
    } else if (key == "r_pc") {
      c.r_pc = get_as<double>(doc, key);
    } else if (key == "sigma_r") {
      c.rfpa.sigma_r = get_as<double>(doc, key);
    } else if (key == "p_max") {
      if (!value.is_number_integer()) throw ParseError("config key 'p_max' must be an integer");
      c.rfpa.p_max = value.get<long>();
    } else if (key == "delta_s_min_ratio") {
      c.rfpa.delta_s_min_ratio = get_as<double>(doc, key);
    } else if (key == "init_mode") {
      const auto mode = get_as<std::string>(doc, key);
      if (mode == "seed_only") {
        c.rfpa.init_mode = rfpa::InitMode::SeedOnly;
      } else if (mode == "baseline") {
        c.rfpa.init_mode = rfpa::InitMode::Baseline;
      } else {
        throw ParseError("init_mode must be 'seed_only' or 'baseline'");
      }
    } else if (key == "fault_start") {
      if (!value.is_number_integer()) throw ParseError("config key 'fault_start' must be an integer");
      c.fault_start = value.get<long>();
    } else if (key == "window") {
      if (!value.is_number_integer()) throw ParseError("config key 'window' must be an integer");
      c.window = value.get<long>();
    } else if (key == "rbc_statistic") {
      const auto s = get_as<std::string>(doc, key);
      if (s == "spe") {
        c.contribution.statistic = features::RbcStatistic::Spe;
      } else if (s == "t2") {
        c.contribution.statistic = features::RbcStatistic::T2;
      } else {
        throw ParseError("rbc_statistic must be 'spe' or 't2'");
      }
    } else if (key == "normalization_order") {
      const auto s = get_as<std::string>(doc, key);
      if (s == "per_sample") {
        c.contribution.order = features::NormalizationOrder::PerSample;
      } else if (s == "post_average") {
        c.contribution.order = features::NormalizationOrder::PostAverage;
      } else {
        throw ParseError("normalization_order must be 'per_sample' or 'post_average'");
      }
    } else if (key == "constant_s0") {
      c.scoring.constant_s0 = get_as<double>(doc, key);
    } else if (key == "exclude_candidate") {
      c.scoring.exclude_candidate = get_as<bool>(doc, key);
    } else if (key == "candidates") {
      parse_candidates(value, c.candidates);
    } else if (key == "top_k") {
      c.top_k = get_as<std::size_t>(doc, key);
    } else if (key == "jobs") {
      c.jobs = get_as<unsigned>(doc, key);
    } else if (key.starts_with("_")) {
      // Comment keys.
    } else {
      throw ParseError("unknown config key '" + key + "'");
    }
  }
  return c;
}

DiagnosisConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(read_text_file(path), path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string serialize_model(const features::PcaModel& model) {
  const auto n = model.n_vars();
  std::vector<double> loadings;
  loadings.reserve(static_cast<std::size_t>(n * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) loadings.push_back(model.loadings()(i, j));
  }
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  json doc;
  doc["columns"] = model.columns();
  doc["mean"] = vec(model.mean());
  doc["std"] = vec(model.stddev());
  doc["eigenvalues"] = vec(model.eigenvalues());
  doc["loadings"] = {{"rows", n}, {"cols", n}, {"data", loadings}};
  doc["n_pc"] = model.n_pc();
  doc["r_pc"] = model.r_pc();
  return doc.dump(1) + "\n";
}

features::PcaModel parse_model(std::string_view json_text) {
  try {
    const json doc = json::parse(json_text);
    auto vec = [&doc](const char* key) {
      auto v = doc.at(key).get<std::vector<double>>();
      return Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    const json& l = doc.at("loadings");
    const auto rows = l.at("rows").get<Eigen::Index>();
    const auto cols = l.at("cols").get<Eigen::Index>();
    auto data = l.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
      throw ParseError("model loadings dimensions do not match the data length");
    }
    Eigen::MatrixXd loadings =
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), rows, cols);
    return features::PcaModel::from_parts(doc.at("columns").get<std::vector<std::string>>(), vec("mean"),
                                          vec("std"), vec("eigenvalues"), std::move(loadings),
                                          doc.at("n_pc").get<Eigen::Index>(), doc.at("r_pc").get<double>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
}

features::PcaModel load_model(const std::filesystem::path& path) {
  try {
    return parse_model(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

kg::KnowledgeGraph load_configured_graph(const DiagnosisConfig& config) {
  if (config.graph_path.empty()) throw ValidationError("no graph file configured");
  kg::GraphData data;
  try {
    data = kg::parse_graph(read_text_file(config.graph_path));
  } catch (const ParseError& e) {
    throw ParseError(config.graph_path.string() + ": " + e.what());
  }
  for (const auto& [name, o] : config.relation_overrides) {
    auto it = std::find_if(data.relations.begin(), data.relations.end(),
                           [&name](const kg::RelationType& r) { return r.name == name; });
    if (it == data.relations.end()) {
      throw ValidationError("relation override names unknown relation '" + name + "'");
    }
    if (o.distance) it->distance = *o.distance;
    if (o.priority_offset) it->priority_offset = *o.priority_offset;
  }
  return kg::KnowledgeGraph::from_data(std::move(data));
}

Roster resolve_roster(const kg::KnowledgeGraph& graph, const DiagnosisConfig& config,
                      const std::vector<std::vector<std::string>>& headers) {
  auto in_all = [&headers](const std::string& column) {
    return std::all_of(headers.begin(), headers.end(), [&column](const auto& h) {
      return std::find(h.begin(), h.end(), column) != h.end();
    });
  };

  std::map<std::string, std::string> column_of;  // entity -> column
  std::set<std::string> explicit_columns;
  for (const auto& [column, entity] : config.column_bindings) {
    auto idx = graph.find(entity);
    if (!idx) throw ValidationError("binding for column '" + column + "' names unknown entity '" + entity + "'");
    if (graph.entity(*idx).kind != kg::EntityKind::Variable) {
      throw ValidationError("binding for column '" + column + "' names non-variable entity '" + entity + "'");
    }
    if (!column_of.emplace(entity, column).second) {
      throw ValidationError("entity '" + entity + "' is bound to more than one column");
    }
    if (!in_all(column)) throw ValidationError("bound column '" + column + "' is missing from the dataset");
    explicit_columns.insert(column);
  }

  Roster roster;
  std::set<std::string> used;
  for (const auto& e : graph.entities()) {
    if (e.kind != kg::EntityKind::Variable) continue;
    std::string column;
    if (auto it = column_of.find(e.id); it != column_of.end()) {
      column = it->second;
    } else if (e.column && !explicit_columns.contains(*e.column)) {
      column = *e.column;
    } else {
      continue;
    }
    if (!in_all(column)) {
      roster.warnings.push_back("variable '" + e.id + "' (column '" + column +
                                "') is not in the dataset; excluded from this run");
      continue;
    }
    if (!used.insert(column).second) {
      throw ValidationError("column '" + column + "' is bound to more than one variable");
    }
    roster.columns.push_back(column);
    roster.entities.push_back(e.id);
  }

  roster.model_columns = roster.columns;
  for (const auto& column : config.extra_model_columns) {
    if (!in_all(column)) throw ValidationError("model column '" + column + "' is missing from the dataset");
    if (!used.insert(column).second) {
      throw ValidationError("extra model column '" + column + "' is already bound to a variable");
    }
    roster.model_columns.push_back(column);
  }
  if (roster.columns.empty()) throw ValidationError("no graph variable is bound to a dataset column");

  if (!headers.empty()) {
    for (const auto& column : headers.front()) {
      if (!used.contains(column)) {
        roster.warnings.push_back("column '" + column + "' is not bound to any variable; ignored");
      }
    }
  }
  return roster;
}

FitOutcome run_fit(const DiagnosisConfig& config) {
  if (config.normal_data_path.empty()) throw ValidationError("no normal dataset configured");
  const kg::KnowledgeGraph graph = load_configured_graph(config);
  const DataMatrix normal = read_csv(config.normal_data_path);
  Roster roster = resolve_roster(graph, config, {normal.columns});
  features::PcaModel model = features::fit_pca(normal.select(roster.model_columns), config.r_pc);
  if (!config.model_path.empty()) write_text_file(config.model_path, serialize_model(model));
  return {std::move(model), std::move(roster)};
}

DiagnosisOutcome run_diagnose(const DiagnosisConfig& config) {
  if (config.fault_data_path.empty()) throw ValidationError("no fault dataset configured");
  if (!config.fault_start) throw ValidationError("fault_start is required");
  if (config.window < 1) throw ValidationError("window must be at least 1");
  if (config.top_k < 1) throw ValidationError("top_k must be at least 1");

  const kg::KnowledgeGraph graph = load_configured_graph(config);
  const DataMatrix fault = read_csv(config.fault_data_path);

  features::PcaModel model;
  Roster roster;
  const bool stored = !config.model_path.empty() && std::filesystem::exists(config.model_path);
  if (stored) {
    model = load_model(config.model_path);
    roster = resolve_roster(graph, config, {fault.columns});
    if (model.columns() != roster.model_columns) {
      throw ValidationError("stored model '" + config.model_path.string() +
                            "' was fitted on a different column roster");
    }
  } else {
    if (config.normal_data_path.empty()) {
      throw ValidationError("no stored model and no normal dataset to fit one");
    }
    const DataMatrix normal = read_csv(config.normal_data_path);
    roster = resolve_roster(graph, config, {fault.columns, normal.columns});
    model = features::fit_pca(normal.select(roster.model_columns), config.r_pc);
  }

  const DataMatrix window =
      fault.select(roster.model_columns).slice_rows(*config.fault_start, config.window);
  features::ContributionVector rate = features::contribution_rate(model, window, config.contribution);

  // Only graph variables take part in scoring; extra model columns are dropped.
  features::ContributionVector contributions;
  contributions.roster = roster.entities;
  contributions.scores = rate.scores.head(static_cast<Eigen::Index>(roster.entities.size()));

  DiagnosisOutcome outcome;
  outcome.ranking = scoring::rank_all(graph, config.rfpa, contributions, config.candidates,
                                      config.scoring, config.jobs);
  outcome.ranking.metadata.graph = config.graph_path.filename().string();
  outcome.ranking.metadata.window = scoring::WindowInfo{
      *config.fault_start, config.window,
      config.contribution.statistic == features::RbcStatistic::Spe ? "spe" : "t2",
      config.contribution.order == features::NormalizationOrder::PerSample ? "per_sample"
                                                                           : "post_average"};
  outcome.contributions = std::move(contributions);
  outcome.roster = std::move(roster);
  return outcome;
}

std::string run_trace(const DiagnosisConfig& config, std::string_view source, double s_0) {
  const kg::KnowledgeGraph graph = load_configured_graph(config);
  std::vector<rfpa::TraceEvent> events;
  rfpa::propagate(graph, config.rfpa, source, s_0,
                  [&events](const rfpa::TraceEvent& e) { events.push_back(e); });
  return rfpa::format_trace(graph, events);
}

int run_validate(const std::filesystem::path& graph_path, std::ostream& out) {
  kg::GraphData data;
  try {
    data = kg::parse_graph(read_text_file(graph_path));
  } catch (const Error& e) {
    out << "error: " << e.what() << "\n";
    return 2;
  }
  const kg::ValidationReport report = kg::validate(data);
  for (const auto& e : report.errors) out << "error: " << e << "\n";
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  out << data.entities.size() << " entities, " << data.relations.size() << " relations, "
      << data.triples.size() << " triples; " << report.errors.size() << " errors, "
      << report.warnings.size() << " warnings\n";
  return report.ok() ? 0 : 1;
}

}  // namespace rootkgd::pipeline
