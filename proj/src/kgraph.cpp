#include "rootkgd/kgraph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "rootkgd/error.hpp"
#include "rootkgd/io.hpp"

namespace rootkgd::kg {

using nlohmann::json;

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Device: return "device";
    case EntityKind::Stream: return "stream";
    case EntityKind::Substance: return "substance";
    case EntityKind::Variable: return "variable";
  }
  return "unknown";
}

std::optional<EntityKind> parse_kind(std::string_view text) {
  if (text == "device") return EntityKind::Device;
  if (text == "stream") return EntityKind::Stream;
  if (text == "substance") return EntityKind::Substance;
  if (text == "variable") return EntityKind::Variable;
  return std::nullopt;
}

namespace {

std::string describe(const Triple& t) {
  return "(" + t.head + ", " + t.relation + ", " + t.tail + ")";
}

const json& require(const json& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(std::string(where) + ": missing key '" + key + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key, std::string_view where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) {
    throw ParseError(std::string(where) + ": key '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

ValidationReport validate(const GraphData& data) {
  ValidationReport report;
  if (data.entities.empty()) report.errors.emplace_back("no entities");

  std::set<std::string> ids;
  for (const auto& e : data.entities) {
    if (e.id.empty()) {
      report.errors.emplace_back("entity with empty id");
    } else if (!ids.insert(e.id).second) {
      report.errors.push_back("duplicate entity id '" + e.id + "'");
    }
    if (is_physical(e.kind) && e.column) {
      report.errors.push_back("physical entity '" + e.id + "' has a column binding");
    }
    if (e.kind == EntityKind::Variable && !e.column) {
      report.warnings.push_back("variable '" + e.id + "' has no column binding");
    }
  }

  std::set<std::string> relation_names;
  for (const auto& r : data.relations) {
    if (r.name.empty()) report.errors.emplace_back("relation with empty name");
    if (!relation_names.insert(r.name).second) {
      report.errors.push_back("duplicate relation '" + r.name + "'");
    }
    if (!(r.distance >= 0.0) || !std::isfinite(r.distance)) {
      report.errors.push_back("relation '" + r.name + "' has invalid distance");
    }
    if (r.priority_offset < 0) {
      report.errors.push_back("relation '" + r.name + "' has negative priority offset");
    }
  }

  std::set<Triple> seen;
  std::set<std::string> touched;
  std::set<std::string> used_relations;
  for (const auto& t : data.triples) {
    if (!ids.contains(t.head)) {
      report.errors.push_back("triple " + describe(t) + " references undeclared entity '" +
                              t.head + "'");
    }
    if (!ids.contains(t.tail)) {
      report.errors.push_back("triple " + describe(t) + " references undeclared entity '" +
                              t.tail + "'");
    }
    if (!relation_names.contains(t.relation)) {
      report.errors.push_back("triple " + describe(t) + " references undeclared relation '" +
                              t.relation + "'");
    }
    if (!seen.insert(t).second) report.errors.push_back("duplicate triple " + describe(t));
    touched.insert(t.head);
    touched.insert(t.tail);
    used_relations.insert(t.relation);
  }

  for (const auto& e : data.entities) {
    if (!touched.contains(e.id)) {
      report.warnings.push_back("entity '" + e.id + "' appears in no triple");
    }
  }
  for (const auto& r : data.relations) {
    if (!used_relations.contains(r.name)) {
      report.warnings.push_back("relation '" + r.name + "' is never used");
    }
  }
  return report;
}

KnowledgeGraph KnowledgeGraph::from_data(GraphData data) {
  ValidationReport report = validate(data);
  if (!report.ok()) {
    std::string msg = "invalid knowledge graph: " + report.errors.front();
    if (report.errors.size() > 1) {
      msg += " (and " + std::to_string(report.errors.size() - 1) + " more)";
    }
    throw ValidationError(msg);
  }

  KnowledgeGraph g;
  g.data_ = std::move(data);
  for (std::size_t i = 0; i < g.data_.entities.size(); ++i) {
    g.entity_lookup_.emplace(g.data_.entities[i].id, i);
  }
  std::unordered_map<std::string, std::size_t> relation_lookup;
  for (std::size_t i = 0; i < g.data_.relations.size(); ++i) {
    relation_lookup.emplace(g.data_.relations[i].name, i);
  }

  g.out_index_.resize(g.data_.entities.size());
  for (const auto& t : g.data_.triples) {
    g.out_index_[g.entity_lookup_.at(t.head)].push_back(
        Edge{relation_lookup.at(t.relation), g.entity_lookup_.at(t.tail)});
  }
  for (auto& edges : g.out_index_) {
    std::sort(edges.begin(), edges.end(), [&g](const Edge& a, const Edge& b) {
      const auto& ra = g.data_.relations[a.relation];
      const auto& rb = g.data_.relations[b.relation];
      if (ra.distance != rb.distance) return ra.distance < rb.distance;
      const auto& ta = g.data_.entities[a.tail].id;
      const auto& tb = g.data_.entities[b.tail].id;
      if (ta != tb) return ta < tb;
      return ra.name < rb.name;
    });
  }
  return g;
}

std::optional<std::size_t> KnowledgeGraph::find(std::string_view id) const {
  auto it = entity_lookup_.find(std::string(id));
  if (it == entity_lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t KnowledgeGraph::index_of(std::string_view id) const {
  if (auto idx = find(id)) return *idx;
  throw ValidationError("unknown entity '" + std::string(id) + "'");
}

GraphData parse_graph(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("graph file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("graph file must be a JSON object");

  GraphData data;
  const json& entities = require(doc, "entities", "graph");
  const json& relations = require(doc, "relations", "graph");
  const json& triples = require(doc, "triples", "graph");
  if (!entities.is_array() || !relations.is_array() || !triples.is_array()) {
    throw ParseError("graph: 'entities', 'relations' and 'triples' must be arrays");
  }

  for (std::size_t i = 0; i < entities.size(); ++i) {
    const json& item = entities[i];
    const std::string where = "entities[" + std::to_string(i) + "]";
    if (!item.is_object()) throw ParseError(where + ": expected an object");
    Entity e;
    e.id = require_string(item, "id", where);
    const std::string kind = require_string(item, "kind", where);
    auto parsed = parse_kind(kind);
    if (!parsed) throw ParseError(where + ": unknown entity kind '" + kind + "'");
    e.kind = *parsed;
    e.label = item.contains("label") ? require_string(item, "label", where) : e.id;
    if (item.contains("column") && !item["column"].is_null()) {
      e.column = require_string(item, "column", where);
    }
    data.entities.push_back(std::move(e));
  }

  for (std::size_t i = 0; i < relations.size(); ++i) {
    const json& item = relations[i];
    const std::string where = "relations[" + std::to_string(i) + "]";
    if (!item.is_object()) throw ParseError(where + ": expected an object");
    RelationType r;
    r.name = require_string(item, "name", where);
    const json& d = require(item, "d", where);
    if (!d.is_number()) throw ParseError(where + ": 'd' must be a number");
    r.distance = d.get<double>();
    const json& o = require(item, "o", where);
    if (!o.is_number_integer()) throw ParseError(where + ": 'o' must be an integer");
    r.priority_offset = o.get<long>();
    data.relations.push_back(std::move(r));
  }

  for (std::size_t i = 0; i < triples.size(); ++i) {
    const json& item = triples[i];
    const std::string where = "triples[" + std::to_string(i) + "]";
    if (!item.is_array() || item.size() != 3 || !item[0].is_string() || !item[1].is_string() ||
        !item[2].is_string()) {
      throw ParseError(where + ": expected [head, relation, tail] strings");
    }
    data.triples.push_back(
        Triple{item[0].get<std::string>(), item[1].get<std::string>(), item[2].get<std::string>()});
  }
  return data;
}

std::string serialize_graph(const GraphData& data) {
  json doc;
  doc["entities"] = json::array();
  for (const auto& e : data.entities) {
    json item{{"id", e.id}, {"kind", std::string(to_string(e.kind))}, {"label", e.label}};
    if (e.column) item["column"] = *e.column;
    doc["entities"].push_back(std::move(item));
  }
  doc["relations"] = json::array();
  for (const auto& r : data.relations) {
    doc["relations"].push_back({{"name", r.name}, {"d", r.distance}, {"o", r.priority_offset}});
  }
  doc["triples"] = json::array();
  for (const auto& t : data.triples) {
    doc["triples"].push_back(json::array({t.head, t.relation, t.tail}));
  }
  return doc.dump(2) + "\n";
}

KnowledgeGraph load_graph(const std::filesystem::path& path) {
  GraphData data;
  try {
    data = parse_graph(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return KnowledgeGraph::from_data(std::move(data));
}

}  // namespace rootkgd::kg
