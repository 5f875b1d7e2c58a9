#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rootkgd::kg {

enum class EntityKind { Device, Stream, Substance, Variable };

std::string_view to_string(EntityKind kind);
std::optional<EntityKind> parse_kind(std::string_view text);

/// Devices, streams and substances are physical entities; variables are data entities.
constexpr bool is_physical(EntityKind kind) { return kind != EntityKind::Variable; }

struct Entity {
  std::string id;
  EntityKind kind = EntityKind::Variable;
  std::string label;
  /// Dataset column bound to this entity. Only meaningful for variables.
  std::optional<std::string> column;

  bool operator==(const Entity&) const = default;
};

/// A relation type with its attenuation distance and priority offset.
struct RelationType {
  std::string name;
  double distance = 0.0;
  long priority_offset = 0;

  bool operator==(const RelationType&) const = default;
};

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;

  auto operator<=>(const Triple&) const = default;
};

/// Raw contents of a graph file, before any cross-reference checks.
struct GraphData {
  std::vector<Entity> entities;
  std::vector<RelationType> relations;
  std::vector<Triple> triples;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
};

/// Errors: empty graph, duplicate ids or triples, dangling references,
/// negative parameters, column bindings on physical entities.
/// Warnings: unbound variables, entities without triples, unused relations.
ValidationReport validate(const GraphData& data);

/// One outgoing edge, as indices into the graph's relation and entity tables.
struct Edge {
  std::size_t relation;
  std::size_t tail;
};

/// Immutable, validated knowledge graph. Entity order is declaration order.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  /// Validates `data` and builds the adjacency index. Throws ValidationError.
  static KnowledgeGraph from_data(GraphData data);

  const GraphData& data() const { return data_; }
  std::span<const Entity> entities() const { return data_.entities; }
  std::span<const RelationType> relations() const { return data_.relations; }
  std::span<const Triple> triples() const { return data_.triples; }
  std::size_t size() const { return data_.entities.size(); }

  const Entity& entity(std::size_t index) const { return data_.entities.at(index); }
  const RelationType& relation(std::size_t index) const { return data_.relations.at(index); }

  std::optional<std::size_t> find(std::string_view id) const;
  /// Throws ValidationError for an unknown id.
  std::size_t index_of(std::string_view id) const;

  /// Outgoing edges ordered by relation distance, then tail id, then relation name.
  std::span<const Edge> out_edges(std::size_t index) const { return out_index_.at(index); }
  std::span<const Edge> out_edges(std::string_view id) const { return out_edges(index_of(id)); }

 private:
  GraphData data_;
  std::unordered_map<std::string, std::size_t> entity_lookup_;
  std::vector<std::vector<Edge>> out_index_;
};

/// Parses graph JSON text. Throws ParseError on malformed documents.
GraphData parse_graph(std::string_view json_text);
std::string serialize_graph(const GraphData& data);

/// Reads, parses and validates a graph file.
KnowledgeGraph load_graph(const std::filesystem::path& path);

}  // namespace rootkgd::kg
