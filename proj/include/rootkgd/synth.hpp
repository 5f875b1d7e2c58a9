#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rootkgd/dataset.hpp"
#include "rootkgd/kgraph.hpp"

namespace rootkgd::synth {

struct RelationParams {
  double distance = 1.0;
  long priority_offset = 1;
};

struct PlantSpec {
  int n_devices = 3;
  /// Streams leaving each device. The first feeds the next device in the chain,
  /// further ones feed a random later device; the last device emits product streams.
  int streams_min = 1;
  int streams_max = 1;
  int variables_min = 2;
  int variables_max = 2;
  /// Shared by "State" and its inverse "State of".
  RelationParams state{1.0, 1};
  RelationParams output{3.0, 5};
  /// Measurement noise standard deviation, relative to unit latent shocks.
  double noise_scale = 0.3;
  std::uint64_t seed = 0;

  /// Throws ValidationError on counts below 1, inverted bounds, or noise_scale <= 0.
  void check() const;
};

/// Linear-Gaussian structural model behind a generated plant.
///
/// Device latent: z_d = Σ_p w_dp · u_p + e_d, where u_p is the mean measured
/// value of upstream device p's variables and e_d ~ N(0, 1). Variable:
/// x_i = offset_i + loading_i · z_owner + noise_i · ε_i. Devices are indexed in
/// topological order.
struct PlantModel {
  struct Device {
    std::string id;
    std::vector<std::size_t> parents;
    std::vector<double> weights;
    std::vector<std::size_t> variables;
  };
  struct Variable {
    std::string id;
    std::size_t device = 0;
    double offset = 0.0;
    double loading = 1.0;
    double noise = 0.3;
  };

  std::vector<Device> devices;
  std::vector<Variable> variables;

  /// Stationary standard deviation of each variable under normal operation.
  Eigen::VectorXd variable_std() const;
  /// Stationary mean of each variable under normal operation.
  Eigen::VectorXd variable_mean() const;
  std::vector<std::string> variable_ids() const;
};

struct Plant {
  kg::GraphData graph;
  PlantModel model;
};

Plant generate_plant(const PlantSpec& spec);

enum class FaultKind { Step, Drift, RandomVariation };

std::string to_string(FaultKind kind);
std::optional<FaultKind> parse_fault_kind(std::string_view text);

struct FaultInjection {
  /// A variable id, or a device id for a common-mode shift on all its variables.
  std::string root;
  FaultKind kind = FaultKind::Step;
  /// In units of the affected variable's normal standard deviation.
  double magnitude = 10.0;
  long start = 0;
  long duration = 1;
};

/// Draws `m` samples. Faulty rows are [start, start + duration); the fault is
/// added to the root's measurements and reaches downstream devices through
/// the structural equations. Throws ValidationError for an out-of-range window
/// or an unknown root.
DataMatrix simulate(const PlantModel& model, long m, const std::optional<FaultInjection>& injection,
                    std::uint64_t seed);

struct ScenarioOptions {
  long normal_samples = 2000;
  long fault_samples = 300;
  long fault_start = 100;
  /// Fault duration; 0 means until the end of the fault dataset.
  long duration = 0;
  FaultKind kind = FaultKind::Step;
  double magnitude = 10.0;
  /// Fault root; a variable drawn from the plant seed when empty.
  std::string root;
};

/// A generated plant with normal and faulty datasets and its ground truth.
struct Scenario {
  Plant plant;
  DataMatrix normal;
  DataMatrix fault;
  FaultInjection injection;
  /// Device owning the root variable, or the root itself for device faults.
  std::string owner;
};

Scenario make_scenario(const PlantSpec& spec, const ScenarioOptions& options);

/// Writes graph.kg.json, normal.csv, fault.csv, manifest.json and a ready-to-run
/// config.json into `dir`, creating it if needed.
void write_scenario(const Scenario& scenario, const PlantSpec& spec, const std::filesystem::path& dir);

}  // namespace rootkgd::synth
