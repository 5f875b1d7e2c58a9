#include "rootkgd/synth.hpp"

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

#include "rootkgd/error.hpp"
#include "rootkgd/io.hpp"

namespace rootkgd::synth {

void PlantSpec::check() const {
  if (n_devices < 1) throw ValidationError("plant needs at least one device");
  if (streams_min < 1 || streams_max < streams_min) {
    throw ValidationError("invalid streams-per-device bounds");
  }
  if (variables_min < 1 || variables_max < variables_min) {
    throw ValidationError("invalid variables-per-device bounds");
  }
  if (!(noise_scale > 0.0)) throw ValidationError("noise_scale must be positive");
  if (state.distance < 0.0 || output.distance < 0.0 || state.priority_offset < 0 ||
      output.priority_offset < 0) {
    throw ValidationError("relation parameters must be nonnegative");
  }
}

std::string to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::Step: return "step";
    case FaultKind::Drift: return "drift";
    case FaultKind::RandomVariation: return "random_variation";
  }
  return "unknown";
}

std::optional<FaultKind> parse_fault_kind(std::string_view text) {
  if (text == "step") return FaultKind::Step;
  if (text == "drift") return FaultKind::Drift;
  if (text == "random_variation") return FaultKind::RandomVariation;
  return std::nullopt;
}

namespace {

// Mean and shock coefficients of every device latent and variable, with shocks
// ordered as [device shocks..., variable noise...].
struct Moments {
  std::vector<double> latent_mean;
  std::vector<Eigen::VectorXd> latent_coef;
  Eigen::VectorXd var_mean;
  std::vector<Eigen::VectorXd> var_coef;
};

Moments moments(const PlantModel& model) {
  const auto n_dev = model.devices.size();
  const auto n_var = model.variables.size();
  const auto n_shock = static_cast<Eigen::Index>(n_dev + n_var);
  Moments m;
  m.latent_mean.assign(n_dev, 0.0);
  m.latent_coef.assign(n_dev, Eigen::VectorXd::Zero(n_shock));
  m.var_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_var));
  m.var_coef.assign(n_var, Eigen::VectorXd::Zero(n_shock));

  for (std::size_t d = 0; d < n_dev; ++d) {
    const auto& dev = model.devices[d];
    m.latent_coef[d](static_cast<Eigen::Index>(d)) = 1.0;
    for (std::size_t k = 0; k < dev.parents.size(); ++k) {
      const auto& parent = model.devices[dev.parents[k]];
      const double scale = dev.weights[k] / static_cast<double>(parent.variables.size());
      for (std::size_t v : parent.variables) {
        m.latent_mean[d] += scale * m.var_mean(static_cast<Eigen::Index>(v));
        m.latent_coef[d] += scale * m.var_coef[v];
      }
    }
    for (std::size_t v : dev.variables) {
      const auto& var = model.variables[v];
      m.var_mean(static_cast<Eigen::Index>(v)) = var.offset + var.loading * m.latent_mean[d];
      m.var_coef[v] = var.loading * m.latent_coef[d];
      m.var_coef[v](static_cast<Eigen::Index>(n_dev + v)) += var.noise;
    }
  }
  return m;
}

}  // namespace

Eigen::VectorXd PlantModel::variable_std() const {
  const Moments m = moments(*this);
  Eigen::VectorXd out(static_cast<Eigen::Index>(variables.size()));
  for (std::size_t v = 0; v < variables.size(); ++v) {
    out(static_cast<Eigen::Index>(v)) = m.var_coef[v].norm();
  }
  return out;
}

Eigen::VectorXd PlantModel::variable_mean() const { return moments(*this).var_mean; }

std::vector<std::string> PlantModel::variable_ids() const {
  std::vector<std::string> ids;
  ids.reserve(variables.size());
  for (const auto& v : variables) ids.push_back(v.id);
  return ids;
}

Plant generate_plant(const PlantSpec& spec) {
  spec.check();
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto uniform_int = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  Plant plant;
  auto& g = plant.graph;
  auto& model = plant.model;
  g.relations = {{"State", spec.state.distance, spec.state.priority_offset},
                 {"State of", spec.state.distance, spec.state.priority_offset},
                 {"Output", spec.output.distance, spec.output.priority_offset}};

  const auto n = static_cast<std::size_t>(spec.n_devices);
  model.devices.resize(n);
  for (std::size_t d = 0; d < n; ++d) {
    model.devices[d].id = "Device" + std::to_string(d + 1);
    g.entities.push_back({model.devices[d].id, kg::EntityKind::Device,
                          "Device " + std::to_string(d + 1), std::nullopt});
  }

  for (std::size_t d = 0; d < n; ++d) {
    const int n_vars = uniform_int(spec.variables_min, spec.variables_max);
    for (int k = 0; k < n_vars; ++k) {
      PlantModel::Variable var;
      var.id = "v" + std::to_string(d + 1) + "_" + std::to_string(k + 1);
      var.device = d;
      var.offset = uniform(-5.0, 5.0);
      var.loading = uniform(0.8, 1.5) * (uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0);
      var.noise = spec.noise_scale * uniform(0.7, 1.3);
      model.devices[d].variables.push_back(model.variables.size());
      g.entities.push_back({var.id, kg::EntityKind::Variable,
                            "Variable " + std::to_string(k + 1) + " of " + model.devices[d].id,
                            var.id});
      g.triples.push_back({model.devices[d].id, "State", var.id});
      g.triples.push_back({var.id, "State of", model.devices[d].id});
      model.variables.push_back(std::move(var));
    }
  }

  int stream_no = 0;
  for (std::size_t d = 0; d < n; ++d) {
    const int n_streams = uniform_int(spec.streams_min, spec.streams_max);
    for (int k = 0; k < n_streams; ++k) {
      const std::string sid = "Stream" + std::to_string(++stream_no);
      g.entities.push_back({sid, kg::EntityKind::Stream, "Stream " + std::to_string(stream_no),
                            std::nullopt});
      g.triples.push_back({model.devices[d].id, "Output", sid});
      if (d + 1 == n) continue;
      const std::size_t target =
          k == 0 ? d + 1 : static_cast<std::size_t>(uniform_int(static_cast<int>(d + 1), static_cast<int>(n - 1)));
      g.triples.push_back({sid, "Output", model.devices[target].id});
      auto& child = model.devices[target];
      auto it = std::find(child.parents.begin(), child.parents.end(), d);
      if (it == child.parents.end()) {
        child.parents.push_back(d);
        child.weights.push_back(uniform(0.6, 1.0));
      }
    }
  }
  return plant;
}

DataMatrix simulate(const PlantModel& model, long m, const std::optional<FaultInjection>& injection,
                    std::uint64_t seed) {
  if (m < 1) throw ValidationError("sample count must be at least 1");
  const auto n_var = model.variables.size();

  std::vector<double> fault_scale(n_var, 0.0);
  if (injection) {
    if (!(injection->magnitude > 0.0)) throw ValidationError("fault magnitude must be positive");
    if (injection->start < 0 || injection->duration < 1 || injection->start + injection->duration > m) {
      throw ValidationError("fault injection window out of range");
    }
    const Eigen::VectorXd sd = model.variable_std();
    bool found = false;
    for (std::size_t v = 0; v < n_var; ++v) {
      if (model.variables[v].id == injection->root) {
        fault_scale[v] = injection->magnitude * sd(static_cast<Eigen::Index>(v));
        found = true;
      }
    }
    for (const auto& dev : model.devices) {
      if (dev.id != injection->root) continue;
      for (std::size_t v : dev.variables) {
        fault_scale[v] = injection->magnitude * sd(static_cast<Eigen::Index>(v));
      }
      found = true;
    }
    if (!found) throw ValidationError("unknown fault root '" + injection->root + "'");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DataMatrix out;
  out.columns = model.variable_ids();
  out.values.resize(m, static_cast<Eigen::Index>(n_var));
  std::vector<double> row(n_var);

  for (long t = 0; t < m; ++t) {
    double fault = 0.0;
    if (injection && t >= injection->start && t < injection->start + injection->duration) {
      switch (injection->kind) {
        case FaultKind::Step: fault = 1.0; break;
        case FaultKind::Drift:
          fault = static_cast<double>(t - injection->start + 1) / static_cast<double>(injection->duration);
          break;
        case FaultKind::RandomVariation: fault = normal(rng); break;
      }
    }
    for (std::size_t d = 0; d < model.devices.size(); ++d) {
      const auto& dev = model.devices[d];
      double z = normal(rng);
      for (std::size_t k = 0; k < dev.parents.size(); ++k) {
        const auto& parent = model.devices[dev.parents[k]];
        double u = 0.0;
        for (std::size_t v : parent.variables) u += row[v];
        z += dev.weights[k] * u / static_cast<double>(parent.variables.size());
      }
      for (std::size_t v : dev.variables) {
        const auto& var = model.variables[v];
        row[v] = var.offset + var.loading * z + var.noise * normal(rng) + fault * fault_scale[v];
      }
    }
    for (std::size_t v = 0; v < n_var; ++v) out.values(t, static_cast<Eigen::Index>(v)) = row[v];
  }
  return out;
}

Scenario make_scenario(const PlantSpec& spec, const ScenarioOptions& options) {
  Scenario sc;
  sc.plant = generate_plant(spec);
  const auto& model = sc.plant.model;

  sc.injection.kind = options.kind;
  sc.injection.magnitude = options.magnitude;
  sc.injection.start = options.fault_start;
  sc.injection.duration =
      options.duration > 0 ? options.duration : options.fault_samples - options.fault_start;
  sc.injection.root = options.root;
  if (sc.injection.root.empty()) {
    // Separate stream so the choice does not shift the plant's own draws.
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> pick(0, model.variables.size() - 1);
    sc.injection.root = model.variables[pick(rng)].id;
  }

  sc.owner = sc.injection.root;
  for (const auto& v : model.variables) {
    if (v.id == sc.injection.root) sc.owner = model.devices[v.device].id;
  }

  sc.normal = simulate(model, options.normal_samples, std::nullopt, spec.seed * 2 + 1);
  sc.fault = simulate(model, options.fault_samples, sc.injection, spec.seed * 2 + 2);
  return sc;
}

void write_scenario(const Scenario& scenario, const PlantSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "graph.kg.json", kg::serialize_graph(scenario.plant.graph));
  write_text_file(dir / "normal.csv", format_csv(scenario.normal));
  write_text_file(dir / "fault.csv", format_csv(scenario.fault));

  const auto& inj = scenario.injection;
  nlohmann::json manifest{{"seed", spec.seed},
                          {"devices", spec.n_devices},
                          {"root", inj.root},
                          {"owner", scenario.owner},
                          {"kind", to_string(inj.kind)},
                          {"magnitude", inj.magnitude},
                          {"start", inj.start},
                          {"duration", inj.duration}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

  nlohmann::json config{{"graph", "graph.kg.json"},
                        {"normal_data", "normal.csv"},
                        {"fault_data", "fault.csv"},
                        {"r_pc", 0.8},
                        {"fault_start", inj.start},
                        {"window", std::min<long>(100, inj.duration)}};
  write_text_file(dir / "config.json", config.dump(2) + "\n");
}

}  // namespace rootkgd::synth
