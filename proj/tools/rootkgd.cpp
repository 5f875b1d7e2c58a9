// rootkgd: command-line front end for knowledge-graph root cause diagnosis.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rootkgd/error.hpp"
#include "rootkgd/io.hpp"
#include "rootkgd/pipeline.hpp"
#include "rootkgd/synth.hpp"

namespace {

using rootkgd::pipeline::DiagnosisConfig;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("rootkgd");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("ROOTKGD_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

/// Flags shared by the config-driven subcommands. Unset flags keep the config value.
struct CommonFlags {
  std::string config;
  std::string graph;
  std::string model;
  std::string data;
  std::string normal;
  std::optional<long> fault_start;
  std::optional<long> window;
  std::optional<std::size_t> top_k;
  std::optional<unsigned> jobs;
  std::string json;

  void attach(CLI::App* app, bool data_is_fault) {
    app->add_option("--config", config, "JSON configuration file")->check(CLI::ExistingFile);
    app->add_option("--graph", graph, "Knowledge graph JSON file");
    app->add_option("--model", model, "PCA model file");
    app->add_option("--data", data, data_is_fault ? "Fault dataset CSV" : "Normal-operation dataset CSV");
    if (data_is_fault) {
      app->add_option("--normal-data", normal, "Normal-operation dataset CSV (fits a model when none is stored)");
      app->add_option("--fault-start", fault_start, "Row index of fault onset in the fault dataset");
      app->add_option("--window", window, "Samples averaged after fault onset (default 100)");
      app->add_option("--top-k", top_k, "Rows per report column (default 10)");
      app->add_option("--json", json, "Also write the full ranking as JSON");
      app->add_option("--jobs", jobs, "Worker threads for candidate scoring (default: all cores)");
    }
  }

  DiagnosisConfig resolve(bool data_is_fault) const {
    DiagnosisConfig c = config.empty() ? DiagnosisConfig{} : rootkgd::pipeline::load_config(config);
    if (!graph.empty()) c.graph_path = graph;
    if (!model.empty()) c.model_path = model;
    if (!data.empty()) (data_is_fault ? c.fault_data_path : c.normal_data_path) = data;
    if (!normal.empty()) c.normal_data_path = normal;
    if (fault_start) c.fault_start = *fault_start;
    if (window) c.window = *window;
    if (top_k) c.top_k = *top_k;
    if (jobs) c.jobs = *jobs;
    if (!json.empty()) c.json_path = json;
    return c;
  }
};

void log_warnings(const rootkgd::pipeline::Roster& roster) {
  for (const auto& w : roster.warnings) spdlog::warn("{}", w);
}

int cmd_fit(const CommonFlags& flags) {
  const DiagnosisConfig config = flags.resolve(false);
  auto outcome = rootkgd::pipeline::run_fit(config);
  log_warnings(outcome.roster);
  const auto& model = outcome.model;
  std::cout << "variables: " << model.n_vars() << "\n"
            << "principal components: " << model.n_pc() << "\n"
            << "retained variance: " << model.retained_variance() << " (r_pc " << model.r_pc() << ")\n";
  if (!config.model_path.empty()) std::cout << "model written to " << config.model_path.string() << "\n";
  return kExitOk;
}

int cmd_diagnose(const CommonFlags& flags) {
  const DiagnosisConfig config = flags.resolve(true);
  auto outcome = rootkgd::pipeline::run_diagnose(config);
  log_warnings(outcome.roster);
  std::cout << rootkgd::scoring::format_report(outcome.ranking, config.top_k, rootkgd::scoring::ReportMode::Text);
  if (!config.json_path.empty()) {
    rootkgd::write_text_file(config.json_path, rootkgd::scoring::format_report(
                                                   outcome.ranking, config.top_k, rootkgd::scoring::ReportMode::Json));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Root cause diagnosis over a process knowledge graph"};
  app.require_subcommand(1);

  CommonFlags fit_flags;
  auto* fit = app.add_subcommand("fit", "Fit the PCA model on normal-operation data");
  fit_flags.attach(fit, false);

  CommonFlags diag_flags;
  auto* diagnose = app.add_subcommand("diagnose", "Rank root-cause candidates for a fault dataset");
  diag_flags.attach(diagnose, true);

  CommonFlags trace_flags;
  std::string source;
  double s_0 = 1.0;
  auto* trace = app.add_subcommand("trace", "Print the propagation log from one source entity");
  trace_flags.attach(trace, false);
  trace->add_option("source", source, "Source entity id")->required();
  trace->add_option("--s0", s_0, "Initial fault quantity (default 1)");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-kg", "Validate a knowledge graph file");
  validate->add_option("graph", validate_path, "Knowledge graph JSON file")->required();

  rootkgd::synth::PlantSpec spec;
  rootkgd::synth::ScenarioOptions scenario;
  std::string out_dir = "synth-out";
  std::string fault_kind = "step";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic plant with a known fault root");
  synth->add_option("--seed", spec.seed, "Random seed (default 0)");
  synth->add_option("--out", out_dir, "Output directory (default synth-out)");
  synth->add_option("--devices", spec.n_devices, "Number of devices (default 3)");
  synth->add_option("--streams-min", spec.streams_min, "Minimum streams per device (default 1)");
  synth->add_option("--streams-max", spec.streams_max, "Maximum streams per device (default 1)");
  synth->add_option("--vars-min", spec.variables_min, "Minimum variables per device (default 2)");
  synth->add_option("--vars-max", spec.variables_max, "Maximum variables per device (default 2)");
  synth->add_option("--noise", spec.noise_scale, "Measurement noise scale (default 0.3)");
  synth->add_option("--root", scenario.root, "Fault root entity (default: random variable)");
  synth->add_option("--fault-kind", fault_kind, "step, drift or random_variation")
      ->check(CLI::IsMember({"step", "drift", "random_variation"}));
  synth->add_option("--magnitude", scenario.magnitude, "Fault size in standard deviations (default 10)");
  synth->add_option("--normal-samples", scenario.normal_samples, "Rows in normal.csv (default 2000)");
  synth->add_option("--fault-samples", scenario.fault_samples, "Rows in fault.csv (default 300)");
  synth->add_option("--fault-start", scenario.fault_start, "Fault onset row (default 100)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*fit) return cmd_fit(fit_flags);
    if (*diagnose) return cmd_diagnose(diag_flags);
    if (*trace) {
      std::cout << rootkgd::pipeline::run_trace(trace_flags.resolve(false), source, s_0);
      return kExitOk;
    }
    if (*validate) return rootkgd::pipeline::run_validate(validate_path, std::cout);
    if (*synth) {
      scenario.kind = *rootkgd::synth::parse_fault_kind(fault_kind);
      const auto sc = rootkgd::synth::make_scenario(spec, scenario);
      rootkgd::synth::write_scenario(sc, spec, out_dir);
      std::cout << "wrote plant to " << out_dir << " (root " << sc.injection.root << ", owner " << sc.owner
                << ")\n";
      return kExitOk;
    }
  } catch (const rootkgd::ParseError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
