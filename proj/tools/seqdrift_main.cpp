// Command-line front end: train/checkpoint a model, run experiments from a
// config file, emit synthetic streams, and report phase timings and state
// sizes.
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "seqdrift/seqdrift.hpp"

namespace {

using namespace seqdrift;

int cmd_train(const std::string& config_path, const std::string& out_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const StreamData data = resolve_dataset(cfg);
  const Discriminator d = fit_from_config(cfg, data);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + out_path);
  d.save(out);
  std::cout << "trained " << d.num_classes() << " instances on " << data.train.size()
            << " samples (dim " << d.dim() << ")\n"
            << "theta_error " << d.theta_error() << ", theta_drift " << d.theta_drift() << "\n"
            << "checkpoint written to " << out_path << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& trace_path,
            const std::string& report_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const ExperimentReport rep = run_experiment(cfg);
  if (!trace_path.empty()) write_trace_csv(trace_path, rep.trace);
  const nlohmann::json j = report_to_json(rep);
  if (report_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(report_path);
    if (!out) throw IoError("cannot write report: " + report_path);
    out << j.dump(2) << "\n";
    std::cout << "report written to " << report_path << "\n";
  }
  if (!trace_path.empty()) std::cout << "trace written to " << trace_path << "\n";
  return 0;
}

int cmd_synth(const std::string& config_path, std::string train_out, std::string test_out,
              const std::string& stem) {
  const ExperimentConfig cfg = load_config(config_path);
  const StreamData data = resolve_dataset(cfg);
  if (train_out.empty()) train_out = stem + "_train.csv";
  if (test_out.empty()) test_out = stem + "_test.csv";
  write_csv(train_out, data.train, true);
  write_csv(test_out, data.test, true);
  std::cout << data.train.size() << " training rows -> " << train_out << "\n"
            << data.test.size() << " stream rows -> " << test_out << "\n";
  if (data.meta.drift_at)
    std::cout << "true drift at stream index " << *data.meta.drift_at << "\n";
  return 0;
}

int cmd_bench(const std::string& config_path, std::size_t samples) {
  const ExperimentConfig cfg = load_config(config_path);
  const auto timings = time_phases(cfg, samples);
  std::printf("%-28s %12s\n", "phase", "ms/sample");
  for (const auto& [name, ms] : timings) std::printf("%-28s %12.4f\n", name.c_str(), ms);
  return 0;
}

int cmd_audit(const std::string& config_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const StreamData data = resolve_dataset(cfg);
  Discriminator d = fit_from_config(cfg, data);
  DriftDetector det(d, cfg.detector);
  ModelReconstruction recon(cfg.reconstruction);
  const std::size_t model_only = audit_state_size(nullptr, d, nullptr);
  const std::size_t base = audit_state_size(&det, d, &recon);
  recon.begin(d);
  const std::size_t rebuilding = audit_state_size(&det, d, &recon);
  std::cout << "discriminative model:       " << model_only << " bytes\n"
            << "model + detector state:     " << base << " bytes\n"
            << "peak (rebuild in progress): " << rebuilding << " bytes\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequential concept-drift detection and model-rebuild toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path = "model.bin";
  std::string trace_path;
  std::string report_path;
  std::string train_out;
  std::string test_out;
  std::string stem = "stream";
  std::size_t bench_samples = 200;

  auto* train = app.add_subcommand("train", "fit the initial model and write a checkpoint");
  train->add_option("--config", config_path, "experiment config (JSON)")->required();
  train->add_option("--out", out_path, "checkpoint output path");

  auto* run = app.add_subcommand("run", "stream an experiment and report results");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--trace", trace_path, "per-sample trace CSV output");
  run->add_option("--report", report_path, "report JSON output (default stdout)");

  auto* synth = app.add_subcommand("synth", "emit a generated stream as CSV");
  synth->add_option("--config", config_path, "experiment config (JSON)")->required();
  synth->add_option("--train-out", train_out, "training split output");
  synth->add_option("--test-out", test_out, "test stream output");
  synth->add_option("--out", stem, "output stem when the explicit paths are unset");

  auto* bench = app.add_subcommand("bench", "measure per-phase execution time");
  bench->add_option("--config", config_path, "experiment config (JSON)")->required();
  bench->add_option("--samples", bench_samples, "samples per phase (default 200)");

  auto* audit = app.add_subcommand("audit", "report serialized state sizes");
  audit->add_option("--config", config_path, "experiment config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, out_path);
    if (run->parsed()) return cmd_run(config_path, trace_path, report_path);
    if (synth->parsed()) return cmd_synth(config_path, train_out, test_out, stem);
    if (bench->parsed()) return cmd_bench(config_path, bench_samples);
    if (audit->parsed()) return cmd_audit(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
