// irmite: generate synthetic data, run experiments and sweeps, plot results.
//
// Exit codes: 0 success, 1 configuration/input error, 2 results written but
// some estimator fits failed.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "irmite/irmite.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

irmite::ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return irmite::parse_config(nlohmann::json::object());
  std::ifstream in(path);
  if (!in) throw irmite::Error(irmite::ErrorCode::ConfigError, "cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw irmite::Error(irmite::ErrorCode::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  return irmite::parse_config(j);
}

template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw irmite::Error(irmite::ErrorCode::IoError, "cannot write " + path);
  fn(out);
}

void print_summary(const std::vector<irmite::ResultRecord>& records) {
  std::cerr << "x_value,estimator,mean_accuracy,mean_sqrt_pehe,std_sqrt_pehe,n_ok,n_failed\n";
  for (const auto& row : irmite::summarize(records))
    std::cerr << irmite::format_real(row.x_value) << ',' << row.estimator << ','
              << (row.mean_accuracy ? irmite::format_real(*row.mean_accuracy) : "") << ','
              << irmite::format_real(row.mean) << ',' << irmite::format_real(row.std) << ',' << row.n_ok << ','
              << row.n_failed << '\n';
  for (const auto& d : irmite::paired_differences(records, "OLS_LR2", "IRM2"))
    std::cerr << "diff OLS_LR2-IRM2 at x=" << irmite::format_real(d.x_value) << ": "
              << irmite::format_real(d.mean_difference) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRM-based individual treatment effect estimation: data generation, experiments, plots"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  bool timing = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment configuration");
    sub->add_option("--seed", seed, "Root seed (overrides the config)");
    sub->add_option("--out", out_path, "Output path (stdout when omitted)");
  };
  auto add_run_options = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("--reps", reps, "Repetitions (overrides the config)");
    sub->add_flag("--timing", timing, "Record wall-clock fit times (output is then not reproducible)");
  };

  std::string test_out;
  auto* gen = app.add_subcommand("generate", "Write one synthetic training Dataset as CSV");
  add_common(gen);
  gen->add_option("--test-out", test_out, "Also write the matching test Dataset here");
  std::size_t gen_rep = 0;
  gen->add_option("--rep", gen_rep, "Repetition index whose data to emit");

  auto* run = app.add_subcommand("run", "Run all repetitions of one configuration");
  add_run_options(run);
  auto* acc = app.add_subcommand("sweep-accuracy", "Sweep the group separation and record classification accuracy");
  add_run_options(acc);
  auto* dim = app.add_subcommand("sweep-dimension", "Sweep the feature dimension");
  add_run_options(dim);

  std::string csv_path;
  std::string kind_name;
  auto* plot = app.add_subcommand("plot", "Render a results CSV as an SVG line chart");
  plot->add_option("csv", csv_path, "Results CSV")->required();
  plot->add_option("--kind", kind_name, "accuracy or dimension (inferred from the CSV when omitted)")
      ->check(CLI::IsMember({"accuracy", "dimension"}));
  plot->add_option("--out", out_path, "SVG output path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (plot->parsed()) {
      std::optional<irmite::PlotKind> kind;
      if (!kind_name.empty())
        kind = kind_name == "accuracy" ? irmite::PlotKind::AccuracySweep : irmite::PlotKind::DimensionSweep;
      const std::string svg = irmite::plot_csv(csv_path, kind);
      with_output(out_path, [&](std::ostream& os) { os << svg; });
      return kExitOk;
    }

    auto cfg = load_config(config_path);
    if (seed) cfg.root_seed = *seed;
    if (reps) cfg.reps = *reps;
    if (timing) cfg.record_wall_time = true;
    cfg.validate();

    if (gen->parsed()) {
      const auto rd = irmite::prepare_rep(cfg, cfg.spec, gen_rep);
      with_output(out_path, [&](std::ostream& os) { irmite::write_dataset_csv(os, rd.data.train); });
      if (!test_out.empty())
        with_output(test_out, [&](std::ostream& os) { irmite::write_dataset_csv(os, rd.data.test); });
      return kExitOk;
    }

    std::vector<irmite::ResultRecord> records;
    if (run->parsed()) records = irmite::run_all(cfg);
    if (acc->parsed()) records = irmite::sweep_accuracy(cfg);
    if (dim->parsed()) records = irmite::sweep_dimension(cfg);
    with_output(out_path, [&](std::ostream& os) { irmite::write_results_csv(os, records); });
    print_summary(records);
    return irmite::any_failed(records) ? kExitPartial : kExitOk;
  } catch (const irmite::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
