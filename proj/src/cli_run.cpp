#include <iostream>

#include <CLI11.hpp>

#include "siad/cli.hpp"
#include "siad/error.hpp"

namespace siad::cli {

namespace {

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Data: return "data";
    case ErrorKind::Numerical: return "numerical";
  }
  return "unknown";
}

int report_error(ErrorKind kind, const std::string& what) {
  std::cerr << "siad: error kind=" << kind_name(kind) << " exit=" << static_cast<int>(kind) << ": " << what << "\n";
  return static_cast<int>(kind);
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Selective-inference anomaly detection harness", "siad"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, preset_name, alpha_list, out_dir, id;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  bool force = false;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out_dir, "Run directory");
  app.add_option("--alpha", alpha_list, "Comma-separated selective alpha list");
  app.add_option("--preset", preset_name, "Named defaults")->check(CLI::IsMember({"desk", "paper"}));
  app.add_flag("--force", force, "Overwrite existing cohort or model files");
  app.add_option("--set", sets, "Override a config key: section.key=value");
  app.add_option("--threads", threads, "Worker threads for subject tests");

  const char* names[] = {"generate", "train", "calibrate", "test", "experiment-null", "experiment-fdr",
                         "experiment-power", "report"};
  const char* help[] = {"Write a synthetic cohort", "Train the CVAE on healthy subjects",
                        "Calibrate the threshold and noise model", "Test one subject",
                        "Null calibration experiment", "FDR experiment on held-out nulls",
                        "Power experiment on diseased subjects", "Merge experiment tables"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < 8; ++i) subs.push_back(app.add_subcommand(names[i], help[i]));
  subs[3]->add_option("id", id, "Subject id from the manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return 0;
    }
    return report_error(ErrorKind::Usage, e.what());
  }

  try {
    std::optional<std::string> preset_override;
    if (!preset_name.empty()) preset_override = preset_name;
    ExperimentConfig cfg = config_path.empty() ? preset(preset_override.value_or("desk"))
                                               : load_config(config_path, preset_override);
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects section.key=value, got '" + s + "'");
      apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (app.count("--seed")) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!alpha_list.empty()) cfg.alphas = parse_list(alpha_list);
    if (app.count("--threads")) cfg.threads = threads;
    cfg.force = force;

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "generate") cmd_generate(cfg);
    else if (cmd == "train") cmd_train(cfg);
    else if (cmd == "calibrate") cmd_calibrate(cfg);
    else if (cmd == "test") cmd_test(cfg, id);
    else if (cmd == "experiment-null") cmd_experiment_null(cfg);
    else if (cmd == "experiment-fdr") cmd_experiment_fdr(cfg);
    else if (cmd == "experiment-power") cmd_experiment_power(cfg);
    else cmd_report(cfg);
    return 0;
  } catch (const Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error(ErrorKind::Data, e.what());
  }
}

}  // namespace siad::cli
