#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "siad/anomaly.hpp"
#include "siad/cvae.hpp"
#include "siad/inference.hpp"
#include "siad/synth.hpp"
#include "siad/train.hpp"

namespace siad::cli {

enum class NoiseSource { Known, Estimated };

struct ExperimentConfig {
  std::string preset = "desk";
  std::uint64_t seed = 2024;
  std::filesystem::path out = "siad-run";
  bool force = false;

  CohortSpec cohort = CohortSpec::desk();
  std::size_t region_block = 4;  // planted signal: centered block of this side
  double roi_fraction = 0.25;
  std::filesystem::path roi_path;  // empty: centered square of roi_fraction

  ArchitectureSpec arch = ArchitectureSpec::desk();
  TrainConfig train{};

  double quantile = 0.95;

  NoiseSource noise = NoiseSource::Estimated;
  std::optional<double> known_sigma2;  // defaults to the cohort's sigma2
  double window_sigmas = kDefaultWindowSigmas;
  std::size_t max_pieces = 1'000'000;

  std::vector<double> alphas{0.01, 0.05, 0.1};
  double baseline_alpha = 0.05;  // naive and Bonferroni
  std::size_t null_count = 1000;
  std::size_t histogram_bins = 20;
  std::vector<double> amplitudes;  // empty: the manifest's diseased cohort
  std::size_t power_count = 0;     // subjects per swept amplitude; 0 means n_diseased
  std::size_t threads = 1;

  // Resolved specs: seed, image side and signal region filled in.
  CohortSpec cohort_spec() const;
  ArchitectureSpec architecture() const;
  TrainConfig train_config() const;
  RoiMask make_roi() const;

  std::filesystem::path cohort_dir() const { return out / "cohort"; }
  std::filesystem::path model_dir() const { return out / "model"; }
  std::filesystem::path results_dir() const { return out / "results"; }

  void validate() const;
};

ExperimentConfig preset(const std::string& name);

// Applies one `section.key = value` assignment; unknown keys are usage errors.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// INI file: sections cohort, model, train, detector, inference, experiment.
// A `preset` key in [experiment] resets to that preset before the others apply.
ExperimentConfig load_config(const std::filesystem::path& path, const std::optional<std::string>& preset_override);

std::vector<double> parse_list(const std::string& text);

// One row per method and alpha.
struct SummaryRow {
  std::string method;
  double alpha = 0.0;
  std::size_t rejections = 0;
  std::size_t failures = 0;
  std::size_t skips = 0;
  double proportion() const;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
  std::size_t cohort_size() const;
};

struct SubjectResult {
  std::string id;
  TestOutcome outcome;
};

SummaryTable summarize(const std::vector<SubjectResult>& results, const std::vector<double>& alphas,
                       double baseline_alpha);

struct NullReport {
  std::size_t n = 0;
  double ks_naive = 0.0;
  double ks_selective = 0.0;
  double critical = 0.0;
  bool pass = false;
  std::vector<std::size_t> hist_naive, hist_selective;
  SummaryTable summary;
};

struct PowerReport {
  std::vector<std::pair<double, SummaryTable>> sweep;  // (amplitude, table)
};

// Everything downstream of training that the commands need.
struct Pipeline {
  RoiMask roi;
  ModelWeights weights;
  std::array<double, 4> cond_stats{};  // age mean, age std, gap mean, gap std
  Threshold threshold;
  NoiseModel noise;

  std::vector<double> condition(double age, double time_gap) const;
};

Pipeline load_pipeline(const ExperimentConfig& cfg);

// Runs selective_p over the images in a worker pool; results keep input order.
std::vector<SubjectResult> run_subjects(const Pipeline& p, const std::vector<std::string>& ids,
                                        const std::vector<FlowImage>& images,
                                        const std::vector<std::vector<double>>& conds,
                                        const ExperimentConfig& cfg);

void cmd_generate(const ExperimentConfig& cfg);
TrainResult cmd_train(const ExperimentConfig& cfg);
void cmd_calibrate(const ExperimentConfig& cfg);
SubjectResult cmd_test(const ExperimentConfig& cfg, const std::string& id);
NullReport cmd_experiment_null(const ExperimentConfig& cfg);
SummaryTable cmd_experiment_fdr(const ExperimentConfig& cfg);
PowerReport cmd_experiment_power(const ExperimentConfig& cfg);
void cmd_report(const ExperimentConfig& cfg);

std::string result_header();
std::string result_row(const SubjectResult& r);

// Entry point for the siad executable; returns the process exit code.
int run(int argc, char** argv);

}  // namespace siad::cli
