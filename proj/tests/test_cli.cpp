#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "siad/cli.hpp"
#include "siad/error.hpp"
#include "siad/io.hpp"

using namespace siad;
using namespace siad::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("siad-cli-" + tag)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig c;
  c.out = out;
  c.cohort.side = 8;
  c.cohort.n_healthy_train = 24;
  c.cohort.n_healthy_test = 8;
  c.cohort.n_inference = 6;
  c.cohort.n_variance = 8;
  c.cohort.n_diseased = 4;
  c.cohort.signal.amplitude = 4.0;
  c.region_block = 2;
  c.arch.channels = {3, 4};
  c.arch.latent = 2;
  c.train.epochs = 3;
  c.null_count = 12;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string c; std::getline(ss, c, ',');) out.push_back(c);
  if (!s.empty() && s.back() == ',') out.emplace_back();
  return out;
}

void build(const ExperimentConfig& c) {
  cmd_generate(c);
  cmd_train(c);
  cmd_calibrate(c);
}

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "siad");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_SUITE("cli config") {
  TEST_CASE("lists parse with spaces and reject junk") {
    CHECK(parse_list("0.01, 0.05,0.1") == std::vector<double>{0.01, 0.05, 0.1});
    CHECK(parse_list("").empty());
    CHECK_THROWS_AS(parse_list("0.1,x"), UsageError);
  }
  TEST_CASE("settings update fields and reject unknown keys") {
    ExperimentConfig c;
    apply_setting(c, "cohort.n_train", "7");
    apply_setting(c, "model.channels", "2,3,4");
    apply_setting(c, "inference.noise", "known");
    apply_setting(c, "cohort.shape", "ramp");
    CHECK(c.cohort.n_healthy_train == 7);
    CHECK(c.arch.channels == std::vector<std::uint32_t>{2, 3, 4});
    CHECK(c.noise == NoiseSource::Known);
    CHECK(c.cohort.signal.shape == SignalSpec::Shape::Ramp);
    CHECK_THROWS_AS(apply_setting(c, "cohort.nope", "1"), UsageError);
    CHECK_THROWS_AS(apply_setting(c, "cohort.n_train", "-3"), UsageError);
    CHECK_THROWS_AS(apply_setting(c, "cohort.sigma2", "nan"), UsageError);
    CHECK_THROWS_AS(apply_setting(c, "inference.noise", "guess"), UsageError);
  }
  TEST_CASE("presets") {
    const ExperimentConfig paper = preset("paper");
    CHECK(paper.cohort.n_healthy_train == 600);
    CHECK(paper.cohort.n_variance == 88);
    CHECK(paper.architecture().side == 80);
    CHECK(preset("desk").cohort.n_healthy_train == 200);
    CHECK_THROWS_AS(preset("huge"), UsageError);
  }
  TEST_CASE("ini file with preset and overrides") {
    TempDir d("ini");
    fs::create_directories(d.path);
    const fs::path ini = d.path / "run.ini";
    std::ofstream(ini) << "[experiment]\npreset = paper\nseed = 9\nalphas = 0.05, 0.2\n\n[train]\nepochs = 4\n";
    const ExperimentConfig c = load_config(ini, std::nullopt);
    CHECK(c.preset == "paper");
    CHECK(c.seed == 9);
    CHECK(c.alphas == std::vector<double>{0.05, 0.2});
    CHECK(c.train.epochs == 4);
    CHECK(c.cohort.side == 80);
    CHECK(load_config(ini, "desk").cohort.side == 16);
    std::ofstream(ini) << "[train]\nwarmup = 4\n";
    CHECK_THROWS_AS(load_config(ini, std::nullopt), UsageError);
    CHECK_THROWS_AS(load_config(d.path / "absent.ini", std::nullopt), UsageError);
  }
  TEST_CASE("alpha values must lie in the open unit interval") {
    ExperimentConfig c;
    c.alphas = {0.05, 1.0};
    CHECK_THROWS_AS(c.validate(), UsageError);
    c.alphas = {};
    CHECK_THROWS_AS(c.validate(), UsageError);
    c.alphas = {0.05};
    CHECK_NOTHROW(c.validate());
  }
}

TEST_SUITE("summary table") {
  TEST_CASE("rows partition the cohort") {
    std::vector<SubjectResult> rs(5);
    for (std::size_t i = 0; i < 4; ++i) {
      rs[i].outcome.status = TestOutcome::Status::Tested;
      rs[i].outcome.p_naive = 0.01 * static_cast<double>(i + 1);
      rs[i].outcome.p_bonferroni = 1.0;
      rs[i].outcome.p_selective = 0.03 * static_cast<double>(i + 1);
    }
    const SummaryTable t = summarize(rs, {0.01, 0.05, 0.1}, 0.05);
    REQUIRE(t.rows.size() == 5);
    for (const auto& r : t.rows) CHECK(r.rejections + r.failures + r.skips == 5);
    CHECK(t.rows[0].rejections == 4);
    CHECK(t.rows[1].rejections == 0);
    CHECK(t.rows[2].rejections == 0);
    CHECK(t.rows[3].rejections == 1);
    CHECK(t.rows[4].rejections == 3);
    CHECK(t.rows[4].proportion() == 0.75);
    CHECK(t.cohort_size() == 5);
  }
  TEST_CASE("degenerate outcome renders as a skip row") {
    const SubjectResult r{"s-1", TestOutcome{}};
    CHECK(result_row(r) == "s-1,0,,,,,,,degenerate-skip");
    CHECK(split(result_row(r)).size() == split(result_header()).size());
  }
}

TEST_SUITE("cli commands") {
  TEST_CASE("generate creates the directory, refuses overwrite, honours force, and is seeded") {
    TempDir d("gen");
    ExperimentConfig c = tiny(d.path / "nested" / "run");
    cmd_generate(c);
    const fs::path m = c.cohort_dir() / "manifest.csv";
    REQUIRE(fs::exists(m));
    const auto rows = io::read_manifest(m);
    CHECK(rows.size() == 24 + 8 + 6 + 8 + 4);
    const std::string first = slurp(m), img = slurp(c.cohort_dir() / "images" / "diseased-0002.siim");
    CHECK_THROWS_AS(cmd_generate(c), UsageError);
    c.force = true;
    cmd_generate(c);
    CHECK(slurp(m) == first);
    CHECK(slurp(c.cohort_dir() / "images" / "diseased-0002.siim") == img);
    c.seed = 99;
    cmd_generate(c);
    CHECK(slurp(c.cohort_dir() / "images" / "diseased-0002.siim") != img);
    for (const auto& r : rows) CHECK((r.role == "diseased") == !r.region_path.empty());
  }
  TEST_CASE("train writes a curve whose best-so-far never rises and is seeded") {
    TempDir d("train");
    ExperimentConfig c = tiny(d.path);
    cmd_generate(c);
    const TrainResult a = cmd_train(c);
    const auto curve = lines(c.model_dir() / "training_curve.csv");
    REQUIRE(curve.size() == a.curve.size() + 1);
    CHECK(curve[0] == "epoch,train_loss,holdout_loss,best_holdout,early_stop");
    double prev = INFINITY;
    for (std::size_t i = 1; i < curve.size(); ++i) {
      const double best = std::stod(split(curve[i])[3]);
      CHECK(best <= prev);
      prev = best;
    }
    const std::string weights = slurp(c.model_dir() / "weights.siad");
    CHECK_THROWS_AS(cmd_train(c), UsageError);
    c.force = true;
    cmd_train(c);
    CHECK(slurp(c.model_dir() / "weights.siad") == weights);
  }
  TEST_CASE("early stop is recorded in the curve") {
    TempDir d("stop");
    ExperimentConfig c = tiny(d.path);
    c.train.epochs = 10;
    c.train.patience = 2;
    c.train.min_delta = 1e12;
    cmd_generate(c);
    const TrainResult r = cmd_train(c);
    CHECK(r.early_stopped);
    const auto curve = lines(c.model_dir() / "training_curve.csv");
    CHECK(curve.size() == 1 + 3);
    CHECK(split(curve.back())[4] == "1");
  }
  TEST_CASE("train without a cohort is a data error") {
    TempDir d("nocohort");
    CHECK_THROWS_AS(cmd_train(tiny(d.path)), InvalidInput);
  }
  TEST_CASE("calibrate records the quantile and honours known noise") {
    TempDir d("cal");
    ExperimentConfig c = tiny(d.path);
    build(c);
    const std::string est = slurp(c.model_dir() / "calibration.json");
    CHECK(est.find("\"quantile\": 0.95") != std::string::npos);
    CHECK(est.find("\"estimated\"") != std::string::npos);
    cmd_calibrate(c);
    CHECK(slurp(c.model_dir() / "calibration.json") == est);
    c.noise = NoiseSource::Known;
    c.known_sigma2 = 2.5;
    cmd_calibrate(c);
    const Pipeline p = load_pipeline(c);
    CHECK(p.noise.sigma2() == 2.5);
    CHECK(p.noise.provenance() == NoiseModel::Provenance::Known);
    CHECK(p.threshold.source_quantile == 0.95);
    CHECK(p.threshold.calibration_count == 8 * 16);
  }
  TEST_CASE("test command writes a row and a mask, reruns identically, and rejects unknown ids") {
    TempDir d("test");
    ExperimentConfig c = tiny(d.path);
    build(c);
    const SubjectResult r = cmd_test(c, "diseased-0001");
    const auto rows = lines(c.results_dir() / "test_diseased-0001.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == result_header());
    CHECK(rows[1] == result_row(r));
    CHECK(fs::exists(c.results_dir() / "mask_diseased-0001.siim"));
    const Tensor mask = io::read_image(c.results_dir() / "mask_diseased-0001.siim");
    double n = 0;
    for (double v : mask.values()) n += v;
    CHECK(n == static_cast<double>(r.outcome.mask.size()));
    CHECK(result_row(cmd_test(c, "diseased-0001")) == rows[1]);
    CHECK_THROWS_AS(cmd_test(c, "nobody"), InvalidInput);
  }
  TEST_CASE("experiments are seeded, partition their cohorts, and report merges them") {
    TempDir d("exp");
    ExperimentConfig c = tiny(d.path);
    build(c);
    CHECK_THROWS_AS(cmd_report(c), InvalidInput);
    const NullReport n = cmd_experiment_null(c);
    std::size_t total = 0;
    for (std::size_t k : n.hist_selective) total += k;
    CHECK(total == n.n);
    CHECK(n.hist_naive.size() == 20);
    CHECK(n.summary.cohort_size() == 12);
    const std::string pv = slurp(c.results_dir() / "null_pvalues.csv");
    cmd_experiment_null(c);
    CHECK(slurp(c.results_dir() / "null_pvalues.csv") == pv);

    const SummaryTable f = cmd_experiment_fdr(c);
    for (const auto& r : f.rows) CHECK(r.rejections + r.failures + r.skips == 6);
    const auto subjects = lines(c.results_dir() / "fdr_subjects.csv");
    REQUIRE(subjects.size() == 7);
    for (std::size_t i = 1; i < subjects.size(); ++i) {
      const auto cells = split(subjects[i]);
      if (cells[8] == "tested") CHECK(std::stod(cells[5]) >= std::stod(cells[4]));
    }

    c.amplitudes = {0.0, 3.0};
    c.power_count = 5;
    const PowerReport p = cmd_experiment_power(c);
    REQUIRE(p.sweep.size() == 2);
    for (const auto& [amp, t] : p.sweep) CHECK(t.cohort_size() == 5);

    cmd_report(c);
    const auto t1 = lines(c.results_dir() / "table1.csv");
    CHECK(t1[0] == "Method,Reject the null,Failed to reject,FDR");
    CHECK(t1.size() == 1 + 2 + 3);
    CHECK(t1[3].rfind("SI [alpha=0.01]", 0) == 0);
    const auto t2 = lines(c.results_dir() / "table2.csv");
    CHECK(t2[0] == "Amplitude,Method,Reject the null,Failed to reject,Power");
    CHECK(t2.size() == 1 + 2 * 5);
    const std::string t1s = slurp(c.results_dir() / "table1.csv");
    const std::string dat = slurp(c.results_dir() / "histogram.dat");
    cmd_report(c);
    CHECK(slurp(c.results_dir() / "table1.csv") == t1s);
    CHECK(slurp(c.results_dir() / "histogram.dat") == dat);
    CHECK(lines(c.results_dir() / "histogram.dat").size() == 21);
  }
}

TEST_SUITE("cli exit codes") {
  TEST_CASE("usage, data, numerical, success") {
    TempDir d("exit");
    const std::string out = d.path.string();
    const std::vector<std::string> small{"--out",
                                         out,
                                         "--set",
                                         "cohort.side=8",
                                         "--set",
                                         "cohort.region_block=2",
                                         "--set",
                                         "model.channels=3,4",
                                         "--set",
                                         "model.latent=2",
                                         "--set",
                                         "cohort.n_train=16",
                                         "--set",
                                         "cohort.n_test=6",
                                         "--set",
                                         "cohort.n_variance=6",
                                         "--set",
                                         "cohort.n_inference=2",
                                         "--set",
                                         "cohort.n_diseased=3",
                                         "--set",
                                         "cohort.amplitude=5",
                                         "--set",
                                         "train.epochs=2"};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail = {}) {
      head.insert(head.end(), small.begin(), small.end());
      head.insert(head.end(), tail.begin(), tail.end());
      return head;
    };
    CHECK(run_args({}) == 1);
    CHECK(run_args({"fly"}) == 1);
    CHECK(run_args({"generate", "--preset", "huge"}) == 1);
    CHECK(run_args({"generate", "--set", "nokey"}) == 1);
    CHECK(run_args(with({"generate"}, {"--alpha", "0.05,2"})) == 1);
    CHECK(run_args(with({"train"})) == 2);
    CHECK(run_args(with({"generate"})) == 0);
    CHECK(run_args(with({"generate"})) == 1);
    CHECK(run_args(with({"generate", "--force"})) == 0);
    CHECK(run_args(with({"train"})) == 0);
    CHECK(run_args(with({"calibrate"})) == 0);
    CHECK(run_args(with({"test", "ghost"})) == 2);
    CHECK(run_args(with({"test", "diseased-0000"}, {"--set", "inference.max_pieces=1"})) == 3);
    CHECK(run_args(with({"test", "diseased-0000"})) == 0);
  }
}
