#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "siad/cli.hpp"
#include "siad/error.hpp"
#include "siad/io.hpp"

namespace siad::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr CohortRole kRoles[] = {CohortRole::Train, CohortRole::Test, CohortRole::Inference, CohortRole::Variance,
                                 CohortRole::Diseased};

std::uint64_t stream_of(CohortRole r) { return static_cast<std::uint64_t>(r); }

std::size_t role_count(const CohortSpec& c, CohortRole r) {
  switch (r) {
    case CohortRole::Train: return c.n_healthy_train;
    case CohortRole::Test: return c.n_healthy_test;
    case CohortRole::Inference: return c.n_inference;
    case CohortRole::Variance: return c.n_variance;
    case CohortRole::Diseased: return c.n_diseased;
    case CohortRole::Null: break;
  }
  return 0;
}

std::string subject_id(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", i);
  return prefix + "-" + buf;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  return io::format_double(v);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const fs::path& path) {
  const io::Bytes b = io::read_file(path);
  return std::string(b.begin(), b.end());
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw InvalidInput("malformed " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void refuse_overwrite(const fs::path& path, bool force) {
  if (fs::exists(path) && !force) throw UsageError(path.string() + " exists; pass --force to overwrite");
}

std::vector<io::ManifestRow> manifest(const ExperimentConfig& cfg) {
  const fs::path p = cfg.cohort_dir() / "manifest.csv";
  if (!fs::exists(p)) throw InvalidInput("cohort manifest missing: " + p.string() + " (run generate)");
  return io::read_manifest(p);
}

std::vector<io::ManifestRow> rows_with_role(const std::vector<io::ManifestRow>& rows, const std::string& role) {
  std::vector<io::ManifestRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [&](const auto& r) { return r.role == role; });
  return out;
}

FlowImage load_subject(const ExperimentConfig& cfg, const io::ManifestRow& row) {
  return {io::read_image(cfg.cohort_dir() / row.path)};
}

struct Batch {
  std::vector<std::string> ids;
  std::vector<FlowImage> images;
  std::vector<std::vector<double>> conds;
};

Batch load_role(const ExperimentConfig& cfg, const Pipeline& p, const std::string& role) {
  Batch b;
  for (const auto& r : rows_with_role(manifest(cfg), role)) {
    b.ids.push_back(r.id);
    b.images.push_back(load_subject(cfg, r));
    b.conds.push_back(p.condition(r.age, r.time_gap));
  }
  if (b.ids.empty()) throw InvalidInput("no " + role + "-role subjects in the manifest");
  return b;
}

Batch synthetic_batch(const Pipeline& p, const std::string& prefix, std::vector<FlowImage> images,
                      const CohortSpec& spec, CohortRole role) {
  Batch b;
  const auto conds = gen_conditions(images.size(), spec.age_range, spec.gap_range, spec.seed, stream_of(role));
  for (std::size_t i = 0; i < images.size(); ++i) {
    b.ids.push_back(subject_id(prefix, i));
    b.conds.push_back(p.condition(conds[i].age, conds[i].time_gap));
  }
  b.images = std::move(images);
  return b;
}

std::string results_csv(const std::vector<SubjectResult>& results) {
  std::string s = result_header() + "\n";
  for (const auto& r : results) s += result_row(r) + "\n";
  return s;
}

std::string summary_header() { return "method,alpha,rejections,failures,skips,proportion"; }

std::string summary_line(const SummaryRow& r) {
  return r.method + "," + fmt(r.alpha) + "," + std::to_string(r.rejections) + "," + std::to_string(r.failures) + "," +
         std::to_string(r.skips) + "," + fmt(r.proportion());
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header) {
  if (!fs::exists(path)) throw InvalidInput("missing input " + path.string());
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw FormatError(FormatFault::MalformedCsv, path.string() + ": unexpected header");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw InvalidInput(path.string() + " has no rows");
  return rows;
}

std::vector<std::size_t> histogram(const std::vector<double>& p, std::size_t bins) {
  std::vector<std::size_t> h(bins, 0);
  for (double v : p) ++h[std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)))];
  return h;
}

using CondStats = std::array<double, 4>;

std::vector<double> standardized(const CondStats& s, double age, double time_gap) {
  return {(age - s[0]) / s[1], (time_gap - s[2]) / s[3]};
}

CondStats read_cond_stats(const fs::path& path) {
  const json j = read_json(path);
  try {
    return {j.at("age_mean").get<double>(), j.at("age_std").get<double>(), j.at("gap_mean").get<double>(),
            j.at("gap_std").get<double>()};
  } catch (const json::exception& e) {
    throw InvalidInput("malformed " + path.string() + ": " + e.what());
  }
}

std::string method_label(const std::string& method, const std::string& alpha) {
  if (method == "naive") return "Naive";
  if (method == "bonferroni") return "Bonferroni";
  return "SI [alpha=" + alpha + "]";
}

}  // namespace

double SummaryRow::proportion() const {
  const std::size_t n = rejections + failures;
  return n == 0 ? std::nan("") : static_cast<double>(rejections) / static_cast<double>(n);
}

std::size_t SummaryTable::cohort_size() const {
  if (rows.empty()) return 0;
  const auto& r = rows.front();
  return r.rejections + r.failures + r.skips;
}

SummaryTable summarize(const std::vector<SubjectResult>& results, const std::vector<double>& alphas,
                       double baseline_alpha) {
  auto tally = [&](const std::string& method, double alpha, auto pick) {
    SummaryRow row{method, alpha};
    for (const auto& r : results) {
      if (r.outcome.status != TestOutcome::Status::Tested) ++row.skips;
      else if (*pick(r.outcome) <= alpha) ++row.rejections;
      else ++row.failures;
    }
    return row;
  };
  SummaryTable t;
  t.rows.push_back(tally("naive", baseline_alpha, [](const TestOutcome& o) { return o.p_naive; }));
  t.rows.push_back(tally("bonferroni", baseline_alpha, [](const TestOutcome& o) { return o.p_bonferroni; }));
  for (double a : alphas)
    t.rows.push_back(tally("selective", a, [](const TestOutcome& o) { return o.p_selective; }));
  return t;
}

std::vector<double> Pipeline::condition(double age, double time_gap) const {
  return standardized(cond_stats, age, time_gap);
}

std::string result_header() {
  return "id,mask_size,t_obs,sigma_t,p_naive,p_bonferroni,p_selective,intervals,status";
}

std::string result_row(const SubjectResult& r) {
  const TestOutcome& o = r.outcome;
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string{}; };
  const bool tested = o.status == TestOutcome::Status::Tested;
  return r.id + "," + std::to_string(o.mask.size()) + "," + (tested ? fmt(o.t_obs) : "") + "," +
         (tested ? fmt(o.sigma_t) : "") + "," + opt(o.p_naive) + "," + opt(o.p_bonferroni) + "," +
         opt(o.p_selective) + "," + (o.truncation ? std::to_string(o.truncation->intervals.size()) : "") + "," +
         (tested ? "tested" : "degenerate-skip");
}

Pipeline load_pipeline(const ExperimentConfig& cfg) {
  const fs::path model = cfg.model_dir();
  const CondStats cond = read_cond_stats(model / "conditions.json");
  const json cal = read_json(model / "calibration.json");
  try {
    Pipeline p{RoiMask::from_tensor(io::read_image(cfg.cohort_dir() / "roi.siim")),
               io::read_weights(model / "weights.siad"),
               cond,
               {cal.at("threshold").at("value").get<double>(), cal.at("threshold").at("quantile").get<double>(),
                cal.at("threshold").at("count").get<std::size_t>()},
               NoiseModel(cal.at("noise").at("sigma2").get<double>(),
                          cal.at("noise").at("provenance").get<std::string>() == "known"
                              ? NoiseModel::Provenance::Known
                              : NoiseModel::Provenance::Estimated)};
    if (p.weights.arch.side * p.weights.arch.side != p.roi.pixels())
      throw InvalidInput("ROI and model disagree on image size");
    return p;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("incomplete model files: ") + e.what());
  }
}

std::vector<SubjectResult> run_subjects(const Pipeline& p, const std::vector<std::string>& ids,
                                        const std::vector<FlowImage>& images,
                                        const std::vector<std::vector<double>>& conds, const ExperimentConfig& cfg) {
  SelectiveOptions opts;
  opts.window_sigmas = cfg.window_sigmas;
  opts.parametric.max_pieces = cfg.max_pieces;
  const std::size_t n = images.size();
  std::vector<SubjectResult> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = {ids[i], selective_p(images[i], conds[i], p.weights, p.threshold, p.roi, p.noise, opts)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(cfg.threads, n); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const NumericalError& e) {
      throw NumericalError("subject " + ids[i] + ": " + e.what());
    }
  }
  return out;
}

void cmd_generate(const ExperimentConfig& cfg) {
  cfg.validate();
  const CohortSpec spec = cfg.cohort_spec();
  const RoiMask roi = cfg.make_roi();
  if (roi.pixels() != spec.side * spec.side) throw InvalidInput("ROI size does not match the cohort images");
  spec.signal.validate(roi);
  const fs::path dir = cfg.cohort_dir();
  refuse_overwrite(dir / "manifest.csv", cfg.force);
  if (cfg.force) fs::remove_all(dir);
  fs::create_directories(dir / "images");

  io::write_image(dir / "roi.siim", roi.to_tensor(spec.side));
  io::write_image(dir / "region.siim", RoiMask(spec.side * spec.side, spec.signal.region).to_tensor(spec.side));
  std::vector<io::ManifestRow> rows;
  for (CohortRole role : kRoles) {
    const std::size_t n = role_count(spec, role);
    const std::uint64_t stream = stream_of(role);
    const auto images = role == CohortRole::Diseased
                            ? gen_diseased(n, spec.side, spec.signal, spec.sigma2, spec.seed, stream).images
                            : gen_null_cohort(n, spec.side, spec.sigma2, spec.seed, stream);
    const auto conds = gen_conditions(n, spec.age_range, spec.gap_range, spec.seed, stream);
    for (std::size_t i = 0; i < n; ++i) {
      io::ManifestRow r;
      r.id = subject_id(role_name(role), i);
      r.role = role_name(role);
      r.path = "images/" + r.id + ".siim";
      r.age = conds[i].age;
      r.time_gap = conds[i].time_gap;
      r.label = role == CohortRole::Diseased ? 1 : 0;
      if (role == CohortRole::Diseased) r.region_path = "region.siim";
      io::write_image(dir / r.path, images[i].values);
      rows.push_back(std::move(r));
    }
  }
  io::write_manifest(dir / "manifest.csv", rows);
  write_json(dir / "cohort.json",
             {{"seed", spec.seed},
              {"side", spec.side},
              {"sigma2", spec.sigma2},
              {"amplitude", spec.signal.amplitude},
              {"shape", spec.signal.shape == SignalSpec::Shape::Plateau ? "plateau" : "ramp"},
              {"region", spec.signal.region},
              {"roi_count", roi.count()}});
  std::cout << "generated " << rows.size() << " subjects in " << dir.string() << "\n";
}

TrainResult cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto rows = manifest(cfg);
  const auto train_rows = rows_with_role(rows, "train"), test_rows = rows_with_role(rows, "test");
  if (train_rows.empty()) throw InvalidInput("no train-role subjects in the manifest");
  const fs::path model = cfg.model_dir();
  refuse_overwrite(model / "weights.siad", cfg.force);

  std::vector<double> ages, gaps;
  for (const auto& r : train_rows) {
    ages.push_back(r.age);
    gaps.push_back(r.time_gap);
  }
  const ConditionStandardization cs = standardize_conditions(ages, gaps);
  const CondStats stats{cs.age_mean, cs.age_std, cs.gap_mean, cs.gap_std};
  auto samples = [&](const std::vector<io::ManifestRow>& rs) {
    std::vector<Sample> out;
    for (const auto& r : rs) out.push_back({load_subject(cfg, r).values, standardized(stats, r.age, r.time_gap)});
    return out;
  };
  const ArchitectureSpec arch = cfg.architecture();
  const TrainResult result = train(samples(train_rows), samples(test_rows), arch, cfg.train_config());

  fs::create_directories(model);
  io::write_weights(model / "weights.siad", result.weights);
  std::string curve = "epoch,train_loss,holdout_loss,best_holdout,early_stop\n";
  for (const auto& e : result.curve)
    curve += std::to_string(e.epoch) + "," + fmt(e.train_loss) + "," + fmt(e.holdout_loss) + "," +
             fmt(e.best_holdout) + "," + (e.early_stop ? "1" : "0") + "\n";
  write_text(model / "training_curve.csv", curve);
  write_json(model / "conditions.json", {{"age_mean", cs.age_mean},
                                         {"age_std", cs.age_std},
                                         {"gap_mean", cs.gap_mean},
                                         {"gap_std", cs.gap_std}});
  std::cout << "trained " << result.curve.size() - 1 << " epochs, best epoch " << result.best_epoch
            << ", held-out loss " << fmt(result.curve[result.best_epoch].holdout_loss) << "\n";
  return result;
}

void cmd_calibrate(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path model = cfg.model_dir();
  const CondStats stats = read_cond_stats(model / "conditions.json");
  const ModelWeights w = io::read_weights(model / "weights.siad");
  const RoiMask roi = RoiMask::from_tensor(io::read_image(cfg.cohort_dir() / "roi.siim"));
  const auto rows = manifest(cfg);
  std::vector<Tensor> errors;
  for (const auto& r : rows_with_role(rows, "test")) {
    const Tensor x = load_subject(cfg, r).values;
    errors.push_back(reconstruction_error(x, cvae_infer(x, standardized(stats, r.age, r.time_gap), w)));
  }
  if (errors.empty()) throw InvalidInput("no test-role subjects for threshold calibration");
  const Threshold t = calibrate_threshold(errors, roi, cfg.quantile);

  std::optional<NoiseModel> noise;
  if (cfg.noise == NoiseSource::Known) {
    noise.emplace(cfg.known_sigma2.value_or(cfg.cohort.sigma2), NoiseModel::Provenance::Known);
  } else {
    std::vector<FlowImage> held;
    for (const auto& r : rows_with_role(rows, "variance")) held.push_back(load_subject(cfg, r));
    noise.emplace(estimate_noise(held));
  }
  write_json(model / "calibration.json",
             {{"threshold", {{"value", t.value}, {"quantile", t.source_quantile}, {"count", t.calibration_count}}},
              {"noise",
               {{"sigma2", noise->sigma2()},
                {"provenance", noise->provenance() == NoiseModel::Provenance::Known ? "known" : "estimated"}}}});
  std::cout << "threshold " << fmt(t.value) << " (q=" << fmt(t.source_quantile) << ", " << t.calibration_count
            << " values), sigma2 " << fmt(noise->sigma2()) << "\n";
}

SubjectResult cmd_test(const ExperimentConfig& cfg, const std::string& id) {
  cfg.validate();
  const Pipeline p = load_pipeline(cfg);
  const auto rows = manifest(cfg);
  const auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.id == id; });
  if (it == rows.end()) throw InvalidInput("unknown subject id '" + id + "'");
  const auto res = run_subjects(p, {id}, {load_subject(cfg, *it)}, {p.condition(it->age, it->time_gap)}, cfg);
  const fs::path dir = cfg.results_dir();
  write_text(dir / ("test_" + id + ".csv"), results_csv(res));
  std::string mask = "pixel\n";
  for (std::size_t i : res[0].outcome.mask.pixels) mask += std::to_string(i) + "\n";
  write_text(dir / ("mask_" + id + ".csv"), mask);
  const std::size_t side = p.weights.arch.side;
  Tensor map = Tensor::image(1, side, side);
  for (std::size_t i : res[0].outcome.mask.pixels) map[i] = 1.0;
  io::write_image(dir / ("mask_" + id + ".siim"), map);
  std::cout << result_header() << "\n" << result_row(res[0]) << "\n";
  return res[0];
}

NullReport cmd_experiment_null(const ExperimentConfig& cfg) {
  cfg.validate();
  const Pipeline p = load_pipeline(cfg);
  const CohortSpec spec = cfg.cohort_spec();
  const std::uint64_t stream = stream_of(CohortRole::Null);
  const Batch b = synthetic_batch(p, "null", gen_null_cohort(cfg.null_count, spec.side, spec.sigma2, spec.seed, stream),
                                  spec, CohortRole::Null);
  const auto res = run_subjects(p, b.ids, b.images, b.conds, cfg);

  NullReport rep;
  std::vector<double> naive, sel;
  for (const auto& r : res)
    if (r.outcome.status == TestOutcome::Status::Tested) {
      naive.push_back(*r.outcome.p_naive);
      sel.push_back(*r.outcome.p_selective);
    }
  rep.n = sel.size();
  if (rep.n == 0) throw InvalidInput("every null subject was a degenerate skip");
  rep.ks_naive = ks_statistic(naive);
  rep.ks_selective = ks_statistic(sel);
  rep.critical = 1.63 / std::sqrt(static_cast<double>(rep.n));
  rep.pass = rep.ks_selective < rep.critical;
  rep.hist_naive = histogram(naive, cfg.histogram_bins);
  rep.hist_selective = histogram(sel, cfg.histogram_bins);
  rep.summary = summarize(res, cfg.alphas, cfg.baseline_alpha);

  const fs::path dir = cfg.results_dir();
  write_text(dir / "null_pvalues.csv", results_csv(res));
  std::string h = "bin_lo,bin_hi,naive,selective\n";
  const double nb = static_cast<double>(cfg.histogram_bins);
  for (std::size_t k = 0; k < cfg.histogram_bins; ++k)
    h += fmt(static_cast<double>(k) / nb) + "," + fmt(static_cast<double>(k + 1) / nb) + "," +
         std::to_string(rep.hist_naive[k]) + "," + std::to_string(rep.hist_selective[k]) + "\n";
  write_text(dir / "null_histogram.csv", h);
  write_text(dir / "null_ks.csv", "method,n,ks,critical,pass\nnaive," + std::to_string(rep.n) + "," +
                                      fmt(rep.ks_naive) + "," + fmt(rep.critical) + "," +
                                      (rep.ks_naive < rep.critical ? "pass" : "fail") + "\nselective," +
                                      std::to_string(rep.n) + "," + fmt(rep.ks_selective) + "," +
                                      fmt(rep.critical) + "," + (rep.pass ? "pass" : "fail") + "\n");
  std::string s = summary_header() + "\n";
  for (const auto& r : rep.summary.rows) s += summary_line(r) + "\n";
  write_text(dir / "null_summary.csv", s);
  std::cout << "null: n=" << rep.n << " KS selective " << fmt(rep.ks_selective) << " naive " << fmt(rep.ks_naive)
            << " critical " << fmt(rep.critical) << " -> " << (rep.pass ? "pass" : "fail") << "\n";
  return rep;
}

SummaryTable cmd_experiment_fdr(const ExperimentConfig& cfg) {
  cfg.validate();
  const Pipeline p = load_pipeline(cfg);
  const Batch b = load_role(cfg, p, "inference");
  const auto res = run_subjects(p, b.ids, b.images, b.conds, cfg);
  const SummaryTable t = summarize(res, cfg.alphas, cfg.baseline_alpha);
  const fs::path dir = cfg.results_dir();
  write_text(dir / "fdr_subjects.csv", results_csv(res));
  std::string s = summary_header() + "\n";
  for (const auto& r : t.rows) s += summary_line(r) + "\n";
  write_text(dir / "fdr_summary.csv", s);
  std::cout << s;
  return t;
}

PowerReport cmd_experiment_power(const ExperimentConfig& cfg) {
  cfg.validate();
  const Pipeline p = load_pipeline(cfg);
  const CohortSpec spec = cfg.cohort_spec();
  std::vector<std::pair<double, Batch>> cohorts;
  if (cfg.amplitudes.empty()) {
    cohorts.emplace_back(spec.signal.amplitude, load_role(cfg, p, "diseased"));
  } else {
    const std::size_t n = cfg.power_count ? cfg.power_count : spec.n_diseased;
    for (std::size_t k = 0; k < cfg.amplitudes.size(); ++k) {
      SignalSpec sig = spec.signal;
      sig.amplitude = cfg.amplitudes[k];
      sig.validate(p.roi);
      // Every amplitude reuses the diseased noise stream.
      auto images = gen_diseased(n, spec.side, sig, spec.sigma2, spec.seed, stream_of(CohortRole::Diseased)).images;
      cohorts.emplace_back(sig.amplitude, synthetic_batch(p, "amp" + std::to_string(k), std::move(images), spec,
                                                          CohortRole::Diseased));
    }
  }
  PowerReport rep;
  std::string subjects = "amplitude," + result_header() + "\n", summary = "amplitude," + summary_header() + "\n";
  for (const auto& [amp, b] : cohorts) {
    const auto res = run_subjects(p, b.ids, b.images, b.conds, cfg);
    for (const auto& r : res) subjects += fmt(amp) + "," + result_row(r) + "\n";
    rep.sweep.emplace_back(amp, summarize(res, cfg.alphas, cfg.baseline_alpha));
    for (const auto& r : rep.sweep.back().second.rows) summary += fmt(amp) + "," + summary_line(r) + "\n";
  }
  const fs::path dir = cfg.results_dir();
  write_text(dir / "power_subjects.csv", subjects);
  write_text(dir / "power_summary.csv", summary);
  std::cout << summary;
  return rep;
}

void cmd_report(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.results_dir();
  const auto fdr = read_csv(dir / "fdr_summary.csv", summary_header());
  const auto power = read_csv(dir / "power_summary.csv", "amplitude," + summary_header());
  const auto hist = read_csv(dir / "null_histogram.csv", "bin_lo,bin_hi,naive,selective");
  auto check = [](const auto& rows, std::size_t width, const fs::path& p) {
    for (const auto& r : rows)
      if (r.size() != width) throw FormatError(FormatFault::MalformedCsv, p.string() + ": wrong column count");
  };
  check(fdr, 6, dir / "fdr_summary.csv");
  check(power, 7, dir / "power_summary.csv");
  check(hist, 4, dir / "null_histogram.csv");

  std::string t1 = "Method,Reject the null,Failed to reject,FDR\n";
  for (const auto& r : fdr) t1 += method_label(r[0], r[1]) + "," + r[2] + "," + r[3] + "," + r[5] + "\n";
  std::string t2 = "Amplitude,Method,Reject the null,Failed to reject,Power\n";
  for (const auto& r : power) t2 += r[0] + "," + method_label(r[1], r[2]) + "," + r[3] + "," + r[4] + "," + r[6] + "\n";
  std::string dat = "# bin_center naive selective\n";
  for (const auto& r : hist) {
    const double c = 0.5 * (std::stod(r[0]) + std::stod(r[1]));
    dat += fmt(c) + " " + r[2] + " " + r[3] + "\n";
  }
  write_text(dir / "table1.csv", t1);
  write_text(dir / "table2.csv", t2);
  write_text(dir / "histogram.dat", dat);
  std::cout << t1 << "\n" << t2;
}

}  // namespace siad::cli
