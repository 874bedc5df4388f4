#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "siad/cli.hpp"
#include "siad/error.hpp"
#include "siad/io.hpp"

namespace siad::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
    throw UsageError("invalid value for " + key + ": '" + text + "'");
  return v;
}

double real(const std::string& k, const std::string& v) {
  const double x = parse_number<double>(k, v);
  if (!std::isfinite(x)) throw UsageError("value for " + k + " must be finite");
  return x;
}
std::size_t count(const std::string& k, const std::string& v) { return parse_number<std::size_t>(k, v); }

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"experiment.seed", [](auto& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"experiment.out", [](auto& c, auto&, auto& v) { c.out = trim(v); }},
      {"experiment.alphas", [](auto& c, auto&, auto& v) { c.alphas = parse_list(v); }},
      {"experiment.baseline_alpha", [](auto& c, auto& k, auto& v) { c.baseline_alpha = real(k, v); }},
      {"experiment.null_count", [](auto& c, auto& k, auto& v) { c.null_count = count(k, v); }},
      {"experiment.histogram_bins", [](auto& c, auto& k, auto& v) { c.histogram_bins = count(k, v); }},
      {"experiment.amplitudes", [](auto& c, auto&, auto& v) { c.amplitudes = parse_list(v); }},
      {"experiment.power_count", [](auto& c, auto& k, auto& v) { c.power_count = count(k, v); }},
      {"experiment.threads", [](auto& c, auto& k, auto& v) { c.threads = count(k, v); }},
      {"cohort.side", [](auto& c, auto& k, auto& v) { c.cohort.side = count(k, v); }},
      {"cohort.n_train", [](auto& c, auto& k, auto& v) { c.cohort.n_healthy_train = count(k, v); }},
      {"cohort.n_test", [](auto& c, auto& k, auto& v) { c.cohort.n_healthy_test = count(k, v); }},
      {"cohort.n_inference", [](auto& c, auto& k, auto& v) { c.cohort.n_inference = count(k, v); }},
      {"cohort.n_variance", [](auto& c, auto& k, auto& v) { c.cohort.n_variance = count(k, v); }},
      {"cohort.n_diseased", [](auto& c, auto& k, auto& v) { c.cohort.n_diseased = count(k, v); }},
      {"cohort.sigma2", [](auto& c, auto& k, auto& v) { c.cohort.sigma2 = real(k, v); }},
      {"cohort.amplitude", [](auto& c, auto& k, auto& v) { c.cohort.signal.amplitude = real(k, v); }},
      {"cohort.region_block", [](auto& c, auto& k, auto& v) { c.region_block = count(k, v); }},
      {"cohort.shape",
       [](auto& c, auto& k, auto& v) {
         const std::string s = trim(v);
         if (s == "plateau") c.cohort.signal.shape = SignalSpec::Shape::Plateau;
         else if (s == "ramp") c.cohort.signal.shape = SignalSpec::Shape::Ramp;
         else throw UsageError(k + " must be plateau or ramp");
       }},
      {"cohort.age_min", [](auto& c, auto& k, auto& v) { c.cohort.age_range.first = real(k, v); }},
      {"cohort.age_max", [](auto& c, auto& k, auto& v) { c.cohort.age_range.second = real(k, v); }},
      {"cohort.gap_min", [](auto& c, auto& k, auto& v) { c.cohort.gap_range.first = real(k, v); }},
      {"cohort.gap_max", [](auto& c, auto& k, auto& v) { c.cohort.gap_range.second = real(k, v); }},
      {"cohort.roi_fraction", [](auto& c, auto& k, auto& v) { c.roi_fraction = real(k, v); }},
      {"cohort.roi_path", [](auto& c, auto&, auto& v) { c.roi_path = trim(v); }},
      {"model.channels",
       [](auto& c, auto& k, auto& v) {
         c.arch.channels.clear();
         for (double x : parse_list(v)) {
           if (x < 1 || x != std::floor(x)) throw UsageError(k + " must list positive integers");
           c.arch.channels.push_back(static_cast<std::uint32_t>(x));
         }
       }},
      {"model.latent", [](auto& c, auto& k, auto& v) { c.arch.latent = parse_number<std::uint32_t>(k, v); }},
      {"model.kernel", [](auto& c, auto& k, auto& v) { c.arch.kernel = parse_number<std::uint32_t>(k, v); }},
      {"train.epochs", [](auto& c, auto& k, auto& v) { c.train.epochs = count(k, v); }},
      {"train.batch_size", [](auto& c, auto& k, auto& v) { c.train.batch_size = count(k, v); }},
      {"train.lr", [](auto& c, auto& k, auto& v) { c.train.adam.lr = real(k, v); }},
      {"train.beta1", [](auto& c, auto& k, auto& v) { c.train.adam.beta1 = real(k, v); }},
      {"train.beta2", [](auto& c, auto& k, auto& v) { c.train.adam.beta2 = real(k, v); }},
      {"train.eps", [](auto& c, auto& k, auto& v) { c.train.adam.eps = real(k, v); }},
      {"train.patience", [](auto& c, auto& k, auto& v) { c.train.patience = count(k, v); }},
      {"train.min_delta", [](auto& c, auto& k, auto& v) { c.train.min_delta = real(k, v); }},
      {"detector.quantile", [](auto& c, auto& k, auto& v) { c.quantile = real(k, v); }},
      {"inference.noise",
       [](auto& c, auto& k, auto& v) {
         const std::string s = trim(v);
         if (s == "known") c.noise = NoiseSource::Known;
         else if (s == "estimated") c.noise = NoiseSource::Estimated;
         else throw UsageError(k + " must be known or estimated");
       }},
      {"inference.sigma2", [](auto& c, auto& k, auto& v) { c.known_sigma2 = real(k, v); }},
      {"inference.window_sigmas", [](auto& c, auto& k, auto& v) { c.window_sigmas = real(k, v); }},
      {"inference.max_pieces", [](auto& c, auto& k, auto& v) { c.max_pieces = count(k, v); }},
  };
  return table;
}

}  // namespace

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  if (name == "desk") return c;
  if (name != "paper") throw UsageError("unknown preset '" + name + "' (expected desk or paper)");
  c.preset = "paper";
  c.cohort = CohortSpec::paper();
  c.region_block = 20;
  c.arch = ArchitectureSpec::paper();
  return c;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(trim(key));
  if (it == setters().end()) throw UsageError("unknown setting '" + key + "'");
  it->second(cfg, it->first, value);
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::optional<std::string>& preset_override) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError("cannot read config " + path.string() + ": " + e.message());
  }
  std::string name = tree.get<std::string>("experiment.preset", "desk");
  if (preset_override) name = *preset_override;
  ExperimentConfig cfg = preset(trim(name));
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) throw UsageError("setting '" + section + "' outside a section");
    for (const auto& [key, node] : entries) {
      const std::string full = section + "." + key;
      if (full == "experiment.preset") continue;
      apply_setting(cfg, full, node.data());
    }
  }
  return cfg;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string item = trim(text.substr(start, comma - start));
    if (!item.empty()) out.push_back(real("list item", item));
    start = comma + 1;
  }
  return out;
}

CohortSpec ExperimentConfig::cohort_spec() const {
  CohortSpec c = cohort;
  c.seed = seed;
  c.signal.region = centered_block(c.side, region_block);
  return c;
}

ArchitectureSpec ExperimentConfig::architecture() const {
  ArchitectureSpec a = arch;
  a.side = static_cast<std::uint32_t>(cohort.side);
  a.conditions = 2;
  return a;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

RoiMask ExperimentConfig::make_roi() const {
  if (!roi_path.empty()) return RoiMask::from_tensor(io::read_image(roi_path));
  return RoiMask::centered_square(cohort.side, roi_fraction);
}

void ExperimentConfig::validate() const {
  if (alphas.empty()) throw UsageError("alpha list is empty");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw UsageError("alpha values must lie in (0, 1)");
  if (!(baseline_alpha > 0.0 && baseline_alpha < 1.0)) throw UsageError("baseline alpha must lie in (0, 1)");
  if (!(quantile > 0.0 && quantile < 1.0)) throw UsageError("detector quantile must lie in (0, 1)");
  if (histogram_bins == 0) throw UsageError("histogram needs at least one bin");
  if (threads == 0) throw UsageError("threads must be positive");
  if (!(window_sigmas > 0.0)) throw UsageError("window width must be positive");
  if (region_block == 0 || region_block > cohort.side) throw UsageError("signal block must fit in the image");
  if (known_sigma2 && !(*known_sigma2 > 0.0)) throw UsageError("known noise variance must be positive");
  if (cohort.age_range.first >= cohort.age_range.second || cohort.gap_range.first >= cohort.gap_range.second)
    throw UsageError("condition ranges must have min < max");
  cohort_spec().validate();
  architecture().validate();
}

}  // namespace siad::cli
