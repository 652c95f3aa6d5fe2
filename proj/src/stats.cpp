#include "qabias/stats.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <sstream>

#include "qabias/error.hpp"
#include "qabias/parallel.hpp"
#include "qabias/rng.hpp"
#include "qabias/textproc.hpp"
#include "qabias/version.hpp"

namespace qabias {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Metric metric) { return metric == Metric::ExactMatch ? "EM" : "F1"; }

Metric parse_metric(std::string_view name) {
  if (name == "em" || name == "EM") return Metric::ExactMatch;
  if (name == "f1" || name == "F1") return Metric::F1;
  throw ConfigError("unknown metric '" + std::string(name) + "' (expected em or f1)");
}

void BootstrapConfig::validate() const {
  if (!(q_lo > 0.0 && q_lo < q_hi && q_hi < 1.0)) {
    throw ConfigError("quantiles must satisfy 0 < q_lo < q_hi < 1");
  }
  if (trials < 2) throw ConfigError("bootstrap needs at least 2 trials");
  if (sample_size < 1) throw ConfigError("bootstrap sample size must be positive");
}

std::string dump_measurement(const BiasMeasurement& m) {
  ordered_json root;
  root["toolkit_version"] = kToolkitVersion;
  root["heuristic"] = to_string(m.heuristic);
  root["threshold"] = m.threshold;
  root["metric"] = to_string(m.metric);
  root["n1"] = m.n1;
  root["n2"] = m.n2;
  root["e1_lo"] = m.e1_lo;
  root["e1_hi"] = m.e1_hi;
  root["e2_lo"] = m.e2_lo;
  root["e2_hi"] = m.e2_hi;
  root["bias"] = m.bias;
  root["group1_mean"] = m.group1_mean;
  root["group2_mean"] = m.group2_mean;
  root["worse_split_mean"] = m.worse_split_mean;
  root["config"] = ordered_json{{"trials", m.config.trials},
                                {"sample_size", m.config.sample_size},
                                {"q_lo", m.config.q_lo},
                                {"q_hi", m.config.q_hi},
                                {"seed", m.config.seed}};
  root["provenance"] = ordered_json{{"model_name", m.model_name},
                                    {"dataset_name", m.dataset_name},
                                    {"config_digest", m.config_digest},
                                    {"rng", kRngName},
                                    {"quantile_method", kQuantileMethod},
                                    {"bootstrap", "with replacement, stream tags 1 and 2"},
                                    {"word_dist_stopwords", "removed from question words only"}};
  root["warnings"] = m.warnings;
  return root.dump(1, ' ', false, ordered_json::error_handler_t::replace) + "\n";
}

namespace {

template <typename T>
T required(const json& object, const char* key) {
  if (!object.contains(key)) throw ParseError(std::string("measurement is missing '") + key + "'");
  try {
    return object.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("measurement field '") + key + "' has the wrong type");
  }
}

}  // namespace

BiasMeasurement parse_measurement(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed measurement JSON at byte " + std::to_string(e.byte));
  }
  if (!root.is_object()) throw ParseError("measurement must be a JSON object");
  BiasMeasurement m;
  m.heuristic = parse_heuristic(required<std::string>(root, "heuristic"));
  m.threshold = required<double>(root, "threshold");
  m.metric = parse_metric(required<std::string>(root, "metric"));
  m.n1 = required<std::size_t>(root, "n1");
  m.n2 = required<std::size_t>(root, "n2");
  m.e1_lo = required<double>(root, "e1_lo");
  m.e1_hi = required<double>(root, "e1_hi");
  m.e2_lo = required<double>(root, "e2_lo");
  m.e2_hi = required<double>(root, "e2_hi");
  m.bias = required<double>(root, "bias");
  m.group1_mean = root.value("group1_mean", 0.0);
  m.group2_mean = root.value("group2_mean", 0.0);
  m.worse_split_mean = required<double>(root, "worse_split_mean");
  const auto config = required<json>(root, "config");
  m.config.trials = required<int>(config, "trials");
  m.config.sample_size = required<int>(config, "sample_size");
  m.config.q_lo = required<double>(config, "q_lo");
  m.config.q_hi = required<double>(config, "q_hi");
  m.config.seed = required<std::uint64_t>(config, "seed");
  if (root.contains("provenance")) {
    const auto& p = root["provenance"];
    m.model_name = p.value("model_name", "");
    m.dataset_name = p.value("dataset_name", "");
    m.config_digest = p.value("config_digest", "");
  }
  if (root.contains("warnings")) m.warnings = root["warnings"].get<std::vector<std::string>>();
  return m;
}

double exact_match(std::string_view prediction, std::span<const std::string> golds) {
  if (golds.empty()) throw ValidationError("exact match needs at least one gold answer");
  const auto normalized = normalize_answer(prediction);
  for (const auto& gold : golds) {
    if (normalize_answer(gold) == normalized) return 1.0;
  }
  return 0.0;
}

namespace {

double token_f1(const std::vector<std::string>& prediction, const std::vector<std::string>& gold) {
  if (prediction.empty() && gold.empty()) return 1.0;
  if (prediction.empty() || gold.empty()) return 0.0;
  std::map<std::string_view, long> counts;
  for (const auto& t : gold) ++counts[t];
  long common = 0;
  for (const auto& t : prediction) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(prediction.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

double f1_score(std::string_view prediction, std::span<const std::string> golds) {
  if (golds.empty()) throw ValidationError("F1 needs at least one gold answer");
  const auto predicted = split_whitespace(normalize_answer(prediction));
  double best = 0.0;
  for (const auto& gold : golds) {
    best = std::max(best, token_f1(predicted, split_whitespace(normalize_answer(gold))));
  }
  return best;
}

double score(Metric metric, std::string_view prediction, std::span<const std::string> golds) {
  return metric == Metric::ExactMatch ? exact_match(prediction, golds) : f1_score(prediction, golds);
}

Split split(const Dataset& dataset, const AttributeTable& attrs, double threshold) {
  Split out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (attrs.at(dataset.samples[i].id) <= threshold) {
      out.group1.push_back(i);
    } else {
      out.group2.push_back(i);
    }
  }
  if (out.group1.empty() || out.group2.empty()) {
    std::ostringstream msg;
    msg << "threshold " << threshold << " leaves " << (out.group1.empty() ? "group 1" : "group 2")
        << " empty for " << to_string(attrs.heuristic) << " (outside the attribute range)";
    throw ValidationError(msg.str());
  }
  return out;
}

std::vector<double> sample_scores(const Dataset& dataset, std::span<const std::size_t> positions,
                                  const PredictionSet& predictions, Metric metric) {
  std::vector<double> scores;
  scores.reserve(positions.size());
  for (std::size_t p : positions) {
    const auto& sample = dataset.samples[p];
    const auto golds = sample.answer_texts();
    scores.push_back(score(metric, predictions.at(sample.id), golds));
  }
  return scores;
}

std::vector<double> bootstrap_eval(std::span<const double> scores, const BootstrapConfig& cfg,
                                   std::uint64_t stream_tag, unsigned workers) {
  cfg.validate();
  if (scores.empty()) throw ValidationError("cannot bootstrap an empty group");
  std::vector<double> trials(static_cast<std::size_t>(cfg.trials));
  const auto size = static_cast<std::uint64_t>(scores.size());
  parallel_for(trials.size(), workers, [&](std::size_t t) {
    auto rng = CounterRng::stream(cfg.seed, stream_tag, t);
    double sum = 0.0;
    for (int k = 0; k < cfg.sample_size; ++k) sum += scores[rng.below(size)];
    trials[t] = sum / static_cast<double>(cfg.sample_size);
  });
  return trials;
}

std::vector<double> bootstrap_eval(const Dataset& dataset, std::span<const std::size_t> group,
                                   const PredictionSet& predictions, Metric metric,
                                   const BootstrapConfig& cfg, std::uint64_t stream_tag,
                                   unsigned workers) {
  const auto scores = sample_scores(dataset, group, predictions, metric);
  return bootstrap_eval(scores, cfg, stream_tag, workers);
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double position = static_cast<double>(sorted.size() - 1) * q;
  const auto below = static_cast<std::size_t>(std::floor(position));
  const double fraction = position - static_cast<double>(below);
  if (below + 1 >= sorted.size()) return sorted.back();
  return sorted[below] + fraction * (sorted[below + 1] - sorted[below]);
}

Interval quantiles(std::span<const double> values, double q_lo, double q_hi) {
  return Interval{quantile(values, q_lo), quantile(values, q_hi)};
}

double bias_distance(const Interval& e1, const Interval& e2) {
  return std::max({0.0, e1.lo - e2.hi, e2.lo - e1.hi});
}

namespace {

double mean(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

}  // namespace

BiasMeasurement measure_scores(HeuristicId heuristic, double threshold,
                               std::span<const double> group1_scores,
                               std::span<const double> group2_scores, Metric metric,
                               const BootstrapConfig& cfg, unsigned workers) {
  cfg.validate();
  BiasMeasurement m;
  m.heuristic = heuristic;
  m.threshold = threshold;
  m.metric = metric;
  m.config = cfg;
  m.n1 = group1_scores.size();
  m.n2 = group2_scores.size();

  const auto e1 = quantiles(bootstrap_eval(group1_scores, cfg, 1, workers), cfg.q_lo, cfg.q_hi);
  const auto e2 = quantiles(bootstrap_eval(group2_scores, cfg, 2, workers), cfg.q_lo, cfg.q_hi);
  m.e1_lo = e1.lo;
  m.e1_hi = e1.hi;
  m.e2_lo = e2.lo;
  m.e2_hi = e2.hi;
  m.bias = bias_distance(e1, e2);
  m.group1_mean = mean(group1_scores);
  m.group2_mean = mean(group2_scores);
  m.worse_split_mean = std::min(m.group1_mean, m.group2_mean);

  const auto sample_size = static_cast<std::size_t>(cfg.sample_size);
  for (const auto& [name, n] : {std::pair{"group 1", m.n1}, std::pair{"group 2", m.n2}}) {
    if (n < sample_size) {
      m.warnings.push_back(std::string(name) + " has " + std::to_string(n) +
                           " samples, fewer than the bootstrap sample size " +
                           std::to_string(sample_size));
    }
  }
  return m;
}

BiasMeasurement measure_bias(const Dataset& dataset, const AttributeTable& attrs, double threshold,
                             const PredictionSet& predictions, Metric metric,
                             const BootstrapConfig& cfg, const MeasureOptions& options) {
  const auto groups = split(dataset, attrs, threshold);
  const auto s1 = sample_scores(dataset, groups.group1, predictions, metric);
  const auto s2 = sample_scores(dataset, groups.group2, predictions, metric);
  auto m = measure_scores(attrs.heuristic, threshold, s1, s2, metric, cfg, options.workers);
  m.model_name = predictions.model_name;
  m.dataset_name = dataset.name;
  m.config_digest = options.config_digest.empty() ? attrs.config_digest : options.config_digest;
  return m;
}

std::vector<double> candidate_grid(double min_value, double max_value) {
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) {
    const double v = k / 10.0;
    if (v >= min_value && v <= max_value) grid.push_back(v);
  }
  for (double v = 2.0; v <= max_value; v += 1.0) {
    if (v >= min_value) grid.push_back(v);
  }
  return grid;
}

ThresholdSearchResult threshold_search(const Dataset& dataset, const AttributeTable& attrs,
                                       const PredictionSet& predictions, Metric metric,
                                       const BootstrapConfig& cfg, const MeasureOptions& options) {
  cfg.validate();
  if (dataset.size() == 0) throw ValidationError("threshold search on an empty dataset");
  std::vector<double> values;
  values.reserve(dataset.size());
  for (const auto& s : dataset.samples) values.push_back(attrs.at(s.id));
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  if (*min_it == *max_it) {
    throw ValidationError(std::string(to_string(attrs.heuristic)) +
                          " attributes are constant; no threshold separates the data");
  }

  std::vector<std::size_t> all(dataset.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto scores = sample_scores(dataset, all, predictions, metric);

  const auto grid = candidate_grid(*min_it, *max_it);
  const auto sample_size = static_cast<std::size_t>(cfg.sample_size);
  std::vector<CandidateTrace> trace(grid.size());
  std::vector<std::optional<BiasMeasurement>> measured(grid.size());
  parallel_for(grid.size(), options.workers, [&](std::size_t c) {
    std::vector<double> s1, s2;
    for (std::size_t i = 0; i < values.size(); ++i) {
      (values[i] <= grid[c] ? s1 : s2).push_back(scores[i]);
    }
    trace[c].threshold = grid[c];
    trace[c].n1 = s1.size();
    trace[c].n2 = s2.size();
    if (std::min(s1.size(), s2.size()) < sample_size) return;
    measured[c] = measure_scores(attrs.heuristic, grid[c], s1, s2, metric, cfg, 1);
    trace[c].bias = measured[c]->bias;
  });

  std::size_t significant = 0;
  for (const auto& t : trace) {
    if (t.bias && *t.bias > 0.0) ++significant;
  }
  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < trace.size(); ++c) {
    auto& t = trace[c];
    if (!t.bias) continue;
    const bool strict = std::min(t.n1, t.n2) >= 2 * sample_size;
    const bool lone_significant = significant == 1 && *t.bias > 0.0;
    t.valid = strict || lone_significant;
    if (t.valid && (!best || *t.bias > *trace[*best].bias)) best = c;
  }
  if (!best) {
    throw ValidationError("no valid threshold for " + std::string(to_string(attrs.heuristic)) +
                          ": every candidate split has a group smaller than the required size; "
                          "try a smaller --sample-size");
  }

  ThresholdSearchResult result;
  result.best_threshold = grid[*best];
  result.measurement = std::move(*measured[*best]);
  result.measurement.model_name = predictions.model_name;
  result.measurement.dataset_name = dataset.name;
  result.measurement.config_digest = options.config_digest.empty() ? attrs.config_digest : options.config_digest;
  result.trace = std::move(trace);
  return result;
}

HumanBaseline human_baseline(const Dataset& dataset, const AttributeTable& attrs, double threshold,
                             Metric metric, const BootstrapConfig& cfg, const HumanOptions& options) {
  cfg.validate();
  std::size_t multi = 0;
  for (const auto& s : dataset.samples) {
    if (s.answers.size() >= 2) ++multi;
  }
  const double fraction = dataset.size() == 0 ? 0.0 : static_cast<double>(multi) / static_cast<double>(dataset.size());
  if (multi == 0 || fraction < options.min_multi_answer_fraction) {
    std::ostringstream msg;
    msg << "human baseline needs at least " << options.min_multi_answer_fraction * 100.0
        << "% of samples with two or more gold answers; found " << fraction * 100.0 << "%";
    throw ValidationError(msg.str());
  }

  HumanBaseline result;
  result.per_annotator.resize(3);
  std::vector<std::string> skipped;
  for (std::size_t a = 0; a < 3; ++a) {
    std::vector<double> s1, s2;
    for (const auto& sample : dataset.samples) {
      if (sample.answers.size() < std::max<std::size_t>(a + 1, 2)) continue;
      std::vector<std::string> golds;
      for (std::size_t k = 0; k < sample.answers.size(); ++k) {
        if (k != a) golds.push_back(sample.answers[k].text);
      }
      const double v = score(metric, sample.answers[a].text, golds);
      (attrs.at(sample.id) <= threshold ? s1 : s2).push_back(v);
    }
    if (s1.empty() || s2.empty()) {
      skipped.push_back("annotator " + std::to_string(a) + " has an empty group at this threshold");
      continue;
    }
    auto m = measure_scores(attrs.heuristic, threshold, s1, s2, metric, cfg, options.workers);
    m.model_name = "human/annotator-" + std::to_string(a);
    m.dataset_name = dataset.name;
    m.config_digest = options.config_digest.empty() ? attrs.config_digest : options.config_digest;
    result.per_annotator[a] = std::move(m);
  }

  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < 3; ++a) {
    if (result.per_annotator[a] && (!best || result.per_annotator[a]->bias < result.per_annotator[*best]->bias)) {
      best = a;
    }
  }
  if (!best) throw ValidationError("no annotator yields two non-empty groups at this threshold");
  result.best_annotator = *best;
  result.best = *result.per_annotator[*best];
  result.best.model_name = "human";
  for (auto& w : skipped) result.best.warnings.push_back(std::move(w));
  return result;
}

BiasMeasurement human_bias(const Dataset& dataset, const AttributeTable& attrs, double threshold,
                           Metric metric, const BootstrapConfig& cfg, const HumanOptions& options) {
  return human_baseline(dataset, attrs, threshold, metric, cfg, options).best;
}

double evaluate_full(const Dataset& dataset, const PredictionSet& predictions, Metric metric) {
  if (dataset.size() == 0) throw ValidationError("cannot evaluate on an empty dataset");
  std::vector<std::size_t> all(dataset.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return mean(sample_scores(dataset, all, predictions, metric));
}

}  // namespace qabias
