#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qabias/corpus.hpp"
#include "qabias/heuristics.hpp"

namespace qabias {

enum class Metric { ExactMatch, F1 };

/// "EM" / "F1".
std::string_view to_string(Metric metric);
/// Accepts em, f1 in either case.
Metric parse_metric(std::string_view name);

inline constexpr std::string_view kQuantileMethod = "linear interpolation at (n-1)q";

struct BootstrapConfig {
  int trials = 100;
  int sample_size = 800;
  double q_lo = 0.025;
  double q_hi = 0.975;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless 0 < q_lo < q_hi < 1, trials >= 2, sample_size >= 1.
  void validate() const;

  friend bool operator==(const BootstrapConfig&, const BootstrapConfig&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// One run of the two-group bootstrap comparison.
struct BiasMeasurement {
  HeuristicId heuristic = HeuristicId::WordDist;
  double threshold = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double e1_lo = 0.0;
  double e1_hi = 0.0;
  double e2_lo = 0.0;
  double e2_hi = 0.0;
  /// max(0, e1_lo - e2_hi, e2_lo - e1_hi).
  double bias = 0.0;
  /// Full-group (not bootstrapped) means.
  double group1_mean = 0.0;
  double group2_mean = 0.0;
  double worse_split_mean = 0.0;
  Metric metric = Metric::ExactMatch;
  BootstrapConfig config;
  std::string model_name;
  std::string dataset_name;
  std::string config_digest;
  std::vector<std::string> warnings;
};

std::string dump_measurement(const BiasMeasurement& m);
BiasMeasurement parse_measurement(std::string_view json_text);

double exact_match(std::string_view prediction, std::span<const std::string> golds);
/// Max over golds of the token-multiset F1 between normalized strings; two
/// empty token lists score 1, exactly one empty list scores 0.
double f1_score(std::string_view prediction, std::span<const std::string> golds);
double score(Metric metric, std::string_view prediction, std::span<const std::string> golds);

/// Sample positions (into dataset.samples) of the two groups, in dataset order.
struct Split {
  std::vector<std::size_t> group1;  // attribute <= threshold
  std::vector<std::size_t> group2;  // attribute > threshold
};

/// Throws ValidationError when either group would be empty.
Split split(const Dataset& dataset, const AttributeTable& attrs, double threshold);

/// Per-sample metric values for `positions`; a missing prediction throws.
std::vector<double> sample_scores(const Dataset& dataset, std::span<const std::size_t> positions,
                                  const PredictionSet& predictions, Metric metric);

/// Trial means of `cfg.trials` resamples (with replacement, size
/// cfg.sample_size). Trial t draws from CounterRng::stream(seed, tag, t).
std::vector<double> bootstrap_eval(std::span<const double> scores, const BootstrapConfig& cfg,
                                   std::uint64_t stream_tag, unsigned workers = 1);
std::vector<double> bootstrap_eval(const Dataset& dataset, std::span<const std::size_t> group,
                                   const PredictionSet& predictions, Metric metric,
                                   const BootstrapConfig& cfg, std::uint64_t stream_tag,
                                   unsigned workers = 1);

Interval quantiles(std::span<const double> values, double q_lo, double q_hi);
double quantile(std::span<const double> values, double q);

/// max(0, e1.lo - e2.hi, e2.lo - e1.hi).
double bias_distance(const Interval& e1, const Interval& e2);

struct MeasureOptions {
  unsigned workers = 1;
  std::string config_digest;
};

/// Bootstrap comparison of two groups given their per-sample scores.
/// Group 1 uses stream tag 1, group 2 stream tag 2.
BiasMeasurement measure_scores(HeuristicId heuristic, double threshold,
                               std::span<const double> group1_scores,
                               std::span<const double> group2_scores, Metric metric,
                               const BootstrapConfig& cfg, unsigned workers = 1);

BiasMeasurement measure_bias(const Dataset& dataset, const AttributeTable& attrs, double threshold,
                             const PredictionSet& predictions, Metric metric,
                             const BootstrapConfig& cfg, const MeasureOptions& options = {});

/// Thresholds examined by the search: multiples of 0.1 inside [0, 1] and
/// integers above 1, restricted to [min_value, max_value].
std::vector<double> candidate_grid(double min_value, double max_value);

struct CandidateTrace {
  double threshold = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  /// Measured only when both groups hold at least sample_size samples.
  std::optional<double> bias;
  bool valid = false;
};

struct ThresholdSearchResult {
  double best_threshold = 0.0;
  BiasMeasurement measurement;
  std::vector<CandidateTrace> trace;
};

/// A candidate is valid when both groups hold at least 2 * sample_size
/// samples, or when it is the only measured candidate with positive bias
/// and both its groups hold at least sample_size. Returns the valid
/// candidate of largest bias; ties go to the smaller threshold.
ThresholdSearchResult threshold_search(const Dataset& dataset, const AttributeTable& attrs,
                                       const PredictionSet& predictions, Metric metric,
                                       const BootstrapConfig& cfg, const MeasureOptions& options = {});

struct HumanOptions {
  /// Minimum fraction of samples carrying at least two gold answers.
  double min_multi_answer_fraction = 0.5;
  unsigned workers = 1;
  std::string config_digest;
};

struct HumanBaseline {
  /// The annotator measurement with minimal bias.
  BiasMeasurement best;
  std::size_t best_annotator = 0;
  /// Index = annotator; empty when that annotator yields no valid split.
  std::vector<std::optional<BiasMeasurement>> per_annotator;
};

/// Treats each annotator's answer as a prediction against the remaining
/// answers and keeps the smallest resulting bias.
HumanBaseline human_baseline(const Dataset& dataset, const AttributeTable& attrs, double threshold,
                             Metric metric, const BootstrapConfig& cfg, const HumanOptions& options = {});
BiasMeasurement human_bias(const Dataset& dataset, const AttributeTable& attrs, double threshold,
                           Metric metric, const BootstrapConfig& cfg, const HumanOptions& options = {});

/// Mean metric over the whole dataset, no resampling.
double evaluate_full(const Dataset& dataset, const PredictionSet& predictions, Metric metric);

}  // namespace qabias
