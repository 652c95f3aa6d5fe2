#pragma once

#include <cstdint>
#include <string_view>

#include "qabias/corpus.hpp"
#include "qabias/heuristics.hpp"
#include "qabias/stats.hpp"

namespace qabias {

/// Two groups with planted attribute values and per-group predictor accuracy.
struct PlantSpec {
  std::size_t n1 = 1000;
  std::size_t n2 = 1000;
  double p1 = 0.9;
  double p2 = 0.5;
  double a1 = 0.0;
  double a2 = 1.0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
  /// Heuristic name recorded in the generated attribute table.
  HeuristicId heuristic = HeuristicId::AnsLen;

  /// Throws ConfigError unless probabilities lie in [0, 1], a1 <= threshold < a2, n1, n2 >= 1.
  void validate() const;
};

PlantSpec parse_plant_spec(std::string_view json_text);
std::string dump_plant_spec(const PlantSpec& spec);

struct SynthData {
  Dataset dataset;
  AttributeTable attributes;
};

/// n1 group-1 samples followed by n2 group-2 samples built from templates;
/// attribute a1 for group 1 and a2 for group 2.
SynthData gen_dataset(const PlantSpec& spec);

/// Gold answer with probability p_i, otherwise a string sharing no
/// normalized token with the gold answer.
PredictionSet gen_predictions(const Dataset& dataset, const PlantSpec& spec);

struct OracleEstimate {
  double mean = 0.0;
  double sd = 0.0;
};

/// Monte-Carlo estimate of the bias statistic without materializing data:
/// each replication draws realized group accuracies as Binomial(n_i, p_i)/n_i
/// and each bootstrap trial mean as Binomial(sample_size, realized)/sample_size.
OracleEstimate expected_bias(const PlantSpec& spec, const BootstrapConfig& cfg, int replications);

}  // namespace qabias
