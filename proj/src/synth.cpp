#include "qabias/synth.hpp"

#include <array>
#include <cmath>
#include <json.hpp>
#include <random>

#include "qabias/error.hpp"
#include "qabias/rng.hpp"
#include "qabias/textproc.hpp"

namespace qabias {

namespace {

constexpr std::uint64_t kTextTag = 0x5359;        // "SY"
constexpr std::uint64_t kPredictionTag = 0x5052;  // "PR"

constexpr std::array<std::string_view, 12> kNames = {
    "Alder", "Birch", "Cedar", "Dogwood", "Elm", "Fir", "Ginkgo", "Hazel", "Ivy", "Juniper", "Kapok", "Larch"};
constexpr std::array<std::string_view, 10> kNouns = {
    "harbor", "archive", "bridge", "orchard", "tower", "market", "valley", "library", "canal", "garden"};
constexpr std::array<std::string_view, 10> kAnswerWords = {
    "amber", "basalt", "cobalt", "dune", "ember", "fjord", "granite", "heron", "indigo", "jasper"};
// Shares no token with any gold answer above.
constexpr std::string_view kWrongAnswer = "unrelated guess";

template <std::size_t N>
std::string_view pick(CounterRng& rng, const std::array<std::string_view, N>& words) {
  return words[rng.below(N)];
}

}  // namespace

void PlantSpec::validate() const {
  if (n1 < 1 || n2 < 1) throw ConfigError("plant spec needs n1, n2 >= 1");
  if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0)) {
    throw ConfigError("plant spec probabilities must lie in [0, 1]");
  }
  if (!(a1 <= threshold && threshold < a2)) throw ConfigError("plant spec needs a1 <= threshold < a2");
}

PlantSpec parse_plant_spec(std::string_view json_text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed plant spec at byte " + std::to_string(e.byte));
  }
  if (!root.is_object()) throw ParseError("plant spec must be a JSON object");
  PlantSpec spec;
  try {
    spec.n1 = root.value("n1", spec.n1);
    spec.n2 = root.value("n2", spec.n2);
    spec.p1 = root.value("p1", spec.p1);
    spec.p2 = root.value("p2", spec.p2);
    spec.a1 = root.value("a1", spec.a1);
    spec.a2 = root.value("a2", spec.a2);
    spec.threshold = root.value("threshold", spec.a1);
    spec.seed = root.value("seed", spec.seed);
    if (root.contains("heuristic")) spec.heuristic = parse_heuristic(root["heuristic"].get<std::string>());
  } catch (const nlohmann::json::type_error& e) {
    throw ParseError(std::string("plant spec field has the wrong type: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string dump_plant_spec(const PlantSpec& spec) {
  nlohmann::ordered_json root;
  root["n1"] = spec.n1;
  root["n2"] = spec.n2;
  root["p1"] = spec.p1;
  root["p2"] = spec.p2;
  root["a1"] = spec.a1;
  root["a2"] = spec.a2;
  root["threshold"] = spec.threshold;
  root["seed"] = spec.seed;
  root["heuristic"] = to_string(spec.heuristic);
  return root.dump(1) + "\n";
}

SynthData gen_dataset(const PlantSpec& spec) {
  spec.validate();
  SynthData out;
  out.dataset.name = "synthetic";
  out.attributes.heuristic = spec.heuristic;
  out.attributes.dataset_name = out.dataset.name;
  out.attributes.config_digest.clear();
  const std::size_t total = spec.n1 + spec.n2;
  out.dataset.samples.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const int group = i < spec.n1 ? 1 : 2;
    auto rng = CounterRng::stream(spec.seed, kTextTag, i);
    const auto name = pick(rng, kNames);
    const auto noun = pick(rng, kNouns);
    const std::string answer = std::string(pick(rng, kAnswerWords)) + " " + std::to_string(rng.below(1000));

    QaSample sample;
    sample.id = "synth-g" + std::to_string(group) + "-" + std::to_string(i);
    sample.title = "synthetic-group-" + std::to_string(group);
    const std::string prefix = "Record " + std::to_string(i) + " describes the " + std::string(noun) +
                               " kept by " + std::string(name) + ". Its code is ";
    sample.context = prefix + answer + ".";
    sample.question = "What is the code of the " + std::string(noun) + " kept by " + std::string(name) + "?";
    sample.answers.push_back(AnswerSpan{answer, code_point_length(prefix)});
    out.attributes.values.emplace(sample.id, group == 1 ? spec.a1 : spec.a2);
    out.dataset.samples.push_back(std::move(sample));
  }
  return out;
}

PredictionSet gen_predictions(const Dataset& dataset, const PlantSpec& spec) {
  spec.validate();
  if (dataset.size() != spec.n1 + spec.n2) {
    throw ValidationError("dataset does not match the plant spec group sizes");
  }
  PredictionSet predictions;
  predictions.model_name = "synthetic-predictor";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const double p = i < spec.n1 ? spec.p1 : spec.p2;
    auto rng = CounterRng::stream(spec.seed, kPredictionTag, i);
    const auto& sample = dataset.samples[i];
    predictions.predictions.emplace(
        sample.id, rng.uniform() < p ? sample.canonical_answer().text : std::string(kWrongAnswer));
  }
  return predictions;
}

OracleEstimate expected_bias(const PlantSpec& spec, const BootstrapConfig& cfg, int replications) {
  spec.validate();
  cfg.validate();
  if (replications < 100) throw ConfigError("expected_bias needs at least 100 replications");
  std::mt19937_64 engine(splitmix64(spec.seed ^ splitmix64(cfg.seed + 0x4F52)));

  auto trial_interval = [&](std::size_t n, double p) {
    const double realized =
        static_cast<double>(std::binomial_distribution<long>(static_cast<long>(n), p)(engine)) /
        static_cast<double>(n);
    std::binomial_distribution<long> draw(cfg.sample_size, realized);
    std::vector<double> trials(static_cast<std::size_t>(cfg.trials));
    for (auto& t : trials) t = static_cast<double>(draw(engine)) / cfg.sample_size;
    return quantiles(trials, cfg.q_lo, cfg.q_hi);
  };

  std::vector<double> biases;
  biases.reserve(static_cast<std::size_t>(replications));
  for (int r = 0; r < replications; ++r) {
    const auto e1 = trial_interval(spec.n1, spec.p1);
    const auto e2 = trial_interval(spec.n2, spec.p2);
    biases.push_back(bias_distance(e1, e2));
  }
  double sum = 0.0;
  for (double b : biases) sum += b;
  const double mean = sum / replications;
  double ss = 0.0;
  for (double b : biases) ss += (b - mean) * (b - mean);
  return OracleEstimate{mean, std::sqrt(ss / (replications - 1))};
}

}  // namespace qabias
