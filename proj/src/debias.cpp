#include "qabias/debias.hpp"

#include <json.hpp>
#include <unordered_set>

#include "qabias/error.hpp"
#include "qabias/rng.hpp"
#include "qabias/stats.hpp"
#include "qabias/version.hpp"

namespace qabias {

namespace {
// Stream tag of the resampling draws ("RS").
constexpr std::uint64_t kResampleTag = 0x5253;
}  // namespace

ResampleResult resample(const Dataset& dataset, const AttributeTable& attrs, double threshold,
                        std::uint64_t seed) {
  const auto groups = split(dataset, attrs, threshold);
  ResampleResult result{dataset, attrs, ResamplePlan{attrs.heuristic, threshold, 0, 0, seed}};
  if (groups.group1.size() == groups.group2.size()) return result;

  const bool first_smaller = groups.group1.size() < groups.group2.size();
  const auto& smaller = first_smaller ? groups.group1 : groups.group2;
  const auto& larger = first_smaller ? groups.group2 : groups.group1;
  result.plan.underrepresented_group = first_smaller ? 1 : 2;
  result.plan.n_added = larger.size() - smaller.size();

  std::unordered_set<std::string_view> ids;
  for (const auto& s : dataset.samples) ids.insert(s.id);
  auto rng = CounterRng::stream(seed, kResampleTag, 0);
  result.dataset.samples.reserve(dataset.size() + result.plan.n_added);
  for (std::size_t k = 1; k <= result.plan.n_added; ++k) {
    const auto& source = dataset.samples[smaller[rng.below(smaller.size())]];
    QaSample copy = source;
    copy.id = source.id + "#dup" + std::to_string(k);
    if (ids.contains(copy.id)) {
      throw ValidationError("duplicate id '" + copy.id + "' already exists in the input dataset");
    }
    result.attributes.values[copy.id] = attrs.at(source.id);
    result.dataset.samples.push_back(std::move(copy));
  }
  return result;
}

std::string dump_plan(const ResamplePlan& plan) {
  nlohmann::ordered_json root;
  root["heuristic"] = to_string(plan.heuristic);
  root["threshold"] = plan.threshold;
  root["underrepresented_group"] = plan.underrepresented_group;
  root["n_added"] = plan.n_added;
  root["seed"] = plan.seed;
  root["rng"] = kRngName;
  return root.dump(1) + "\n";
}

ExportedSplits export_splits(const Dataset& dataset, const AttributeTable& attrs, double threshold,
                             const std::filesystem::path& out_dir) {
  const auto groups = split(dataset, attrs, threshold);
  ExportedSplits out;
  out.n1 = groups.group1.size();
  out.n2 = groups.group2.size();
  const std::string stem = dataset.name.empty() ? "dataset" : dataset.name;
  out.group1 = out_dir / (stem + ".group1.json");
  out.group2 = out_dir / (stem + ".group2.json");

  auto write_group = [&](const std::vector<std::size_t>& positions, int index, const std::filesystem::path& path) {
    Dataset part;
    part.name = stem + ".group" + std::to_string(index);
    for (std::size_t p : positions) part.samples.push_back(dataset.samples[p]);
    nlohmann::ordered_json provenance;
    provenance["provenance"] = {{"source_dataset", dataset.name},
                                {"heuristic", to_string(attrs.heuristic)},
                                {"threshold", threshold},
                                {"group", index},
                                {"rule", index == 1 ? "attribute <= threshold" : "attribute > threshold"},
                                {"samples", positions.size()},
                                {"config_digest", attrs.config_digest},
                                {"toolkit_version", kToolkitVersion}};
    save_dataset(part, path, provenance.dump());
  };
  write_group(groups.group1, 1, out.group1);
  write_group(groups.group2, 2, out.group2);
  return out;
}

}  // namespace qabias
