#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "qabias/corpus.hpp"
#include "qabias/heuristics.hpp"

namespace qabias {

struct ResamplePlan {
  HeuristicId heuristic = HeuristicId::WordDist;
  double threshold = 0.0;
  /// 1 or 2; 0 when the groups were already equal.
  int underrepresented_group = 0;
  std::size_t n_added = 0;
  std::uint64_t seed = 0;
};

struct ResampleResult {
  Dataset dataset;
  /// Input attributes extended with the duplicated ids.
  AttributeTable attributes;
  ResamplePlan plan;
};

/// Supersamples the smaller group (uniform draws with replacement) until
/// both groups are equal. Originals keep their order; duplicates are
/// appended with ids "<id>#dup<K>", K = 1..n_added.
ResampleResult resample(const Dataset& dataset, const AttributeTable& attrs, double threshold,
                        std::uint64_t seed);

std::string dump_plan(const ResamplePlan& plan);

struct ExportedSplits {
  std::filesystem::path group1;
  std::filesystem::path group2;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/// Writes both groups as standalone SQuAD v1.1 files carrying a
/// "provenance" member: <out_dir>/<dataset>.group1.json and .group2.json.
ExportedSplits export_splits(const Dataset& dataset, const AttributeTable& attrs, double threshold,
                             const std::filesystem::path& out_dir);

}  // namespace qabias
