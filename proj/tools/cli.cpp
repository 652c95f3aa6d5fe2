#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "qabias/corpus.hpp"
#include "qabias/debias.hpp"
#include "qabias/error.hpp"
#include "qabias/heuristics.hpp"
#include "qabias/lexicon.hpp"
#include "qabias/report.hpp"
#include "qabias/stats.hpp"
#include "qabias/synth.hpp"
#include "qabias/version.hpp"

namespace qabias::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct GlobalOptions {
  std::uint64_t seed = 0;
  int trials = 100;
  int sample_size = 800;
  double q_lo = 0.025;
  double q_hi = 0.975;
  std::string metric = "em";
  unsigned workers = 1;
  std::string lexicon_dir;

  BootstrapConfig bootstrap() const {
    BootstrapConfig cfg{trials, sample_size, q_lo, q_hi, seed};
    cfg.validate();
    return cfg;
  }
  Lexicon lexicon() const { return lexicon_dir.empty() ? Lexicon::builtin() : Lexicon::load(lexicon_dir); }
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Records everything needed to rerun a command; written next to its output.
class RunManifest {
 public:
  RunManifest(std::string command, const std::vector<std::string>& args, const GlobalOptions& g,
              std::string config_digest)
      : started_(utc_now()) {
    root_["command"] = std::move(command);
    root_["argv"] = args;
    root_["toolkit_version"] = kToolkitVersion;
    root_["config_digest"] = std::move(config_digest);
    root_["seed"] = g.seed;
    root_["config"] = ordered_json{{"trials", g.trials},     {"sample_size", g.sample_size},
                                   {"q_lo", g.q_lo},         {"q_hi", g.q_hi},
                                   {"metric", g.metric},     {"workers", g.workers},
                                   {"lexicon_dir", g.lexicon_dir}};
    root_["inputs"] = ordered_json::object();
    root_["outputs"] = ordered_json::array();
  }

  void input(const std::string& name, const std::string& path) { root_["inputs"][name] = path; }
  void output(const fs::path& path) { root_["outputs"].push_back(path.string()); }
  void note(const std::string& key, ordered_json value) { root_[key] = std::move(value); }

  void write(const fs::path& path) {
    root_["started_at"] = started_;
    root_["finished_at"] = utc_now();
    write_file(path, root_.dump(1) + "\n");
  }

 private:
  ordered_json root_;
  std::string started_;
};

fs::path manifest_for_file(const fs::path& out) {
  auto p = out;
  p += ".manifest.json";
  return p;
}

void print_warnings(std::ostream& err, const Warnings& warnings) {
  for (const auto& w : warnings) err << ordered_json{{"warning", w}}.dump() << "\n";
}

double resolve_threshold(const std::string& text, HeuristicId heuristic) {
  if (text == "auto") {
    const auto t = default_threshold(heuristic);
    if (!t) {
      throw ConfigError("no published default threshold for " + std::string(to_string(heuristic)) +
                        "; pass a value or use --search");
    }
    return *t;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("threshold must be a number or 'auto', got '" + text + "'");
  }
}

void check_attributes(const AttributeTable& attrs, const Dataset& dataset, const Lexicon& lexicon,
                      bool allow_stale, Warnings& warnings) {
  if (!attrs.config_digest.empty() && attrs.config_digest != lexicon.digest()) {
    const std::string msg = "attribute table for " + std::string(to_string(attrs.heuristic)) +
                            " was computed under a different lexicon (config digest " +
                            attrs.config_digest + ", current " + lexicon.digest() + ")";
    if (!allow_stale) throw ValidationError(msg + "; recompute it or pass --allow-stale");
    warnings.push_back(msg);
  }
  if (attrs.dataset_name != dataset.name) {
    warnings.push_back("attribute table was computed for dataset '" + attrs.dataset_name +
                       "', evaluating '" + dataset.name + "'");
  }
  for (const auto& s : dataset.samples) attrs.at(s.id);
}

std::vector<BiasMeasurement> load_measurements(const std::vector<std::string>& paths, Warnings& warnings) {
  std::vector<fs::path> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> in_dir;
      for (const auto& entry : fs::directory_iterator(p)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() != ".json" || name == "manifest.json" ||
            name.ends_with(".manifest.json")) {
          continue;
        }
        in_dir.push_back(entry.path());
      }
      std::sort(in_dir.begin(), in_dir.end());
      files.insert(files.end(), in_dir.begin(), in_dir.end());
    } else {
      files.emplace_back(p);
    }
  }
  std::vector<BiasMeasurement> out;
  for (const auto& f : files) {
    const auto text = read_file(f);
    const auto probe = nlohmann::json::parse(text, nullptr, false);
    if (probe.is_discarded() || !probe.is_object() || !probe.contains("bias")) {
      warnings.push_back("skipping '" + f.string() + "': not a measurement file");
      continue;
    }
    out.push_back(parse_measurement(text));
  }
  if (out.empty()) throw ValidationError("no measurement files found");
  return out;
}

struct AttributesArgs {
  std::string dataset;
  std::string heuristic;
  std::string annotations;
  bool fallback = false;
  std::vector<std::string> tfidf_corpus;
  std::string out;
};

int cmd_attributes(const AttributesArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
                   std::ostream& out, std::ostream& err) {
  const auto lexicon = g.lexicon();
  Warnings warnings;
  const auto dataset = load_dataset(a.dataset, &warnings);
  RunManifest manifest("attributes", argv, g, lexicon.digest());
  manifest.input("dataset", a.dataset);

  std::vector<HeuristicId> heuristics;
  if (a.heuristic == "all") {
    heuristics.assign(kAllHeuristics.begin(), kAllHeuristics.end());
  } else {
    heuristics.push_back(parse_heuristic(a.heuristic));
  }
  std::optional<AnnotationSet> annotations;
  if (!a.annotations.empty()) {
    annotations = load_annotations(a.annotations, &dataset, &warnings);
    manifest.input("annotations", a.annotations);
  }
  HeuristicDeps deps;
  deps.annotations = annotations ? &*annotations : nullptr;
  deps.fallback_annotator = a.fallback;
  for (auto h : heuristics) {
    if ((h == HeuristicId::SimEnts || h == HeuristicId::SubjPos) && !deps.annotations && !deps.fallback_annotator) {
      throw ConfigError(std::string(to_string(h)) + " needs --annotations or --fallback-annotator");
    }
  }
  std::optional<TfidfModel> tfidf;
  if (std::find(heuristics.begin(), heuristics.end(), HeuristicId::CosSim) != heuristics.end()) {
    std::vector<std::string> contexts;
    for (const auto& s : dataset.samples) contexts.push_back(s.context);
    for (const auto& extra : a.tfidf_corpus) {
      for (const auto& s : load_dataset(extra, &warnings).samples) contexts.push_back(s.context);
      manifest.input("tfidf_corpus", extra);
    }
    tfidf = TfidfModel::fit(contexts);
    deps.tfidf = &*tfidf;
  }

  const bool many = heuristics.size() > 1;
  for (auto h : heuristics) {
    const auto table = compute_attributes(dataset, h, deps, lexicon, g.workers);
    const fs::path path = many ? fs::path(a.out) / (std::string(to_string(h)) + ".json") : fs::path(a.out);
    write_file(path, dump_attributes(table));
    manifest.output(path);
    out << "wrote " << path.string() << " (" << table.values.size() << " values)\n";
  }
  manifest.write(many ? fs::path(a.out) / "manifest.json" : manifest_for_file(a.out));
  print_warnings(err, warnings);
  return kExitOk;
}

struct MeasureArgs {
  std::string dataset;
  std::string predictions;
  std::string attributes;
  std::string threshold;
  bool search = false;
  std::string model_name;
  bool allow_stale = false;
  std::string out;
};

int cmd_measure(const MeasureArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
                std::ostream& out, std::ostream& err) {
  if (a.search == !a.threshold.empty()) throw ConfigError("pass exactly one of --threshold or --search");
  const auto lexicon = g.lexicon();
  const auto cfg = g.bootstrap();
  const auto metric = parse_metric(g.metric);
  Warnings warnings;
  const auto dataset = load_dataset(a.dataset, &warnings);
  auto predictions = load_predictions(a.predictions, &warnings);
  if (!a.model_name.empty()) predictions.model_name = a.model_name;
  const auto attrs = load_attributes(a.attributes);
  check_attributes(attrs, dataset, lexicon, a.allow_stale, warnings);

  MeasureOptions options{g.workers, attrs.config_digest};
  ordered_json doc;
  if (a.search) {
    const auto result = threshold_search(dataset, attrs, predictions, metric, cfg, options);
    doc = ordered_json::parse(dump_measurement(result.measurement));
    ordered_json trace = ordered_json::array();
    for (const auto& t : result.trace) {
      trace.push_back(ordered_json{{"threshold", t.threshold},
                                   {"n1", t.n1},
                                   {"n2", t.n2},
                                   {"bias", t.bias ? ordered_json(*t.bias) : ordered_json(nullptr)},
                                   {"valid", t.valid}});
    }
    doc["search"] = ordered_json{{"best_threshold", result.best_threshold},
                                 {"grid", "0.1 steps within [0,1], 1.0 steps above 1"},
                                 {"validity", "both groups >= 2 x sample_size, or the only candidate with bias > 0 and both groups >= sample_size"},
                                 {"candidates", std::move(trace)}};
  } else {
    const double threshold = resolve_threshold(a.threshold, attrs.heuristic);
    doc = ordered_json::parse(dump_measurement(
        measure_bias(dataset, attrs, threshold, predictions, metric, cfg, options)));
  }
  write_file(a.out, doc.dump(1, ' ', false, ordered_json::error_handler_t::replace) + "\n");

  RunManifest manifest("measure", argv, g, attrs.config_digest);
  manifest.input("dataset", a.dataset);
  manifest.input("predictions", a.predictions);
  manifest.input("attributes", a.attributes);
  manifest.output(a.out);
  manifest.write(manifest_for_file(a.out));
  out << "wrote " << a.out << ": " << doc["heuristic"].get<std::string>() << " threshold "
      << doc["threshold"].dump() << " bias " << doc["bias"].dump() << "\n";
  print_warnings(err, warnings);
  return kExitOk;
}

struct SplitArgs {
  std::string dataset;
  std::string attributes;
  std::string threshold;
  bool allow_stale = false;
  std::string out;
};

int cmd_resample(const SplitArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
                 std::ostream& out, std::ostream& err) {
  const auto lexicon = g.lexicon();
  Warnings warnings;
  const auto dataset = load_dataset(a.dataset, &warnings);
  const auto attrs = load_attributes(a.attributes);
  check_attributes(attrs, dataset, lexicon, a.allow_stale, warnings);
  const double threshold = resolve_threshold(a.threshold, attrs.heuristic);
  const auto result = resample(dataset, attrs, threshold, g.seed);
  if (result.plan.n_added == 0) warnings.push_back("groups are already equal; dataset copied unchanged");

  ordered_json extra;
  extra["resample_plan"] = ordered_json::parse(dump_plan(result.plan));
  save_dataset(result.dataset, a.out, extra.dump());

  RunManifest manifest("resample", argv, g, attrs.config_digest);
  manifest.input("dataset", a.dataset);
  manifest.input("attributes", a.attributes);
  manifest.note("plan", extra["resample_plan"]);
  manifest.output(a.out);
  manifest.write(manifest_for_file(a.out));
  out << "wrote " << a.out << ": " << result.dataset.size() << " samples (" << result.plan.n_added
      << " duplicates added to group " << result.plan.underrepresented_group << ")\n";
  print_warnings(err, warnings);
  return kExitOk;
}

int cmd_export_splits(const SplitArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
                      std::ostream& out, std::ostream& err) {
  const auto lexicon = g.lexicon();
  Warnings warnings;
  const auto dataset = load_dataset(a.dataset, &warnings);
  const auto attrs = load_attributes(a.attributes);
  check_attributes(attrs, dataset, lexicon, a.allow_stale, warnings);
  const double threshold = resolve_threshold(a.threshold, attrs.heuristic);
  const auto exported = export_splits(dataset, attrs, threshold, a.out);

  RunManifest manifest("export-splits", argv, g, attrs.config_digest);
  manifest.input("dataset", a.dataset);
  manifest.input("attributes", a.attributes);
  manifest.output(exported.group1);
  manifest.output(exported.group2);
  manifest.write(fs::path(a.out) / "manifest.json");
  out << "wrote " << exported.group1.string() << " (" << exported.n1 << ") and " << exported.group2.string()
      << " (" << exported.n2 << ")\n";
  print_warnings(err, warnings);
  return kExitOk;
}

struct HumanArgs {
  std::string dataset;
  std::string attributes;
  std::string threshold;
  double min_fraction = 0.5;
  bool allow_stale = false;
  std::string out;
};

int cmd_human(const HumanArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
              std::ostream& out, std::ostream& err) {
  const auto lexicon = g.lexicon();
  const auto cfg = g.bootstrap();
  const auto metric = parse_metric(g.metric);
  Warnings warnings;
  const auto dataset = load_dataset(a.dataset, &warnings);
  const auto attrs = load_attributes(a.attributes);
  check_attributes(attrs, dataset, lexicon, a.allow_stale, warnings);
  const double threshold = resolve_threshold(a.threshold, attrs.heuristic);
  const auto baseline = human_baseline(dataset, attrs, threshold, metric, cfg,
                                       HumanOptions{a.min_fraction, g.workers, attrs.config_digest});

  auto doc = ordered_json::parse(dump_measurement(baseline.best));
  ordered_json annotators = ordered_json::array();
  for (std::size_t i = 0; i < baseline.per_annotator.size(); ++i) {
    const auto& m = baseline.per_annotator[i];
    annotators.push_back(ordered_json{{"annotator", i},
                                      {"bias", m ? ordered_json(m->bias) : ordered_json(nullptr)},
                                      {"n1", m ? m->n1 : 0},
                                      {"n2", m ? m->n2 : 0}});
  }
  doc["human"] = ordered_json{{"selected_annotator", baseline.best_annotator},
                              {"min_multi_answer_fraction", a.min_fraction},
                              {"annotators", std::move(annotators)}};
  write_file(a.out, doc.dump(1, ' ', false, ordered_json::error_handler_t::replace) + "\n");

  RunManifest manifest("human", argv, g, attrs.config_digest);
  manifest.input("dataset", a.dataset);
  manifest.input("attributes", a.attributes);
  manifest.output(a.out);
  manifest.write(manifest_for_file(a.out));
  out << "wrote " << a.out << ": human bias " << baseline.best.bias << " (annotator "
      << baseline.best_annotator << ")\n";
  print_warnings(err, warnings);
  return kExitOk;
}

struct EvaluateArgs {
  std::string dataset;
  std::vector<std::string> predictions;
  std::string format = "markdown";
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
                 std::ostream& out, std::ostream& err) {
  Warnings warnings;
  const auto dataset = load_dataset(a.dataset, &warnings);
  const auto format = parse_report_format(a.format);
  ordered_json rows = ordered_json::array();
  std::ostringstream text;
  if (format == ReportFormat::Markdown) {
    text << "# Scores on " << dataset.name << " (" << dataset.size() << " samples)\n\n"
         << "| model | EM | F1 |\n|---|---|---|\n";
  } else if (format == ReportFormat::Csv) {
    text << "model,dataset,em,f1\n";
  }
  for (const auto& path : a.predictions) {
    const auto preds = load_predictions(path, &warnings);
    const double em = evaluate_full(dataset, preds, Metric::ExactMatch);
    const double f1 = evaluate_full(dataset, preds, Metric::F1);
    rows.push_back(ordered_json{{"model", preds.model_name}, {"dataset", dataset.name}, {"em", em}, {"f1", f1}});
    char buf[128];
    if (format == ReportFormat::Markdown) {
      std::snprintf(buf, sizeof buf, " | %.1f | %.1f |\n", em * 100.0, f1 * 100.0);
      text << "| " << preds.model_name << buf;
    } else if (format == ReportFormat::Csv) {
      std::snprintf(buf, sizeof buf, ",%.4f,%.4f\n", em, f1);
      text << preds.model_name << ',' << dataset.name << buf;
    }
  }
  const std::string body = format == ReportFormat::Json
                               ? ordered_json{{"toolkit_version", kToolkitVersion}, {"scores", rows}}.dump(1) + "\n"
                               : text.str();
  if (a.out.empty()) {
    out << body;
  } else {
    write_file(a.out, body);
    RunManifest manifest("evaluate", argv, g, "");
    manifest.input("dataset", a.dataset);
    for (const auto& p : a.predictions) manifest.input("predictions:" + p, p);
    manifest.output(a.out);
    manifest.write(manifest_for_file(a.out));
  }
  print_warnings(err, warnings);
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> measurements;
  std::string format = "markdown";
  std::string out;
  std::string chart;
};

int cmd_report(const ReportArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
               std::ostream& out, std::ostream& err) {
  Warnings warnings;
  const auto measurements = load_measurements(a.measurements, warnings);
  const auto body = render_report(measurements, parse_report_format(a.format));
  RunManifest manifest("report", argv, g, measurements.front().config_digest);
  for (const auto& m : a.measurements) manifest.input("measurements:" + m, m);
  if (a.out.empty()) {
    out << body;
  } else {
    write_file(a.out, body);
    manifest.output(a.out);
  }
  if (!a.chart.empty()) {
    write_file(a.chart, render_chart(measurements));
    manifest.output(a.chart);
  }
  if (!a.out.empty() || !a.chart.empty()) {
    manifest.write(manifest_for_file(a.out.empty() ? a.chart : a.out));
  }
  print_warnings(err, warnings);
  return kExitOk;
}

struct CrossBiasArgs {
  std::string baseline;
  std::vector<std::string> variants;
  std::string out;
};

int cmd_cross_bias(const CrossBiasArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
                   std::ostream& out, std::ostream& err) {
  Warnings warnings;
  const auto baseline = load_measurements({a.baseline}, warnings);
  NamedMeasurements variants;
  std::vector<BiasMeasurement> all = baseline;
  RunManifest manifest("cross-bias", argv, g, baseline.front().config_digest);
  manifest.input("baseline", a.baseline);
  for (const auto& spec : a.variants) {
    std::string name;
    std::string dir = spec;
    if (const auto eq = spec.find('='); eq != std::string::npos) {
      name = spec.substr(0, eq);
      dir = spec.substr(eq + 1);
    } else {
      name = fs::path(dir).lexically_normal().filename().string();
      if (name.empty()) name = fs::path(dir).lexically_normal().parent_path().filename().string();
    }
    auto measurements = load_measurements({dir}, warnings);
    for (auto& m : measurements) {
      if (m.model_name.empty()) m.model_name = name;
    }
    all.insert(all.end(), measurements.begin(), measurements.end());
    variants.emplace_back(name, std::move(measurements));
    manifest.input("variant:" + name, dir);
  }
  const auto matrix = cross_bias_matrix(baseline, variants);
  const fs::path dir(a.out);
  const std::pair<const char*, ReportFormat> files[] = {
      {"matrix.json", ReportFormat::Json}, {"matrix.md", ReportFormat::Markdown}, {"matrix.csv", ReportFormat::Csv}};
  for (const auto& [file, format] : files) {
    write_file(dir / file, render_matrix(matrix, format));
    manifest.output(dir / file);
  }
  write_file(dir / "chart.svg", render_chart(all));
  manifest.output(dir / "chart.svg");
  manifest.write(dir / "manifest.json");
  out << render_matrix(matrix, ReportFormat::Markdown);
  print_warnings(err, warnings);
  return kExitOk;
}

struct SynthArgs {
  std::string spec;
  std::string out;
  int replications = 1000;
};

int cmd_synth(const SynthArgs& a, const GlobalOptions& g, const std::vector<std::string>& argv,
              std::ostream& out, std::ostream&) {
  const auto spec = parse_plant_spec(read_file(a.spec));
  const auto cfg = g.bootstrap();
  auto data = gen_dataset(spec);
  // Loaders name a dataset after its file stem.
  data.dataset.name = "dataset";
  data.attributes.dataset_name = "dataset";
  const auto predictions = gen_predictions(data.dataset, spec);
  const auto oracle = expected_bias(spec, cfg, a.replications);
  const fs::path dir(a.out);
  save_dataset(data.dataset, dir / "dataset.json");
  write_file(dir / "predictions.json", dump_predictions(predictions));
  write_file(dir / "attributes.json", dump_attributes(data.attributes));
  ordered_json oracle_doc{{"toolkit_version", kToolkitVersion},
                          {"spec", ordered_json::parse(dump_plant_spec(spec))},
                          {"config", {{"trials", cfg.trials},
                                      {"sample_size", cfg.sample_size},
                                      {"q_lo", cfg.q_lo},
                                      {"q_hi", cfg.q_hi},
                                      {"seed", cfg.seed}}},
                          {"replications", a.replications},
                          {"expected_bias", oracle.mean},
                          {"sd", oracle.sd}};
  write_file(dir / "oracle.json", oracle_doc.dump(1) + "\n");

  RunManifest manifest("synth", argv, g, "");
  manifest.input("spec", a.spec);
  for (const char* f : {"dataset.json", "predictions.json", "attributes.json", "oracle.json"}) {
    manifest.output(dir / f);
  }
  manifest.write(dir / "manifest.json");
  out << "wrote " << data.dataset.size() << " synthetic samples to " << dir.string()
      << "; expected bias " << oracle.mean << " (sd " << oracle.sd << ")\n";
  return kExitOk;
}

int emit_error(std::ostream& err, std::string_view kind, const std::string& message, int code) {
  err << ordered_json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump(
             -1, ' ', false, ordered_json::error_handler_t::replace)
      << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Measure a QA model's reliance on spurious dataset features", "qabias"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed of all resampling streams")->capture_default_str();
  app.add_option("--trials", g.trials, "Bootstrap trials per group")->capture_default_str();
  app.add_option("--sample-size", g.sample_size, "Samples drawn per bootstrap trial")->capture_default_str();
  app.add_option("--q-lo", g.q_lo, "Lower bootstrap quantile")->capture_default_str();
  app.add_option("--q-hi", g.q_hi, "Upper bootstrap quantile")->capture_default_str();
  app.add_option("--metric", g.metric, "em or f1")->capture_default_str()->check(CLI::IsMember({"em", "f1", "EM", "F1"}));
  app.add_option("--workers", g.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--lexicon-dir", g.lexicon_dir, "Directory overriding the shipped word lists");

  AttributesArgs attributes;
  auto* attributes_cmd = app.add_subcommand("attributes", "Compute a per-sample attribute table");
  attributes_cmd->add_option("--dataset", attributes.dataset, "SQuAD v1.1 JSON")->required();
  attributes_cmd->add_option("--heuristic", attributes.heuristic, "Heuristic name or 'all'")->required();
  attributes_cmd->add_option("--annotations", attributes.annotations, "Annotation sidecar JSON");
  attributes_cmd->add_flag("--fallback-annotator", attributes.fallback, "Use the rule-based annotator where no sidecar entry exists");
  attributes_cmd->add_option("--tfidf-corpus", attributes.tfidf_corpus, "Extra datasets whose contexts join the TF-IDF fit");
  attributes_cmd->add_option("--out", attributes.out, "Output file (directory for 'all')")->required();

  MeasureArgs measure;
  auto* measure_cmd = app.add_subcommand("measure", "Measure prediction bias at a threshold or by search");
  measure_cmd->add_option("--dataset", measure.dataset)->required();
  measure_cmd->add_option("--predictions", measure.predictions)->required();
  measure_cmd->add_option("--attributes", measure.attributes)->required();
  measure_cmd->add_option("--threshold", measure.threshold, "Value or 'auto' for the published default");
  measure_cmd->add_flag("--search", measure.search, "Search the threshold grid");
  measure_cmd->add_option("--model-name", measure.model_name, "Defaults to the predictions file stem");
  measure_cmd->add_flag("--allow-stale", measure.allow_stale, "Accept attributes computed under another lexicon");
  measure_cmd->add_option("--out", measure.out)->required();

  SplitArgs resample_args;
  auto* resample_cmd = app.add_subcommand("resample", "Supersample the underrepresented group");
  resample_cmd->add_option("--dataset", resample_args.dataset)->required();
  resample_cmd->add_option("--attributes", resample_args.attributes)->required();
  resample_cmd->add_option("--threshold", resample_args.threshold)->required();
  resample_cmd->add_flag("--allow-stale", resample_args.allow_stale);
  resample_cmd->add_option("--out", resample_args.out)->required();

  SplitArgs export_args;
  auto* export_cmd = app.add_subcommand("export-splits", "Write both groups as SQuAD files");
  export_cmd->add_option("--dataset", export_args.dataset)->required();
  export_cmd->add_option("--attributes", export_args.attributes)->required();
  export_cmd->add_option("--threshold", export_args.threshold)->required();
  export_cmd->add_flag("--allow-stale", export_args.allow_stale);
  export_cmd->add_option("--out-dir", export_args.out)->required();

  HumanArgs human;
  auto* human_cmd = app.add_subcommand("human", "Human-annotator bias baseline");
  human_cmd->add_option("--dataset", human.dataset)->required();
  human_cmd->add_option("--attributes", human.attributes)->required();
  human_cmd->add_option("--threshold", human.threshold)->required();
  human_cmd->add_option("--min-multi-fraction", human.min_fraction)->capture_default_str();
  human_cmd->add_flag("--allow-stale", human.allow_stale);
  human_cmd->add_option("--out", human.out)->required();

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Whole-dataset EM/F1 of prediction files");
  evaluate_cmd->add_option("--dataset", evaluate.dataset)->required();
  evaluate_cmd->add_option("--predictions", evaluate.predictions)->required();
  evaluate_cmd->add_option("--format", evaluate.format)->capture_default_str();
  evaluate_cmd->add_option("--out", evaluate.out);

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Render measurement files");
  report_cmd->add_option("--measurements", report.measurements, "Files or directories")->required();
  report_cmd->add_option("--format", report.format)->capture_default_str();
  report_cmd->add_option("--out", report.out);
  report_cmd->add_option("--chart", report.chart, "SVG bar chart output");

  CrossBiasArgs cross;
  auto* cross_cmd = app.add_subcommand("cross-bias", "Bias deltas of variants against a baseline");
  cross_cmd->add_option("--baseline", cross.baseline)->required();
  cross_cmd->add_option("--variant", cross.variants, "[name=]directory")->required();
  cross_cmd->add_option("--out", cross.out)->required();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate planted-bias data and its oracle estimate");
  synth_cmd->add_option("--spec", synth.spec)->required();
  synth_cmd->add_option("--out", synth.out)->required();
  synth_cmd->add_option("--replications", synth.replications)->capture_default_str();

  std::string manifest_path;
  auto* replay_cmd = app.add_subcommand("replay", "Rerun the command recorded in a manifest");
  replay_cmd->add_option("--manifest", manifest_path)->required();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<std::string> storage{"qabias"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolkitVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return emit_error(err, "usage", e.what(), kExitUsage);
  }

  try {
    if (*attributes_cmd) return cmd_attributes(attributes, g, args, out, err);
    if (*measure_cmd) return cmd_measure(measure, g, args, out, err);
    if (*resample_cmd) return cmd_resample(resample_args, g, args, out, err);
    if (*export_cmd) return cmd_export_splits(export_args, g, args, out, err);
    if (*human_cmd) return cmd_human(human, g, args, out, err);
    if (*evaluate_cmd) return cmd_evaluate(evaluate, g, args, out, err);
    if (*report_cmd) return cmd_report(report, g, args, out, err);
    if (*cross_cmd) return cmd_cross_bias(cross, g, args, out, err);
    if (*synth_cmd) return cmd_synth(synth, g, args, out, err);
    if (*replay_cmd) {
      const auto manifest = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
      if (manifest.is_discarded() || !manifest.contains("argv")) {
        throw ParseError("'" + manifest_path + "' is not a run manifest");
      }
      const auto recorded = manifest["argv"].get<std::vector<std::string>>();
      if (!recorded.empty() && recorded.front() == "replay") throw ConfigError("refusing to replay a replay");
      return run(recorded, out, err);
    }
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::Usage: return emit_error(err, "usage", e.what(), kExitUsage);
      case ErrorKind::Validation: return emit_error(err, "validation", e.what(), kExitValidation);
      case ErrorKind::Io: return emit_error(err, "io", e.what(), kExitIo);
    }
  } catch (const fs::filesystem_error& e) {
    return emit_error(err, "io", e.what(), kExitIo);
  } catch (const std::exception& e) {
    return emit_error(err, "validation", e.what(), kExitValidation);
  }
  return kExitUsage;
}

}  // namespace qabias::cli
