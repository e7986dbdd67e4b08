#include "slmg/cli.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "CLI11.hpp"
#include "slmg/crowd.hpp"
#include "slmg/dataset.hpp"
#include "slmg/error.hpp"
#include "slmg/eval.hpp"
#include "slmg/experiment.hpp"
#include "slmg/io.hpp"
#include "slmg/model.hpp"
#include "slmg/synth.hpp"

namespace slmg {

namespace {

namespace fs = std::filesystem;

fs::path sidecar_manifest(const fs::path& out) {
  fs::path p = out;
  p += ".manifest.json";
  return p;
}

void write_manifest(const fs::path& path, const std::string& command, io::Json params) {
  params["command"] = command;
  params["created_utc"] = io::utc_timestamp();
  io::write_text_file(path, params.dump(2) + "\n");
}

io::Json optional_json(const std::optional<std::size_t>& v) {
  return v ? io::Json(*v) : io::Json(nullptr);
}

struct AggregateArgs {
  std::string annotations, out;
  std::size_t classes = 0;
  double alpha = 0.0;
  bool with_counts = false;
};

struct AgreementArgs {
  std::string annotations, out;
  std::optional<std::size_t> classes;
};

struct BudgetArgs {
  std::string annotations, out;
  std::optional<std::size_t> classes;
  std::size_t runs = 5;
  std::optional<std::size_t> max_n;
  double alpha = 0.01;
  std::uint64_t seed = 0;
};

struct SubsampleArgs {
  std::string annotations, out;
  std::optional<std::size_t> classes;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

struct SynthArgs {
  std::string config, out;
};

struct TrainArgs {
  std::string manifest;
};

struct EvalArgs {
  std::string checkpoint, test, reference, out;
  std::optional<std::size_t> binary_positive;
};

struct ReportArgs {
  std::string soft, gold, out;
  double bin_width = 0.1;
};

int cmd_aggregate(const AggregateArgs& a, std::ostream& out) {
  const auto annotations = load_annotations(a.annotations, a.classes);
  const auto soft = estimate_soft_labels(annotations, a.alpha);
  const auto counts = count_labels(annotations);
  save_soft_labels(a.out, soft, a.with_counts ? &counts : nullptr);
  write_manifest(sidecar_manifest(a.out), "aggregate",
                 {{"annotations", a.annotations},
                  {"classes", a.classes},
                  {"alpha", a.alpha},
                  {"with_counts", a.with_counts},
                  {"out", a.out},
                  {"items", soft.size()},
                  {"records", annotations.size()},
                  {"duplicates_removed", annotations.duplicates_removed()}});
  out << "aggregated " << annotations.size() << " responses into " << soft.size() << " soft labels";
  if (annotations.duplicates_removed())
    out << " (" << annotations.duplicates_removed() << " duplicate responses replaced)";
  out << '\n';
  return kExitOk;
}

int cmd_agreement(const AgreementArgs& a, std::ostream& out) {
  const auto annotations = load_annotations(a.annotations, a.classes);
  const auto k = fleiss_kappa(annotations);
  io::Json result = {{"kappa", k.kappa},
                     {"raters_per_item", k.raters_per_item},
                     {"items_used", k.items_used},
                     {"items_dropped", k.items_dropped},
                     {"classes", annotations.classes()},
                     {"duplicates_removed", annotations.duplicates_removed()}};
  if (!a.out.empty()) {
    io::write_text_file(a.out, result.dump(2) + "\n");
    write_manifest(sidecar_manifest(a.out), "agreement",
                   {{"annotations", a.annotations}, {"classes", optional_json(a.classes)}, {"out", a.out}});
  }
  out << result.dump(2) << '\n';
  return kExitOk;
}

int cmd_budget_curve(const BudgetArgs& a, std::ostream& out) {
  const auto annotations = load_annotations(a.annotations, a.classes);
  const std::size_t max_n = a.max_n.value_or(annotations.annotators().size());
  const auto curve = budget_curve(annotations, a.runs, max_n, a.alpha, a.seed);
  io::write_text_file(a.out, budget_curve_csv(curve));
  write_manifest(sidecar_manifest(a.out), "budget-curve",
                 {{"annotations", a.annotations},
                  {"classes", annotations.classes()},
                  {"runs", a.runs},
                  {"max_n", max_n},
                  {"alpha", a.alpha},
                  {"seed", a.seed},
                  {"out", a.out}});
  out << "wrote " << curve.points.size() * curve.runs << " curve rows to " << a.out << '\n';
  return kExitOk;
}

int cmd_subsample(const SubsampleArgs& a, std::ostream& out) {
  const auto annotations = load_annotations(a.annotations, a.classes);
  const auto sub = subsample_annotators(annotations, a.n, a.seed);
  save_annotations(a.out, sub);
  write_manifest(sidecar_manifest(a.out), "subsample",
                 {{"annotations", a.annotations},
                  {"classes", annotations.classes()},
                  {"n", a.n},
                  {"seed", a.seed},
                  {"out", a.out},
                  {"records", sub.size()}});
  out << "kept " << sub.size() << " of " << annotations.size() << " responses\n";
  return kExitOk;
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  io::Json config = io::read_json_file(a.config);
  if (!config.is_object()) throw Error(ErrorKind::MalformedInput, "synth config must be an object");
  std::optional<SynthLayout> layout;
  if (auto it = config.find("layout"); it != config.end()) {
    SynthLayout l;
    for (const auto& [key, value] : it->items()) {
      if (key == "soft") l.soft = value.get<std::size_t>();
      else if (key == "dev") l.dev = value.get<std::size_t>();
      else if (key == "test") l.test = value.get<std::size_t>();
      else throw Error(ErrorKind::MalformedInput, "unknown layout key \"" + key + "\"");
    }
    layout = l;
    config.erase("layout");
  }
  const PopulationConfig pc = population_config_from_json(config);
  const auto population = generate_population(pc);
  write_population(a.out, population, pc, layout,
                   {{"command", "synth"}, {"config", a.config}, {"created_utc", io::utc_timestamp()}});
  out << "generated " << population.items.size() << " items with "
      << population.annotations.size() << " responses in " << a.out << '\n';
  return kExitOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  const auto manifest = load_manifest(a.manifest);
  const auto result = run_experiment(manifest);
  out << to_string(manifest.schedule) << ": test accuracy " << io::format_real(result.report.accuracy)
      << " over " << result.report.n << " items; outputs in " << manifest.output_dir.string() << '\n';
  return kExitOk;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto checkpoint = load_checkpoint(a.checkpoint);
  FeaturizerConfig featurizer;
  if (checkpoint.featurizer.contains("dim_per_segment"))
    featurizer.dim_per_segment = checkpoint.featurizer.at("dim_per_segment").get<std::size_t>();
  if (checkpoint.featurizer.contains("hash"))
    featurizer.hash = checkpoint.featurizer.at("hash").get<std::string>();

  ExperimentData data;
  data.classes = checkpoint.params.classes;
  data.test = load_hard_dataset(a.test, featurizer);
  if (!a.reference.empty()) {
    const auto reference = load_soft_labels(a.reference);
    for (const auto& ex : data.test) {
      auto it = reference.probs.find(ex.item_id);
      if (it == reference.probs.end())
        throw Error(ErrorKind::MalformedInput, "no reference distribution for test item " + ex.item_id);
      data.test_reference.push_back({ex.features, it->second});
    }
  }
  const EvalReport report = evaluate_experiment(checkpoint.params, data, a.binary_positive);
  const std::string text = eval_json_text(report);
  if (!a.out.empty()) {
    const fs::path dir = a.out;
    io::write_text_file(dir / "eval.json", text);
    io::write_text_file(dir / "confusion.csv", confusion_csv(report.confusion));
    write_manifest(dir / "manifest.json", "eval",
                   {{"checkpoint", a.checkpoint},
                    {"test", a.test},
                    {"reference", a.reference.empty() ? io::Json(nullptr) : io::Json(a.reference)},
                    {"binary_positive", optional_json(a.binary_positive)},
                    {"out", a.out}});
  }
  out << text;
  return kExitOk;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const auto soft = load_soft_labels(a.soft).probs;
  const auto gold = load_gold_labels(a.gold);
  const auto bins = gold_agreement_histogram(soft, gold, a.bin_width);
  std::string csv = "bin_start,relative_frequency\n";
  for (const auto& b : bins) csv += io::format_real(b.bin_start) + ',' + io::format_real(b.relative_frequency) + '\n';
  io::write_text_file(a.out, csv);
  write_manifest(sidecar_manifest(a.out), "report",
                 {{"soft", a.soft}, {"gold", a.gold}, {"bin_width", a.bin_width}, {"out", a.out},
                  {"items", soft.size()}});
  out << "wrote " << bins.size() << " histogram bins to " << a.out << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Soft-label crowd aggregation, training schedules and annotation analysis"};
  app.name("slmg");
  app.require_subcommand(1);

  AggregateArgs aggregate;
  auto* agg = app.add_subcommand("aggregate", "Estimate soft labels from crowd annotations");
  agg->add_option("--annotations", aggregate.annotations, "Annotation JSONL")->required();
  agg->add_option("--classes", aggregate.classes, "Number of classes K")->required()->check(CLI::Range(2, 1 << 20));
  agg->add_option("--alpha", aggregate.alpha, "Add-alpha smoothing")->capture_default_str()->check(CLI::NonNegativeNumber);
  agg->add_option("--out", aggregate.out, "Soft-label JSONL output")->required();
  agg->add_flag("--with-counts", aggregate.with_counts, "Also write raw label counts");

  AgreementArgs agreement;
  auto* agr = app.add_subcommand("agreement", "Fleiss' kappa over the annotations");
  agr->add_option("--annotations", agreement.annotations, "Annotation JSONL")->required();
  agr->add_option("--classes", agreement.classes, "Number of classes K (default: inferred)");
  agr->add_option("--out", agreement.out, "Optional JSON output");

  BudgetArgs budget;
  auto* bud = app.add_subcommand("budget-curve", "Mean KL of sub-sampled soft labels vs annotator count");
  bud->add_option("--annotations", budget.annotations, "Annotation JSONL")->required();
  bud->add_option("--classes", budget.classes, "Number of classes K (default: inferred)");
  bud->add_option("--runs", budget.runs, "Random permutations")->capture_default_str()->check(CLI::PositiveNumber);
  bud->add_option("--max-n", budget.max_n, "Largest annotator count (default: all)");
  bud->add_option("--alpha", budget.alpha, "Add-alpha smoothing, > 0")->capture_default_str()->check(CLI::PositiveNumber);
  bud->add_option("--seed", budget.seed, "Root seed")->capture_default_str();
  bud->add_option("--out", budget.out, "CSV output")->required();

  SubsampleArgs subsample;
  auto* sub = app.add_subcommand("subsample", "Keep the responses of n randomly chosen annotators");
  sub->add_option("--annotations", subsample.annotations, "Annotation JSONL")->required();
  sub->add_option("--classes", subsample.classes, "Number of classes K (default: inferred)");
  sub->add_option("--n", subsample.n, "Annotators to keep")->required();
  sub->add_option("--seed", subsample.seed, "Root seed")->capture_default_str();
  sub->add_option("--out", subsample.out, "Annotation JSONL output")->required();

  SynthArgs synth;
  auto* syn = app.add_subcommand("synth", "Generate a synthetic crowd-annotated population");
  syn->add_option("--config", synth.config, "Population config JSON")->required();
  syn->add_option("--out", synth.out, "Output directory")->required();

  TrainArgs train;
  auto* trn = app.add_subcommand("train", "Run an experiment manifest");
  trn->add_option("--manifest", train.manifest, "Experiment manifest JSON")->required();

  EvalArgs eval;
  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on a hard-label test set");
  evl->add_option("--checkpoint", eval.checkpoint, "checkpoint.json")->required();
  evl->add_option("--test", eval.test, "Test item JSONL")->required();
  evl->add_option("--binary-positive", eval.binary_positive, "Class kept as positive in the binary collapse");
  evl->add_option("--reference", eval.reference, "Soft-label JSONL for mean KL to reference");
  evl->add_option("--out", eval.out, "Directory for eval.json, confusion.csv and manifest.json");

  ReportArgs report;
  auto* rep = app.add_subcommand("report", "Histogram of the crowd probability of the gold label");
  rep->add_option("--soft", report.soft, "Soft-label JSONL")->required();
  rep->add_option("--gold", report.gold, "JSONL with item_id and label")->required();
  rep->add_option("--bin-width", report.bin_width, "Histogram bin width")->capture_default_str();
  rep->add_option("--out", report.out, "CSV output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (agg->parsed()) return cmd_aggregate(aggregate, out);
    if (agr->parsed()) return cmd_agreement(agreement, out);
    if (bud->parsed()) return cmd_budget_curve(budget, out);
    if (sub->parsed()) return cmd_subsample(subsample, out);
    if (syn->parsed()) return cmd_synth(synth, out);
    if (trn->parsed()) return cmd_train(train, out);
    if (evl->parsed()) return cmd_eval(eval, out);
    if (rep->parsed()) return cmd_report(report, out);
  } catch (const Error& e) {
    err << "slmg: " << e.what() << '\n';
    return e.kind() == ErrorKind::InvariantViolation ? kExitInternal : kExitInput;
  } catch (const io::Json::exception& e) {
    err << "slmg: malformed input: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "slmg: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "slmg: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInput;
}

}  // namespace slmg
