#include "cli.h"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "compresslab/corpus.h"
#include "compresslab/erran.h"
#include "compresslab/labeler.h"
#include "compresslab/manifest.h"
#include "compresslab/metrics.h"
#include "compresslab/service.h"
#include "compresslab/synthetic.h"

namespace compresslab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path data_dir() {
  const char* dir = std::getenv("COMPRESSLAB_DATA_DIR");
  return dir && *dir ? fs::path(dir) : fs::path(".");
}

// Relative inputs that do not exist locally are looked up under the data dir.
fs::path input_path(const std::string& text) {
  fs::path path(text);
  if (path.is_relative() && !fs::exists(path) && fs::exists(data_dir() / path))
    return data_dir() / path;
  return path;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::ofstream open_output(const fs::path& path) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

struct Invocation {
  std::vector<std::string> argv;
  RunManifest manifest;

  void begin(const std::string& command) {
    manifest.command = command;
    manifest.argv = argv;
    manifest.started = now_rfc3339();
  }

  void finish(const fs::path& output) {
    manifest.finished = now_rfc3339();
    write_manifest(manifest_path_for(output), manifest);
  }
};

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw UsageError("expected a boolean, got '" + text + "'");
}

std::string seed_file(std::uint64_t seed, const char* suffix) {
  return "seed" + std::to_string(seed) + suffix;
}

// ---------------------------------------------------------------------------

struct SynthOptions {
  std::string kind = "rule";
  std::size_t size = 2000;
  std::uint64_t seed = 0;
  double noise = 0.10;
  bool no_positional = false;
  std::string prefix;
  std::string out;
};

void cmd_synth(const SynthOptions& o, Invocation& inv) {
  inv.begin("synth");
  Corpus corpus;
  if (o.kind == "rule") {
    RuleCorpusOptions options;
    options.size = o.size;
    options.seed = o.seed;
    options.positional = !o.no_positional;
    if (!o.prefix.empty()) options.id_prefix = o.prefix;
    corpus = make_rule_corpus(options);
  } else if (o.kind == "markov") {
    MarkovCorpusOptions options;
    options.size = o.size;
    options.seed = o.seed;
    options.noise = o.noise;
    if (!o.prefix.empty()) options.id_prefix = o.prefix;
    corpus = make_markov_corpus(options);
  } else {
    throw UsageError("unknown corpus kind '" + o.kind + "' (rule|markov)");
  }
  const fs::path out(o.out);
  ensure_parent(out);
  write_corpus(out, corpus);
  inv.manifest.config = {{"kind", o.kind}, {"size", o.size}, {"noise", o.noise},
                         {"positional", !o.no_positional}};
  inv.manifest.seeds = {o.seed};
  inv.manifest.outputs = {o.out};
  inv.finish(out);
  std::cout << "wrote " << corpus.size() << " " << o.kind << " instances to " << o.out << '\n';
}

struct FilterOptions {
  std::string in, out;
  FilterRules rules;
};

void cmd_filter(const FilterOptions& o, Invocation& inv) {
  inv.begin("filter");
  const Corpus corpus = parse_corpus(input_path(o.in), CorpusOrigin::kTrain);
  const FilterResult result = filter_train(corpus, o.rules);
  const fs::path out(o.out);
  ensure_parent(out);
  write_corpus(out, result.kept);
  json rejections = json::object();
  for (const auto& [rule, count] : result.rejections) rejections[rule_name(rule)] = count;
  inv.manifest.config = {{"max_sentence_tokens", o.rules.max_sentence_tokens},
                         {"max_compression_tokens", o.rules.max_compression_tokens},
                         {"max_token_chars", o.rules.max_token_chars},
                         {"max_cr", o.rules.max_cr},
                         {"rejections", rejections}};
  inv.manifest.inputs = {o.in};
  inv.manifest.outputs = {o.out};
  inv.finish(out);
  std::cout << "kept " << result.kept.size() << " of " << corpus.size() << " instances\n";
  for (const auto& [rule, count] : result.rejections)
    std::cout << "  rejected by " << rule_name(rule) << ": " << count << '\n';
}

struct StatsOptions {
  std::string in, out_dir;
  bool svg = false;
  BinSpec bins;
};

void cmd_stats(const StatsOptions& o, Invocation& inv) {
  inv.begin("stats");
  const Corpus corpus = parse_corpus(input_path(o.in));
  const StatsReport report = compute_stats(corpus, o.bins);
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_output(dir / "histograms.csv");
    write_stats_csv(out, report);
    auto medians = open_output(dir / "medians.csv");
    write_medians_csv(medians, report);
  }
  inv.manifest.outputs = {(dir / "histograms.csv").string(), (dir / "medians.csv").string()};
  if (o.svg) {
    for (const auto& [quantity, histogram] : report.histograms) {
      const fs::path path = dir / (std::string(quantity_name(quantity)) + ".svg");
      auto out = open_output(path);
      out << render_histogram_svg(quantity, histogram, report.medians.at(quantity));
      inv.manifest.outputs.push_back(path.string());
    }
  }
  inv.manifest.config = {{"bins",
                          {{"sentence_tokens", o.bins.sentence_tokens},
                           {"compression_tokens", o.bins.compression_tokens},
                           {"token_chars", o.bins.token_chars},
                           {"compression_ratio", o.bins.compression_ratio}}},
                         {"svg", o.svg}};
  inv.manifest.inputs = {o.in};
  inv.finish(dir);
  std::cout << corpus.size() << " instances\n";
  for (const auto& [quantity, value] : report.medians)
    std::cout << "  median " << quantity_name(quantity) << ": " << value << '\n';
}

struct SplitOptions {
  std::string in, test_out, dev_out;
  std::size_t test_size = 1000;
};

void cmd_split(const SplitOptions& o, Invocation& inv) {
  inv.begin("split");
  const Corpus corpus = parse_corpus(input_path(o.in), CorpusOrigin::kEval);
  const EvalSplit split = split_eval(corpus, o.test_size);
  ensure_parent(o.test_out);
  ensure_parent(o.dev_out);
  write_corpus(fs::path(o.test_out), split.test);
  write_corpus(fs::path(o.dev_out), split.dev);
  inv.manifest.config = {{"test_size", o.test_size}};
  inv.manifest.inputs = {o.in};
  inv.manifest.outputs = {o.test_out, o.dev_out};
  inv.finish(fs::path(o.test_out));
  std::cout << "test " << split.test.size() << ", dev " << split.dev.size() << '\n';
}

struct TrainOptions {
  std::string train, out_dir, seeds = "0", scheme = "standard", predict, mode = "free_running";
  int depth = 0;
  std::size_t epochs = 30, batch_size = 16, hidden = 64, layers = 2, max_length = 128, jobs = 1;
  double lr = 1e-3, ss_k = 5.0;
};

void cmd_train(const TrainOptions& o, Invocation& inv) {
  inv.begin("train");
  const auto seeds = parse_seeds(o.seeds);
  HistoryConfig history{o.depth};
  TrainConfig base;
  base.scheme = parse_scheme(o.scheme);
  base.epochs = o.epochs;
  base.batch_size = o.batch_size;
  base.learning_rate = o.lr;
  base.ss_k = o.ss_k;
  base.validate(history);
  EncoderConfig encoder{o.hidden, o.layers, o.max_length};
  encoder.validate();
  const PredictMode mode = parse_mode(o.mode);
  const Corpus corpus = parse_corpus(input_path(o.train), CorpusOrigin::kTrain);
  std::optional<Corpus> predict_on;
  if (!o.predict.empty()) predict_on = parse_corpus(input_path(o.predict), CorpusOrigin::kEval);

  const fs::path dir = o.out_dir.empty() ? data_dir() / "runs" : fs::path(o.out_dir);
  fs::create_directories(dir);

  auto run_seed = [&](std::uint64_t seed) {
    TrainConfig config = base;
    config.seed = seed;
    TrainLog log;
    LabelerModel model = train(corpus, config, history, encoder, &log);
    model.save(dir / seed_file(seed, ".ckpt"));
    {
      auto out = open_output(dir / seed_file(seed, ".loss.csv"));
      out << "epoch,loss,gold_history_probability\n";
      for (std::size_t e = 0; e < log.epoch_loss.size(); ++e)
        out << e << ',' << json(log.epoch_loss[e]).dump() << ','
            << json(log.gold_history_probability[e]).dump() << '\n';
    }
    if (predict_on)
      write_predictions(dir / seed_file(seed, ".pred.jsonl"), predict_corpus(model, *predict_on, mode));
    return log.epoch_loss.back();
  };

  std::map<std::uint64_t, double> final_loss;
  const std::size_t jobs = std::max<std::size_t>(1, o.jobs);
  for (std::size_t start = 0; start < seeds.size(); start += jobs) {
    std::vector<std::pair<std::uint64_t, std::future<double>>> running;
    for (std::size_t k = start; k < std::min(seeds.size(), start + jobs); ++k)
      running.emplace_back(seeds[k], std::async(std::launch::async, run_seed, seeds[k]));
    for (auto& [seed, result] : running) final_loss[seed] = result.get();
  }

  for (std::uint64_t seed : seeds) {
    inv.manifest.outputs.push_back((dir / seed_file(seed, ".ckpt")).string());
    if (predict_on) inv.manifest.outputs.push_back((dir / seed_file(seed, ".pred.jsonl")).string());
  }
  inv.manifest.config = {{"scheme", o.scheme},     {"depth", o.depth},
                         {"epochs", o.epochs},     {"batch_size", o.batch_size},
                         {"learning_rate", o.lr},  {"ss_k", o.ss_k},
                         {"hidden", o.hidden},     {"layers", o.layers},
                         {"max_length", o.max_length}, {"predict_mode", o.mode}};
  inv.manifest.inputs = {o.train};
  if (predict_on) inv.manifest.inputs.push_back(o.predict);
  inv.manifest.seeds = seeds;
  inv.finish(dir);
  for (const auto& [seed, loss] : final_loss)
    std::cout << "seed " << seed << ": final epoch loss " << loss << '\n';
}

struct PredictOptions {
  std::string model, in, out, mode = "free_running";
};

void cmd_predict(const PredictOptions& o, Invocation& inv) {
  inv.begin("predict");
  const LabelerModel model = LabelerModel::load(input_path(o.model));
  const PredictMode mode = parse_mode(o.mode);
  const Corpus corpus = parse_corpus(input_path(o.in), CorpusOrigin::kEval,
                                     mode == PredictMode::kTeacherForced);
  const auto predictions = predict_corpus(model, corpus, mode);
  ensure_parent(o.out);
  write_predictions(fs::path(o.out), predictions);
  inv.manifest.config = {{"mode", o.mode}};
  inv.manifest.inputs = {o.model, o.in};
  inv.manifest.outputs = {o.out};
  inv.manifest.seeds = {model.seed()};
  inv.finish(fs::path(o.out));
  std::cout << "predicted " << predictions.size() << " instances (" << o.mode << ")\n";
}

std::vector<InstanceScore> score_file(const Corpus& gold, const std::string& pred_path) {
  const auto predictions = read_predictions(input_path(pred_path));
  std::vector<std::string> ids;
  std::vector<LabelSequence> labels;
  for (const auto& p : predictions) {
    ids.push_back(p.id);
    labels.push_back(p.labels);
  }
  return score_predictions(gold, ids, labels);
}

struct EvalOptions {
  std::string gold, out_dir, system = "system";
  std::vector<std::string> preds;
  bool aggregate = false, micro = false;
};

void cmd_eval(const EvalOptions& o, Invocation& inv) {
  inv.begin("eval");
  if (o.preds.size() > 1 && !o.aggregate)
    throw UsageError("several --pred files need --aggregate");
  const Corpus gold = parse_corpus(input_path(o.gold), CorpusOrigin::kEval);
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  std::vector<CorpusScore> runs;
  for (std::size_t k = 0; k < o.preds.size(); ++k) {
    const auto scores = score_file(gold, o.preds[k]);
    CorpusScore run = corpus_score(scores);
    if (o.micro) {
      const auto predictions = read_predictions(input_path(o.preds[k]));
      std::map<std::string, const LabelSequence*> by_id;
      for (const auto& p : predictions) by_id[p.id] = &p.labels;
      std::vector<LabelSequence> g, p;
      for (const auto& instance : gold.instances) {
        g.push_back(instance.gold_labels);
        p.push_back(*by_id.at(instance.id));
      }
      run = micro_corpus_score(g, p);
    }
    runs.push_back(run);
    const std::string name = o.preds.size() == 1 ? "instances.csv" : "instances_" + std::to_string(k) + ".csv";
    auto out = open_output(dir / name);
    write_instance_csv(out, scores);
    inv.manifest.outputs.push_back((dir / name).string());
  }
  const SeedAggregate aggregate = aggregate_seeds(runs);
  {
    auto out = open_output(dir / "summary.csv");
    write_summary_csv(out, aggregate);
    auto table = open_output(dir / "table.txt");
    table << render_comparison_table(o.system, aggregate, reference_rows());
  }
  inv.manifest.outputs.push_back((dir / "summary.csv").string());
  inv.manifest.outputs.push_back((dir / "table.txt").string());
  inv.manifest.config = {{"aggregate", o.aggregate}, {"micro", o.micro}, {"system", o.system}};
  inv.manifest.inputs = {o.gold};
  inv.manifest.inputs.insert(inv.manifest.inputs.end(), o.preds.begin(), o.preds.end());
  inv.finish(dir);
  std::cout << render_comparison_table(o.system, aggregate, o.aggregate ? reference_rows()
                                                                        : std::vector<ReferenceRow>{});
}

struct WorstOptions {
  std::string gold, pred, out;
  std::size_t k = 200;
  bool random = false;
  std::uint64_t seed = 0;
};

void cmd_worst(const WorstOptions& o, Invocation& inv) {
  inv.begin("worst");
  const Corpus gold = parse_corpus(input_path(o.gold), CorpusOrigin::kEval);
  const auto scores = score_file(gold, o.pred);
  const auto ids = o.random ? random_k(scores, o.k, o.seed) : worst_k(scores, o.k);
  auto out = open_output(o.out);
  for (const auto& id : ids) out << id << '\n';
  out.close();
  inv.manifest.config = {{"k", o.k}, {"sampling", o.random ? "random" : "worst"}};
  if (o.random) inv.manifest.seeds = {o.seed};
  inv.manifest.inputs = {o.gold, o.pred};
  inv.manifest.outputs = {o.out};
  inv.finish(fs::path(o.out));
  std::cout << "selected " << ids.size() << " ids ("
            << (o.random ? "random sample" : "lowest F1, intentionally biased") << ")\n";
}

std::vector<std::string> read_ids(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open id list " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ids.push_back(line);
  return ids;
}

struct TaskOptions {
  std::string corpus, pred, ids, system_id, out;
};

void cmd_task(const TaskOptions& o, Invocation& inv) {
  inv.begin("task");
  const Corpus corpus = parse_corpus(input_path(o.corpus), CorpusOrigin::kEval);
  const auto predictions = read_predictions(input_path(o.pred));
  const auto task = build_task(corpus, predictions, read_ids(input_path(o.ids)), o.system_id);
  ensure_parent(o.out);
  write_task(fs::path(o.out), task);
  inv.manifest.config = {{"system_id", o.system_id}, {"k", task.k()}};
  inv.manifest.inputs = {o.corpus, o.pred, o.ids};
  inv.manifest.outputs = {o.out};
  inv.finish(fs::path(o.out));
  std::cout << "task with " << task.k() << " rows for system " << o.system_id << '\n';
}

struct AnnotateOptions {
  std::string annotations, instance_id, system_id, grammatical = "true", informative = "true",
      annotator, timestamp;
  std::vector<std::string> error_types;
};

void cmd_annotate(const AnnotateOptions& o) {
  AnnotationRecord record;
  record.instance_id = o.instance_id;
  record.system_id = o.system_id;
  record.grammatical = parse_bool(o.grammatical);
  record.informative = parse_bool(o.informative);
  for (const auto& type : o.error_types) record.error_types.insert(parse_error_type(type));
  record.annotator = o.annotator;
  record.timestamp = o.timestamp.empty() ? now_rfc3339() : o.timestamp;
  const auto violations = validate_annotation(record);
  if (!violations.empty()) {
    std::string text;
    for (const auto& v : violations) text += (text.empty() ? "" : "; ") + v;
    throw DataError("invalid annotation: " + text);
  }
  const fs::path path = o.annotations.empty() ? data_dir() / "annotations.jsonl" : fs::path(o.annotations);
  ensure_parent(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw DataError("cannot append to " + path.string());
  out << annotation_to_json(record).dump() << '\n';
  out.flush();
  if (!out) throw DataError("annotation write failed");
  std::cout << "recorded " << record.instance_id << " for " << record.system_id << '\n';
}

std::vector<AnnotationRecord> system_records(const fs::path& path, const std::string& system_id) {
  const auto records = effective_annotations(read_annotations(path));
  std::set<std::string> systems;
  for (const auto& r : records) systems.insert(r.system_id);
  std::string wanted = system_id;
  if (wanted.empty()) {
    if (systems.size() > 1)
      throw UsageError(path.string() + " holds several systems; pass --system-id");
    if (systems.empty()) return {};
    wanted = *systems.begin();
  }
  std::vector<AnnotationRecord> selected;
  for (const auto& r : records)
    if (r.system_id == wanted) selected.push_back(r);
  return selected;
}

struct ReportOptions {
  std::string annotations, system_id, out_dir;
  bool audit = false;
};

void cmd_report(const ReportOptions& o, Invocation& inv) {
  inv.begin("report");
  const auto records = system_records(input_path(o.annotations), o.system_id);
  const GroundTruthAudit audit = audit_ground_truth(records);
  const ErrorDistribution& d = audit.distribution;
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_output(dir / "errors.csv");
    write_report_csv(out, d);
  }
  inv.manifest.config = {{"system_id", d.system_id}, {"audit", o.audit}};
  inv.manifest.inputs = {o.annotations};
  inv.manifest.outputs = {(dir / "errors.csv").string()};
  inv.finish(dir);
  std::cout << "system " << d.system_id << ": " << d.n << " annotations\n"
            << "  grammatical " << d.n_grammatical << " (" << d.percent(d.n_grammatical) << "%)\n"
            << "  informative " << d.n_informative << " (" << d.percent(d.n_informative) << "%)\n";
  if (o.audit)
    std::cout << "  grammatical and informative " << audit.both_correct << " ("
              << audit.both_correct_percent << "%)\n";
}

struct CompareOptions {
  std::string a, b, system_a, system_b, out;
};

void cmd_compare(const CompareOptions& o, Invocation& inv) {
  inv.begin("compare");
  const auto a = system_records(input_path(o.a), o.system_a);
  const auto b = system_records(input_path(o.b), o.system_b);
  const SystemComparison c = compare_systems(a, b);
  auto out = open_output(o.out);
  write_comparison_csv(out, c);
  out.close();
  inv.manifest.config = {{"system_a", o.system_a}, {"system_b", o.system_b}};
  inv.manifest.inputs = {o.a, o.b};
  inv.manifest.outputs = {o.out};
  inv.finish(fs::path(o.out));
  std::cout << "b relative to a\n"
            << "  grammaticality: improved " << c.grammaticality.improved << ", worsened "
            << c.grammaticality.worsened << ", unchanged " << c.grammaticality.unchanged << '\n'
            << "  informativeness: improved " << c.informativeness.improved << ", worsened "
            << c.informativeness.worsened << ", unchanged " << c.informativeness.unchanged << '\n';
}

struct ServeOptions {
  std::string task, annotations, host = "127.0.0.1";
  int port = 8080;
};

void cmd_serve(const ServeOptions& o) {
  const fs::path task_path = o.task.empty() ? data_dir() / "task.jsonl" : input_path(o.task);
  const fs::path annotation_path =
      o.annotations.empty() ? data_dir() / "annotations.jsonl" : fs::path(o.annotations);
  AnnotationService service(read_task(task_path), annotation_path);
  std::cout << "serving " << service.task().k() << " items on http://" << o.host << ':' << o.port
            << std::endl;
  serve(service, o.host, o.port);
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  auto number = [&](const std::string& part) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
      throw UsageError("invalid seed list '" + text + "'");
    return static_cast<std::uint64_t>(std::stoull(part));
  };
  const auto range = text.find("..");
  if (range != std::string::npos) {
    const auto first = number(text.substr(0, range));
    const auto last = number(text.substr(range + 2));
    if (last < first) throw UsageError("empty seed range '" + text + "'");
    for (auto s = first; s <= last; ++s) seeds.push_back(s);
    return seeds;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    seeds.push_back(number(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return seeds;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"compresslab: deletion-based sentence compression toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  Invocation inv;
  inv.argv = args;
  std::function<void()> action;

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  c_synth->add_option("--kind", synth.kind, "rule | markov")->capture_default_str();
  c_synth->add_option("--size", synth.size)->capture_default_str();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--noise", synth.noise, "Label flip rate (markov)")->capture_default_str();
  c_synth->add_flag("--no-positional", synth.no_positional, "Rule corpus without the positional part");
  c_synth->add_option("--prefix", synth.prefix, "Instance id prefix");
  c_synth->add_option("--out", synth.out)->required();
  c_synth->callback([&] { action = [&] { cmd_synth(synth, inv); }; });

  FilterOptions filter;
  auto* c_filter = app.add_subcommand("filter", "Filter training data by length and ratio rules");
  c_filter->add_option("--in", filter.in)->required();
  c_filter->add_option("--out", filter.out)->required();
  c_filter->add_option("--max-sentence-tokens", filter.rules.max_sentence_tokens)->capture_default_str();
  c_filter->add_option("--max-compression-tokens", filter.rules.max_compression_tokens)->capture_default_str();
  c_filter->add_option("--max-token-chars", filter.rules.max_token_chars)->capture_default_str();
  c_filter->add_option("--max-cr", filter.rules.max_cr)->capture_default_str();
  c_filter->callback([&] { action = [&] { cmd_filter(filter, inv); }; });

  StatsOptions stats;
  auto* c_stats = app.add_subcommand("stats", "Length and ratio distributions of a corpus");
  c_stats->add_option("--in", stats.in)->required();
  c_stats->add_option("--out-dir", stats.out_dir)->required();
  c_stats->add_flag("--svg", stats.svg, "Also render one SVG histogram per quantity");
  c_stats->add_option("--bin-sentence", stats.bins.sentence_tokens)->capture_default_str();
  c_stats->add_option("--bin-compression", stats.bins.compression_tokens)->capture_default_str();
  c_stats->add_option("--bin-token", stats.bins.token_chars)->capture_default_str();
  c_stats->add_option("--bin-cr", stats.bins.compression_ratio)->capture_default_str();
  c_stats->callback([&] { action = [&] { cmd_stats(stats, inv); }; });

  SplitOptions split;
  auto* c_split = app.add_subcommand("split", "Split evaluation data into test (head) and dev (rest)");
  c_split->add_option("--in", split.in)->required();
  c_split->add_option("--test-size", split.test_size)->capture_default_str();
  c_split->add_option("--test-out", split.test_out)->required();
  c_split->add_option("--dev-out", split.dev_out)->required();
  c_split->callback([&] { action = [&] { cmd_split(split, inv); }; });

  TrainOptions tr;
  auto* c_train = app.add_subcommand("train", "Train one labeler per seed");
  c_train->add_option("--train", tr.train)->required();
  c_train->add_option("--out-dir", tr.out_dir, "Default: $COMPRESSLAB_DATA_DIR/runs");
  c_train->add_option("--seeds", tr.seeds, "e.g. 0..9")->capture_default_str();
  c_train->add_option("--depth", tr.depth, "History depth 0|1|2")->capture_default_str();
  c_train->add_option("--scheme", tr.scheme, "standard | scheduled_sampling | teacher_forcing")
      ->capture_default_str();
  c_train->add_option("--epochs", tr.epochs)->capture_default_str();
  c_train->add_option("--batch-size", tr.batch_size)->capture_default_str();
  c_train->add_option("--lr", tr.lr)->capture_default_str();
  c_train->add_option("--hidden", tr.hidden)->capture_default_str();
  c_train->add_option("--layers", tr.layers)->capture_default_str();
  c_train->add_option("--max-length", tr.max_length)->capture_default_str();
  c_train->add_option("--ss-k", tr.ss_k, "Scheduled-sampling decay constant")->capture_default_str();
  c_train->add_option("--predict", tr.predict, "Corpus to predict with every trained seed");
  c_train->add_option("--mode", tr.mode, "Prediction mode for --predict")->capture_default_str();
  c_train->add_option("--jobs", tr.jobs, "Seeds trained concurrently")->capture_default_str();
  c_train->callback([&] { action = [&] { cmd_train(tr, inv); }; });

  PredictOptions pr;
  auto* c_predict = app.add_subcommand("predict", "Label a corpus with a trained model");
  c_predict->add_option("--model", pr.model)->required();
  c_predict->add_option("--in", pr.in)->required();
  c_predict->add_option("--out", pr.out)->required();
  c_predict->add_option("--mode", pr.mode, "free_running | teacher_forced")->capture_default_str();
  c_predict->callback([&] { action = [&] { cmd_predict(pr, inv); }; });

  EvalOptions ev;
  auto* c_eval = app.add_subcommand("eval", "Token F1 and compression ratio");
  c_eval->add_option("--gold", ev.gold)->required();
  c_eval->add_option("--pred", ev.preds, "Prediction file; repeat per seed")->required();
  c_eval->add_option("--out-dir", ev.out_dir)->required();
  c_eval->add_option("--system", ev.system, "Row name in the comparison table")->capture_default_str();
  c_eval->add_flag("--aggregate", ev.aggregate, "Mean and std across the --pred runs");
  c_eval->add_flag("--micro", ev.micro, "Pooled token counts instead of instance means");
  c_eval->callback([&] { action = [&] { cmd_eval(ev, inv); }; });

  WorstOptions wo;
  auto* c_worst = app.add_subcommand("worst", "Ids of the lowest-F1 instances");
  c_worst->add_option("--gold", wo.gold)->required();
  c_worst->add_option("--pred", wo.pred)->required();
  c_worst->add_option("--k", wo.k)->capture_default_str();
  c_worst->add_option("--out", wo.out)->required();
  c_worst->add_flag("--random", wo.random, "Uniform sample instead of worst-k");
  c_worst->add_option("--seed", wo.seed, "Seed for --random")->capture_default_str();
  c_worst->callback([&] { action = [&] { cmd_worst(wo, inv); }; });

  TaskOptions ta;
  auto* c_task = app.add_subcommand("task", "Build an annotation task");
  c_task->add_option("--corpus", ta.corpus)->required();
  c_task->add_option("--pred", ta.pred)->required();
  c_task->add_option("--ids", ta.ids)->required();
  c_task->add_option("--system-id", ta.system_id)->required();
  c_task->add_option("--out", ta.out)->required();
  c_task->callback([&] { action = [&] { cmd_task(ta, inv); }; });

  AnnotateOptions an;
  auto* c_annotate = app.add_subcommand("annotate", "Append one validated annotation record");
  c_annotate->add_option("--annotations", an.annotations, "Default: $COMPRESSLAB_DATA_DIR/annotations.jsonl");
  c_annotate->add_option("--instance-id", an.instance_id)->required();
  c_annotate->add_option("--system-id", an.system_id)->required();
  c_annotate->add_option("--grammatical", an.grammatical)->capture_default_str();
  c_annotate->add_option("--informative", an.informative)->capture_default_str();
  c_annotate->add_option("--error-types", an.error_types, "finish stitch rd_pron verb_miss info_miss p_pron mean_change i2");
  c_annotate->add_option("--annotator", an.annotator)->required();
  c_annotate->add_option("--timestamp", an.timestamp, "RFC 3339; default now");
  c_annotate->callback([&] { action = [&] { cmd_annotate(an); }; });

  ReportOptions re;
  auto* c_report = app.add_subcommand("report", "Error-type distribution of one system");
  c_report->add_option("--annotations", re.annotations)->required();
  c_report->add_option("--system-id", re.system_id);
  c_report->add_option("--out-dir", re.out_dir)->required();
  c_report->add_flag("--audit", re.audit, "Annotations judge the references; report joint correctness");
  c_report->callback([&] { action = [&] { cmd_report(re, inv); }; });

  CompareOptions co;
  auto* c_compare = app.add_subcommand("compare", "Improved/worsened counts of system b relative to a");
  c_compare->add_option("--a", co.a)->required();
  c_compare->add_option("--b", co.b)->required();
  c_compare->add_option("--system-a", co.system_a);
  c_compare->add_option("--system-b", co.system_b);
  c_compare->add_option("--out", co.out)->required();
  c_compare->callback([&] { action = [&] { cmd_compare(co, inv); }; });

  ServeOptions se;
  auto* c_serve = app.add_subcommand("serve", "HTTP backend for the annotation UI");
  c_serve->add_option("--task", se.task, "Default: $COMPRESSLAB_DATA_DIR/task.jsonl");
  c_serve->add_option("--annotations", se.annotations, "Default: $COMPRESSLAB_DATA_DIR/annotations.jsonl");
  c_serve->add_option("--port", se.port)->capture_default_str();
  c_serve->add_option("--host", se.host)->capture_default_str();
  c_serve->callback([&] { action = [&] { cmd_serve(se); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (action) action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc));
}

}  // namespace compresslab
