#include "support.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <cstdio>

#include <unistd.h>

#include "compresslab/random.h"

namespace compresslab::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static int counter = 0;
  path_ = fs::temp_directory_path() /
          ("compresslab_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

OracleF1 oracle_f1(const std::vector<int>& gold, const std::vector<int>& pred) {
  int both = 0, kept_gold = 0, kept_pred = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == 1) ++kept_gold;
    if (pred[i] == 1) ++kept_pred;
    if (gold[i] == 1 && pred[i] == 1) ++both;
  }
  if (kept_gold == 0 && kept_pred == 0) return {1.0, 1.0, 1.0};
  const double p = kept_pred == 0 ? 0.0 : double(both) / kept_pred;
  const double r = kept_gold == 0 ? 0.0 : double(both) / kept_gold;
  return {p, r, p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r)};
}

double oracle_cr(const std::vector<int>& pred) {
  int kept = 0;
  for (int label : pred) kept += label;
  return double(kept) / double(pred.size());
}

std::vector<AnnotationRecord> annotation_set(const std::string& system_id, std::size_t n,
                                             const std::vector<bool>& grammatical,
                                             const std::vector<bool>& informative) {
  static const ErrorType g_types[] = {ErrorType::kFinish, ErrorType::kStitch, ErrorType::kRdPron,
                                      ErrorType::kVerbMiss};
  static const ErrorType i_types[] = {ErrorType::kInfoMiss, ErrorType::kPPron,
                                      ErrorType::kMeanChange};
  std::vector<AnnotationRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    AnnotationRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "dev-%03zu", i);
    r.instance_id = id;
    r.system_id = system_id;
    r.grammatical = grammatical[i];
    r.informative = informative[i];
    if (!r.grammatical) {
      r.error_types.insert(g_types[i % 4]);
      if (i % 5 == 0) r.error_types.insert(g_types[(i / 5) % 4]);
    }
    if (!r.informative) r.error_types.insert(i_types[i % 3]);
    if (r.grammatical && r.informative && i % 4 == 1) r.error_types.insert(ErrorType::kI2);
    r.annotator = "annotator-1";
    r.timestamp = "2026-03-02T09:30:00Z";
    records.push_back(r);
  }
  return records;
}

namespace {

// i -> 7i mod 200 is a bijection, so informativeness is spread across the
// grammatical split instead of nesting inside it.
std::size_t mix(std::size_t i) { return (i * 7) % 200; }

std::vector<bool> pattern(std::size_t n, const auto& predicate) {
  std::vector<bool> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = predicate(i);
  return out;
}

}  // namespace

std::vector<AnnotationRecord> uni_fixture() {
  return annotation_set("bert_uni", 200, pattern(200, [](std::size_t i) { return i < 146; }),
                        pattern(200, [](std::size_t i) { return mix(i) < 105; }));
}

std::vector<AnnotationRecord> tf_fixture() {
  return annotation_set("bert_bi_tf", 200, pattern(200, [](std::size_t i) { return i < 44; }),
                        pattern(200, [](std::size_t i) { return mix(i) < 41; }));
}

std::vector<AnnotationRecord> reference_fixture() {
  return annotation_set(
      "reference", 200, pattern(200, [](std::size_t i) { return i < 63 || (i >= 100 && i < 150); }),
      pattern(200, [](std::size_t i) { return i < 63 || i >= 170; }));
}

std::pair<std::vector<AnnotationRecord>, std::vector<AnnotationRecord>> comparison_fixture() {
  auto b = annotation_set(
      "bert_bi_tf_aligned", 200,
      pattern(200, [](std::size_t i) { return i < 146 ? i < 31 : i < 146 + 13; }),
      pattern(200, [](std::size_t i) { return mix(i) < 105 ? mix(i) < 27 : mix(i) < 105 + 15; }));
  return {uni_fixture(), std::move(b)};
}

CorpusInstance random_instance(Rng& rng, std::size_t length, const std::string& id) {
  CorpusInstance instance;
  instance.id = id;
  for (std::size_t i = 0; i < length; ++i) {
    instance.tokens.push_back("x" + std::to_string(rng.below(10)));
    instance.gold_labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  return instance;
}

GradCheck labeler_gradcheck(std::uint64_t seed, int depth, double eps) {
  Rng rng(seed * 7919 + 17);
  const CorpusInstance instance = random_instance(rng, 6 + rng.below(7), "g");
  Corpus corpus;
  corpus.instances = {instance};
  LabelerModel model(Vocabulary::build(corpus), EncoderConfig{8, 2, 16}, HistoryConfig{depth}, seed);
  // Perturb the freshly initialised model so layer-norm gains and biases are
  // not at their symmetric starting point.
  for (Parameter* p : model.parameters())
    for (double& v : p->value.values()) v += 0.1 * rng.normal();

  for (Parameter* p : model.parameters()) p->zero_grad();
  {
    Graph graph;
    Var loss = model.loss_graph(graph, instance, instance.gold_labels);
    graph.backward(loss);
  }
  auto loss_at = [&] {
    Graph graph(false);
    return graph.value(model.loss_graph(graph, instance, instance.gold_labels))[0];
  };

  GradCheck result;
  for (Parameter* p : model.parameters()) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + eps;
      const double up = loss_at();
      p->value[i] = saved - eps;
      const double down = loss_at();
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p->grad[i];
      const double error = std::abs(analytic - numeric) /
                           std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      ++result.entries;
      if (error > result.max_relative_error) {
        result.max_relative_error = error;
        result.worst_parameter = p->name;
      }
    }
  }
  return result;
}

}  // namespace compresslab::testing
