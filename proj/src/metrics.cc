#include "compresslab/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "compresslab/random.h"

namespace compresslab {
namespace {

std::size_t count_kept(const LabelSequence& labels) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::string fixed(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
  return buffer;
}

}  // namespace

TokenF1 token_f1(const LabelSequence& gold, const LabelSequence& pred) {
  if (gold.size() != pred.size())
    throw DataError("token_f1: gold has " + std::to_string(gold.size()) + " labels, prediction " +
                    std::to_string(pred.size()));
  std::size_t tp = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i] == 1 && pred[i] == 1) ++tp;
  const std::size_t kept_gold = count_kept(gold);
  const std::size_t kept_pred = count_kept(pred);
  if (kept_gold == 0 && kept_pred == 0) return {1.0, 1.0, 1.0};
  TokenF1 out;
  out.precision = kept_pred == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(kept_pred);
  out.recall = kept_gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(kept_gold);
  const double sum = out.precision + out.recall;
  out.f1 = sum == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / sum;
  return out;
}

double compression_ratio(const LabelSequence& pred) {
  if (pred.empty()) throw DataError("compression_ratio: empty label sequence");
  return static_cast<double>(count_kept(pred)) / static_cast<double>(pred.size());
}

InstanceScore score_instance(const std::string& id, const LabelSequence& gold,
                             const LabelSequence& pred) {
  const TokenF1 f = token_f1(gold, pred);
  return {id, f.precision, f.recall, f.f1, compression_ratio(pred)};
}

CorpusScore corpus_score(const std::vector<InstanceScore>& scores) {
  if (scores.empty()) throw DataError("corpus score of an empty prediction set");
  CorpusScore out;
  for (const auto& s : scores) {
    out.f1 += s.f1;
    out.cr += s.cr;
    out.precision += s.precision;
    out.recall += s.recall;
  }
  const double n = static_cast<double>(scores.size());
  out.f1 /= n;
  out.cr /= n;
  out.precision /= n;
  out.recall /= n;
  return out;
}

CorpusScore micro_corpus_score(const std::vector<LabelSequence>& gold,
                               const std::vector<LabelSequence>& pred) {
  if (gold.size() != pred.size() || gold.empty())
    throw DataError("micro score needs equally many, non-zero gold and predicted sequences");
  std::size_t tp = 0, kept_gold = 0, kept_pred = 0;
  double cr = 0.0;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (gold[k].size() != pred[k].size()) throw DataError("micro score: length mismatch");
    for (std::size_t i = 0; i < gold[k].size(); ++i)
      if (gold[k][i] == 1 && pred[k][i] == 1) ++tp;
    kept_gold += count_kept(gold[k]);
    kept_pred += count_kept(pred[k]);
    cr += compression_ratio(pred[k]);
  }
  CorpusScore out;
  out.cr = cr / static_cast<double>(gold.size());
  if (kept_gold == 0 && kept_pred == 0) {
    out.precision = out.recall = out.f1 = 1.0;
    return out;
  }
  out.precision = kept_pred == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(kept_pred);
  out.recall = kept_gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(kept_gold);
  const double sum = out.precision + out.recall;
  out.f1 = sum == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / sum;
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw DataError("mean/std of an empty sample");
  // Sorting first makes the result independent of input order, bit for bit.
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  const double mean = sum / n;
  double squares = 0.0;
  for (double v : sorted) squares += (v - mean) * (v - mean);
  return {mean, std::sqrt(squares / n)};
}

SeedAggregate aggregate_seeds(const std::vector<CorpusScore>& runs) {
  if (runs.empty()) throw DataError("aggregate_seeds: no runs");
  std::vector<double> f1, cr;
  for (const auto& run : runs) {
    f1.push_back(run.f1);
    cr.push_back(run.cr);
  }
  return {mean_std(f1), mean_std(cr), runs.size()};
}

std::vector<std::string> worst_k(const std::vector<InstanceScore>& scores, std::size_t k) {
  if (k > scores.size())
    throw DataError("worst_k: k=" + std::to_string(k) + " exceeds " +
                    std::to_string(scores.size()) + " scored instances");
  std::vector<const InstanceScore*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.push_back(&s);
  auto less = [](const InstanceScore* a, const InstanceScore* b) {
    if (a->f1 != b->f1) return a->f1 < b->f1;
    return a->id < b->id;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), less);
  std::vector<std::string> ids;
  ids.reserve(k);
  for (std::size_t i = 0; i < k; ++i) ids.push_back(order[i]->id);
  return ids;
}

std::vector<std::string> random_k(const std::vector<InstanceScore>& scores, std::size_t k,
                                  std::uint64_t seed) {
  if (k > scores.size())
    throw DataError("random_k: k=" + std::to_string(k) + " exceeds " +
                    std::to_string(scores.size()) + " scored instances");
  std::vector<std::string> ids;
  for (const auto& s : scores) ids.push_back(s.id);
  // Canonical order first so the sample depends only on the id set and seed.
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(ids.begin(), ids.end());
  ids.resize(k);
  return ids;
}

const std::vector<ReferenceRow>& reference_rows() {
  static const std::vector<ReferenceRow> rows = {
      {"Evaluator-LM", 0.851, 0.39}, {"BiLSTM", 0.800, 0.43}, {"LSTM", 0.820, 0.38},
      {"SLAHAN", 0.855, 0.407},      {"BertUni", 0.857, 0.413}};
  return rows;
}

std::vector<InstanceScore> score_predictions(const Corpus& gold,
                                             const std::vector<std::string>& pred_ids,
                                             const std::vector<LabelSequence>& pred_labels) {
  if (pred_ids.size() != pred_labels.size())
    throw DataError("score_predictions: ids and label sequences differ in number");
  std::map<std::string, const LabelSequence*> by_id;
  for (std::size_t k = 0; k < pred_ids.size(); ++k)
    if (!by_id.emplace(pred_ids[k], &pred_labels[k]).second)
      throw DataError("duplicate prediction id=" + pred_ids[k]);
  std::vector<InstanceScore> scores;
  scores.reserve(gold.size());
  for (const auto& instance : gold.instances) {
    auto it = by_id.find(instance.id);
    if (it == by_id.end()) throw DataError("no prediction for id=" + instance.id);
    if (it->second->size() != instance.size())
      throw DataError("label/token length mismatch, id=" + instance.id);
    scores.push_back(score_instance(instance.id, instance.gold_labels, *it->second));
  }
  return scores;
}

void write_instance_csv(std::ostream& out, const std::vector<InstanceScore>& scores) {
  out << "id,precision,recall,f1,cr\n";
  for (const auto& s : scores)
    out << s.id << ',' << fixed(s.precision, 6) << ',' << fixed(s.recall, 6) << ','
        << fixed(s.f1, 6) << ',' << fixed(s.cr, 6) << '\n';
}

void write_summary_csv(std::ostream& out, const SeedAggregate& aggregate) {
  out << "metric,mean,std,n_seeds\n";
  out << "f1," << fixed(aggregate.f1.mean, 6) << ',' << fixed(aggregate.f1.std, 6) << ','
      << aggregate.seeds << '\n';
  out << "cr," << fixed(aggregate.cr.mean, 6) << ',' << fixed(aggregate.cr.std, 6) << ','
      << aggregate.seeds << '\n';
}

std::string render_comparison_table(const std::string& system, const SeedAggregate& aggregate,
                                    const std::vector<ReferenceRow>& references) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %-16s %-16s %s\n", "system", "F1", "CR", "source");
  out << line;
  const std::string f1 = fixed(aggregate.f1.mean, 3) + " +- " + fixed(aggregate.f1.std, 3);
  const std::string cr = fixed(aggregate.cr.mean, 3) + " +- " + fixed(aggregate.cr.std, 3);
  std::snprintf(line, sizeof(line), "%-16s %-16s %-16s %s\n", system.c_str(), f1.c_str(),
                cr.c_str(), ("this run, n_seeds=" + std::to_string(aggregate.seeds)).c_str());
  out << line;
  for (const auto& row : references) {
    std::snprintf(line, sizeof(line), "%-16s %-16s %-16s %s\n", row.system.c_str(),
                  fixed(row.f1, 3).c_str(), fixed(row.cr, 3).c_str(), "published reference");
    out << line;
  }
  return out.str();
}

}  // namespace compresslab
