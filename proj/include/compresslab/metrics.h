#ifndef COMPRESSLAB_METRICS_H_
#define COMPRESSLAB_METRICS_H_

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "compresslab/corpus.h"

namespace compresslab {

struct InstanceScore {
  std::string id;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double cr = 0.0;
};

struct TokenF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Precision/recall over kept positions. Degenerate cases: empty prediction
// gives precision 0, empty gold gives recall 0, p + r == 0 gives f1 0, and
// both empty gives f1 1 (with p = r = 1).
TokenF1 token_f1(const LabelSequence& gold, const LabelSequence& pred);

// Kept tokens over all tokens.
double compression_ratio(const LabelSequence& pred);

InstanceScore score_instance(const std::string& id, const LabelSequence& gold,
                             const LabelSequence& pred);

struct CorpusScore {
  double f1 = 0.0;
  double cr = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Macro average of per-instance values. With micro set, precision, recall
// and f1 come from pooled token counts instead; cr stays the instance mean.
CorpusScore corpus_score(const std::vector<InstanceScore>& scores);
CorpusScore micro_corpus_score(const std::vector<LabelSequence>& gold,
                               const std::vector<LabelSequence>& pred);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation (divisor N)
};

MeanStd mean_std(const std::vector<double>& values);

struct SeedAggregate {
  MeanStd f1;
  MeanStd cr;
  std::size_t seeds = 0;
};

SeedAggregate aggregate_seeds(const std::vector<CorpusScore>& runs);

// Ids of the k lowest-F1 instances, ascending by (f1, id).
std::vector<std::string> worst_k(const std::vector<InstanceScore>& scores, std::size_t k);

// k ids drawn uniformly without replacement, in sampled order.
std::vector<std::string> random_k(const std::vector<InstanceScore>& scores, std::size_t k,
                                  std::uint64_t seed);

struct ReferenceRow {
  std::string system;
  double f1;
  double cr;
};

// Published test-set results, shipped for report rendering only.
const std::vector<ReferenceRow>& reference_rows();

struct MetricReport {
  std::vector<InstanceScore> instances;
  CorpusScore corpus;
  SeedAggregate seeds;
  std::vector<ReferenceRow> references;
};

// Aligns predictions to gold by id; every gold id needs a prediction.
std::vector<InstanceScore> score_predictions(const Corpus& gold,
                                             const std::vector<std::string>& pred_ids,
                                             const std::vector<LabelSequence>& pred_labels);

void write_instance_csv(std::ostream& out, const std::vector<InstanceScore>& scores);
void write_summary_csv(std::ostream& out, const SeedAggregate& aggregate);
// Plain-text comparison table: this system's mean +- std row followed by the reference rows.
std::string render_comparison_table(const std::string& system, const SeedAggregate& aggregate,
                                    const std::vector<ReferenceRow>& references);

}  // namespace compresslab

#endif  // COMPRESSLAB_METRICS_H_
