#ifndef COMPRESSLAB_CORPUS_H_
#define COMPRESSLAB_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace compresslab {

// Raised for malformed input files and violated data invariants.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Binary keep/delete mask; 1 means the token survives in the compression.
using LabelSequence = std::vector<int>;

struct CorpusInstance {
  std::string id;
  std::vector<std::string> tokens;
  // Empty when the instance was read without gold annotation.
  LabelSequence gold_labels;

  bool has_gold() const { return !gold_labels.empty(); }
  std::size_t size() const { return tokens.size(); }
  std::size_t kept() const;
};

enum class CorpusOrigin { kTrain, kEval, kSynthetic };

const char* origin_name(CorpusOrigin origin);
CorpusOrigin parse_origin(const std::string& name);

struct Corpus {
  std::vector<CorpusInstance> instances;
  CorpusOrigin origin = CorpusOrigin::kSynthetic;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
};

// Checks the per-record invariants. Throws DataError naming the id.
void validate_instance(const CorpusInstance& instance, bool require_labels = true);

CorpusInstance parse_instance(const std::string& line, bool require_labels = true);
std::string format_instance(const CorpusInstance& instance);

// Reads the line-delimited corpus format. Errors carry the 1-based line number.
Corpus parse_corpus(std::istream& in, CorpusOrigin origin = CorpusOrigin::kSynthetic,
                    bool require_labels = true);
Corpus parse_corpus(const std::filesystem::path& path,
                    CorpusOrigin origin = CorpusOrigin::kSynthetic,
                    bool require_labels = true);

void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(const std::string& text);

struct FilterRules {
  std::size_t max_sentence_tokens = 50;
  std::size_t max_compression_tokens = 17;
  std::size_t max_token_chars = 15;
  double max_cr = 0.85;

  void validate() const;
};

enum class FilterRule { kSentenceLength, kCompressionLength, kTokenLength, kCompressionRatio };

struct FilterResult {
  Corpus kept;
  // Per-rule, non-exclusive: an instance failing two rules counts in both.
  std::map<FilterRule, std::size_t> rejections;
  std::size_t rejected_instances = 0;
};

const char* rule_name(FilterRule rule);

// Rules that the instance violates; empty when it passes all four.
std::vector<FilterRule> failed_rules(const CorpusInstance& instance, const FilterRules& rules);

FilterResult filter_train(const Corpus& corpus, const FilterRules& rules = {});

struct EvalSplit {
  Corpus test;
  Corpus dev;
};

// First test_size instances form the test set, the remainder the dev set.
EvalSplit split_eval(const Corpus& corpus, std::size_t test_size = 1000);

struct BinSpec {
  double sentence_tokens = 5.0;
  double compression_tokens = 2.0;
  double token_chars = 1.0;
  double compression_ratio = 0.05;
};

enum class StatQuantity { kSentenceLength, kCompressionLength, kTokenLength, kCompressionRatio };

const char* quantity_name(StatQuantity quantity);

struct Histogram {
  double width = 1.0;
  // Bin index (floor(value / width)) to count.
  std::map<long, std::size_t> bins;

  std::size_t total() const;
  double bin_lo(long index) const { return static_cast<double>(index) * width; }
  double bin_hi(long index) const { return static_cast<double>(index + 1) * width; }
};

struct StatsReport {
  std::map<StatQuantity, Histogram> histograms;
  std::map<StatQuantity, double> medians;
};

// Even-sized samples use the mean of the middle pair.
double median(std::vector<double> values);

long bin_index(double value, double width);

StatsReport compute_stats(const Corpus& corpus, const BinSpec& bins = {});

void write_stats_csv(std::ostream& out, const StatsReport& report);
void write_medians_csv(std::ostream& out, const StatsReport& report);
std::string render_histogram_svg(StatQuantity quantity, const Histogram& histogram,
                                 double median_value);

std::string realize_compression(const CorpusInstance& instance, const LabelSequence& labels);

}  // namespace compresslab

#endif  // COMPRESSLAB_CORPUS_H_
