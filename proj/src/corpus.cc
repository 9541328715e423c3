#include "compresslab/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace compresslab {

using nlohmann::json;

std::size_t CorpusInstance::kept() const {
  return static_cast<std::size_t>(std::count(gold_labels.begin(), gold_labels.end(), 1));
}

const char* origin_name(CorpusOrigin origin) {
  switch (origin) {
    case CorpusOrigin::kTrain: return "train";
    case CorpusOrigin::kEval: return "eval";
    case CorpusOrigin::kSynthetic: return "synthetic";
  }
  return "synthetic";
}

CorpusOrigin parse_origin(const std::string& name) {
  if (name == "train") return CorpusOrigin::kTrain;
  if (name == "eval") return CorpusOrigin::kEval;
  if (name == "synthetic") return CorpusOrigin::kSynthetic;
  throw DataError("unknown corpus origin '" + name + "'");
}

void validate_instance(const CorpusInstance& instance, bool require_labels) {
  if (instance.id.empty()) throw DataError("empty instance id");
  if (instance.tokens.empty()) throw DataError("empty sentence, id=" + instance.id);
  if (!instance.has_gold()) {
    if (require_labels) throw DataError("missing gold labels, id=" + instance.id);
    return;
  }
  if (instance.gold_labels.size() != instance.tokens.size())
    throw DataError("label/token length mismatch, id=" + instance.id);
  for (int label : instance.gold_labels)
    if (label != 0 && label != 1)
      throw DataError("label outside {0,1}, id=" + instance.id);
}

CorpusInstance parse_instance(const std::string& line, bool require_labels) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed record: ") + e.what());
  }
  if (!record.is_object()) throw DataError("record is not an object");
  CorpusInstance instance;
  auto id = record.find("id");
  if (id == record.end() || !id->is_string()) throw DataError("missing string field 'id'");
  instance.id = id->get<std::string>();
  auto tokens = record.find("tokens");
  if (tokens == record.end() || !tokens->is_array())
    throw DataError("missing array field 'tokens', id=" + instance.id);
  for (const auto& token : *tokens) {
    if (!token.is_string()) throw DataError("non-string token, id=" + instance.id);
    instance.tokens.push_back(token.get<std::string>());
  }
  auto labels = record.find("gold_labels");
  if (labels != record.end()) {
    if (!labels->is_array()) throw DataError("'gold_labels' is not an array, id=" + instance.id);
    for (const auto& label : *labels) {
      if (!label.is_number_integer())
        throw DataError("non-integer label, id=" + instance.id);
      instance.gold_labels.push_back(label.get<int>());
    }
    if (instance.gold_labels.empty() && !instance.tokens.empty())
      throw DataError("label/token length mismatch, id=" + instance.id);
  }
  validate_instance(instance, require_labels);
  return instance;
}

std::string format_instance(const CorpusInstance& instance) {
  nlohmann::ordered_json record = {{"id", instance.id}, {"tokens", instance.tokens}};
  if (instance.has_gold()) record["gold_labels"] = instance.gold_labels;
  return record.dump();
}

Corpus parse_corpus(std::istream& in, CorpusOrigin origin, bool require_labels) {
  Corpus corpus;
  corpus.origin = origin;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw DataError("line " + std::to_string(line_no) + ": blank line");
    CorpusInstance instance;
    try {
      instance = parse_instance(line, require_labels);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(instance.id).second)
      throw DataError("line " + std::to_string(line_no) + ": duplicate id=" + instance.id);
    corpus.instances.push_back(std::move(instance));
  }
  return corpus;
}

Corpus parse_corpus(const std::filesystem::path& path, CorpusOrigin origin,
                    bool require_labels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  try {
    return parse_corpus(in, origin, require_labels);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& instance : corpus.instances) out << format_instance(instance) << '\n';
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  write_corpus(out, corpus);
}

std::size_t utf8_length(const std::string& text) {
  std::size_t count = 0;
  for (unsigned char c : text)
    if ((c & 0xC0) != 0x80) ++count;
  return count;
}

void FilterRules::validate() const {
  if (max_sentence_tokens == 0 || max_compression_tokens == 0 || max_token_chars == 0)
    throw DataError("filter thresholds must be strictly positive");
  if (!(max_cr > 0.0 && max_cr <= 1.0)) throw DataError("max_cr must lie in (0, 1]");
}

const char* rule_name(FilterRule rule) {
  switch (rule) {
    case FilterRule::kSentenceLength: return "sentence_length";
    case FilterRule::kCompressionLength: return "compression_length";
    case FilterRule::kTokenLength: return "token_length";
    case FilterRule::kCompressionRatio: return "compression_ratio";
  }
  return "?";
}

std::vector<FilterRule> failed_rules(const CorpusInstance& instance, const FilterRules& rules) {
  std::vector<FilterRule> failed;
  const std::size_t n = instance.size();
  const std::size_t kept = instance.kept();
  if (n > rules.max_sentence_tokens) failed.push_back(FilterRule::kSentenceLength);
  if (kept > rules.max_compression_tokens) failed.push_back(FilterRule::kCompressionLength);
  std::size_t longest = 0;
  for (const auto& token : instance.tokens) longest = std::max(longest, utf8_length(token));
  if (longest > rules.max_token_chars) failed.push_back(FilterRule::kTokenLength);
  if (static_cast<double>(kept) / static_cast<double>(n) > rules.max_cr)
    failed.push_back(FilterRule::kCompressionRatio);
  return failed;
}

FilterResult filter_train(const Corpus& corpus, const FilterRules& rules) {
  if (corpus.origin == CorpusOrigin::kEval)
    throw DataError("filter_train applies to training data only; evaluation data stays unfiltered");
  rules.validate();
  FilterResult result;
  result.kept.origin = corpus.origin;
  for (FilterRule rule : {FilterRule::kSentenceLength, FilterRule::kCompressionLength,
                          FilterRule::kTokenLength, FilterRule::kCompressionRatio})
    result.rejections[rule] = 0;
  for (const auto& instance : corpus.instances) {
    validate_instance(instance);
    auto failed = failed_rules(instance, rules);
    if (failed.empty()) {
      result.kept.instances.push_back(instance);
      continue;
    }
    ++result.rejected_instances;
    for (FilterRule rule : failed) ++result.rejections[rule];
  }
  return result;
}

EvalSplit split_eval(const Corpus& corpus, std::size_t test_size) {
  if (corpus.origin == CorpusOrigin::kTrain)
    throw DataError("split_eval expects an evaluation corpus, got training data");
  if (corpus.size() < test_size)
    throw DataError("eval corpus has " + std::to_string(corpus.size()) +
                    " instances, fewer than test size " + std::to_string(test_size));
  EvalSplit split;
  split.test.origin = corpus.origin;
  split.dev.origin = corpus.origin;
  auto middle = corpus.instances.begin() + static_cast<std::ptrdiff_t>(test_size);
  split.test.instances.assign(corpus.instances.begin(), middle);
  split.dev.instances.assign(middle, corpus.instances.end());
  return split;
}

const char* quantity_name(StatQuantity quantity) {
  switch (quantity) {
    case StatQuantity::kSentenceLength: return "sentence_tokens";
    case StatQuantity::kCompressionLength: return "compression_tokens";
    case StatQuantity::kTokenLength: return "token_chars";
    case StatQuantity::kCompressionRatio: return "compression_ratio";
  }
  return "?";
}

std::size_t Histogram::total() const {
  std::size_t sum = 0;
  for (const auto& [index, count] : bins) sum += count;
  return sum;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

long bin_index(double value, double width) {
  // Slack absorbs representation error such as 0.85 / 0.05 = 16.999...
  return static_cast<long>(std::floor(value / width + 1e-9));
}

StatsReport compute_stats(const Corpus& corpus, const BinSpec& bins) {
  if (corpus.empty()) throw DataError("statistics of an empty corpus");
  for (double width : {bins.sentence_tokens, bins.compression_tokens, bins.token_chars,
                       bins.compression_ratio})
    if (!(width > 0.0)) throw DataError("bin widths must be strictly positive");

  std::map<StatQuantity, std::vector<double>> samples;
  for (const auto& instance : corpus.instances) {
    validate_instance(instance);
    const double n = static_cast<double>(instance.size());
    const double kept = static_cast<double>(instance.kept());
    samples[StatQuantity::kSentenceLength].push_back(n);
    samples[StatQuantity::kCompressionLength].push_back(kept);
    samples[StatQuantity::kCompressionRatio].push_back(kept / n);
    for (const auto& token : instance.tokens)
      samples[StatQuantity::kTokenLength].push_back(static_cast<double>(utf8_length(token)));
  }

  const std::map<StatQuantity, double> widths = {
      {StatQuantity::kSentenceLength, bins.sentence_tokens},
      {StatQuantity::kCompressionLength, bins.compression_tokens},
      {StatQuantity::kTokenLength, bins.token_chars},
      {StatQuantity::kCompressionRatio, bins.compression_ratio}};

  StatsReport report;
  for (auto& [quantity, values] : samples) {
    Histogram histogram;
    histogram.width = widths.at(quantity);
    for (double value : values) ++histogram.bins[bin_index(value, histogram.width)];
    report.histograms[quantity] = std::move(histogram);
    report.medians[quantity] = median(std::move(values));
  }
  return report;
}

void write_stats_csv(std::ostream& out, const StatsReport& report) {
  out << "quantity,bin_lo,bin_hi,count\n";
  for (const auto& [quantity, histogram] : report.histograms)
    for (const auto& [index, count] : histogram.bins)
      out << quantity_name(quantity) << ',' << histogram.bin_lo(index) << ','
          << histogram.bin_hi(index) << ',' << count << '\n';
}

void write_medians_csv(std::ostream& out, const StatsReport& report) {
  out << "quantity,median\n";
  for (const auto& [quantity, value] : report.medians)
    out << quantity_name(quantity) << ',' << value << '\n';
}

std::string render_histogram_svg(StatQuantity quantity, const Histogram& histogram,
                                 double median_value) {
  constexpr int kWidth = 480, kHeight = 240, kMargin = 30;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\">\n";
  svg << "<text x=\"" << kMargin << "\" y=\"16\" font-size=\"12\">" << quantity_name(quantity)
      << " (median " << median_value << ")</text>\n";
  if (!histogram.bins.empty()) {
    const long first = histogram.bins.begin()->first;
    const long last = histogram.bins.rbegin()->first;
    const double span = static_cast<double>(last - first + 1);
    std::size_t peak = 0;
    for (const auto& [index, count] : histogram.bins) peak = std::max(peak, count);
    const double bar_width = (kWidth - 2 * kMargin) / span;
    const double plot_height = kHeight - 2 * kMargin;
    for (const auto& [index, count] : histogram.bins) {
      const double h = plot_height * static_cast<double>(count) / static_cast<double>(peak);
      svg << std::fixed << std::setprecision(2) << "<rect x=\""
          << kMargin + bar_width * static_cast<double>(index - first) << "\" y=\""
          << kHeight - kMargin - h << "\" width=\"" << bar_width * 0.9 << "\" height=\"" << h
          << "\" fill=\"steelblue\"/>\n";
    }
    const double median_x =
        kMargin + bar_width * (median_value / histogram.width - static_cast<double>(first));
    svg << "<line x1=\"" << median_x << "\" x2=\"" << median_x << "\" y1=\"" << kMargin
        << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"firebrick\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string realize_compression(const CorpusInstance& instance, const LabelSequence& labels) {
  if (labels.size() != instance.tokens.size())
    throw DataError("label/token length mismatch, id=" + instance.id);
  std::string text;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1) continue;
    if (!text.empty()) text += ' ';
    text += instance.tokens[i];
  }
  return text;
}

}  // namespace compresslab
