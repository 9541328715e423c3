#include "compresslab/synthetic.h"

#include "compresslab/random.h"

namespace compresslab {
namespace {

enum class MarkovClass { kTrigger, kContent, kCloser };

MarkovClass classify(const std::string& token) {
  if (!token.empty() && token[0] == '@') return MarkovClass::kTrigger;
  if (!token.empty() && token[0] == 'E') return MarkovClass::kCloser;
  return MarkovClass::kContent;
}

int markov_decision(MarkovClass current, bool run_open) {
  if (current == MarkovClass::kTrigger) return 1;
  return run_open ? 1 : 0;
}

bool opens_run(MarkovClass retained) { return retained != MarkovClass::kCloser; }

std::string make_id(const std::string& prefix, std::size_t index) {
  return prefix + "-" + std::to_string(index);
}

}  // namespace

Corpus make_rule_corpus(const RuleCorpusOptions& options) {
  if (options.min_length == 0 || options.min_length > options.max_length)
    throw DataError("rule corpus: invalid length range");
  if (options.names == 0 || options.words == 0)
    throw DataError("rule corpus: empty vocabulary");
  Rng rng(options.seed);
  Corpus corpus;
  corpus.origin = CorpusOrigin::kSynthetic;
  const std::size_t span = options.max_length - options.min_length + 1;
  for (std::size_t k = 0; k < options.size; ++k) {
    CorpusInstance instance;
    instance.id = make_id(options.id_prefix, k);
    const std::size_t n = options.min_length + rng.below(span);
    for (std::size_t i = 0; i < n; ++i) {
      const bool capitalized = rng.bernoulli(options.capitalized_rate);
      if (capitalized)
        instance.tokens.push_back("Name" + std::to_string(rng.below(options.names)));
      else
        instance.tokens.push_back("word" + std::to_string(rng.below(options.words)));
      const bool edge = options.positional && (i == 0 || i + 1 == n);
      instance.gold_labels.push_back(capitalized || edge ? 1 : 0);
    }
    corpus.instances.push_back(std::move(instance));
  }
  return corpus;
}

LabelSequence markov_rule_labels(const std::vector<std::string>& tokens) {
  LabelSequence labels;
  bool run_open = false;
  for (const auto& token : tokens) {
    const MarkovClass current = classify(token);
    const int label = markov_decision(current, run_open);
    if (label == 1) run_open = opens_run(current);
    labels.push_back(label);
  }
  return labels;
}

Corpus make_markov_corpus(const MarkovCorpusOptions& options) {
  if (options.min_length == 0 || options.min_length > options.max_length)
    throw DataError("markov corpus: invalid length range");
  if (options.triggers == 0 || options.words == 0 || options.closers == 0)
    throw DataError("markov corpus: empty vocabulary");
  if (options.noise < 0.0 || options.noise > 1.0)
    throw DataError("markov corpus: noise must lie in [0, 1]");
  Rng rng(options.seed);
  Corpus corpus;
  corpus.origin = CorpusOrigin::kSynthetic;
  const std::size_t span = options.max_length - options.min_length + 1;
  for (std::size_t k = 0; k < options.size; ++k) {
    CorpusInstance instance;
    instance.id = make_id(options.id_prefix, k);
    const std::size_t n = options.min_length + rng.below(span);
    bool run_open = false;
    for (std::size_t i = 0; i < n; ++i) {
      const double draw = rng.uniform();
      MarkovClass current;
      std::string token;
      if (draw < options.trigger_rate) {
        current = MarkovClass::kTrigger;
        token = "@t" + std::to_string(rng.below(options.triggers));
      } else if (draw < options.trigger_rate + options.closer_rate) {
        current = MarkovClass::kCloser;
        token = "E" + std::to_string(rng.below(options.closers));
      } else {
        current = MarkovClass::kContent;
        token = "w" + std::to_string(rng.below(options.words));
      }
      int label = markov_decision(current, run_open);
      if (rng.bernoulli(options.noise)) label = 1 - label;
      if (label == 1) run_open = opens_run(current);
      instance.tokens.push_back(std::move(token));
      instance.gold_labels.push_back(label);
    }
    corpus.instances.push_back(std::move(instance));
  }
  return corpus;
}

}  // namespace compresslab
