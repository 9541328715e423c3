#ifndef COMPRESSLAB_SYNTHETIC_H_
#define COMPRESSLAB_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "compresslab/corpus.h"

namespace compresslab {

// Deterministic keep rule: capitalized tokens are kept (lexical part) and,
// when positional is set, so are the first and last position.
struct RuleCorpusOptions {
  std::size_t size = 2000;
  std::size_t min_length = 5;
  std::size_t max_length = 20;
  std::size_t names = 20;
  std::size_t words = 60;
  double capitalized_rate = 0.3;
  bool positional = true;
  std::uint64_t seed = 0;
  std::string id_prefix = "rule";
};

Corpus make_rule_corpus(const RuleCorpusOptions& options);

// Labels come from a left-to-right process that depends on the class of the
// last retained token. Triggers (@...) are always kept; content words (w...)
// and closers (E...) are kept only while a run is open, i.e. when the last
// retained token is a trigger or a content word. A kept closer ends the run.
// Each label is flipped with probability noise before the process moves on,
// so a flip changes every later label that depends on it.
struct MarkovCorpusOptions {
  std::size_t size = 2000;
  std::size_t min_length = 10;
  std::size_t max_length = 24;
  std::size_t triggers = 4;
  std::size_t words = 40;
  std::size_t closers = 4;
  double trigger_rate = 0.12;
  double closer_rate = 0.15;
  double noise = 0.10;
  std::uint64_t seed = 0;
  std::string id_prefix = "markov";
};

Corpus make_markov_corpus(const MarkovCorpusOptions& options);

// The noise-free Markov rule applied to a token sequence.
LabelSequence markov_rule_labels(const std::vector<std::string>& tokens);

}  // namespace compresslab

#endif  // COMPRESSLAB_SYNTHETIC_H_
