#ifndef COMPRESSLAB_LABELER_H_
#define COMPRESSLAB_LABELER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "compresslab/corpus.h"
#include "compresslab/tensor.h"

namespace compresslab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TrainScheme { kStandard, kScheduledSampling, kTeacherForcing };
enum class PredictMode { kFreeRunning, kTeacherForced };

const char* scheme_name(TrainScheme scheme);
TrainScheme parse_scheme(const std::string& name);
const char* mode_name(PredictMode mode);
PredictMode parse_mode(const std::string& name);

// Number of most recently retained tokens fed to the scoring head:
// 0 = Uni, 1 = Bi, 2 = Tri.
struct HistoryConfig {
  int depth = 0;
  void validate() const;
};

struct EncoderConfig {
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t max_length = 128;
  void validate() const;
};

struct TrainConfig {
  TrainScheme scheme = TrainScheme::kStandard;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  // Decay constant of the scheduled-sampling schedule.
  double ss_k = 5.0;

  void validate(const HistoryConfig& history) const;
};

// Probability of feeding the gold decision into the history at a given
// epoch under scheduled sampling: k / (k - 1 + exp(epoch / k)). Starts at
// 1 and decays monotonically towards 0.
double sampling_probability(std::size_t epoch, double k);

// 1 iff score >= 0.5. Throws for scores outside [0, 1].
int decide(double score);

double logistic(double x);

class Vocabulary {
 public:
  static constexpr std::size_t kUnknown = 0;
  static constexpr const char* kUnknownToken = "<unk>";

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);
  static Vocabulary build(const Corpus& corpus);

  std::size_t id(const std::string& token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t> index_;
};

using TokenScores = std::vector<double>;

struct Prediction {
  std::string id;
  LabelSequence labels;
  TokenScores scores;
};

// rows[slot][i]: encoder row feeding history slot `slot` at position i, i.e.
// the slot-th most recently retained position before i. Missing slots point
// at sentinel rows n + slot.
std::vector<std::vector<std::size_t>> history_rows(const LabelSequence& decisions, int depth);

// Token encoder (embeddings + learned positions + attention blocks) followed
// by a logistic scoring head over [v_i; retained-history vectors].
class LabelerModel {
 public:
  LabelerModel(Vocabulary vocabulary, EncoderConfig encoder, HistoryConfig history,
               std::uint64_t seed);

  // Contextual vectors, one per token, each of size hidden.
  std::vector<std::vector<double>> encode(const CorpusInstance& instance) const;

  // Score of one token given the history vectors (exactly depth of them).
  double score_token(std::span<const double> vector,
                     std::span<const std::vector<double>> history) const;

  // Left-to-right decoding; the history buffer follows the model's own
  // decisions (free running) or the gold labels (teacher forced).
  Prediction predict(const CorpusInstance& instance, PredictMode mode) const;

  // Picks the decision that enters the history at position i, given the
  // model's own decision there.
  using HistorySource = std::function<int(std::size_t position, int model_label)>;

  // Sequential scoring over precomputed encoder vectors. The returned
  // prediction has no id.
  Prediction decode(std::span<const std::vector<double>> vectors,
                    const HistorySource& history_label) const;

  // Graph-building pieces used by training and gradient checks.
  Var encode_graph(Graph& graph, const CorpusInstance& instance);
  Var encode_graph(Graph& graph, const CorpusInstance& instance) const;
  Var score_graph(Graph& graph, Var encoded, const LabelSequence& history_decisions);
  Var score_graph(Graph& graph, Var encoded, const LabelSequence& history_decisions) const;
  // Mean BCE of the scores against gold labels with history from the given decisions.
  Var loss_graph(Graph& graph, const CorpusInstance& instance,
                 const LabelSequence& history_decisions);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  const Vocabulary& vocabulary() const { return vocabulary_; }
  const EncoderConfig& encoder_config() const { return encoder_; }
  const HistoryConfig& history() const { return history_; }
  std::uint64_t seed() const { return seed_; }

  // Free-form record of how the model was trained, echoed into checkpoints.
  std::string train_echo;

  void save(const std::filesystem::path& path) const;
  void save(std::ostream& out) const;
  static LabelerModel load(const std::filesystem::path& path);
  static LabelerModel load(std::istream& in);

 private:
  std::vector<std::size_t> token_ids(const CorpusInstance& instance) const;
  std::string config_json() const;

  template <typename Self>
  static Var encode_impl(Self& self, Graph& graph, const CorpusInstance& instance);
  template <typename Self>
  static Var score_impl(Self& self, Graph& graph, Var encoded,
                        const LabelSequence& history_decisions);

  Vocabulary vocabulary_;
  EncoderConfig encoder_;
  HistoryConfig history_;
  std::uint64_t seed_;

  Parameter token_embedding_;
  Parameter position_embedding_;
  std::vector<AttentionBlock> blocks_;
  Parameter sentinel_;  // [depth, hidden]; unused for depth 0
  Parameter head_weight_;
  Parameter head_bias_;
};

struct TrainLog {
  std::vector<double> epoch_loss;
  std::vector<double> gold_history_probability;
};

LabelerModel train(const Corpus& corpus, const TrainConfig& config, const HistoryConfig& history,
                   const EncoderConfig& encoder = {}, TrainLog* log = nullptr);

// Output order follows corpus order.
std::vector<Prediction> predict_corpus(const LabelerModel& model, const Corpus& corpus,
                                       PredictMode mode);

// Line-delimited {"id", "labels", "scores"} records.
void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions);
void write_predictions(const std::filesystem::path& path,
                       const std::vector<Prediction>& predictions);
std::vector<Prediction> read_predictions(std::istream& in);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

}  // namespace compresslab

#endif  // COMPRESSLAB_LABELER_H_
