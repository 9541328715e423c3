#include "compresslab/labeler.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "compresslab/checkpoint.h"
#include "compresslab/random.h"
#include "json.hpp"

namespace compresslab {

using nlohmann::json;

const char* scheme_name(TrainScheme scheme) {
  switch (scheme) {
    case TrainScheme::kStandard: return "standard";
    case TrainScheme::kScheduledSampling: return "scheduled_sampling";
    case TrainScheme::kTeacherForcing: return "teacher_forcing";
  }
  return "?";
}

TrainScheme parse_scheme(const std::string& name) {
  if (name == "standard") return TrainScheme::kStandard;
  if (name == "scheduled_sampling") return TrainScheme::kScheduledSampling;
  if (name == "teacher_forcing") return TrainScheme::kTeacherForcing;
  throw ConfigError("unknown training scheme '" + name + "'");
}

const char* mode_name(PredictMode mode) {
  return mode == PredictMode::kFreeRunning ? "free_running" : "teacher_forced";
}

PredictMode parse_mode(const std::string& name) {
  if (name == "free_running") return PredictMode::kFreeRunning;
  if (name == "teacher_forced") return PredictMode::kTeacherForced;
  throw ConfigError("unknown prediction mode '" + name + "'");
}

void HistoryConfig::validate() const {
  if (depth < 0 || depth > 2)
    throw ConfigError("history depth must be 0, 1 or 2, got " + std::to_string(depth));
}

void EncoderConfig::validate() const {
  if (hidden == 0) throw ConfigError("hidden size must be positive");
  if (max_length == 0) throw ConfigError("max length must be positive");
}

void TrainConfig::validate(const HistoryConfig& history) const {
  history.validate();
  if (scheme != TrainScheme::kStandard && history.depth < 1)
    throw ConfigError(std::string(scheme_name(scheme)) + " requires history depth >= 1");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(ss_k >= 1.0)) throw ConfigError("scheduled-sampling k must be >= 1");
}

double sampling_probability(std::size_t epoch, double k) {
  if (!(k >= 1.0)) throw ConfigError("scheduled-sampling k must be >= 1");
  return k / (k - 1.0 + std::exp(static_cast<double>(epoch) / k));
}

int decide(double score) {
  if (!(score >= 0.0 && score <= 1.0))
    throw NumericError("decision score outside [0, 1]: " + std::to_string(score));
  return score >= 0.5 ? 1 : 0;
}

double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_.push_back(kUnknownToken);
  index_[kUnknownToken] = kUnknown;
  for (auto& token : tokens) {
    if (index_.count(token)) continue;
    index_[token] = tokens_.size();
    tokens_.push_back(std::move(token));
  }
}

Vocabulary Vocabulary::build(const Corpus& corpus) {
  std::vector<std::string> tokens;
  for (const auto& instance : corpus.instances)
    tokens.insert(tokens.end(), instance.tokens.begin(), instance.tokens.end());
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return Vocabulary(std::move(tokens));
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknown : it->second;
}

// ---------------------------------------------------------------------------
// Model

std::vector<std::vector<std::size_t>> history_rows(const LabelSequence& decisions, int depth) {
  const std::size_t n = decisions.size();
  std::vector<std::vector<std::size_t>> rows(static_cast<std::size_t>(depth),
                                             std::vector<std::size_t>(n));
  std::vector<std::size_t> retained;  // most recent last
  for (std::size_t i = 0; i < n; ++i) {
    for (int slot = 0; slot < depth; ++slot) {
      const auto s = static_cast<std::size_t>(slot);
      rows[s][i] = s < retained.size() ? retained[retained.size() - 1 - s] : n + s;
    }
    if (decisions[i] == 1) retained.push_back(i);
  }
  return rows;
}

LabelerModel::LabelerModel(Vocabulary vocabulary, EncoderConfig encoder, HistoryConfig history,
                           std::uint64_t seed)
    : vocabulary_(std::move(vocabulary)), encoder_(encoder), history_(history), seed_(seed) {
  encoder_.validate();
  history_.validate();
  Rng rng(seed);
  const std::size_t h = encoder_.hidden;
  token_embedding_ = Parameter("encoder.token_embedding",
                               random_normal({vocabulary_.size(), h}, 1.0, rng));
  position_embedding_ = Parameter("encoder.position_embedding",
                                  random_normal({encoder_.max_length, h}, 1.0, rng));
  for (std::size_t layer = 0; layer < encoder_.layers; ++layer)
    blocks_.emplace_back("encoder.block" + std::to_string(layer), h, rng);
  const auto depth = static_cast<std::size_t>(history_.depth);
  if (depth > 0) sentinel_ = Parameter("head.sentinel", random_normal({depth, h}, 1.0, rng));
  const std::size_t features = (1 + depth) * h;
  head_weight_ = Parameter("head.weight", random_normal({features, 1},
                                                         1.0 / std::sqrt(static_cast<double>(features)), rng));
  head_bias_ = Parameter("head.bias", Tensor({1}, 0.0));
}

std::vector<Parameter*> LabelerModel::parameters() {
  std::vector<Parameter*> params = {&token_embedding_, &position_embedding_};
  for (auto& block : blocks_)
    for (Parameter* p : block.parameters()) params.push_back(p);
  if (history_.depth > 0) params.push_back(&sentinel_);
  params.push_back(&head_weight_);
  params.push_back(&head_bias_);
  return params;
}

std::vector<const Parameter*> LabelerModel::parameters() const {
  std::vector<const Parameter*> params = {&token_embedding_, &position_embedding_};
  for (const auto& block : blocks_)
    for (const Parameter* p : block.parameters()) params.push_back(p);
  if (history_.depth > 0) params.push_back(&sentinel_);
  params.push_back(&head_weight_);
  params.push_back(&head_bias_);
  return params;
}

std::vector<std::size_t> LabelerModel::token_ids(const CorpusInstance& instance) const {
  if (instance.tokens.empty()) throw DataError("cannot encode an empty sentence, id=" + instance.id);
  if (instance.tokens.size() > encoder_.max_length)
    throw DataError("sentence of " + std::to_string(instance.tokens.size()) +
                    " tokens exceeds max length " + std::to_string(encoder_.max_length) +
                    ", id=" + instance.id);
  std::vector<std::size_t> ids;
  ids.reserve(instance.tokens.size());
  for (const auto& token : instance.tokens) ids.push_back(vocabulary_.id(token));
  return ids;
}

template <typename Self>
Var LabelerModel::encode_impl(Self& self, Graph& graph, const CorpusInstance& instance) {
  const auto ids = self.token_ids(instance);
  std::vector<std::size_t> positions(ids.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  Var x = graph.add(graph.embed(self.token_embedding_, ids),
                    graph.embed(self.position_embedding_, positions));
  for (auto& block : self.blocks_) x = block.forward(graph, x);
  return x;
}

template <typename Self>
Var LabelerModel::score_impl(Self& self, Graph& graph, Var encoded,
                             const LabelSequence& history_decisions) {
  const std::size_t n = graph.value(encoded).rows();
  if (history_decisions.size() != n)
    throw ShapeError("history decisions length " + std::to_string(history_decisions.size()) +
                     " does not match sentence length " + std::to_string(n));
  std::vector<Var> features = {encoded};
  if (self.history_.depth > 0) {
    const Var rows[] = {encoded, graph.param(self.sentinel_)};
    Var pool = graph.concat_rows(rows);
    for (const auto& slot : history_rows(history_decisions, self.history_.depth))
      features.push_back(graph.gather_rows(pool, slot));
  }
  Var joined = features.size() == 1 ? encoded : graph.concat_cols(features);
  return graph.sigmoid(
      graph.linear(joined, graph.param(self.head_weight_), graph.param(self.head_bias_)));
}

Var LabelerModel::encode_graph(Graph& graph, const CorpusInstance& instance) {
  return encode_impl(*this, graph, instance);
}
Var LabelerModel::encode_graph(Graph& graph, const CorpusInstance& instance) const {
  return encode_impl(*this, graph, instance);
}
Var LabelerModel::score_graph(Graph& graph, Var encoded, const LabelSequence& history_decisions) {
  return score_impl(*this, graph, encoded, history_decisions);
}
Var LabelerModel::score_graph(Graph& graph, Var encoded,
                              const LabelSequence& history_decisions) const {
  return score_impl(*this, graph, encoded, history_decisions);
}

Var LabelerModel::loss_graph(Graph& graph, const CorpusInstance& instance,
                             const LabelSequence& history_decisions) {
  if (!instance.has_gold()) throw DataError("training instance without gold labels, id=" + instance.id);
  Var scores = score_graph(graph, encode_graph(graph, instance), history_decisions);
  const std::size_t n = instance.size();
  Tensor labels({n, 1});
  for (std::size_t i = 0; i < n; ++i) labels[i] = instance.gold_labels[i];
  return graph.bce_loss(scores, labels, Tensor({n, 1}, 1.0));
}

std::vector<std::vector<double>> LabelerModel::encode(const CorpusInstance& instance) const {
  Graph graph(false);
  const Tensor& out = graph.value(encode_graph(graph, instance));
  std::vector<std::vector<double>> vectors(out.rows());
  for (std::size_t i = 0; i < out.rows(); ++i)
    vectors[i].assign(out.values().begin() + static_cast<std::ptrdiff_t>(i * out.cols()),
                      out.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * out.cols()));
  return vectors;
}

double LabelerModel::score_token(std::span<const double> vector,
                                 std::span<const std::vector<double>> history) const {
  const std::size_t h = encoder_.hidden;
  if (history.size() != static_cast<std::size_t>(history_.depth))
    throw ShapeError("history has " + std::to_string(history.size()) + " vectors, depth is " +
                     std::to_string(history_.depth));
  if (vector.size() != h) throw ShapeError("token vector has wrong size");
  // Same accumulation order as the graph head, so both paths agree bitwise.
  double acc = 0.0;
  for (std::size_t j = 0; j < h; ++j) acc += vector[j] * head_weight_.value[j];
  for (std::size_t slot = 0; slot < history.size(); ++slot) {
    if (history[slot].size() != h) throw ShapeError("history vector has wrong size");
    for (std::size_t j = 0; j < h; ++j) acc += history[slot][j] * head_weight_.value[(slot + 1) * h + j];
  }
  return logistic(acc + head_bias_.value[0]);
}

Prediction LabelerModel::decode(std::span<const std::vector<double>> vectors,
                                const HistorySource& history_label) const {
  const auto depth = static_cast<std::size_t>(history_.depth);
  const std::size_t h = encoder_.hidden;
  std::vector<std::vector<double>> sentinels(depth);
  for (std::size_t s = 0; s < depth; ++s)
    sentinels[s].assign(sentinel_.value.values().begin() + static_cast<std::ptrdiff_t>(s * h),
                        sentinel_.value.values().begin() + static_cast<std::ptrdiff_t>((s + 1) * h));

  Prediction out;
  std::vector<std::size_t> retained;
  std::vector<std::vector<double>> history(depth);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t s = 0; s < depth; ++s)
      history[s] = s < retained.size() ? vectors[retained[retained.size() - 1 - s]] : sentinels[s];
    const double score = score_token(vectors[i], history);
    const int label = decide(score);
    out.scores.push_back(score);
    out.labels.push_back(label);
    if (history_label(i, label) == 1) retained.push_back(i);
  }
  return out;
}

Prediction LabelerModel::predict(const CorpusInstance& instance, PredictMode mode) const {
  const bool forced = mode == PredictMode::kTeacherForced;
  if (forced && !instance.has_gold())
    throw DataError("teacher-forced prediction needs gold labels, id=" + instance.id);
  if (instance.has_gold()) validate_instance(instance);
  const auto vectors = encode(instance);
  Prediction out = decode(vectors, [&](std::size_t i, int label) {
    return forced ? instance.gold_labels[i] : label;
  });
  out.id = instance.id;
  return out;
}

std::string LabelerModel::config_json() const {
  json config = {{"format", "compresslab-labeler"},
                 {"encoder",
                  {{"hidden", encoder_.hidden},
                   {"layers", encoder_.layers},
                   {"max_length", encoder_.max_length}}},
                 {"history", {{"depth", history_.depth}}},
                 {"seed", seed_},
                 {"vocabulary", vocabulary_.tokens()}};
  if (!train_echo.empty()) config["train"] = json::parse(train_echo);
  return config.dump();
}

void LabelerModel::save(std::ostream& out) const {
  const auto params = parameters();
  write_checkpoint(out, config_json(), params);
}

void LabelerModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericError("cannot write checkpoint " + path.string());
  save(out);
}

LabelerModel LabelerModel::load(std::istream& in) {
  const CheckpointContents contents = read_checkpoint(in);
  json config;
  try {
    config = json::parse(contents.config);
  } catch (const json::parse_error& e) {
    throw NumericError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  if (config.value("format", "") != "compresslab-labeler")
    throw NumericError("checkpoint is not a labeler model");
  auto tokens = config.at("vocabulary").get<std::vector<std::string>>();
  if (tokens.empty() || tokens.front() != Vocabulary::kUnknownToken)
    throw NumericError("checkpoint vocabulary is malformed");
  tokens.erase(tokens.begin());
  EncoderConfig encoder;
  encoder.hidden = config.at("encoder").at("hidden").get<std::size_t>();
  encoder.layers = config.at("encoder").at("layers").get<std::size_t>();
  encoder.max_length = config.at("encoder").at("max_length").get<std::size_t>();
  HistoryConfig history{config.at("history").at("depth").get<int>()};
  LabelerModel model(Vocabulary(std::move(tokens)), encoder, history,
                     config.at("seed").get<std::uint64_t>());
  if (config.contains("train")) model.train_echo = config["train"].dump();
  assign_parameters(contents, model.parameters());
  return model;
}

LabelerModel LabelerModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericError("cannot open checkpoint " + path.string());
  return load(in);
}

// ---------------------------------------------------------------------------
// Training

namespace {

// History decisions for scheduled sampling: per position, the gold label
// with probability p, otherwise the model's own decision given the history
// built so far.
LabelSequence sampled_history(const LabelerModel& model, const Tensor& encoded,
                              const CorpusInstance& instance, double gold_probability,
                              Rng& rng) {
  const std::size_t h = encoded.cols();
  std::vector<std::vector<double>> vectors(encoded.rows());
  for (std::size_t i = 0; i < vectors.size(); ++i)
    vectors[i].assign(encoded.values().begin() + static_cast<std::ptrdiff_t>(i * h),
                      encoded.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * h));
  LabelSequence decisions(vectors.size(), 0);
  model.decode(vectors, [&](std::size_t i, int label) {
    decisions[i] = rng.bernoulli(gold_probability) ? instance.gold_labels[i] : label;
    return decisions[i];
  });
  return decisions;
}

json train_echo_json(const TrainConfig& config, const HistoryConfig& history) {
  return {{"scheme", scheme_name(config.scheme)},
          {"epochs", config.epochs},
          {"batch_size", config.batch_size},
          {"learning_rate", config.learning_rate},
          {"seed", config.seed},
          {"ss_k", config.ss_k},
          {"depth", history.depth}};
}

}  // namespace

LabelerModel train(const Corpus& corpus, const TrainConfig& config, const HistoryConfig& history,
                   const EncoderConfig& encoder, TrainLog* log) {
  config.validate(history);
  encoder.validate();
  if (corpus.empty()) throw DataError("cannot train on an empty corpus");
  for (const auto& instance : corpus.instances) {
    validate_instance(instance);
    if (instance.size() > encoder.max_length)
      throw DataError("training sentence exceeds max length, id=" + instance.id);
  }

  LabelerModel model(Vocabulary::build(corpus), encoder, history, config.seed);
  model.train_echo = train_echo_json(config, history).dump();
  Adam optimizer(model.parameters(), AdamConfig{config.learning_rate});
  // Separate stream from initialisation so data order does not depend on model size.
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto params = model.parameters();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double gold_probability = config.scheme == TrainScheme::kScheduledSampling
                                        ? sampling_probability(epoch, config.ss_k)
                                        : 1.0;
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (std::size_t k = start; k < stop; ++k) {
        const CorpusInstance& instance = corpus.instances[order[k]];
        Graph graph;
        Var encoded = model.encode_graph(graph, instance);
        LabelSequence decisions = instance.gold_labels;
        if (config.scheme == TrainScheme::kScheduledSampling && history.depth > 0)
          decisions = sampled_history(model, graph.value(encoded), instance, gold_probability, rng);
        Var scores = model.score_graph(graph, encoded, decisions);
        const std::size_t n = instance.size();
        Tensor labels({n, 1});
        for (std::size_t i = 0; i < n; ++i) labels[i] = instance.gold_labels[i];
        Var loss = graph.bce_loss(scores, labels, Tensor({n, 1}, 1.0));
        graph.backward(loss);
        epoch_loss += graph.value(loss)[0];
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (Parameter* p : params)
        for (double& g : p->grad.values()) g *= inv;
      optimizer.step(true);
    }
    if (log) {
      log->epoch_loss.push_back(epoch_loss / static_cast<double>(corpus.size()));
      log->gold_history_probability.push_back(gold_probability);
    }
  }
  return model;
}

std::vector<Prediction> predict_corpus(const LabelerModel& model, const Corpus& corpus,
                                       PredictMode mode) {
  std::vector<Prediction> predictions;
  predictions.reserve(corpus.size());
  for (const auto& instance : corpus.instances) predictions.push_back(model.predict(instance, mode));
  return predictions;
}

// ---------------------------------------------------------------------------
// Prediction files

void write_predictions(std::ostream& out, const std::vector<Prediction>& predictions) {
  for (const auto& p : predictions)
    out << json{{"id", p.id}, {"labels", p.labels}, {"scores", p.scores}}.dump() << '\n';
}

void write_predictions(const std::filesystem::path& path,
                       const std::vector<Prediction>& predictions) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write predictions " + path.string());
  write_predictions(out, predictions);
}

std::vector<Prediction> read_predictions(std::istream& in) {
  std::vector<Prediction> predictions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.empty()) throw DataError(where + "blank line");
    try {
      json record = json::parse(line);
      Prediction p;
      p.id = record.at("id").get<std::string>();
      p.labels = record.at("labels").get<LabelSequence>();
      if (record.contains("scores")) p.scores = record.at("scores").get<TokenScores>();
      for (int label : p.labels)
        if (label != 0 && label != 1) throw DataError("label outside {0,1}, id=" + p.id);
      if (!p.scores.empty() && p.scores.size() != p.labels.size())
        throw DataError("score/label length mismatch, id=" + p.id);
      predictions.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw DataError(where + "malformed prediction record: " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return predictions;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions " + path.string());
  try {
    return read_predictions(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace compresslab
