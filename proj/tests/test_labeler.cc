#include <cmath>
#include <sstream>

#include "compresslab/labeler.h"
#include "compresslab/metrics.h"
#include "compresslab/random.h"
#include "compresslab/synthetic.h"
#include "doctest.h"
#include "support.h"

using namespace compresslab;

namespace {

const EncoderConfig kSmall{16, 2, 64};

Corpus small_rule_corpus(std::size_t size, std::uint64_t seed) {
  RuleCorpusOptions options;
  options.size = size;
  options.seed = seed;
  return make_rule_corpus(options);
}

LabelerModel untrained(const Corpus& corpus, int depth, std::uint64_t seed = 0) {
  return LabelerModel(Vocabulary::build(corpus), kSmall, HistoryConfig{depth}, seed);
}

}  // namespace

TEST_CASE("decide threshold is inclusive") {
  CHECK(decide(0.5) == 1);
  CHECK(decide(0.4999) == 0);
  CHECK(decide(1.0) == 1);
  CHECK(decide(0.0) == 0);
  CHECK_THROWS_AS(decide(1.0001), NumericError);
  CHECK_THROWS_AS(decide(-0.1), NumericError);
  CHECK_THROWS_AS(decide(std::nan("")), NumericError);
  int previous = 0;
  for (int k = 0; k <= 1000; ++k) {
    const int d = decide(k / 1000.0);
    CHECK(d >= previous);
    previous = d;
  }
}

TEST_CASE("config validation") {
  TrainConfig config;
  config.scheme = TrainScheme::kScheduledSampling;
  CHECK_THROWS_AS(config.validate(HistoryConfig{0}), ConfigError);
  config.scheme = TrainScheme::kTeacherForcing;
  CHECK_THROWS_AS(config.validate(HistoryConfig{0}), ConfigError);
  CHECK_NOTHROW(config.validate(HistoryConfig{1}));
  CHECK_THROWS_AS(HistoryConfig{3}.validate(), ConfigError);
  CHECK_THROWS_AS(HistoryConfig{-1}.validate(), ConfigError);
  CHECK(parse_scheme("scheduled_sampling") == TrainScheme::kScheduledSampling);
  CHECK(parse_mode("teacher_forced") == PredictMode::kTeacherForced);
  CHECK_THROWS_AS(parse_mode("beam"), ConfigError);
}

TEST_CASE("scheduled sampling schedule starts at one and decays") {
  for (double k : {1.0, 2.0, 5.0, 10.0}) {
    CHECK(sampling_probability(0, k) == 1.0);
    double previous = 1.0;
    for (std::size_t e = 1; e < 200; ++e) {
      const double p = sampling_probability(e, k);
      CHECK(p <= previous);
      CHECK(p >= 0.0);
      previous = p;
    }
    CHECK(previous < 0.01);
  }
}

TEST_CASE("vocabulary") {
  Corpus corpus;
  corpus.instances = {CorpusInstance{"a", {"b", "a", "b"}, {1, 0, 1}}};
  const Vocabulary v = Vocabulary::build(corpus);
  CHECK(v.size() == 3);
  CHECK(v.id("a") == 1);
  CHECK(v.id("b") == 2);
  CHECK(v.id("zzz") == Vocabulary::kUnknown);
}

TEST_CASE("history rows follow retained tokens") {
  // sentinels are n + slot with n = 5
  const auto rows = history_rows({1, 0, 1, 1, 0}, 2);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::size_t>{5, 0, 0, 2, 3});
  CHECK(rows[1] == std::vector<std::size_t>{6, 6, 6, 0, 2});
  CHECK(history_rows({1, 1}, 0).empty());
}

TEST_CASE("encode shape, determinism and position sensitivity") {
  const Corpus corpus = small_rule_corpus(20, 1);
  const LabelerModel model = untrained(corpus, 0);
  CorpusInstance one{"one", {corpus.instances[0].tokens[0]}, {1}};
  const auto v = model.encode(one);
  REQUIRE(v.size() == 1);
  CHECK(v[0].size() == kSmall.hidden);

  const CorpusInstance& instance = corpus.instances[3];
  CHECK(model.encode(instance) == model.encode(instance));

  CorpusInstance same_token{"p", {"Name1", "Name1", "Name1"}, {1, 1, 1}};
  const auto rows = model.encode(same_token);
  CHECK(rows[0] != rows[1]);

  CorpusInstance reversed = instance;
  std::reverse(reversed.tokens.begin(), reversed.tokens.end());
  CHECK(model.encode(reversed) != model.encode(instance));

  CorpusInstance too_long{"long", std::vector<std::string>(kSmall.max_length + 1, "w1"),
                          LabelSequence(kSmall.max_length + 1, 0)};
  CHECK_THROWS_AS(model.encode(too_long), DataError);
}

TEST_CASE("score_token history handling") {
  const Corpus corpus = small_rule_corpus(20, 2);
  const LabelerModel uni = untrained(corpus, 0);
  const LabelerModel bi = untrained(corpus, 1);
  const auto v = bi.encode(corpus.instances[0]);
  const std::vector<std::vector<double>> none;
  const double s0 = uni.score_token(v[0], none);
  CHECK(s0 >= 0.0);
  CHECK(s0 <= 1.0);
  CHECK_THROWS(uni.score_token(v[0], std::vector<std::vector<double>>{v[1]}));
  CHECK_THROWS(bi.score_token(v[0], none));

  const double with_first = bi.score_token(v[2], std::vector<std::vector<double>>{v[0]});
  const double with_second = bi.score_token(v[2], std::vector<std::vector<double>>{v[1]});
  CHECK(with_first != with_second);

  // first position of a depth-1 prediction uses the sentinel and stays in [0,1]
  const Prediction p = bi.predict(corpus.instances[0], PredictMode::kFreeRunning);
  CHECK(p.scores[0] >= 0.0);
  CHECK(p.scores[0] <= 1.0);
}

TEST_CASE("graph and direct scoring agree") {
  const Corpus corpus = small_rule_corpus(10, 3);
  for (int depth : {0, 1, 2}) {
    const LabelerModel model = untrained(corpus, depth, 7);
    for (const auto& instance : corpus.instances) {
      const Prediction p = model.predict(instance, PredictMode::kTeacherForced);
      Graph graph(false);
      const Var scores =
          model.score_graph(graph, model.encode_graph(graph, instance), instance.gold_labels);
      for (std::size_t i = 0; i < instance.size(); ++i) CHECK(graph.value(scores)[i] == p.scores[i]);
    }
  }
}

TEST_CASE("prediction modes") {
  const Corpus corpus = small_rule_corpus(30, 4);
  const LabelerModel uni = untrained(corpus, 0, 1);
  for (const auto& instance : corpus.instances) {
    const Prediction fr = uni.predict(instance, PredictMode::kFreeRunning);
    const Prediction tf = uni.predict(instance, PredictMode::kTeacherForced);
    CHECK(fr.labels == tf.labels);
    CHECK(fr.scores == tf.scores);
  }

  const LabelerModel bi = untrained(corpus, 1, 1);
  std::size_t differing = 0;
  for (const auto& instance : corpus.instances) {
    const Prediction fr = bi.predict(instance, PredictMode::kFreeRunning);
    // gold equal to the model's own decisions: both modes coincide
    CorpusInstance agreed = instance;
    agreed.gold_labels = fr.labels;
    const Prediction tf = bi.predict(agreed, PredictMode::kTeacherForced);
    CHECK(tf.labels == fr.labels);
    CHECK(tf.scores == fr.scores);
    differing += bi.predict(instance, PredictMode::kTeacherForced).scores != fr.scores;
  }
  CHECK(differing > 0);

  CorpusInstance unlabeled{"u", corpus.instances[0].tokens, {}};
  CHECK_THROWS_AS(bi.predict(unlabeled, PredictMode::kTeacherForced), DataError);
  CHECK_NOTHROW(bi.predict(unlabeled, PredictMode::kFreeRunning));
}

TEST_CASE("forced history flips: depth 0 is independent, depth 1 is not") {
  const Corpus corpus = small_rule_corpus(10, 5);
  const CorpusInstance& instance = corpus.instances[0];
  for (int depth : {0, 1}) {
    const LabelerModel model = untrained(corpus, depth, 3);
    const auto vectors = model.encode(instance);
    const std::size_t j = 1;
    auto run = [&](int forced) {
      return model.decode(vectors, [&](std::size_t i, int label) { return i == j ? forced : label; });
    };
    const Prediction keep = run(1);
    const Prediction drop = run(0);
    bool downstream_changed = false;
    for (std::size_t i = 0; i < instance.size(); ++i) {
      if (i <= j) CHECK(keep.scores[i] == drop.scores[i]);
      else downstream_changed |= keep.scores[i] != drop.scores[i];
    }
    CHECK(downstream_changed == (depth > 0));
  }
}

TEST_CASE("predict_corpus equals the per-instance loop") {
  const Corpus corpus = small_rule_corpus(3, 6);
  const LabelerModel model = untrained(corpus, 2, 2);
  CHECK(predict_corpus(model, Corpus{}, PredictMode::kFreeRunning).empty());
  const auto all = predict_corpus(model, corpus, PredictMode::kFreeRunning);
  REQUIRE(all.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const Prediction p = model.predict(corpus.instances[i], PredictMode::kFreeRunning);
    CHECK(all[i].id == corpus.instances[i].id);
    CHECK(all[i].labels == p.labels);
    CHECK(all[i].scores == p.scores);
  }
}

TEST_CASE("full labeler gradient check") {
  for (int depth : {0, 1, 2}) {
    const auto check = compresslab::testing::labeler_gradcheck(11, depth);
    INFO("depth " << depth << " worst " << check.worst_parameter);
    CHECK(check.max_relative_error < 1e-4);
  }
}

TEST_CASE("training: loss decreases, seeds reproduce, checkpoints round-trip") {
  const Corpus corpus = small_rule_corpus(200, 7);
  TrainConfig config;
  config.epochs = 5;
  TrainLog log;
  const LabelerModel a = train(corpus, config, HistoryConfig{0}, kSmall, &log);
  REQUIRE(log.epoch_loss.size() == 5);
  for (std::size_t e = 1; e < 5; ++e) CHECK(log.epoch_loss[e] < log.epoch_loss[e - 1]);

  const LabelerModel b = train(corpus, config, HistoryConfig{0}, kSmall);
  std::stringstream sa, sb;
  a.save(sa);
  b.save(sb);
  CHECK(sa.str() == sb.str());

  config.seed = 1;
  std::stringstream sc;
  train(corpus, config, HistoryConfig{0}, kSmall).save(sc);
  CHECK(sc.str() != sa.str());

  const LabelerModel loaded = LabelerModel::load(sa);
  CHECK(loaded.train_echo == a.train_echo);
  for (const auto& instance : corpus.instances) {
    const Prediction before = a.predict(instance, PredictMode::kFreeRunning);
    const Prediction after = loaded.predict(instance, PredictMode::kFreeRunning);
    CHECK(before.scores == after.scores);
  }
}

TEST_CASE("history schemes train") {
  MarkovCorpusOptions options;
  options.size = 120;
  const Corpus corpus = make_markov_corpus(options);
  for (TrainScheme scheme :
       {TrainScheme::kStandard, TrainScheme::kTeacherForcing, TrainScheme::kScheduledSampling}) {
    TrainConfig config;
    config.scheme = scheme;
    config.epochs = 3;
    TrainLog log;
    const LabelerModel model = train(corpus, config, HistoryConfig{1}, kSmall, &log);
    CHECK(log.epoch_loss.back() < log.epoch_loss.front());
    if (scheme == TrainScheme::kScheduledSampling) {
      CHECK(log.gold_history_probability[0] == 1.0);
      CHECK(log.gold_history_probability[2] < 1.0);
    } else {
      CHECK(log.gold_history_probability[2] == 1.0);
    }
  }
}

TEST_CASE("prediction file round trip") {
  std::vector<Prediction> predictions = {{"a", {1, 0}, {0.75, 0.125}}, {"b", {0}, {0.3}}};
  std::stringstream buffer;
  write_predictions(buffer, predictions);
  const auto back = read_predictions(buffer);
  REQUIRE(back.size() == 2);
  CHECK(back[0].scores == predictions[0].scores);
  CHECK(back[1].labels == predictions[1].labels);
  std::stringstream bad(R"({"id":"x","labels":[1,2]})" "\n");
  CHECK_THROWS_AS(read_predictions(bad), DataError);
}
