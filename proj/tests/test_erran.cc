#include <sstream>

#include "compresslab/erran.h"
#include "compresslab/random.h"
#include "doctest.h"
#include "support.h"

using namespace compresslab;
namespace fx = compresslab::testing;

namespace {

AnnotationRecord record(bool grammatical, bool informative, std::set<ErrorType> types) {
  AnnotationRecord r;
  r.instance_id = "i1";
  r.system_id = "sys";
  r.grammatical = grammatical;
  r.informative = informative;
  r.error_types = std::move(types);
  r.annotator = "ann";
  r.timestamp = "2026-01-05T12:00:00Z";
  return r;
}

bool has(const std::vector<std::string>& violations, const std::string& text) {
  for (const auto& v : violations)
    if (v == text) return true;
  return false;
}

}  // namespace

TEST_CASE("taxonomy") {
  CHECK(all_error_types().size() == 8);
  CHECK(error_class(ErrorType::kStitch) == ErrorClass::kGrammaticality);
  CHECK(error_class(ErrorType::kPPron) == ErrorClass::kInformativeness);
  CHECK(error_class(ErrorType::kI2) == ErrorClass::kAlternative);
  for (ErrorType t : all_error_types()) CHECK(parse_error_type(error_name(t)) == t);
  CHECK(parse_error_type("rd-pron") == ErrorType::kRdPron);
  CHECK(parse_error_type("mean-change") == ErrorType::kMeanChange);
  CHECK_THROWS_AS(parse_error_type("typo"), DataError);
}

TEST_CASE("validate_annotation examples") {
  CHECK(has(validate_annotation(record(true, true, {ErrorType::kStitch})),
            "G-type with grammatical=true"));
  CHECK(validate_annotation(record(false, true, {ErrorType::kFinish})).empty());
  CHECK(validate_annotation(record(true, true, {ErrorType::kI2})).empty());
  CHECK(has(validate_annotation(record(true, true, {ErrorType::kInfoMiss})),
            "I-type with informative=true"));
  CHECK(!validate_annotation(record(false, true, {})).empty());
  CHECK(!validate_annotation(record(true, false, {ErrorType::kI2})).empty());
  AnnotationRecord bad_time = record(true, true, {});
  bad_time.timestamp = "yesterday";
  CHECK(!validate_annotation(bad_time).empty());
  AnnotationRecord no_id = record(true, true, {});
  no_id.instance_id.clear();
  CHECK(!validate_annotation(no_id).empty());
}

TEST_CASE("validity is bidirectional over every type subset") {
  const auto& types = all_error_types();
  for (unsigned mask = 0; mask < (1u << types.size()); ++mask) {
    std::set<ErrorType> set;
    for (std::size_t k = 0; k < types.size(); ++k)
      if (mask & (1u << k)) set.insert(types[k]);
    for (bool g : {false, true}) {
      for (bool i : {false, true}) {
        const AnnotationRecord r = record(g, i, set);
        const bool valid = validate_annotation(r).empty();
        const bool expected = g == !r.has_class(ErrorClass::kGrammaticality) &&
                              i == !r.has_class(ErrorClass::kInformativeness);
        CHECK(valid == expected);
      }
    }
  }
}

TEST_CASE("rfc3339") {
  CHECK(is_rfc3339("2026-01-05T12:00:00Z"));
  CHECK(is_rfc3339("2026-01-05T12:00:00.123+02:00"));
  CHECK(is_rfc3339(now_rfc3339()));
  CHECK_FALSE(is_rfc3339("2026-01-05 12:00:00"));
  CHECK_FALSE(is_rfc3339("2026-13-05T12:00:00Z"));
}

TEST_CASE("annotation json schema") {
  const AnnotationRecord r = record(false, false, {ErrorType::kVerbMiss, ErrorType::kPPron});
  const auto j = annotation_to_json(r);
  for (const char* key :
       {"instance_id", "system_id", "grammatical", "informative", "error_types", "annotator", "timestamp"})
    CHECK(j.contains(key));
  CHECK(j.at("error_types") == nlohmann::json::array({"verb_miss", "p_pron"}));
  const AnnotationRecord back = annotation_from_json(j);
  CHECK(back.error_types == r.error_types);
  nlohmann::json unknown = j;
  unknown["error_types"] = {"nonsense"};
  CHECK_THROWS_AS(annotation_from_json(unknown), DataError);
}

TEST_CASE("last write wins per key") {
  AnnotationRecord first = record(false, true, {ErrorType::kFinish});
  AnnotationRecord second = record(true, true, {});
  AnnotationRecord other = record(true, true, {});
  other.instance_id = "i2";
  AnnotationRecord other_annotator = record(true, true, {});
  other_annotator.annotator = "someone";
  const auto effective = effective_annotations({first, other, second, other_annotator});
  REQUIRE(effective.size() == 3);
  CHECK(effective[0].instance_id == "i1");
  CHECK(effective[0].grammatical);
  CHECK(effective[1].instance_id == "i2");
}

TEST_CASE("fixture distributions") {
  const ErrorDistribution uni = error_report(fx::uni_fixture());
  CHECK(uni.n == 200);
  CHECK(uni.n_grammatical == 146);
  CHECK(uni.percent(uni.n_grammatical) == 73.0);
  CHECK(uni.n_informative == 105);
  CHECK(uni.percent(uni.n_informative) == 52.5);
  CHECK(uni.records_with(ErrorClass::kGrammaticality) == 54);
  CHECK(uni.records_with(ErrorClass::kInformativeness) == 95);

  const ErrorDistribution tf = error_report(fx::tf_fixture());
  CHECK(tf.n_grammatical == 44);
  CHECK(tf.percent(tf.n_grammatical) == 22.0);
  CHECK(tf.n_informative == 41);
  CHECK(tf.percent(tf.n_informative) == 20.5);

  const GroundTruthAudit audit = audit_ground_truth(fx::reference_fixture());
  CHECK(audit.both_correct == 63);
  CHECK(audit.both_correct_percent == 31.5);
  CHECK(audit.both_correct <= std::min(audit.distribution.n_grammatical,
                                       audit.distribution.n_informative));

  const ErrorDistribution empty = error_report({});
  CHECK(empty.n == 0);
  CHECK(empty.n_grammatical == 0);
  for (const auto& [type, count] : empty.counts) CHECK(count == 0);
}

TEST_CASE("all-perfect audit") {
  std::vector<AnnotationRecord> perfect;
  for (int i = 0; i < 10; ++i) {
    AnnotationRecord r = record(true, true, {});
    r.instance_id = "p" + std::to_string(i);
    perfect.push_back(r);
  }
  CHECK(audit_ground_truth(perfect).both_correct == 10);
}

TEST_CASE("error_report rejects mixed systems and invalid records") {
  AnnotationRecord a = record(true, true, {});
  AnnotationRecord b = record(true, true, {});
  b.system_id = "other";
  CHECK_THROWS_AS(error_report({a, b}), DataError);
  CHECK_THROWS_AS(error_report({record(true, true, {ErrorType::kStitch})}), DataError);
}

TEST_CASE("error_report is permutation-invariant") {
  auto records = fx::uni_fixture();
  const ErrorDistribution base = error_report(records);
  Rng rng(3);
  rng.shuffle(records.begin(), records.end());
  const ErrorDistribution shuffled = error_report(records);
  CHECK(shuffled.counts == base.counts);
  CHECK(shuffled.n_grammatical == base.n_grammatical);
  CHECK(shuffled.n_informative == base.n_informative);
}

TEST_CASE("comparison fixture and properties") {
  const auto [a, b] = fx::comparison_fixture();
  const SystemComparison c = compare_systems(a, b);
  CHECK(c.grammaticality.improved == 13);
  CHECK(c.grammaticality.worsened == 115);
  CHECK(c.informativeness.improved == 15);
  CHECK(c.informativeness.worsened == 78);
  CHECK(c.grammaticality.unchanged == 200 - 13 - 115);

  // The two sides of one aligned comparison tie their totals together.
  const ErrorDistribution da = error_report(a), db = error_report(b);
  CHECK(db.n_grammatical == da.n_grammatical + 13 - 115);
  CHECK(db.n_informative == da.n_informative + 15 - 78);
  CHECK(db.n_grammatical == 44);
  CHECK(db.n_informative == 42);  // one more than the separate 41/200 count

  const SystemComparison swapped = compare_systems(b, a);
  CHECK(swapped.grammaticality.improved == c.grammaticality.worsened);
  CHECK(swapped.informativeness.worsened == c.informativeness.improved);

  const SystemComparison self = compare_systems(a, a);
  CHECK(self.grammaticality.improved == 0);
  CHECK(self.grammaticality.worsened == 0);
  CHECK(self.informativeness.unchanged == 200);

  auto shuffled = b;
  Rng rng(1);
  rng.shuffle(shuffled.begin(), shuffled.end());
  CHECK(compare_systems(a, shuffled).informativeness == c.informativeness);
}

TEST_CASE("compare_systems names the symmetric difference") {
  AnnotationRecord x = record(true, true, {}), y = record(true, true, {});
  x.instance_id = "only-a";
  y.instance_id = "only-b";
  try {
    compare_systems({x}, {y});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("only-a") != std::string::npos);
    CHECK(what.find("only-b") != std::string::npos);
  }
  AnnotationRecord g = record(true, true, {});
  AnnotationRecord worse = record(false, true, {ErrorType::kFinish});
  CHECK(compare_systems({g}, {worse}).grammaticality.worsened == 1);
}

TEST_CASE("annotation file round trip") {
  fx::TempDir dir("erran");
  const auto records = fx::uni_fixture();
  write_annotations(dir / "ann.jsonl", records);
  const auto back = read_annotations(dir / "ann.jsonl");
  REQUIRE(back.size() == records.size());
  const ErrorDistribution before = error_report(records), after = error_report(back);
  CHECK(before.counts == after.counts);
  CHECK(before.n_informative == after.n_informative);
  CHECK(read_annotations(dir / "missing.jsonl").empty());
}

TEST_CASE("build_task") {
  Corpus corpus;
  corpus.instances = {CorpusInstance{"a", {"Dickinson", "competed", "today", "."}, {1, 1, 0, 1}},
                      CorpusInstance{"b", {"It", "rained"}, {0, 1}},
                      CorpusInstance{"c", {"Fine"}, {1}}};
  const std::vector<Prediction> preds = {{"a", {1, 0, 0, 1}, {}}, {"b", {1, 1}, {}}, {"c", {1}, {}}};
  const AnnotationTask task = build_task(corpus, preds, {"c", "a", "b"}, "sys");
  REQUIRE(task.k() == 3);
  CHECK(task.rows[0].instance_id == "c");
  CHECK(task.rows[1].sentence == "Dickinson competed today .");
  CHECK(task.rows[1].system_compression == "Dickinson .");
  CHECK(task.rows[1].reference_compression == "Dickinson competed .");
  try {
    build_task(corpus, {preds[0], preds[1]}, {"a", "c"}, "sys");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("c") != std::string::npos);
  }
  std::stringstream buffer;
  write_task(buffer, task);
  const AnnotationTask back = read_task(buffer);
  CHECK(back.system_id == "sys");
  REQUIRE(back.k() == 3);
  CHECK(back.rows[2].system_compression == task.rows[2].system_compression);
  const auto j = task_row_to_json(task.rows[0], "sys");
  for (const char* key :
       {"instance_id", "sentence", "system_compression", "reference_compression", "system_id"})
    CHECK(j.contains(key));
}

TEST_CASE("report csv") {
  std::ostringstream out;
  write_report_csv(out, error_report(fx::uni_fixture()));
  const std::string text = out.str();
  CHECK(text.find("grammatical,146,73") != std::string::npos);
  CHECK(text.find("informative,105,52.5") != std::string::npos);
}
