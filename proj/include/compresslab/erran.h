#ifndef COMPRESSLAB_ERRAN_H_
#define COMPRESSLAB_ERRAN_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "compresslab/corpus.h"
#include "compresslab/labeler.h"
#include "json.hpp"

namespace compresslab {

// Closed error taxonomy for manual analysis of compressions.
enum class ErrorType {
  // grammaticality
  kFinish,      // abrupt ending, last token(s) omitted
  kStitch,      // clauses joined without their linking words
  kRdPron,      // starts with a relative or demonstrative pronoun
  kVerbMiss,    // an essential verb is missing
  // informativeness
  kInfoMiss,    // information needed for understanding is missing
  kPPron,       // starts with an unresolved personal pronoun
  kMeanChange,  // dropped context changes the meaning
  // alternative compression: differs from the reference but is not an error
  kI2,
};

enum class ErrorClass { kGrammaticality, kInformativeness, kAlternative };

const std::vector<ErrorType>& all_error_types();
ErrorClass error_class(ErrorType type);
const char* error_name(ErrorType type);
const char* class_name(ErrorClass cls);
// Accepts the canonical underscore spelling and the hyphenated one
// ("rd-pron"). Unknown labels throw DataError.
ErrorType parse_error_type(const std::string& name);

struct AnnotationRecord {
  std::string instance_id;
  std::string system_id;
  bool grammatical = true;
  bool informative = true;
  std::set<ErrorType> error_types;
  std::string annotator;
  std::string timestamp;  // RFC 3339

  bool has_class(ErrorClass cls) const;
};

// Violations of the record invariants; empty means the record is valid.
std::vector<std::string> validate_annotation(const AnnotationRecord& record);

bool is_rfc3339(const std::string& timestamp);
std::string now_rfc3339();

nlohmann::json annotation_to_json(const AnnotationRecord& record);
AnnotationRecord annotation_from_json(const nlohmann::json& value);

void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records);
void write_annotations(const std::filesystem::path& path,
                       const std::vector<AnnotationRecord>& records);
std::vector<AnnotationRecord> read_annotations(std::istream& in);
// A missing file reads as an empty list.
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);

// Last write wins per (instance_id, system_id, annotator); result keeps the
// position of each key's first appearance.
std::vector<AnnotationRecord> effective_annotations(const std::vector<AnnotationRecord>& records);

struct TaskRow {
  std::string instance_id;
  std::string sentence;
  std::string system_compression;
  std::string reference_compression;
};

struct AnnotationTask {
  std::string system_id;
  std::vector<TaskRow> rows;

  std::size_t k() const { return rows.size(); }
};

AnnotationTask build_task(const Corpus& corpus, const std::vector<Prediction>& predictions,
                          const std::vector<std::string>& ids, const std::string& system_id);

nlohmann::json task_row_to_json(const TaskRow& row, const std::string& system_id);
void write_task(std::ostream& out, const AnnotationTask& task);
void write_task(const std::filesystem::path& path, const AnnotationTask& task);
AnnotationTask read_task(std::istream& in);
AnnotationTask read_task(const std::filesystem::path& path);

struct ErrorDistribution {
  std::string system_id;
  std::map<ErrorType, std::size_t> counts;
  std::size_t n = 0;
  std::size_t n_grammatical = 0;
  std::size_t n_informative = 0;
  std::size_t n_both = 0;  // grammatical and informative

  double percent(std::size_t count) const;
  // Records carrying at least one error type of the class; i2 never counts.
  std::size_t records_with(ErrorClass cls) const;
};

// Requires valid records that share one system id; an empty list gives a
// zero distribution.
ErrorDistribution error_report(const std::vector<AnnotationRecord>& records);

struct GroundTruthAudit {
  ErrorDistribution distribution;
  std::size_t both_correct = 0;
  double both_correct_percent = 0.0;
};

// Same as error_report, applied to annotations whose "system" output is the
// reference compression itself.
GroundTruthAudit audit_ground_truth(const std::vector<AnnotationRecord>& records);

struct CriterionChange {
  std::size_t improved = 0;   // false in a, true in b
  std::size_t worsened = 0;   // true in a, false in b
  std::size_t unchanged = 0;

  friend bool operator==(const CriterionChange&, const CriterionChange&) = default;
};

struct SystemComparison {
  CriterionChange grammaticality;
  CriterionChange informativeness;
};

// b relative to a, aligned by instance id. The id sets must be equal.
SystemComparison compare_systems(const std::vector<AnnotationRecord>& a,
                                 const std::vector<AnnotationRecord>& b);

nlohmann::json distribution_to_json(const ErrorDistribution& distribution);
nlohmann::json comparison_to_json(const SystemComparison& comparison);

void write_report_csv(std::ostream& out, const ErrorDistribution& distribution);
void write_comparison_csv(std::ostream& out, const SystemComparison& comparison);

}  // namespace compresslab

#endif  // COMPRESSLAB_ERRAN_H_
