#include "compresslab/erran.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>
#include <tuple>

namespace compresslab {

using nlohmann::json;

const std::vector<ErrorType>& all_error_types() {
  static const std::vector<ErrorType> types = {
      ErrorType::kFinish,   ErrorType::kStitch, ErrorType::kRdPron,     ErrorType::kVerbMiss,
      ErrorType::kInfoMiss, ErrorType::kPPron,  ErrorType::kMeanChange, ErrorType::kI2};
  return types;
}

ErrorClass error_class(ErrorType type) {
  switch (type) {
    case ErrorType::kFinish:
    case ErrorType::kStitch:
    case ErrorType::kRdPron:
    case ErrorType::kVerbMiss: return ErrorClass::kGrammaticality;
    case ErrorType::kInfoMiss:
    case ErrorType::kPPron:
    case ErrorType::kMeanChange: return ErrorClass::kInformativeness;
    case ErrorType::kI2: return ErrorClass::kAlternative;
  }
  return ErrorClass::kAlternative;
}

const char* error_name(ErrorType type) {
  switch (type) {
    case ErrorType::kFinish: return "finish";
    case ErrorType::kStitch: return "stitch";
    case ErrorType::kRdPron: return "rd_pron";
    case ErrorType::kVerbMiss: return "verb_miss";
    case ErrorType::kInfoMiss: return "info_miss";
    case ErrorType::kPPron: return "p_pron";
    case ErrorType::kMeanChange: return "mean_change";
    case ErrorType::kI2: return "i2";
  }
  return "?";
}

const char* class_name(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::kGrammaticality: return "G";
    case ErrorClass::kInformativeness: return "I";
    case ErrorClass::kAlternative: return "ALT";
  }
  return "?";
}

ErrorType parse_error_type(const std::string& name) {
  std::string canonical = name;
  std::replace(canonical.begin(), canonical.end(), '-', '_');
  std::transform(canonical.begin(), canonical.end(), canonical.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (ErrorType type : all_error_types())
    if (canonical == error_name(type)) return type;
  throw DataError("unknown error type '" + name + "'");
}

bool AnnotationRecord::has_class(ErrorClass cls) const {
  return std::any_of(error_types.begin(), error_types.end(),
                     [cls](ErrorType t) { return error_class(t) == cls; });
}

bool is_rfc3339(const std::string& timestamp) {
  static const std::regex pattern(
      R"(^\d{4}-(0[1-9]|1[0-2])-(0[1-9]|[12]\d|3[01])[Tt ]([01]\d|2[0-3]):[0-5]\d:([0-5]\d|60)(\.\d+)?([Zz]|[+-]([01]\d|2[0-3]):[0-5]\d)$)");
  return std::regex_match(timestamp, pattern);
}

std::string now_rfc3339() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

std::vector<std::string> validate_annotation(const AnnotationRecord& record) {
  std::vector<std::string> violations;
  const bool has_g = record.has_class(ErrorClass::kGrammaticality);
  const bool has_i = record.has_class(ErrorClass::kInformativeness);
  if (record.grammatical && has_g) violations.push_back("G-type with grammatical=true");
  if (!record.grammatical && !has_g) violations.push_back("grammatical=false without a G-type");
  if (record.informative && has_i) violations.push_back("I-type with informative=true");
  if (!record.informative && !has_i) violations.push_back("informative=false without an I-type");
  if (record.instance_id.empty()) violations.push_back("empty instance_id");
  if (record.system_id.empty()) violations.push_back("empty system_id");
  if (record.annotator.empty()) violations.push_back("empty annotator");
  if (!is_rfc3339(record.timestamp)) violations.push_back("timestamp is not RFC 3339");
  return violations;
}

json annotation_to_json(const AnnotationRecord& record) {
  json types = json::array();
  for (ErrorType type : record.error_types) types.push_back(error_name(type));
  return {{"instance_id", record.instance_id},
          {"system_id", record.system_id},
          {"grammatical", record.grammatical},
          {"informative", record.informative},
          {"error_types", types},
          {"annotator", record.annotator},
          {"timestamp", record.timestamp}};
}

AnnotationRecord annotation_from_json(const json& value) {
  if (!value.is_object()) throw DataError("annotation is not an object");
  auto string_field = [&](const char* key) {
    auto it = value.find(key);
    if (it == value.end() || !it->is_string())
      throw DataError(std::string("annotation field '") + key + "' must be a string");
    return it->get<std::string>();
  };
  auto bool_field = [&](const char* key) {
    auto it = value.find(key);
    if (it == value.end() || !it->is_boolean())
      throw DataError(std::string("annotation field '") + key + "' must be a boolean");
    return it->get<bool>();
  };
  AnnotationRecord record;
  record.instance_id = string_field("instance_id");
  record.system_id = string_field("system_id");
  record.grammatical = bool_field("grammatical");
  record.informative = bool_field("informative");
  record.annotator = string_field("annotator");
  record.timestamp = string_field("timestamp");
  auto types = value.find("error_types");
  if (types == value.end() || !types->is_array())
    throw DataError("annotation field 'error_types' must be an array");
  for (const auto& type : *types) {
    if (!type.is_string()) throw DataError("error type must be a string");
    record.error_types.insert(parse_error_type(type.get<std::string>()));
  }
  return record;
}

void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records) {
  for (const auto& record : records) out << annotation_to_json(record).dump() << '\n';
}

void write_annotations(const std::filesystem::path& path,
                       const std::vector<AnnotationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write annotations " + path.string());
  write_annotations(out, records);
}

std::vector<AnnotationRecord> read_annotations(std::istream& in) {
  std::vector<AnnotationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Hand-edited files may end with blank lines.
    if (line.empty()) continue;
    try {
      records.push_back(annotation_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotations " + path.string());
  try {
    return read_annotations(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<AnnotationRecord> effective_annotations(const std::vector<AnnotationRecord>& records) {
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> slot;
  std::vector<AnnotationRecord> out;
  for (const auto& record : records) {
    auto key = std::make_tuple(record.instance_id, record.system_id, record.annotator);
    auto it = slot.find(key);
    if (it == slot.end()) {
      slot.emplace(std::move(key), out.size());
      out.push_back(record);
    } else {
      out[it->second] = record;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tasks

AnnotationTask build_task(const Corpus& corpus, const std::vector<Prediction>& predictions,
                          const std::vector<std::string>& ids, const std::string& system_id) {
  if (system_id.empty()) throw DataError("build_task: empty system id");
  std::map<std::string, const CorpusInstance*> instances;
  for (const auto& instance : corpus.instances) instances[instance.id] = &instance;
  std::map<std::string, const Prediction*> outputs;
  for (const auto& prediction : predictions) outputs[prediction.id] = &prediction;

  AnnotationTask task;
  task.system_id = system_id;
  for (const auto& id : ids) {
    auto instance = instances.find(id);
    if (instance == instances.end()) throw DataError("build_task: id missing from corpus, id=" + id);
    auto output = outputs.find(id);
    if (output == outputs.end())
      throw DataError("build_task: id missing from predictions, id=" + id);
    const CorpusInstance& source = *instance->second;
    TaskRow row;
    row.instance_id = id;
    row.sentence = realize_compression(source, LabelSequence(source.size(), 1));
    row.system_compression = realize_compression(source, output->second->labels);
    row.reference_compression = realize_compression(source, source.gold_labels);
    task.rows.push_back(std::move(row));
  }
  return task;
}

json task_row_to_json(const TaskRow& row, const std::string& system_id) {
  return {{"instance_id", row.instance_id},
          {"sentence", row.sentence},
          {"system_compression", row.system_compression},
          {"reference_compression", row.reference_compression},
          {"system_id", system_id}};
}

void write_task(std::ostream& out, const AnnotationTask& task) {
  for (const auto& row : task.rows) out << task_row_to_json(row, task.system_id).dump() << '\n';
}

void write_task(const std::filesystem::path& path, const AnnotationTask& task) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write task " + path.string());
  write_task(out, task);
}

AnnotationTask read_task(std::istream& in) {
  AnnotationTask task;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) throw DataError("line " + std::to_string(line_no) + ": blank line");
    try {
      json value = json::parse(line);
      TaskRow row;
      row.instance_id = value.at("instance_id").get<std::string>();
      row.sentence = value.at("sentence").get<std::string>();
      row.system_compression = value.at("system_compression").get<std::string>();
      row.reference_compression = value.at("reference_compression").get<std::string>();
      const auto system_id = value.at("system_id").get<std::string>();
      if (task.rows.empty()) task.system_id = system_id;
      else if (system_id != task.system_id)
        throw DataError("task mixes system ids " + task.system_id + " and " + system_id);
      task.rows.push_back(std::move(row));
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return task;
}

AnnotationTask read_task(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open task " + path.string());
  return read_task(in);
}

// ---------------------------------------------------------------------------
// Reports

double ErrorDistribution::percent(std::size_t count) const {
  return n == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(n);
}

std::size_t ErrorDistribution::records_with(ErrorClass cls) const {
  if (cls == ErrorClass::kGrammaticality) return n - n_grammatical;
  if (cls == ErrorClass::kInformativeness) return n - n_informative;
  auto it = counts.find(ErrorType::kI2);
  return it == counts.end() ? 0 : it->second;
}

ErrorDistribution error_report(const std::vector<AnnotationRecord>& records) {
  ErrorDistribution out;
  for (ErrorType type : all_error_types()) out.counts[type] = 0;
  for (const auto& record : records) {
    if (out.n == 0) out.system_id = record.system_id;
    else if (record.system_id != out.system_id)
      throw DataError("error_report: mixed system ids " + out.system_id + " and " +
                      record.system_id);
    const auto violations = validate_annotation(record);
    if (!violations.empty())
      throw DataError("error_report: invalid annotation for id=" + record.instance_id + ": " +
                      violations.front());
    ++out.n;
    if (record.grammatical) ++out.n_grammatical;
    if (record.informative) ++out.n_informative;
    if (record.grammatical && record.informative) ++out.n_both;
    for (ErrorType type : record.error_types) ++out.counts[type];
  }
  return out;
}

GroundTruthAudit audit_ground_truth(const std::vector<AnnotationRecord>& records) {
  GroundTruthAudit audit;
  audit.distribution = error_report(records);
  audit.both_correct = audit.distribution.n_both;
  audit.both_correct_percent = audit.distribution.percent(audit.both_correct);
  return audit;
}

SystemComparison compare_systems(const std::vector<AnnotationRecord>& a,
                                 const std::vector<AnnotationRecord>& b) {
  auto index = [](const std::vector<AnnotationRecord>& records, const char* side) {
    std::map<std::string, const AnnotationRecord*> by_id;
    for (const auto& record : records)
      if (!by_id.emplace(record.instance_id, &record).second)
        throw DataError(std::string("compare_systems: duplicate id in ") + side + ", id=" +
                        record.instance_id);
    return by_id;
  };
  const auto left = index(a, "a");
  const auto right = index(b, "b");
  std::vector<std::string> only;
  for (const auto& [id, record] : left)
    if (!right.count(id)) only.push_back(id);
  for (const auto& [id, record] : right)
    if (!left.count(id)) only.push_back(id);
  if (!only.empty()) {
    std::sort(only.begin(), only.end());
    std::string listing;
    for (const auto& id : only) listing += (listing.empty() ? "" : ",") + id;
    throw DataError("compare_systems: id sets differ: " + listing);
  }
  auto tally = [](CriterionChange& change, bool before, bool after) {
    if (!before && after) ++change.improved;
    else if (before && !after) ++change.worsened;
    else ++change.unchanged;
  };
  SystemComparison out;
  for (const auto& [id, before] : left) {
    const AnnotationRecord* after = right.at(id);
    tally(out.grammaticality, before->grammatical, after->grammatical);
    tally(out.informativeness, before->informative, after->informative);
  }
  return out;
}

json distribution_to_json(const ErrorDistribution& d) {
  json counts = json::object();
  for (const auto& [type, count] : d.counts) counts[error_name(type)] = count;
  return {{"system_id", d.system_id},
          {"n", d.n},
          {"n_grammatical", d.n_grammatical},
          {"n_informative", d.n_informative},
          {"n_both", d.n_both},
          {"grammatical_percent", d.percent(d.n_grammatical)},
          {"informative_percent", d.percent(d.n_informative)},
          {"both_percent", d.percent(d.n_both)},
          {"counts", counts}};
}

json comparison_to_json(const SystemComparison& c) {
  auto change = [](const CriterionChange& x) {
    return json{{"improved", x.improved}, {"worsened", x.worsened}, {"unchanged", x.unchanged}};
  };
  return {{"grammaticality", change(c.grammaticality)},
          {"informativeness", change(c.informativeness)}};
}

namespace {

std::string percent_text(double value) {
  std::ostringstream out;
  out << value;
  return out.str();
}

}  // namespace

void write_report_csv(std::ostream& out, const ErrorDistribution& d) {
  out << "error_type,class,count,percent\n";
  for (ErrorType type : all_error_types()) {
    const std::size_t count = d.counts.count(type) ? d.counts.at(type) : 0;
    out << error_name(type) << ',' << class_name(error_class(type)) << ',' << count << ','
        << percent_text(d.percent(count)) << '\n';
  }
  out << '\n' << "summary,count,percent\n";
  out << "n," << d.n << ",100\n";
  out << "grammatical," << d.n_grammatical << ',' << percent_text(d.percent(d.n_grammatical)) << '\n';
  out << "informative," << d.n_informative << ',' << percent_text(d.percent(d.n_informative)) << '\n';
  out << "both," << d.n_both << ',' << percent_text(d.percent(d.n_both)) << '\n';
}

void write_comparison_csv(std::ostream& out, const SystemComparison& c) {
  out << "criterion,improved,worsened,unchanged\n";
  out << "grammaticality," << c.grammaticality.improved << ',' << c.grammaticality.worsened << ','
      << c.grammaticality.unchanged << '\n';
  out << "informativeness," << c.informativeness.improved << ',' << c.informativeness.worsened
      << ',' << c.informativeness.unchanged << '\n';
}

}  // namespace compresslab
