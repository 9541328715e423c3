#include "compresslab/service.h"

#include <cstdio>
#include <set>
#include <unistd.h>

#include "httplib.h"

namespace compresslab {

using nlohmann::json;

AnnotationService::AnnotationService(AnnotationTask task, std::filesystem::path annotation_file)
    : task_(std::move(task)), annotation_file_(std::move(annotation_file)) {
  if (!std::filesystem::exists(annotation_file_)) {
    std::FILE* created = std::fopen(annotation_file_.c_str(), "a");
    if (!created) throw DataError("cannot create annotation file " + annotation_file_.string());
    std::fclose(created);
  }
  records_ = read_annotations(annotation_file_);
}

std::vector<AnnotationRecord> AnnotationService::annotations() const {
  std::shared_lock lock(mutex_);
  return records_;
}

std::vector<AnnotationRecord> AnnotationService::records_for(const std::string& system) const {
  std::set<std::string> ids;
  for (const auto& row : task_.rows) ids.insert(row.instance_id);
  std::vector<AnnotationRecord> selected;
  for (const auto& record : effective_annotations(records_))
    if (record.system_id == system && ids.count(record.instance_id)) selected.push_back(record);
  return selected;
}

json AnnotationService::task_json() const {
  std::shared_lock lock(mutex_);
  std::set<std::string> done;
  for (const auto& record : records_for(task_.system_id)) done.insert(record.instance_id);
  json rows = json::array();
  std::size_t next = task_.rows.size();
  for (std::size_t i = 0; i < task_.rows.size(); ++i) {
    json row = task_row_to_json(task_.rows[i], task_.system_id);
    const bool annotated = done.count(task_.rows[i].instance_id) > 0;
    row["annotated"] = annotated;
    if (!annotated && next == task_.rows.size()) next = i;
    rows.push_back(std::move(row));
  }
  return {{"system_id", task_.system_id},
          {"k", task_.rows.size()},
          {"rows", rows},
          {"progress", {{"annotated", done.size()}, {"total", task_.rows.size()}, {"next_index", next}}}};
}

AnnotationService::Response AnnotationService::item(std::size_t index) const {
  if (index >= task_.rows.size())
    return {404, {{"error", "no item " + std::to_string(index)}}};
  json row = task_row_to_json(task_.rows[index], task_.system_id);
  row["index"] = index;
  return {200, row};
}

AnnotationService::Response AnnotationService::submit(const std::string& payload) {
  AnnotationRecord record;
  try {
    record = annotation_from_json(json::parse(payload));
  } catch (const json::exception& e) {
    return {400, {{"error", std::string("malformed JSON: ") + e.what()}}};
  } catch (const DataError& e) {
    return {422, {{"violations", json::array({e.what()})}}};
  }
  auto violations = validate_annotation(record);
  bool known = false;
  for (const auto& row : task_.rows) known = known || row.instance_id == record.instance_id;
  if (!known) violations.push_back("instance_id not in task: " + record.instance_id);
  if (!violations.empty()) return {422, {{"violations", violations}}};

  std::unique_lock lock(mutex_);
  const std::string line = annotation_to_json(record).dump() + "\n";
  std::FILE* file = std::fopen(annotation_file_.c_str(), "a");
  if (!file) return {500, {{"error", "cannot open annotation file"}}};
  const bool written = std::fwrite(line.data(), 1, line.size(), file) == line.size() &&
                       std::fflush(file) == 0 && ::fsync(fileno(file)) == 0;
  std::fclose(file);
  if (!written) return {500, {{"error", "annotation write failed"}}};
  records_.push_back(record);
  return {201, annotation_to_json(record)};
}

AnnotationService::Response AnnotationService::report(const std::string& system,
                                                      const std::string& baseline) const {
  std::shared_lock lock(mutex_);
  const std::string target = system.empty() ? task_.system_id : system;
  try {
    const auto records = records_for(target);
    json body = distribution_to_json(error_report(records));
    body["system_id"] = target;
    if (!baseline.empty())
      body["comparison"] = {{"baseline", baseline},
                            {"system", target},
                            {"result", comparison_to_json(compare_systems(records_for(baseline), records))}};
    return {200, body};
  } catch (const DataError& e) {
    return {409, {{"error", e.what()}}};
  }
}

void AnnotationService::mount(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json; charset=utf-8");
  };
  server.Get("/api/task", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, {200, task_json()});
  });
  server.Get(R"(/api/item/(\d+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    std::size_t index = 0;
    try {
      index = std::stoul(req.matches[1].str());
    } catch (const std::exception&) {
      reply(res, {404, {{"error", "no such item"}}});
      return;
    }
    reply(res, item(index));
  });
  server.Get(R"(/api/item/.*)", [reply](const httplib::Request&, httplib::Response& res) {
    reply(res, {404, {{"error", "no such item"}}});
  });
  server.Post("/api/annotations", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, submit(req.body));
  });
  server.Get("/api/report", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, report(req.get_param_value("system"), req.get_param_value("baseline")));
  });
}

void serve(AnnotationService& service, const std::string& host, int port) {
  httplib::Server server;
  service.mount(server);
  if (!server.listen(host, port))
    throw DataError("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace compresslab
