#ifndef COMPRESSLAB_SERVICE_H_
#define COMPRESSLAB_SERVICE_H_

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "compresslab/erran.h"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace compresslab {

// Backend of the annotation UI. The annotation file is the source of truth:
// records are appended and flushed to disk before a submit is acknowledged.
// Reads take a shared lock; submits are serialised through one writer lock.
class AnnotationService {
 public:
  AnnotationService(AnnotationTask task, std::filesystem::path annotation_file);

  struct Response {
    int status = 200;
    nlohmann::json body;
  };

  // Full task plus progress for the task's system.
  nlohmann::json task_json() const;
  Response item(std::size_t index) const;
  Response submit(const std::string& payload);
  // Live distribution for `system` (default: the task's system). With a
  // baseline system id, also the comparison of `system` relative to it.
  Response report(const std::string& system = {}, const std::string& baseline = {}) const;

  std::vector<AnnotationRecord> annotations() const;
  const AnnotationTask& task() const { return task_; }

  // Registers GET /api/task, GET /api/item/{i}, POST /api/annotations and
  // GET /api/report on the server.
  void mount(httplib::Server& server);

 private:
  std::vector<AnnotationRecord> records_for(const std::string& system) const;

  AnnotationTask task_;
  std::filesystem::path annotation_file_;
  mutable std::shared_mutex mutex_;
  std::vector<AnnotationRecord> records_;  // file order
};

// Blocks serving on host:port until the process is stopped.
void serve(AnnotationService& service, const std::string& host, int port);

}  // namespace compresslab

#endif  // COMPRESSLAB_SERVICE_H_
