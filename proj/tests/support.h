#ifndef COMPRESSLAB_TESTS_SUPPORT_H_
#define COMPRESSLAB_TESTS_SUPPORT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "compresslab/erran.h"
#include "compresslab/labeler.h"
#include "compresslab/metrics.h"

namespace compresslab::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

// Counting oracles, written independently of the metrics module.
struct OracleF1 {
  double p, r, f1;
};
OracleF1 oracle_f1(const std::vector<int>& gold, const std::vector<int>& pred);
double oracle_cr(const std::vector<int>& pred);

// 200-record annotation sets with fixed grammatical / informative totals.
// Non-grammatical records carry G-types, non-informative ones I-types, and
// some clean records carry i2.
std::vector<AnnotationRecord> annotation_set(const std::string& system_id, std::size_t n,
                                             const std::vector<bool>& grammatical,
                                             const std::vector<bool>& informative);

std::vector<AnnotationRecord> uni_fixture();        // 146 grammatical, 105 informative
std::vector<AnnotationRecord> tf_fixture();         // 44 grammatical, 41 informative
std::vector<AnnotationRecord> reference_fixture();  // 63 both grammatical and informative
// (Uni set, TF variant): grammaticality improved 13 / worsened 115,
// informativeness improved 15 / worsened 78.
std::pair<std::vector<AnnotationRecord>, std::vector<AnnotationRecord>> comparison_fixture();

// Max relative error |a - n| / max(|a|, |n|, 1e-6) between backprop and
// central differences over every parameter entry of a small labeler.
struct GradCheck {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t entries = 0;
};
GradCheck labeler_gradcheck(std::uint64_t seed, int depth, double eps = 1e-5);

// Random sentence over a small vocabulary with random gold labels.
CorpusInstance random_instance(Rng& rng, std::size_t length, const std::string& id);

}  // namespace compresslab::testing

#endif  // COMPRESSLAB_TESTS_SUPPORT_H_
