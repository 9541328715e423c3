#ifndef COMPRESSLAB_TOOLS_CLI_H_
#define COMPRESSLAB_TOOLS_CLI_H_

#include <cstdint>
#include <string>
#include <vector>

namespace compresslab {

// Exit codes: 0 success, 1 data/model error, 2 usage error.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

// "0..9", "1,4,7" or a single seed.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

}  // namespace compresslab

#endif  // COMPRESSLAB_TOOLS_CLI_H_
