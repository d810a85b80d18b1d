#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace redopt {

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is split into
// contiguous chunks so results written to preallocated slots are placed
// deterministically regardless of scheduling. jobs <= 1 runs inline.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// Hex-encoded SHA-256 of a file's contents (for run manifests).
std::string sha256_file(const std::string& path);

// Formats a double with 6 significant digits, the convention for all
// numeric CSV/JSON outputs.
std::string fmt6(double v);

// Warning sink. Messages go to stderr by default; tests may capture them.
void warn(const std::string& msg);
std::vector<std::string> drain_warnings();
void capture_warnings(bool on);

}  // namespace redopt
