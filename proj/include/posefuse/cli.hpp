#pragma once

// posefuse command-line driver.
//
//   posefuse simulate --out obs.csv [--frames N] [--seed S] [model flags]
//   posefuse fuse     --in obs.csv --out fused.txt [--log fusion.csv] [fusion flags]
//   posefuse evaluate --in obs.csv [--log fusion.csv] [--report r.json] [--series s.csv]
//   posefuse bench    [--seeds S] [--seed FIRST] [--out bench.csv] [model and fusion flags]
//
// Exit codes: 0 success, 1 usage error (bad flags or parameters), 2 data
// error (missing/unreadable/unwritable files, malformed input).

#include <iosfwd>
#include <string>
#include <vector>

namespace posefuse::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kDataError = 2 };

/// Seed used when --seed is absent.
inline constexpr const char* kSeedEnvVar = "POSEFUSE_SEED";

/// `args[0]` is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace posefuse::cli
