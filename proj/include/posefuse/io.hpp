#pragma once

// On-disk formats.  All numbers are decimal text; floating-point values are
// written with 17 significant digits.
// Quaternions are stored x, y, z, w on disk.
//
// Trajectory (space separated, '#' starts a comment line):
//   timestamp tx ty tz qx qy qz qw
//
// Observations (CSV, header must match exactly, gt columns optional):
//   frame_id,timestamp,apr_tx,...,apr_qw,vio_tx,...,vio_qw[,gt_tx,...,gt_qw]
//
// Fusion log (CSV, pose columns empty for AlignmentPending, similarity empty
// when not evaluated):
//   frame_id,timestamp,category,stage,similarity,similarity_degenerate,tx,ty,tz,qx,qy,qz,qw
//
// Report (JSON object; see ReportFile).
//
// Quaternions read from disk are renormalized when their norm is within 1e-3
// of one and rejected otherwise.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "posefuse/fusion.hpp"
#include "posefuse/metrics.hpp"

namespace posefuse {

/// Malformed input.  what() reads "<source>:<line>: <message> near '<token>'".
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& message, std::string token);

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& token() const noexcept { return token_; }

 private:
  std::string source_;
  std::size_t line_;
  std::string token_;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kQuatNormTolerance = 1e-3;

struct StampedPose {
  double timestamp = 0.0;
  Pose pose;

  friend bool operator==(const StampedPose&, const StampedPose&) = default;
};
using Trajectory = std::vector<StampedPose>;

Trajectory parse_trajectory(std::istream& in, const std::string& source = "<trajectory>");
void write_trajectory(std::ostream& out, std::span<const StampedPose> trajectory);
Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, std::span<const StampedPose> trajectory);

std::vector<FrameObservation> parse_observations(std::istream& in, const std::string& source = "<observations>");
/// Writes gt columns when every observation has ground truth; throws IoError
/// when only some do.
void write_observations(std::ostream& out, std::span<const FrameObservation> observations);
std::vector<FrameObservation> read_observations(const std::filesystem::path& path);
void write_observations(const std::filesystem::path& path, std::span<const FrameObservation> observations);

/// Fusion outputs with the timestamps of the observations they came from.
struct FusionLog {
  std::vector<FusionOutput> outputs;
  std::vector<double> timestamps;

  friend bool operator==(const FusionLog&, const FusionLog&) = default;
};
FusionLog parse_fusion_log(std::istream& in, const std::string& source = "<fusion log>");
void write_fusion_log(std::ostream& out, const FusionLog& log);
FusionLog read_fusion_log(const std::filesystem::path& path);
void write_fusion_log(const std::filesystem::path& path, const FusionLog& log);
/// Pairs outputs with observation timestamps; throws IoError on count mismatch.
FusionLog make_fusion_log(std::span<const FusionOutput> outputs, std::span<const FrameObservation> observations);

/// Estimated trajectory of a fusion run: one line per frame with an estimate.
Trajectory fused_trajectory(const FusionLog& log);

inline constexpr const char* kReportFormat = "posefuse-report";
inline constexpr const char* kArtifactVersion = "1.0.0";

struct ReportFile {
  std::string version = kArtifactVersion;
  std::optional<std::uint64_t> seed;
  /// Command line that reproduces the run.
  std::string command;
  FusionConfig config;
  EvaluationReport report;
  /// Statistics of the unfused APR predictions over the same frames.
  std::optional<ErrorStats> raw_apr;

  friend bool operator==(const ReportFile&, const ReportFile&) = default;
};

std::string serialize_report(const ReportFile& report);
ReportFile parse_report(const std::string& text, const std::string& source = "<report>");
ReportFile read_report(const std::filesystem::path& path);
void write_report(const std::filesystem::path& path, const ReportFile& report);

/// Per-frame error series for plotting:
///   frame_id,timestamp,category,fused_ape,fused_aoe,fused_bucket,apr_ape,apr_aoe,apr_bucket
/// Fused columns are empty for pending frames.  Requires ground truth.
void write_error_series(std::ostream& out, const FusionLog& log, std::span<const FrameObservation> observations);
void write_error_series(const std::filesystem::path& path, const FusionLog& log,
                        std::span<const FrameObservation> observations);

/// "%.17g" formatting used by every writer.
std::string format_double(double value);

}  // namespace posefuse
