#include "posefuse/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace posefuse {

ParseError::ParseError(std::string source, std::size_t line, const std::string& message, std::string token)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message + " near '" + token + "'"),
      source_(std::move(source)),
      line_(line),
      token_(std::move(token)) {}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

// ---------------------------------------------------------------------------
// Tokenizing helpers

struct LineContext {
  const std::string& source;
  std::size_t line;

  [[noreturn]] void fail(const std::string& message, const std::string& token) const {
    throw ParseError(source, line, message, token);
  }
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view token, const LineContext& ctx) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (!token.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (token.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    ctx.fail("malformed number", std::string(token));
  }
  return value;
}

std::int64_t parse_integer(std::string_view token, const LineContext& ctx) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
    ctx.fail("malformed integer", std::string(token));
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Seven tokens tx ty tz qx qy qz qw.
Pose parse_pose(std::span<const std::string_view> tokens, const LineContext& ctx) {
  double v[7];
  for (int i = 0; i < 7; ++i) v[i] = parse_number(tokens[i], ctx);
  const Quat q(v[6], v[3], v[4], v[5]);
  const double norm = q.norm();
  if (std::abs(norm - 1.0) > kQuatNormTolerance) {
    std::string quat_text;
    for (int i = 3; i < 7; ++i) quat_text += (i > 3 ? " " : "") + std::string(tokens[i]);
    ctx.fail("quaternion norm " + format_double(norm) + " is not within 1e-3 of 1", quat_text);
  }
  return Pose(Vec3(v[0], v[1], v[2]), q);
}

void append_pose(std::string& line, const Pose& p, char sep) {
  const Vec3& t = p.translation();
  const Quat& q = p.rotation();
  for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) {
    line += sep;
    line += format_double(v);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string pose_columns(const std::string& prefix) {
  std::string s;
  for (const char* c : {"tx", "ty", "tz", "qx", "qy", "qz", "qw"}) {
    s += "," + prefix + c;
  }
  return s;
}

const std::string kObsHeader = "frame_id,timestamp" + pose_columns("apr_") + pose_columns("vio_");
const std::string kObsHeaderGt = kObsHeader + pose_columns("gt_");
const std::string kLogHeader = "frame_id,timestamp,category,stage,similarity,similarity_degenerate" + pose_columns("");

}  // namespace

// ---------------------------------------------------------------------------
// Trajectory

Trajectory parse_trajectory(std::istream& in, const std::string& source) {
  Trajectory out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const LineContext ctx{source, line_no};
    const auto tokens = split_ws(line);
    if (tokens.size() != 8) {
      ctx.fail("expected 8 fields (timestamp tx ty tz qx qy qz qw), got " + std::to_string(tokens.size()),
               std::string(line));
    }
    const double ts = parse_number(tokens[0], ctx);
    if (!out.empty() && ts < out.back().timestamp) {
      ctx.fail("timestamp decreases", std::string(tokens[0]));
    }
    out.push_back({ts, parse_pose(std::span(tokens).subspan(1), ctx)});
  }
  return out;
}

void write_trajectory(std::ostream& out, std::span<const StampedPose> trajectory) {
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const StampedPose& sp : trajectory) {
    std::string line = format_double(sp.timestamp);
    append_pose(line, sp.pose, ' ');
    out << line << '\n';
  }
}

Trajectory read_trajectory(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_trajectory(in, path.string());
}

void write_trajectory(const std::filesystem::path& path, std::span<const StampedPose> trajectory) {
  auto out = open_output(path);
  write_trajectory(out, trajectory);
  finish_output(out, path);
}

// ---------------------------------------------------------------------------
// Observations

std::vector<FrameObservation> parse_observations(std::istream& in, const std::string& source) {
  std::string raw;
  std::size_t line_no = 0;
  if (!std::getline(in, raw)) {
    throw ParseError(source, 1, "missing header", "");
  }
  ++line_no;
  const std::string_view header = trim(raw);
  bool has_gt = false;
  if (header == kObsHeaderGt) {
    has_gt = true;
  } else if (header != kObsHeader) {
    throw ParseError(source, line_no, "header does not match the observation format", std::string(header));
  }
  const std::size_t columns = has_gt ? 23 : 16;

  std::vector<FrameObservation> out;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const LineContext ctx{source, line_no};
    const auto tokens = split(line, ',');
    if (tokens.size() != columns) {
      ctx.fail("expected " + std::to_string(columns) + " columns, got " + std::to_string(tokens.size()),
               std::string(line));
    }
    FrameObservation obs;
    obs.frame_id = parse_integer(tokens[0], ctx);
    obs.timestamp = parse_number(tokens[1], ctx);
    if (!out.empty() && obs.frame_id <= out.back().frame_id) {
      ctx.fail("frame_id is not strictly increasing", std::string(tokens[0]));
    }
    if (!out.empty() && obs.timestamp < out.back().timestamp) {
      ctx.fail("timestamp decreases", std::string(tokens[1]));
    }
    const std::span<const std::string_view> all(tokens);
    obs.apr = parse_pose(all.subspan(2, 7), ctx);
    obs.vio = parse_pose(all.subspan(9, 7), ctx);
    if (has_gt) obs.gt = parse_pose(all.subspan(16, 7), ctx);
    out.push_back(obs);
  }
  return out;
}

void write_observations(std::ostream& out, std::span<const FrameObservation> observations) {
  std::size_t with_gt = 0;
  for (const auto& o : observations) with_gt += o.gt ? 1 : 0;
  if (with_gt != 0 && with_gt != observations.size()) {
    throw IoError("ground truth present on only some observations");
  }
  const bool has_gt = !observations.empty() && with_gt == observations.size();
  out << (has_gt ? kObsHeaderGt : kObsHeader) << '\n';
  for (const FrameObservation& o : observations) {
    std::string line = std::to_string(o.frame_id) + "," + format_double(o.timestamp);
    append_pose(line, o.apr, ',');
    append_pose(line, o.vio, ',');
    if (has_gt) append_pose(line, *o.gt, ',');
    out << line << '\n';
  }
}

std::vector<FrameObservation> read_observations(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_observations(in, path.string());
}

void write_observations(const std::filesystem::path& path, std::span<const FrameObservation> observations) {
  auto out = open_output(path);
  write_observations(out, observations);
  finish_output(out, path);
}

// ---------------------------------------------------------------------------
// Fusion log

FusionLog make_fusion_log(std::span<const FusionOutput> outputs, std::span<const FrameObservation> observations) {
  if (outputs.size() != observations.size()) {
    throw IoError("fusion log needs one observation per output");
  }
  FusionLog log;
  log.outputs.assign(outputs.begin(), outputs.end());
  log.timestamps.reserve(observations.size());
  for (const auto& o : observations) log.timestamps.push_back(o.timestamp);
  return log;
}

FusionLog parse_fusion_log(std::istream& in, const std::string& source) {
  std::string raw;
  std::size_t line_no = 1;
  if (!std::getline(in, raw)) throw ParseError(source, 1, "missing header", "");
  if (trim(raw) != kLogHeader) {
    throw ParseError(source, 1, "header does not match the fusion log format", std::string(trim(raw)));
  }
  FusionLog log;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const LineContext ctx{source, line_no};
    const auto tokens = split(line, ',');
    if (tokens.size() != 13) {
      ctx.fail("expected 13 columns, got " + std::to_string(tokens.size()), std::string(line));
    }
    FusionOutput o;
    o.frame_id = parse_integer(tokens[0], ctx);
    const double ts = parse_number(tokens[1], ctx);
    if (!log.outputs.empty() && o.frame_id <= log.outputs.back().frame_id) {
      ctx.fail("frame_id is not strictly increasing", std::string(tokens[0]));
    }
    if (!log.timestamps.empty() && ts < log.timestamps.back()) {
      ctx.fail("timestamp decreases", std::string(tokens[1]));
    }
    const auto category = category_from_string(tokens[2]);
    if (!category) ctx.fail("unknown category", std::string(tokens[2]));
    o.category = *category;
    const auto stage = stage_from_string(tokens[3]);
    if (!stage) ctx.fail("unknown stage", std::string(tokens[3]));
    o.stage = *stage;
    if (!tokens[4].empty()) o.similarity = parse_number(tokens[4], ctx);
    if (tokens[5] == "1") {
      o.similarity_degenerate = true;
    } else if (tokens[5] != "0") {
      ctx.fail("similarity_degenerate must be 0 or 1", std::string(tokens[5]));
    }
    const std::span<const std::string_view> pose_tokens = std::span(tokens).subspan(6, 7);
    const bool empty_pose = std::all_of(pose_tokens.begin(), pose_tokens.end(), [](auto t) { return t.empty(); });
    if (o.category == Category::AlignmentPending) {
      if (!empty_pose) ctx.fail("AlignmentPending rows carry no pose", std::string(pose_tokens[0]));
    } else {
      o.pose = parse_pose(pose_tokens, ctx);
    }
    log.outputs.push_back(o);
    log.timestamps.push_back(ts);
  }
  return log;
}

void write_fusion_log(std::ostream& out, const FusionLog& log) {
  if (log.outputs.size() != log.timestamps.size()) {
    throw IoError("fusion log has mismatched output and timestamp counts");
  }
  out << kLogHeader << '\n';
  for (std::size_t i = 0; i < log.outputs.size(); ++i) {
    const FusionOutput& o = log.outputs[i];
    std::string line = std::to_string(o.frame_id) + "," + format_double(log.timestamps[i]) + "," +
                       std::string(to_string(o.category)) + "," + std::string(to_string(o.stage)) + ",";
    if (o.similarity) line += format_double(*o.similarity);
    line += o.similarity_degenerate ? ",1" : ",0";
    if (o.pose) {
      append_pose(line, *o.pose, ',');
    } else {
      line += ",,,,,,,";
    }
    out << line << '\n';
  }
}

FusionLog read_fusion_log(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_fusion_log(in, path.string());
}

void write_fusion_log(const std::filesystem::path& path, const FusionLog& log) {
  auto out = open_output(path);
  write_fusion_log(out, log);
  finish_output(out, path);
}

Trajectory fused_trajectory(const FusionLog& log) {
  Trajectory t;
  for (std::size_t i = 0; i < log.outputs.size(); ++i) {
    if (log.outputs[i].pose) t.push_back({log.timestamps[i], *log.outputs[i].pose});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Report

namespace {

using Json = nlohmann::ordered_json;

// nlohmann prints the shortest round-trip form; the report format pins 17
// significant digits, so dump by hand.
void dump_json(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner + Json(it.key()).dump() + ": ";
        dump_json(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ", ";
        dump_json(j[i], out, indent + 1);
      }
      out += "]";
      return;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

Json stats_json(const ErrorStats& s) {
  Json j;
  j["count"] = s.count;
  j["mean_ape"] = s.mean_ape;
  j["median_ape"] = s.median_ape;
  j["mean_aoe"] = s.mean_aoe;
  j["median_aoe"] = s.median_aoe;
  j["pct_high"] = s.pct_high;
  j["pct_medium"] = s.pct_medium;
  j["pct_low"] = s.pct_low;
  return j;
}

ErrorStats stats_from(const Json& j) {
  ErrorStats s;
  s.count = j.at("count").get<std::size_t>();
  s.mean_ape = j.at("mean_ape").get<double>();
  s.median_ape = j.at("median_ape").get<double>();
  s.mean_aoe = j.at("mean_aoe").get<double>();
  s.median_aoe = j.at("median_aoe").get<double>();
  s.pct_high = j.at("pct_high").get<double>();
  s.pct_medium = j.at("pct_medium").get<double>();
  s.pct_low = j.at("pct_low").get<double>();
  return s;
}

Json config_json(const FusionConfig& c) {
  Json j;
  j["d_th"] = c.d_th;
  j["o_th"] = c.o_th;
  j["n_pairs"] = c.n_pairs;
  j["gamma"] = c.gamma;
  if (!c.drift_streak) {
    j["drift_streak"] = nullptr;
  } else if (*c.drift_streak == FusionConfig::kNeverRealign) {
    j["drift_streak"] = "never";
  } else {
    j["drift_streak"] = *c.drift_streak;
  }
  return j;
}

FusionConfig config_from(const Json& j) {
  FusionConfig c;
  c.d_th = j.at("d_th").get<double>();
  c.o_th = j.at("o_th").get<double>();
  c.n_pairs = j.at("n_pairs").get<std::size_t>();
  c.gamma = j.at("gamma").get<double>();
  const Json& ds = j.at("drift_streak");
  if (ds.is_string()) {
    if (ds.get<std::string>() != "never") throw std::invalid_argument("drift_streak string must be \"never\"");
    c.drift_streak = FusionConfig::kNeverRealign;
  } else if (!ds.is_null()) {
    c.drift_streak = ds.get<std::size_t>();
  }
  return c;
}

}  // namespace

std::string serialize_report(const ReportFile& r) {
  Json j;
  j["format"] = kReportFormat;
  j["version"] = r.version;
  j["seed"] = r.seed ? Json(*r.seed) : Json(nullptr);
  j["command"] = r.command;
  j["config"] = config_json(r.config);
  j["raw_apr"] = r.raw_apr ? stats_json(*r.raw_apr) : Json(nullptr);

  Json rep;
  rep["total_frames"] = r.report.total_frames;
  rep["pending_frames"] = r.report.pending_frames;
  rep["overall"] = stats_json(r.report.overall);
  rep["reliable_and_optimized"] =
      r.report.reliable_and_optimized ? stats_json(*r.report.reliable_and_optimized) : Json(nullptr);
  Json per = Json::object();
  for (const auto& [c, s] : r.report.per_category) per[std::string(to_string(c))] = stats_json(s);
  rep["per_category"] = per;
  Json pct = Json::object();
  for (const auto& [c, v] : r.report.category_pct) pct[std::string(to_string(c))] = v;
  rep["category_pct"] = pct;
  j["report"] = rep;

  std::string out;
  dump_json(j, out, 0);
  out += '\n';
  return out;
}

ReportFile parse_report(const std::string& text, const std::string& source) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Byte offsets are the best position nlohmann gives; map to a line.
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    const std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
    const std::size_t start = offset > 0 ? offset - 1 : 0;
    throw ParseError(source, line, "malformed JSON", text.substr(start, 16));
  }
  try {
    if (j.at("format").get<std::string>() != kReportFormat) {
      throw ParseError(source, 1, "not a posefuse report", j.at("format").get<std::string>());
    }
    ReportFile r;
    r.version = j.at("version").get<std::string>();
    if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
    r.command = j.at("command").get<std::string>();
    r.config = config_from(j.at("config"));
    if (!j.at("raw_apr").is_null()) r.raw_apr = stats_from(j.at("raw_apr"));
    const Json& rep = j.at("report");
    r.report.total_frames = rep.at("total_frames").get<std::size_t>();
    r.report.pending_frames = rep.at("pending_frames").get<std::size_t>();
    r.report.overall = stats_from(rep.at("overall"));
    if (!rep.at("reliable_and_optimized").is_null()) {
      r.report.reliable_and_optimized = stats_from(rep.at("reliable_and_optimized"));
    }
    for (auto it = rep.at("per_category").begin(); it != rep.at("per_category").end(); ++it) {
      const auto c = category_from_string(it.key());
      if (!c) throw ParseError(source, 1, "unknown category", it.key());
      r.report.per_category.emplace(*c, stats_from(it.value()));
    }
    for (auto it = rep.at("category_pct").begin(); it != rep.at("category_pct").end(); ++it) {
      const auto c = category_from_string(it.key());
      if (!c) throw ParseError(source, 1, "unknown category", it.key());
      r.report.category_pct.emplace(*c, it.value().get<double>());
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 1, std::string("invalid report structure: ") + e.what(), "");
  } catch (const std::invalid_argument& e) {
    throw ParseError(source, 1, e.what(), "drift_streak");
  }
}

ReportFile read_report(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_report(buf.str(), path.string());
}

void write_report(const std::filesystem::path& path, const ReportFile& report) {
  auto out = open_output(path);
  out << serialize_report(report);
  finish_output(out, path);
}

// ---------------------------------------------------------------------------
// Error series

void write_error_series(std::ostream& out, const FusionLog& log, std::span<const FrameObservation> observations) {
  if (log.outputs.size() != observations.size()) {
    throw IoError("error series needs one observation per fused output");
  }
  auto bucket_name = [](Bucket b) {
    switch (b) {
      case Bucket::High: return "high";
      case Bucket::Medium: return "medium";
      case Bucket::Low: return "low";
      case Bucket::None: return "none";
    }
    return "none";
  };
  out << "frame_id,timestamp,category,fused_ape,fused_aoe,fused_bucket,apr_ape,apr_aoe,apr_bucket\n";
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const FrameObservation& obs = observations[i];
    const FusionOutput& o = log.outputs[i];
    if (!obs.gt) throw IoError("error series needs ground truth (frame " + std::to_string(obs.frame_id) + ")");
    if (o.frame_id != obs.frame_id) throw IoError("error series frame id mismatch at row " + std::to_string(i));
    std::string line = std::to_string(obs.frame_id) + "," + format_double(obs.timestamp) + "," +
                       std::string(to_string(o.category)) + ",";
    if (o.pose) {
      const FrameError e{o.frame_id, relative_translation(*o.pose, *obs.gt), relative_rotation_deg(*o.pose, *obs.gt),
                         o.category};
      line += format_double(e.ape) + "," + format_double(e.aoe) + "," + bucket_name(bucket(e));
    } else {
      line += ",,";
    }
    const FrameError a{obs.frame_id, relative_translation(obs.apr, *obs.gt), relative_rotation_deg(obs.apr, *obs.gt),
                       std::nullopt};
    line += "," + format_double(a.ape) + "," + format_double(a.aoe) + "," + bucket_name(bucket(a));
    out << line << '\n';
  }
}

void write_error_series(const std::filesystem::path& path, const FusionLog& log,
                        std::span<const FrameObservation> observations) {
  auto out = open_output(path);
  write_error_series(out, log, observations);
  finish_output(out, path);
}

}  // namespace posefuse
