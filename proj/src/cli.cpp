#include "posefuse/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "posefuse/pipeline.hpp"

namespace posefuse::cli {

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fusion flags plus the textual --drift-streak value ("never" or a count).
struct FusionFlags {
  FusionConfig config;
  std::string drift_streak;

  FusionConfig resolve() const {
    FusionConfig c = config;
    if (drift_streak == "never" || drift_streak == "inf") {
      c.drift_streak = FusionConfig::kNeverRealign;
    } else if (!drift_streak.empty()) {
      std::size_t value = 0;
      const auto [ptr, ec] = std::from_chars(drift_streak.data(), drift_streak.data() + drift_streak.size(), value);
      if (ec != std::errc() || ptr != drift_streak.data() + drift_streak.size()) {
        throw UsageError("--drift-streak must be a positive integer or 'never', got '" + drift_streak + "'");
      }
      c.drift_streak = value;
    }
    c.validate();
    return c;
  }
};

void add_fusion_options(CLI::App* app, FusionFlags& f) {
  app->add_option("--d-th", f.config.d_th, "RPE threshold in meters")->capture_default_str();
  app->add_option("--o-th", f.config.o_th, "ROE threshold in degrees")->capture_default_str();
  app->add_option("--n-pairs", f.config.n_pairs, "consecutive passing pairs needed to align")->capture_default_str();
  app->add_option("--gamma", f.config.gamma, "similarity floor for drift detection")->capture_default_str();
  app->add_option("--drift-streak", f.drift_streak,
                  "low-similarity reliable predictions that trigger realignment (default: n-pairs; 'never')");
}

std::string fusion_echo(const FusionConfig& c) {
  std::string s = " --d-th " + format_double(c.d_th) + " --o-th " + format_double(c.o_th) + " --n-pairs " +
                  std::to_string(c.n_pairs) + " --gamma " + format_double(c.gamma);
  if (c.drift_streak) {
    s += " --drift-streak " + (*c.drift_streak == FusionConfig::kNeverRealign ? std::string("never")
                                                                               : std::to_string(*c.drift_streak));
  }
  return s;
}

struct SimFlags {
  SimulationConfig config = SimulationConfig::benchmark();
  std::string trajectory = "waypoint";
  double offset_x = -12.0;
  double offset_y = 7.0;
  double offset_z = 0.3;
  double offset_yaw = 35.0;

  SimulationConfig resolve() const {
    SimulationConfig c = config;
    if (trajectory == "waypoint") {
      c.trajectory.kind = TrajectoryKind::RandomWaypoint;
    } else if (trajectory == "circle") {
      c.trajectory.kind = TrajectoryKind::CircularArc;
    } else if (trajectory == "line") {
      c.trajectory.kind = TrajectoryKind::StraightLine;
    } else {
      throw UsageError("--trajectory must be waypoint, circle or line, got '" + trajectory + "'");
    }
    c.vio.initial_offset =
        RigidTransform(quat_from_axis_angle(Vec3::UnitZ(), offset_yaw), Vec3(offset_x, offset_y, offset_z));
    try {
      c.validate();
    } catch (const SynthError& e) {
      throw UsageError(e.what());
    }
    return c;
  }

  std::string echo() const {
    const SimulationConfig& c = config;
    const auto& t = c.trajectory;
    std::string s = " --frames " + std::to_string(t.frames) + " --trajectory " + trajectory + " --interval " +
                    format_double(t.interval) + " --speed " + format_double(t.speed) + " --extent-x " +
                    format_double(t.extent.x()) + " --extent-y " + format_double(t.extent.y()) + " --extent-z " +
                    format_double(t.extent.z());
    s += " --apr-trans-sigma " + format_double(c.apr.trans_sigma) + " --apr-rot-sigma " +
         format_double(c.apr.rot_sigma) + " --apr-outlier-prob " + format_double(c.apr.outlier_prob) +
         " --apr-outlier-trans-min " + format_double(c.apr.outlier_trans_min) + " --apr-outlier-trans-max " +
         format_double(c.apr.outlier_trans_max) + " --apr-outlier-rot-min " + format_double(c.apr.outlier_rot_min) +
         " --apr-outlier-rot-max " + format_double(c.apr.outlier_rot_max);
    s += " --vio-trans-noise " + format_double(c.vio.trans_noise_sigma) + " --vio-rot-noise " +
         format_double(c.vio.rot_noise_sigma) + " --vio-trans-walk " + format_double(c.vio.trans_bias_walk_sigma) +
         " --vio-rot-walk " + format_double(c.vio.rot_bias_walk_sigma) + " --vio-offset-x " +
         format_double(offset_x) + " --vio-offset-y " + format_double(offset_y) + " --vio-offset-z " +
         format_double(offset_z) + " --vio-offset-yaw " + format_double(offset_yaw);
    return s;
  }
};

void add_simulation_options(CLI::App* app, SimFlags& f) {
  auto& t = f.config.trajectory;
  auto& a = f.config.apr;
  auto& v = f.config.vio;
  app->add_option("--frames", t.frames, "number of frames")->capture_default_str();
  app->add_option("--trajectory", f.trajectory, "waypoint | circle | line")->capture_default_str();
  app->add_option("--interval", t.interval, "seconds between frames")->capture_default_str();
  app->add_option("--speed", t.speed, "path speed in m/s")->capture_default_str();
  app->add_option("--extent-x", t.extent.x(), "area size along x in meters")->capture_default_str();
  app->add_option("--extent-y", t.extent.y(), "area size along y in meters")->capture_default_str();
  app->add_option("--extent-z", t.extent.z(), "height range in meters")->capture_default_str();
  app->add_option("--apr-trans-sigma", a.trans_sigma, "APR position noise per axis (m)")->capture_default_str();
  app->add_option("--apr-rot-sigma", a.rot_sigma, "APR rotation noise (deg)")->capture_default_str();
  app->add_option("--apr-outlier-prob,--outlier-prob", a.outlier_prob, "APR outlier probability")
      ->capture_default_str();
  app->add_option("--apr-outlier-trans-min", a.outlier_trans_min, "APR outlier offset lower bound (m)")
      ->capture_default_str();
  app->add_option("--apr-outlier-trans-max", a.outlier_trans_max, "APR outlier offset upper bound (m)")
      ->capture_default_str();
  app->add_option("--apr-outlier-rot-min", a.outlier_rot_min, "APR outlier rotation lower bound (deg)")
      ->capture_default_str();
  app->add_option("--apr-outlier-rot-max", a.outlier_rot_max, "APR outlier rotation upper bound (deg)")
      ->capture_default_str();
  app->add_option("--vio-trans-noise", v.trans_noise_sigma, "VIO position jitter (m)")->capture_default_str();
  app->add_option("--vio-rot-noise", v.rot_noise_sigma, "VIO rotation jitter (deg)")->capture_default_str();
  app->add_option("--vio-trans-walk", v.trans_bias_walk_sigma, "VIO position drift step per frame (m)")
      ->capture_default_str();
  app->add_option("--vio-rot-walk", v.rot_bias_walk_sigma, "VIO rotation drift step per frame (deg)")
      ->capture_default_str();
  app->add_option("--vio-offset-x", f.offset_x, "VIO origin offset x (m)")->capture_default_str();
  app->add_option("--vio-offset-y", f.offset_y, "VIO origin offset y (m)")->capture_default_str();
  app->add_option("--vio-offset-z", f.offset_z, "VIO origin offset z (m)")->capture_default_str();
  app->add_option("--vio-offset-yaw", f.offset_yaw, "VIO frame yaw relative to world (deg)")->capture_default_str();
}

std::uint64_t resolve_seed(const std::string& flag) {
  std::string text = flag;
  std::string origin = "--seed";
  if (text.empty()) {
    const char* env = std::getenv(kSeedEnvVar);
    if (env == nullptr || *env == '\0') return 0;
    text = env;
    origin = kSeedEnvVar;
  }
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw UsageError(origin + " must be an unsigned 64-bit integer, got '" + text + "'");
  }
  return seed;
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_stats_row(std::ostream& out, const std::string& label, const ErrorStats& s) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "  %-16s %6zu  %8.3f %8.3f  %8.3f %8.3f  %6.1f %6.1f %6.1f\n", label.c_str(),
                s.count, s.mean_ape, s.median_ape, s.mean_aoe, s.median_aoe, s.pct_high, s.pct_medium, s.pct_low);
  out << buf;
}

void print_evaluation(std::ostream& out, const Evaluation& ev) {
  out << "  partition         frames  mean_ape med_ape  mean_aoe med_aoe  %high  %med   %low\n";
  print_stats_row(out, "APR (raw)", ev.raw_apr);
  const EvaluationReport& r = *ev.fused;
  if (auto it = r.per_category.find(Category::ReliableDirect); it != r.per_category.end()) {
    print_stats_row(out, "Only RPs", it->second);
  }
  if (auto it = r.per_category.find(Category::OptimizedFromVio); it != r.per_category.end()) {
    print_stats_row(out, "Only Opt.", it->second);
  }
  if (r.reliable_and_optimized) print_stats_row(out, "RPs + Opt.", *r.reliable_and_optimized);
  if (auto it = r.per_category.find(Category::AlignmentBridge); it != r.per_category.end()) {
    print_stats_row(out, "Bridge", it->second);
  }
  print_stats_row(out, "All estimates", r.overall);
  out << "  category ratios:";
  for (const auto& [c, pct] : r.category_pct) out << " " << to_string(c) << "=" << fixed(pct, 1) << "%";
  out << "\n";
}

// ---------------------------------------------------------------------------
// Subcommands

struct SimulateArgs {
  SimFlags sim;
  std::string seed;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const SimulationConfig config = a.sim.resolve();
  const std::uint64_t seed = resolve_seed(a.seed);
  const auto stream = simulate(config, seed);
  write_observations(std::filesystem::path(a.out), stream);

  out << "# posefuse simulate --out " << a.out << " --seed " << seed << a.sim.echo() << "\n";
  if (stream.empty()) {
    err << "warning: --frames 0 produced an empty observation file\n";
    out << "frames: 0\n";
    return kSuccess;
  }
  const ErrorStats raw = summarize(raw_errors(stream, RawSource::Apr));
  const auto& t = config.trajectory;
  out << "frames: " << stream.size() << "  duration: " << fixed(stream.back().timestamp, 1) << " s\n"
      << "extent: " << fixed(t.extent.x(), 1) << " x " << fixed(t.extent.y(), 1) << " x " << fixed(t.extent.z(), 1)
      << " m  trajectory: " << a.sim.trajectory << "\n"
      << "apr: sigma " << fixed(config.apr.trans_sigma) << " m / " << fixed(config.apr.rot_sigma)
      << " deg, outliers " << fixed(100.0 * config.apr.outlier_prob, 1) << "%  ->  mean APE "
      << fixed(raw.mean_ape) << " m, mean AOE " << fixed(raw.mean_aoe) << " deg\n"
      << "vio: drift step " << fixed(config.vio.trans_bias_walk_sigma, 4) << " m / "
      << fixed(config.vio.rot_bias_walk_sigma, 4) << " deg per frame, jitter "
      << fixed(config.vio.trans_noise_sigma, 4) << " m / " << fixed(config.vio.rot_noise_sigma, 4) << " deg\n";
  return kSuccess;
}

struct FuseArgs {
  FusionFlags fusion;
  std::string in;
  std::string out;
  std::string log;
};

int cmd_fuse(const FuseArgs& a, std::ostream& out, std::ostream&) {
  const FusionConfig config = a.fusion.resolve();
  const auto stream = read_observations(a.in);
  const auto outputs = run_fusion(config, stream);
  const FusionLog log = make_fusion_log(outputs, stream);
  write_trajectory(std::filesystem::path(a.out), fused_trajectory(log));
  if (!a.log.empty()) write_fusion_log(std::filesystem::path(a.log), log);

  out << "# posefuse fuse --in " << a.in << " --out " << a.out;
  if (!a.log.empty()) out << " --log " << a.log;
  out << fusion_echo(config) << "\n";
  std::map<Category, std::size_t> counts;
  for (const auto& o : outputs) ++counts[o.category];
  out << "frames: " << outputs.size() << "  alignments: " << count_alignments(outputs) << "\n";
  for (const auto& [c, n] : counts) out << "  " << to_string(c) << ": " << n << "\n";
  return kSuccess;
}

struct EvaluateArgs {
  FusionFlags fusion;
  std::string in;
  std::string log;
  std::string report;
  std::string series;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream&) {
  const FusionConfig config = a.fusion.resolve();
  const auto stream = read_observations(a.in);
  if (stream.empty()) throw MetricsError("'" + a.in + "' holds no observations");
  for (const auto& o : stream) {
    if (!o.gt) throw MetricsError("'" + a.in + "' has no ground-truth columns");
  }
  FusionLog log;
  if (!a.log.empty()) {
    log = read_fusion_log(a.log);
  } else {
    log = make_fusion_log(run_fusion(config, stream), stream);
  }
  const Evaluation ev = evaluate(stream, log.outputs);
  if (!ev.fused) throw MetricsError("the fusion run produced no pose estimate");

  std::string command = "posefuse evaluate --in " + a.in;
  if (!a.log.empty()) command += " --log " + a.log;
  if (!a.report.empty()) command += " --report " + a.report;
  if (!a.series.empty()) command += " --series " + a.series;
  command += fusion_echo(config);

  if (!a.report.empty()) {
    ReportFile report;
    report.command = command;
    report.config = config;
    report.report = *ev.fused;
    report.raw_apr = ev.raw_apr;
    write_report(std::filesystem::path(a.report), report);
  }
  if (!a.series.empty()) write_error_series(std::filesystem::path(a.series), log, stream);

  out << "# " << command << "\n";
  print_evaluation(out, ev);
  return kSuccess;
}

struct BenchArgs {
  SimFlags sim;
  FusionFlags fusion;
  std::string seed;
  std::size_t seeds = 10;
  std::size_t threads = 0;
  std::string out;
};

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "seed,frames,alignments,pending,raw_ape,fused_ape,ape_ratio,raw_aoe,fused_aoe,aoe_ratio,raw_miss_pct,"
         "fused_miss_pct,miss_ratio\n";
  for (const BenchRow& r : rows) {
    out << r.seed << "," << r.frames << "," << r.alignments << "," << r.pending << "," << format_double(r.raw_ape)
        << "," << format_double(r.fused_ape) << "," << format_double(r.ape_ratio()) << ","
        << format_double(r.raw_aoe) << "," << format_double(r.fused_aoe) << "," << format_double(r.aoe_ratio())
        << "," << format_double(r.raw_miss_pct) << "," << format_double(r.fused_miss_pct) << ","
        << format_double(r.miss_ratio()) << "\n";
  }
}

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream&) {
  const SimulationConfig sim = a.sim.resolve();
  const FusionConfig fusion = a.fusion.resolve();
  if (a.seeds == 0) throw UsageError("--seeds must be >= 1");
  if (sim.trajectory.frames == 0) throw UsageError("--frames must be >= 1 for bench");
  const std::uint64_t first = resolve_seed(a.seed);
  const auto rows = run_bench(sim, fusion, first, a.seeds, a.threads);

  if (!a.out.empty()) {
    std::ofstream file(a.out, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + a.out + "' for writing");
    write_bench_csv(file, rows);
    if (!file.flush()) throw IoError("failed writing '" + a.out + "'");
  }

  out << "# posefuse bench --seeds " << a.seeds << " --seed " << first;
  if (!a.out.empty()) out << " --out " << a.out;
  out << a.sim.echo() << fusion_echo(fusion) << "\n";
  out << "  seed  align  pend   raw_ape fused_ape  ratio   raw_aoe fused_aoe  ratio  raw_miss fused_miss  ratio\n";
  double sum_ape = 0.0, sum_aoe = 0.0;
  for (const BenchRow& r : rows) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "  %4llu  %5zu  %4zu  %8.3f %9.3f  %5.3f  %8.3f %9.3f  %5.3f  %7.2f%% %9.2f%%  %5.3f\n",
                  static_cast<unsigned long long>(r.seed), r.alignments, r.pending, r.raw_ape, r.fused_ape,
                  r.ape_ratio(), r.raw_aoe, r.fused_aoe, r.aoe_ratio(), r.raw_miss_pct, r.fused_miss_pct,
                  r.miss_ratio());
    out << buf;
    sum_ape += r.ape_ratio();
    sum_aoe += r.aoe_ratio();
  }
  const double n = static_cast<double>(rows.size());
  out << "  mean ratios: ape " << fixed(sum_ape / n) << "  aoe " << fixed(sum_aoe / n) << "\n";
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"APR + VIO pose fusion: simulate, fuse, evaluate, bench", "posefuse"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* simulate_cmd = app.add_subcommand("simulate", "generate a synthetic observation stream");
  add_simulation_options(simulate_cmd, sim_args.sim);
  simulate_cmd->add_option("--seed", sim_args.seed, "random seed (falls back to $POSEFUSE_SEED, then 0)");
  simulate_cmd->add_option("--out", sim_args.out, "observation CSV to write")->required();

  FuseArgs fuse_args;
  auto* fuse_cmd = app.add_subcommand("fuse", "run the fusion engine over an observation stream");
  add_fusion_options(fuse_cmd, fuse_args.fusion);
  fuse_cmd->add_option("--in", fuse_args.in, "observation CSV")->required();
  fuse_cmd->add_option("--out", fuse_args.out, "fused trajectory to write")->required();
  fuse_cmd->add_option("--log", fuse_args.log, "per-frame fusion log CSV to write");

  EvaluateArgs eval_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score fused and raw APR poses against ground truth");
  add_fusion_options(evaluate_cmd, eval_args.fusion);
  evaluate_cmd->add_option("--in", eval_args.in, "observation CSV with ground truth")->required();
  evaluate_cmd->add_option("--log", eval_args.log, "fusion log to score (default: run fusion now)");
  evaluate_cmd->add_option("--report", eval_args.report, "JSON report to write");
  evaluate_cmd->add_option("--series", eval_args.series, "per-frame error CSV to write");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "simulate + fuse + evaluate over several seeds");
  add_simulation_options(bench_cmd, bench_args.sim);
  add_fusion_options(bench_cmd, bench_args.fusion);
  bench_cmd->add_option("--seed", bench_args.seed, "first seed (falls back to $POSEFUSE_SEED, then 0)");
  bench_cmd->add_option("--seeds", bench_args.seeds, "number of seeds")->capture_default_str();
  bench_cmd->add_option("--threads", bench_args.threads, "worker threads (0 = all cores)")->capture_default_str();
  bench_cmd->add_option("--out", bench_args.out, "per-seed CSV to write");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (simulate_cmd->parsed()) return cmd_simulate(sim_args, out, err);
    if (fuse_cmd->parsed()) return cmd_fuse(fuse_args, out, err);
    if (evaluate_cmd->parsed()) return cmd_evaluate(eval_args, out, err);
    return cmd_bench(bench_args, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace posefuse::cli
