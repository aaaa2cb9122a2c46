// scoremc: draw samples from p(θ) ∝ exp(f(θ) − ½θᵀθ) given only f and ∇f,
// by reverse-flow diffusion with Monte Carlo score estimates.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scoremc/io.hpp"
#include "scoremc/oracle.hpp"
#include "scoremc/sampler.hpp"
#include "scoremc/score.hpp"
#include "scoremc/target.hpp"

namespace fs = std::filesystem;
using namespace scoremc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

// Reserved stream address for the pdf-estimate draws; particle ids from
// sample_batch never reach it.
constexpr std::uint32_t kModeEstimateParticle = 0xFFFFFFFFu;

struct TargetArgs {
  std::string name = "tanh1d";
  std::string mixture_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--target", name, "Target density: tanh1d, himmelblau, gauss-mix")
        ->capture_default_str();
    cmd->add_option("--mixture", mixture_path,
                    "Mixture JSON (array of {mean:[...], weight:w}); required for gauss-mix");
  }

  std::optional<GaussianMixtureSpec> load_mixture() const {
    if (name != "gauss-mix") return std::nullopt;
    if (mixture_path.empty())
      throw UsageError("target 'gauss-mix' needs --mixture <path.json>");
    return load_mixture_json(mixture_path);
  }
};

std::string default_out_dir() {
  if (const char* env = std::getenv("SCOREMC_OUT")) return env;
  return ".";
}

std::string vec_str(const VecView& v) {
  std::string s = "(";
  char buf[32];
  for (Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6g", v[i]);
    if (i > 0) s += ", ";
    s += buf;
  }
  return s + ")";
}

ModeSpec resolve_modes(const std::string& modes_arg, const std::string& target_name,
                       const CLI::Option* half_width_opt, double half_width,
                       Index pdf_samples) {
  ModeSpec spec = modes_arg == "builtin" ? builtin_modes(target_name)
                                         : load_modes_json(modes_arg);
  if (modes_arg == "builtin" || half_width_opt->count() > 0)
    spec.half_width = half_width;
  if (modes_arg == "builtin") spec.pdf_samples_per_mode = pdf_samples;
  return spec;
}

void write_mode_report_json(const std::string& path, const ModeReport& report,
                            const Vector& rel_stderr) {
  nlohmann::json j;
  j["sampled_proportions"] = std::vector<double>(
      report.sampled_proportions.data(),
      report.sampled_proportions.data() + report.sampled_proportions.size());
  j["pdf_proportions"] = std::vector<double>(
      report.pdf_proportions.data(),
      report.pdf_proportions.data() + report.pdf_proportions.size());
  j["counts"] = report.counts;
  j["max_abs_deviation"] = report.max_abs_deviation;
  j["pdf_rel_stderr"] = std::vector<double>(
      rel_stderr.data(), rel_stderr.data() + rel_stderr.size());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

int cmd_run(const TargetArgs& targs, SamplerConfig config, bool config_from_cli,
            const std::string& from_manifest, const std::string& out_dir,
            std::string format, const std::string& modes_arg,
            const CLI::Option* half_width_opt, double half_width,
            Index pdf_samples, int threads) {
  std::optional<GaussianMixtureSpec> mixture;
  std::string target_name;
  std::optional<ModeSpec> modes;

  if (!from_manifest.empty()) {
    if (config_from_cli)
      std::cerr << "note: --from-manifest replays the manifest's configuration; "
                   "other run flags are ignored\n";
    RunManifest replay = load_manifest(from_manifest);
    config = replay.config;
    target_name = replay.target_name;
    mixture = replay.mixture;
    modes = replay.modes;
    format = replay.format;
  } else {
    target_name = targs.name;
    mixture = targs.load_mixture();
    if (!modes_arg.empty())
      modes = resolve_modes(modes_arg, target_name, half_width_opt, half_width,
                            pdf_samples);
  }

  TargetDensity target =
      make_named_target(target_name, mixture ? &*mixture : nullptr);
  config.dim = target.dim();
  config.validate();

  fs::create_directories(out_dir);
  const std::string samples_path =
      (fs::path(out_dir) / (format == "json" ? "samples.json" : "samples.csv"))
          .string();

  RunResult result = sample_batch(target, config, threads);
  write_samples(samples_path, result.samples, format);

  RunManifest manifest;
  manifest.config = config;
  manifest.target_name = target_name;
  manifest.mixture = mixture;
  manifest.modes = modes;
  manifest.format = format;
  manifest.samples_path = samples_path;
  manifest.created_utc = utc_timestamp();
  manifest.f_evals = result.f_evals;
  manifest.grad_evals = result.grad_evals;
  manifest.wall_time_s = result.wall_time_s;
  manifest.failed_particles = static_cast<std::int64_t>(result.failures.size());

  if (modes) {
    NoiseStream pdf_noise(config.seed, kModeEstimateParticle, 0);
    Vector rel_stderr;
    ModeReport report;
    report.counts = mode_counts(result.samples, *modes);
    report.sampled_proportions = mode_proportions(result.samples, *modes);
    report.pdf_proportions =
        mode_probability_estimates(target, *modes, pdf_noise, &rel_stderr);
    report.max_abs_deviation =
        (report.sampled_proportions - report.pdf_proportions).cwiseAbs().maxCoeff();
    manifest.mode_report_path = (fs::path(out_dir) / "mode_report.json").string();
    write_mode_report_json(manifest.mode_report_path, report, rel_stderr);
    std::cout << "modes: sampled " << vec_str(report.sampled_proportions)
              << " pdf " << vec_str(report.pdf_proportions)
              << " max|diff| = " << report.max_abs_deviation << "\n";
  }

  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  write_manifest(manifest_path, manifest);

  std::printf(
      "n=%lld steps=%lld f_evals=%llu grad_evals=%llu wall=%.2fs samples=%s\n",
      static_cast<long long>(config.n), static_cast<long long>(config.steps()),
      static_cast<unsigned long long>(result.f_evals),
      static_cast<unsigned long long>(result.grad_evals), result.wall_time_s,
      samples_path.c_str());

  if (!result.failures.empty()) {
    std::cerr << "warning: " << result.failures.size() << " of " << config.n
              << " particles failed (first: particle "
              << result.failures.front().index << ": "
              << result.failures.front().message << ")\n";
    const double failed_frac = static_cast<double>(result.failures.size()) /
                               static_cast<double>(config.n);
    if (failed_frac >= 0.01) return kExitRuntime;
  }
  return kExitOk;
}

int cmd_probe(const TargetArgs& targs, const std::string& theta_csv, double t,
              Index K, Index replicates, double switch_time, std::uint64_t seed,
              const std::string& quad_range) {
  auto mixture = targs.load_mixture();
  TargetDensity target = make_named_target(targs.name, mixture ? &*mixture : nullptr);

  Vector theta(target.dim());
  {
    std::istringstream in(theta_csv);
    std::string cell;
    Index i = 0;
    while (std::getline(in, cell, ',')) {
      if (i >= theta.size()) throw UsageError("--theta has too many coordinates");
      theta[i++] = std::stod(cell);
    }
    if (i != theta.size())
      throw UsageError("--theta needs " + std::to_string(theta.size()) +
                       " comma-separated coordinates");
  }
  if (replicates < 2) throw UsageError("--replicates must be at least 2");

  const DiffusionTime time = make_time(t);
  const SwitchPolicy policy{switch_time};
  const Index d = target.dim();

  Matrix s1(d, replicates), s2(d, replicates);
  Estimator dispatched = pick_estimator(time, policy);
  ScoreBatch batch;
  Matrix grads;
  for (Index r = 0; r < replicates; ++r) {
    NoiseStream noise(seed, static_cast<std::uint32_t>(r), 1);
    estimate_score(target, theta, time, K, policy, noise, batch);
    s1.col(r) = score_s1(theta, time, batch.draws, batch.weights);
    grads.resize(d, K);
    for (Index k = 0; k < K; ++k)
      grad_log_likelihood(target, batch.points.col(k), grads.col(k));
    s2.col(r) = score_s2(theta, time, grads, batch.weights);
  }

  auto report = [&](const char* name, const Matrix& estimates) {
    const Vector mean = estimates.rowwise().mean();
    Vector se(d);
    for (Index j = 0; j < d; ++j) {
      const double var = (estimates.row(j).array() - mean[j]).square().sum() /
                         static_cast<double>(replicates - 1);
      se[j] = std::sqrt(var / static_cast<double>(replicates));
    }
    std::cout << name << " mean = " << vec_str(mean) << "  stderr = " << vec_str(se)
              << "\n";
  };

  std::cout << "theta = " << vec_str(theta) << "  t = " << t << "  K = " << K
            << "  replicates = " << replicates << "\n";
  report("s1", s1);
  report("s2", s2);
  std::cout << "dispatched estimator: "
            << (dispatched == Estimator::S1 ? "s1" : "s2") << "\n";

  if (mixture) {
    std::cout << "oracle (analytic mixture) = "
              << vec_str(analytic_score_gaussian_mixture(*mixture, theta, time))
              << "\n";
  } else if (d == 1) {
    double lo = -12.0, hi = 12.0, step = 1e-3;
    if (!quad_range.empty()) {
      std::istringstream in(quad_range);
      char sep;
      if (!(in >> lo >> sep >> hi >> sep >> step))
        throw UsageError("--quad expects lo:hi:step");
    }
    std::cout << "oracle (1-d quadrature) = ("
              << quadrature_score_1d(target, theta[0], time, lo, hi, step)
              << ")\n";
  }
  return kExitOk;
}

int cmd_hist(const std::string& samples_path, const std::string& format,
             Index bins, double lo, double hi, bool range_set, Index coord,
             const std::string& out_path, const TargetArgs& targs, bool overlay) {
  const Matrix samples = read_samples(samples_path, format);
  if (coord < 0 || coord >= samples.cols())
    throw UsageError("--coord out of range for " +
                     std::to_string(samples.cols()) + "-dimensional samples");
  Vector values = samples.col(coord);
  if (!range_set) {
    lo = values.minCoeff();
    hi = values.maxCoeff();
    if (!(hi > lo)) {  // degenerate sample set; give the single value a width
      lo -= 0.5;
      hi += 0.5;
    }
  }
  Histogram h = make_histogram(values, bins, lo, hi);

  std::optional<Vector> true_density;
  if (overlay) {
    auto mixture = targs.load_mixture();
    TargetDensity target =
        make_named_target(targs.name, mixture ? &*mixture : nullptr);
    if (target.dim() != 1)
      throw UsageError("--overlay requires a 1-D target");
    const Density1D table = quadrature_density_1d(target, -12.0, 12.0, 1e-3);
    Vector td(bins);
    for (Index b = 0; b < bins; ++b)
      td[b] = table.at(target, 0.5 * (h.edges[b] + h.edges[b + 1]));
    true_density = td;
  }

  write_histogram_csv(out_path, h, true_density ? &*true_density : nullptr);
  std::cout << "bins=" << bins << " range=[" << lo << ", " << hi << "] dropped="
            << h.dropped << " -> " << out_path << "\n";
  return kExitOk;
}

int cmd_modes(const std::string& samples_path, const std::string& format,
              const TargetArgs& targs, const std::string& modes_arg,
              const CLI::Option* half_width_opt, double half_width,
              Index pdf_samples, std::uint64_t seed, const std::string& out_path) {
  const Matrix samples = read_samples(samples_path, format);
  auto mixture = targs.load_mixture();
  TargetDensity target = make_named_target(targs.name, mixture ? &*mixture : nullptr);
  ModeSpec spec =
      resolve_modes(modes_arg, targs.name, half_width_opt, half_width, pdf_samples);

  NoiseStream noise(seed, kModeEstimateParticle, 0);
  Vector rel_stderr;
  ModeReport report;
  report.counts = mode_counts(samples, spec);
  report.sampled_proportions = mode_proportions(samples, spec);
  report.pdf_proportions =
      mode_probability_estimates(target, spec, noise, &rel_stderr);
  report.max_abs_deviation =
      (report.sampled_proportions - report.pdf_proportions).cwiseAbs().maxCoeff();

  for (Index i = 0; i < spec.modes(); ++i) {
    std::printf("mode %lld center=%s count=%lld sampled=%.4f pdf=%.4f (rel se %.1e)\n",
                static_cast<long long>(i),
                vec_str(spec.centers.col(i)).c_str(),
                static_cast<long long>(report.counts[static_cast<std::size_t>(i)]),
                report.sampled_proportions[i], report.pdf_proportions[i],
                rel_stderr[i]);
  }
  std::printf("max |sampled - pdf| = %.4f\n", report.max_abs_deviation);
  if (!out_path.empty()) write_mode_report_json(out_path, report, rel_stderr);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sample unnormalized densities exp(f(x) - x'x/2) via a reverse-flow "
               "SDE with Monte Carlo score estimation"};
  app.require_subcommand(1);

  // --- run ---
  auto* run = app.add_subcommand("run", "Run a sampling experiment");
  TargetArgs run_target;
  run_target.attach(run);
  SamplerConfig config;
  config.n = 1000;
  auto* optT = run->add_option("--T", config.T, "Terminal time")->capture_default_str();
  auto* optDt = run->add_option("--dt", config.delta, "Step size")->capture_default_str();
  auto* optK = run->add_option("--K", config.K, "MC draws per score estimate")
                   ->capture_default_str();
  auto* optN = run->add_option("--n", config.n, "Number of particles")
                   ->capture_default_str();
  run->add_option("--switch-time", config.switch_time,
                  "Use the gradient estimator at or below this time")
      ->capture_default_str();
  run->add_option("--seed", config.seed, "RNG seed")->capture_default_str();
  std::string out_dir = default_out_dir();
  run->add_option("--out", out_dir, "Output directory (env SCOREMC_OUT)")
      ->capture_default_str();
  std::string format = "csv";
  run->add_option("--format", format, "Samples format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  std::string modes_arg;
  run->add_option("--modes", modes_arg,
                  "Mode diagnostic: 'builtin' or a mode-spec JSON path");
  double half_width = 0.5;
  auto* run_hw = run->add_option("--half-width", half_width, "Mode box half width")
                     ->capture_default_str();
  Index pdf_samples = 10000;
  run->add_option("--pdf-samples", pdf_samples, "Uniform points per mode box")
      ->capture_default_str();
  int threads = 0;
  run->add_option("--threads", threads, "Worker threads (0 = all cores); never affects results")
      ->capture_default_str();
  std::string from_manifest;
  run->add_option("--from-manifest", from_manifest,
                  "Replay the configuration stored in a manifest");

  // --- probe ---
  auto* probe = app.add_subcommand("probe", "Print score estimates at one point");
  TargetArgs probe_target;
  probe_target.attach(probe);
  std::string theta_csv = "0";
  probe->add_option("--theta", theta_csv, "Point, comma separated")->capture_default_str();
  double probe_t = 0.5;
  probe->add_option("--t", probe_t, "Diffusion time")->capture_default_str();
  Index probe_K = 1000;
  probe->add_option("--K", probe_K, "MC draws per estimate")->capture_default_str();
  Index replicates = 200;
  probe->add_option("--replicates", replicates, "Independent batches")
      ->capture_default_str();
  double probe_switch = 0.1;
  probe->add_option("--switch-time", probe_switch, "Estimator switch time")
      ->capture_default_str();
  std::uint64_t probe_seed = 0;
  probe->add_option("--seed", probe_seed, "RNG seed")->capture_default_str();
  std::string quad_range;
  probe->add_option("--quad", quad_range, "Quadrature grid lo:hi:step for the 1-D oracle");

  // --- hist ---
  auto* hist = app.add_subcommand("hist", "Bin a samples file for plotting");
  std::string hist_samples;
  hist->add_option("--samples", hist_samples, "Samples file")->required();
  std::string hist_format = "csv";
  hist->add_option("--format", hist_format, "Samples format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  Index bins = 50;
  hist->add_option("--bins", bins, "Bin count")->capture_default_str();
  double hist_lo = 0, hist_hi = 0;
  auto* optLo = hist->add_option("--lo", hist_lo, "Left edge (default: sample min)");
  auto* optHi = hist->add_option("--hi", hist_hi, "Right edge (default: sample max)");
  Index coord = 0;
  hist->add_option("--coord", coord, "Coordinate to bin")->capture_default_str();
  std::string hist_out = "hist.csv";
  hist->add_option("--out", hist_out, "Output CSV path")->capture_default_str();
  TargetArgs hist_target;
  hist_target.attach(hist);
  bool overlay = false;
  hist->add_flag("--overlay", overlay,
                 "Append the quadrature-normalized true density per bin center "
                 "(1-D targets)");

  // --- modes ---
  auto* modes = app.add_subcommand("modes", "Mode-proportion diagnostic for a samples file");
  std::string modes_samples;
  modes->add_option("--samples", modes_samples, "Samples file")->required();
  std::string modes_format = "csv";
  modes->add_option("--format", modes_format, "Samples format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  TargetArgs modes_target;
  modes_target.attach(modes);
  std::string modes_spec_arg = "builtin";
  modes->add_option("--modes", modes_spec_arg, "'builtin' or a mode-spec JSON path")
      ->capture_default_str();
  double modes_half_width = 0.5;
  auto* modes_hw = modes->add_option("--half-width", modes_half_width, "Mode box half width")
                       ->capture_default_str();
  Index modes_pdf_samples = 10000;
  modes->add_option("--pdf-samples", modes_pdf_samples, "Uniform points per mode box")
      ->capture_default_str();
  std::uint64_t modes_seed = 0;
  modes->add_option("--seed", modes_seed, "RNG seed for the pdf estimate")
      ->capture_default_str();
  std::string modes_out;
  modes->add_option("--out", modes_out, "Optional JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run->parsed()) {
      const bool config_from_cli = optT->count() || optDt->count() ||
                                   optK->count() || optN->count();
      return cmd_run(run_target, config, config_from_cli, from_manifest, out_dir,
                     format, modes_arg, run_hw, half_width, pdf_samples, threads);
    }
    if (probe->parsed())
      return cmd_probe(probe_target, theta_csv, probe_t, probe_K, replicates,
                       probe_switch, probe_seed, quad_range);
    if (hist->parsed())
      return cmd_hist(hist_samples, hist_format, bins, hist_lo, hist_hi,
                      optLo->count() > 0 && optHi->count() > 0, coord, hist_out,
                      hist_target, overlay);
    if (modes->parsed())
      return cmd_modes(modes_samples, modes_format, modes_target, modes_spec_arg,
                       modes_hw, modes_half_width, modes_pdf_samples, modes_seed,
                       modes_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
