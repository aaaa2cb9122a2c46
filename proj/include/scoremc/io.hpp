#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scoremc/oracle.hpp"
#include "scoremc/sampler.hpp"
#include "scoremc/target.hpp"
#include "scoremc/types.hpp"

namespace scoremc {

// Samples travel as CSV (header dim0,...,dim{d-1}, one row per particle,
// 17-significant-digit floats, lossless round trip) or as an equivalent JSON
// document.
void write_samples_csv(const std::string& path, const Matrix& samples);
Matrix read_samples_csv(const std::string& path);
void write_samples_json(const std::string& path, const Matrix& samples);
Matrix read_samples_json(const std::string& path);

// format is "csv" or "json".
void write_samples(const std::string& path, const Matrix& samples,
                   const std::string& format);
Matrix read_samples(const std::string& path, const std::string& format);

struct Histogram {
  Vector edges;                      // bins + 1 ascending edges
  std::vector<std::int64_t> counts;  // per bin; x = hi lands in the last bin
  Vector density;                    // counts / (total samples · bin width)
  std::int64_t dropped = 0;          // samples outside [lo, hi]
};

Histogram make_histogram(const VecView& values, Index bins, double lo, double hi);

// Columns: bin_lo, bin_hi, count, density, and optionally true_density
// evaluated at bin centers.
void write_histogram_csv(const std::string& path, const Histogram& hist,
                         const Vector* true_density = nullptr);

// Mixture document: array of {"mean": [...], "weight": w}.
GaussianMixtureSpec parse_mixture_json(const std::string& text);
GaussianMixtureSpec load_mixture_json(const std::string& path);

// Mode document: {"centers": [[...], ...], "half_width": h,
// "pdf_samples_per_mode": N}; the last two are optional.
ModeSpec parse_modes_json(const std::string& text);
ModeSpec load_modes_json(const std::string& path);

// Everything needed to replay a run bit-for-bit, plus bookkeeping of what the
// run produced. Serialized alongside every samples file.
struct RunManifest {
  SamplerConfig config;
  std::string target_name;
  std::optional<GaussianMixtureSpec> mixture;
  std::optional<ModeSpec> modes;
  std::string format = "csv";
  std::string samples_path;
  std::string mode_report_path;  // empty when no mode report was written
  std::string tool = "scoremc";
  std::string version = kVersion;
  std::string rng_scheme = "philox4x32-10/box-muller";
  std::string created_utc;
  std::uint64_t f_evals = 0;
  std::uint64_t grad_evals = 0;
  double wall_time_s = 0;
  std::int64_t failed_particles = 0;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);
void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest load_manifest(const std::string& path);

std::string utc_timestamp();

}  // namespace scoremc
