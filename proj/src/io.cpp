#include "scoremc/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace scoremc {
namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << content;
  if (!out) throw UsageError("write to '" + path + "' failed");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json mixture_to_json(const GaussianMixtureSpec& spec) {
  json components = json::array();
  for (Index i = 0; i < spec.components(); ++i) {
    json mean = json::array();
    for (Index j = 0; j < spec.dim(); ++j) mean.push_back(spec.means(j, i));
    components.push_back({{"mean", mean}, {"weight", spec.weights[i]}});
  }
  return components;
}

GaussianMixtureSpec mixture_from_json(const json& j) {
  if (!j.is_array() || j.empty())
    throw UsageError("mixture document must be a non-empty array");
  const auto& first_mean = j.at(0).at("mean");
  const Index d = static_cast<Index>(first_mean.size());
  const Index m = static_cast<Index>(j.size());
  GaussianMixtureSpec spec;
  spec.means.resize(d, m);
  spec.weights.resize(m);
  for (Index i = 0; i < m; ++i) {
    const auto& comp = j.at(static_cast<std::size_t>(i));
    const auto& mean = comp.at("mean");
    if (static_cast<Index>(mean.size()) != d)
      throw UsageError("mixture means must all have the same dimension");
    for (Index k = 0; k < d; ++k)
      spec.means(k, i) = mean.at(static_cast<std::size_t>(k)).get<double>();
    spec.weights[i] = comp.at("weight").get<double>();
  }
  spec.validate();
  return spec;
}

json modes_to_json(const ModeSpec& modes) {
  json centers = json::array();
  for (Index i = 0; i < modes.modes(); ++i) {
    json c = json::array();
    for (Index j = 0; j < modes.dim(); ++j) c.push_back(modes.centers(j, i));
    centers.push_back(c);
  }
  return {{"centers", centers},
          {"half_width", modes.half_width},
          {"pdf_samples_per_mode", modes.pdf_samples_per_mode}};
}

ModeSpec modes_from_json(const json& j) {
  const auto& centers = j.at("centers");
  if (!centers.is_array() || centers.empty())
    throw UsageError("mode document needs a non-empty 'centers' array");
  const Index m = static_cast<Index>(centers.size());
  const Index d = static_cast<Index>(centers.at(0).size());
  ModeSpec spec;
  spec.centers.resize(d, m);
  for (Index i = 0; i < m; ++i) {
    const auto& c = centers.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(c.size()) != d)
      throw UsageError("mode centers must all have the same dimension");
    for (Index k = 0; k < d; ++k)
      spec.centers(k, i) = c.at(static_cast<std::size_t>(k)).get<double>();
  }
  if (j.contains("half_width")) spec.half_width = j.at("half_width").get<double>();
  if (j.contains("pdf_samples_per_mode"))
    spec.pdf_samples_per_mode = j.at("pdf_samples_per_mode").get<Index>();
  spec.validate();
  return spec;
}

}  // namespace

void write_samples_csv(const std::string& path, const Matrix& samples) {
  std::ostringstream out;
  for (Index j = 0; j < samples.cols(); ++j) {
    if (j > 0) out << ',';
    out << "dim" << j;
  }
  out << '\n';
  for (Index i = 0; i < samples.rows(); ++i) {
    for (Index j = 0; j < samples.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(samples(i, j));
    }
    out << '\n';
  }
  write_file(path, out.str());
}

Matrix read_samples_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("dim0", 0) != 0)
    throw UsageError("'" + path + "' is not a samples CSV (missing header)");
  Index cols = 1;
  for (char c : line)
    if (c == ',') ++cols;
  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    Index got = 0;
    while (std::getline(ls, cell, ',')) {
      std::size_t used = 0;
      values.push_back(std::stod(cell, &used));
      ++got;
    }
    if (got != cols)
      throw UsageError("'" + path + "' row " + std::to_string(rows + 1) +
                       " has " + std::to_string(got) + " cells, expected " +
                       std::to_string(cols));
    ++rows;
  }
  if (rows == 0) throw UsageError("'" + path + "' contains no samples");
  Matrix samples(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) samples(i, j) = values[i * cols + j];
  return samples;
}

void write_samples_json(const std::string& path, const Matrix& samples) {
  json j;
  j["dim"] = samples.cols();
  j["n"] = samples.rows();
  json rows = json::array();
  for (Index i = 0; i < samples.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < samples.cols(); ++k) row.push_back(samples(i, k));
    rows.push_back(row);
  }
  j["samples"] = rows;
  write_file(path, j.dump(2) + "\n");
}

Matrix read_samples_json(const std::string& path) {
  json j = json::parse(read_file(path));
  const Index rows = j.at("n").get<Index>();
  const Index cols = j.at("dim").get<Index>();
  const auto& data = j.at("samples");
  if (static_cast<Index>(data.size()) != rows)
    throw UsageError("'" + path + "': sample count does not match 'n'");
  if (rows == 0) throw UsageError("'" + path + "' contains no samples");
  Matrix samples(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index k = 0; k < cols; ++k)
      samples(i, k) = data.at(static_cast<std::size_t>(i))
                          .at(static_cast<std::size_t>(k))
                          .get<double>();
  return samples;
}

void write_samples(const std::string& path, const Matrix& samples,
                   const std::string& format) {
  if (format == "csv")
    write_samples_csv(path, samples);
  else if (format == "json")
    write_samples_json(path, samples);
  else
    throw UsageError("unknown samples format '" + format + "'");
}

Matrix read_samples(const std::string& path, const std::string& format) {
  if (format == "csv") return read_samples_csv(path);
  if (format == "json") return read_samples_json(path);
  throw UsageError("unknown samples format '" + format + "'");
}

Histogram make_histogram(const VecView& values, Index bins, double lo, double hi) {
  if (bins < 1) throw UsageError("histogram needs at least one bin");
  if (!(hi > lo)) throw UsageError("histogram range must be nonempty");
  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (Index b = 0; b <= bins; ++b)
    h.edges[b] = lo + width * static_cast<double>(b);
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (Index i = 0; i < values.size(); ++i) {
    const double x = values[i];
    if (!(x >= lo) || !(x <= hi)) {
      ++h.dropped;
      continue;
    }
    Index b = static_cast<Index>((x - lo) / width);
    if (b >= bins) b = bins - 1;  // x == hi
    ++h.counts[static_cast<std::size_t>(b)];
  }
  h.density.resize(bins);
  const double total = static_cast<double>(values.size());
  for (Index b = 0; b < bins; ++b)
    h.density[b] = static_cast<double>(h.counts[static_cast<std::size_t>(b)]) /
                   (total * width);
  return h;
}

void write_histogram_csv(const std::string& path, const Histogram& hist,
                         const Vector* true_density) {
  const Index bins = static_cast<Index>(hist.counts.size());
  if (true_density != nullptr && true_density->size() != bins)
    throw UsageError("true_density length does not match the bin count");
  std::ostringstream out;
  out << "bin_lo,bin_hi,count,density";
  if (true_density != nullptr) out << ",true_density";
  out << '\n';
  for (Index b = 0; b < bins; ++b) {
    out << format_double(hist.edges[b]) << ',' << format_double(hist.edges[b + 1])
        << ',' << hist.counts[static_cast<std::size_t>(b)] << ','
        << format_double(hist.density[b]);
    if (true_density != nullptr) out << ',' << format_double((*true_density)[b]);
    out << '\n';
  }
  write_file(path, out.str());
}

GaussianMixtureSpec parse_mixture_json(const std::string& text) {
  try {
    return mixture_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid mixture document: ") + e.what());
  }
}

GaussianMixtureSpec load_mixture_json(const std::string& path) {
  try {
    return parse_mixture_json(read_file(path));
  } catch (const UsageError& e) {
    throw UsageError(std::string(e.what()) + " (" + path + ")");
  }
}

ModeSpec parse_modes_json(const std::string& text) {
  try {
    return modes_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid mode document: ") + e.what());
  }
}

ModeSpec load_modes_json(const std::string& path) {
  try {
    return parse_modes_json(read_file(path));
  } catch (const UsageError& e) {
    throw UsageError(std::string(e.what()) + " (" + path + ")");
  }
}

std::string manifest_to_json(const RunManifest& manifest) {
  json j;
  j["tool"] = manifest.tool;
  j["version"] = manifest.version;
  j["rng_scheme"] = manifest.rng_scheme;
  j["created_utc"] = manifest.created_utc;
  j["target"] = {{"name", manifest.target_name}};
  if (manifest.mixture) j["target"]["mixture"] = mixture_to_json(*manifest.mixture);
  j["config"] = {{"T", manifest.config.T},       {"delta", manifest.config.delta},
                 {"K", manifest.config.K},       {"n", manifest.config.n},
                 {"dim", manifest.config.dim},   {"seed", manifest.config.seed},
                 {"switch_time", manifest.config.switch_time}};
  if (manifest.modes) j["modes"] = modes_to_json(*manifest.modes);
  j["outputs"] = {{"samples", manifest.samples_path},
                  {"format", manifest.format},
                  {"mode_report", manifest.mode_report_path}};
  j["results"] = {{"f_evals", manifest.f_evals},
                  {"grad_evals", manifest.grad_evals},
                  {"wall_time_s", manifest.wall_time_s},
                  {"failed_particles", manifest.failed_particles}};
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    RunManifest m;
    m.tool = j.value("tool", "scoremc");
    m.version = j.value("version", "");
    m.rng_scheme = j.value("rng_scheme", "");
    m.created_utc = j.value("created_utc", "");
    m.target_name = j.at("target").at("name").get<std::string>();
    if (j.at("target").contains("mixture"))
      m.mixture = mixture_from_json(j.at("target").at("mixture"));
    const auto& c = j.at("config");
    m.config.T = c.at("T").get<double>();
    m.config.delta = c.at("delta").get<double>();
    m.config.K = c.at("K").get<Index>();
    m.config.n = c.at("n").get<Index>();
    m.config.dim = c.at("dim").get<Index>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.switch_time = c.at("switch_time").get<double>();
    if (j.contains("modes")) m.modes = modes_from_json(j.at("modes"));
    if (j.contains("outputs")) {
      m.samples_path = j.at("outputs").value("samples", "");
      m.format = j.at("outputs").value("format", "csv");
      m.mode_report_path = j.at("outputs").value("mode_report", "");
    }
    if (j.contains("results")) {
      m.f_evals = j.at("results").value("f_evals", std::uint64_t{0});
      m.grad_evals = j.at("results").value("grad_evals", std::uint64_t{0});
      m.wall_time_s = j.at("results").value("wall_time_s", 0.0);
      m.failed_particles = j.at("results").value("failed_particles", std::int64_t{0});
    }
    return m;
  } catch (const json::exception& e) {
    throw UsageError(std::string("invalid manifest: ") + e.what());
  }
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  write_file(path, manifest_to_json(manifest));
}

RunManifest load_manifest(const std::string& path) {
  try {
    return manifest_from_json(read_file(path));
  } catch (const UsageError& e) {
    throw UsageError(std::string(e.what()) + " (" + path + ")");
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace scoremc
