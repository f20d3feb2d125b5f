#include "ldvae/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ldvae/parallel.hpp"
#include "ldvae/rng.hpp"

namespace ldvae {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& text, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size())
      throw ParseError("trailing characters in number '" + text + "'", line_no);
    return v;
  } catch (const ParseError&) {
    throw;
  } catch (...) {
    throw ParseError("expected a number, got '" + text + "'", line_no);
  }
}

// Linear interpolation over wavelength for the sentinel gaps of one record;
// end gaps take the nearest valid value.
void fill_gaps(std::vector<double>& values, const std::vector<double>& grid) {
  const std::size_t n = values.size();
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < n; ++i)
    if (values[i] >= 0.0) valid.push_back(i);
  if (valid.size() < 2)
    throw DataError("spectral record has fewer than 2 valid bands");
  if (valid.size() == n) return;

  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] >= 0.0) continue;
    const auto next = std::lower_bound(valid.begin(), valid.end(), i);
    if (next == valid.begin()) {
      values[i] = values[valid.front()];
    } else if (next == valid.end()) {
      values[i] = values[valid.back()];
    } else {
      const std::size_t hi = *next;
      const std::size_t lo = *(next - 1);
      const double t = (grid[i] - grid[lo]) / (grid[hi] - grid[lo]);
      values[i] = values[lo] + t * (values[hi] - values[lo]);
    }
  }
}

} // namespace

void EndmemberSet::validate() const {
  if (names.size() != spectra.size())
    throw DataError("EndmemberSet: name/spectrum count mismatch");
  if (spectra.empty()) throw DataError("EndmemberSet: empty");
  std::set<std::string> unique(names.begin(), names.end());
  if (unique.size() != names.size())
    throw DataError("EndmemberSet: duplicate endmember names");
  const std::size_t k = spectra[0].bands();
  if (k < 2) throw DataError("EndmemberSet: need at least 2 bands");
  for (const Spectrum& s : spectra)
    if (s.bands() != k)
      throw DataError("EndmemberSet: spectra band counts disagree");
}

void HsiCube::validate() const {
  if (height == 0 || width == 0 || bands == 0)
    throw DataError("cube: zero dimension");
  if (pixels.size() != height * width * bands)
    throw DataError("cube: pixel payload does not match dimensions");
  for (double v : pixels)
    if (!std::isfinite(v)) throw DataError("cube: non-finite reflectance");
  if (!ground_truth.empty()) {
    if (n_endmembers == 0 ||
        ground_truth.size() != height * width * n_endmembers)
      throw DataError("cube: ground-truth payload does not match dimensions");
    for (std::size_t p = 0; p < pixel_count(); ++p) {
      double total = 0.0;
      for (double a : abundance(p)) {
        if (a < -1e-6) throw DataError("cube: negative ground-truth abundance");
        total += a;
      }
      if (std::abs(total - 1.0) > 1e-6)
        throw DataError("cube: ground-truth abundances do not sum to 1");
    }
  }
}

EndmemberSet parse_spectral_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spectral library: " + path);

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  bool header_seen = false;
  std::vector<double> grid;
  std::vector<std::vector<double>> columns;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;

    if (!header_seen) {
      const std::vector<std::string> fields = split_csv(text);
      if (fields.size() < 2 || fields[0] != "wavelength_nm")
        throw ParseError("library header must be 'wavelength_nm,<name>,...'",
                         line_no);
      names.assign(fields.begin() + 1, fields.end());
      for (const std::string& n : names)
        if (n.empty()) throw ParseError("empty endmember name", line_no);
      columns.assign(names.size(), {});
      header_seen = true;
      continue;
    }

    const std::vector<std::string> fields = split_csv(text);
    if (fields.size() != names.size() + 1)
      throw ParseError("expected " + std::to_string(names.size() + 1) +
                           " fields, got " + std::to_string(fields.size()),
                       line_no);
    const double wl = parse_double(fields[0], line_no);
    if (!grid.empty() && wl <= grid.back())
      throw ParseError("wavelengths must be strictly increasing", line_no);
    grid.push_back(wl);
    for (std::size_t j = 0; j < names.size(); ++j)
      columns[j].push_back(parse_double(fields[j + 1], line_no));
  }
  if (!header_seen) throw ParseError("missing library header", line_no);
  if (grid.size() < 2)
    throw DataError("spectral library has fewer than 2 bands");

  EndmemberSet set;
  set.names = names;
  for (std::vector<double>& column : columns) {
    fill_gaps(column, grid);
    Spectrum s;
    s.values = std::move(column);
    s.wavelengths = grid;
    set.spectra.push_back(std::move(s));
  }
  set.validate();
  return set;
}

HsiCube generate_cube(const EndmemberSet& library, std::size_t height,
                      std::size_t width, const DirichletParams& prior,
                      std::uint64_t seed) {
  library.validate();
  if (height == 0 || width == 0) throw DataError("generate_cube: empty grid");
  const std::size_t n = library.count();
  if (prior.alpha.size() != n)
    throw ShapeError("generate_cube: prior length must equal endmember count");
  if (n >= 2) prior.validate();
  else if (!(prior.alpha[0] > 0.0))
    throw DomainError("generate_cube: prior components must be positive");

  const std::size_t k = library.bands();
  HsiCube cube;
  cube.height = height;
  cube.width = width;
  cube.bands = k;
  cube.n_endmembers = n;
  cube.endmember_names = library.names;
  cube.wavelengths = library.wavelengths();
  cube.pixels.assign(height * width * k, 0.0);
  cube.ground_truth.assign(height * width * n, 0.0);

  parallel_for(height * width, thread_budget(), [&](std::size_t p) {
    double* abund = cube.ground_truth.data() + p * n;
    if (n == 1) {
      abund[0] = 1.0;
    } else {
      KeyedRng rng(seed, {KeyedRng::kAbundance, p});
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        abund[j] = rng.next_gamma(prior.alpha[j]);
        total += abund[j];
      }
      // A jointly-degenerate draw is astronomically unlikely but would
      // divide by zero; fall back to the prior mean.
      if (total <= 0.0) {
        const double prior_total = prior.sum();
        for (std::size_t j = 0; j < n; ++j) abund[j] = prior.alpha[j] / prior_total;
      } else {
        for (std::size_t j = 0; j < n; ++j) abund[j] /= total;
      }
    }
    double* pixel = cube.pixels.data() + p * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = abund[j];
      const std::vector<double>& e = library.spectra[j].values;
      for (std::size_t b = 0; b < k; ++b) pixel[b] += a * e[b];
    }
  });
  return cube;
}

HsiCube add_noise(const HsiCube& cube, double snr_db, std::uint64_t seed) {
  cube.validate();
  if (std::isinf(snr_db) && snr_db > 0.0) return cube;
  if (!(snr_db > 0.0) || std::isnan(snr_db))
    throw DomainError("add_noise: snr_db must be positive or infinite");

  double mean_square = 0.0;
  for (double v : cube.pixels) mean_square += v * v;
  mean_square /= static_cast<double>(cube.pixels.size());
  const double sigma =
      std::sqrt(mean_square / std::pow(10.0, snr_db / 10.0));

  HsiCube noisy = cube;
  parallel_for(cube.pixel_count(), thread_budget(), [&](std::size_t p) {
    KeyedRng rng(seed, {KeyedRng::kNoise, p});
    double* pixel = noisy.pixels.data() + p * cube.bands;
    for (std::size_t b = 0; b < cube.bands; ++b)
      pixel[b] += sigma * rng.next_normal();
  });
  return noisy;
}

double measure_snr_db(const HsiCube& clean, const HsiCube& noisy) {
  if (clean.pixels.size() != noisy.pixels.size())
    throw ShapeError("measure_snr_db: cube sizes disagree");
  double signal = 0.0;
  double residual = 0.0;
  for (std::size_t i = 0; i < clean.pixels.size(); ++i) {
    signal += clean.pixels[i] * clean.pixels[i];
    const double d = noisy.pixels[i] - clean.pixels[i];
    residual += d * d;
  }
  if (residual == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / residual);
}

// --- cube file serialization ---

namespace {

constexpr char kCubeMagic[8] = {'H', 'S', 'I', 'C', 'U', 'B', 'E', '1'};

void write_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f32_le(std::ostream& out, float v) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  write_u32_le(out, bits);
}

float read_f32_le(std::istream& in) {
  return std::bit_cast<float>(read_u32_le(in));
}

void write_f64_le(std::ostream& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

} // namespace

void write_cube(const HsiCube& cube, const std::string& path) {
  cube.validate();
  json header;
  header["height"] = cube.height;
  header["width"] = cube.width;
  header["bands"] = cube.bands;
  header["has_ground_truth"] = cube.has_ground_truth();
  if (cube.has_ground_truth()) header["n_endmembers"] = cube.n_endmembers;
  if (!cube.endmember_names.empty()) header["names"] = cube.endmember_names;
  if (!cube.wavelengths.empty()) header["wavelengths"] = cube.wavelengths;

  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open cube for writing: " + path);
  out.write(kCubeMagic, sizeof(kCubeMagic));
  write_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double v : cube.pixels) write_f32_le(out, static_cast<float>(v));
  for (double v : cube.ground_truth) write_f64_le(out, v);
  if (!out) throw IoError("cube write failed: " + path);
}

HsiCube read_cube(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open cube: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCubeMagic, sizeof(magic)) != 0)
    throw IoError("cube magic mismatch: " + path);
  const std::uint32_t header_len = read_u32_le(in);
  if (!in) throw IoError("cube header truncated: " + path);
  std::string text(header_len, '\0');
  in.read(text.data(), header_len);
  if (!in) throw IoError("cube header truncated: " + path);

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("cube header is not valid JSON: " + std::string(e.what()));
  }

  HsiCube cube;
  bool has_gt = false;
  try {
    cube.height = header.at("height").get<std::size_t>();
    cube.width = header.at("width").get<std::size_t>();
    cube.bands = header.at("bands").get<std::size_t>();
    has_gt = header.at("has_ground_truth").get<bool>();
    if (has_gt) cube.n_endmembers = header.at("n_endmembers").get<std::size_t>();
    if (header.contains("names"))
      cube.endmember_names = header.at("names").get<std::vector<std::string>>();
    if (header.contains("wavelengths"))
      cube.wavelengths = header.at("wavelengths").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw IoError("cube header is incomplete: " + std::string(e.what()));
  }

  if (cube.height == 0 || cube.width == 0 || cube.bands == 0)
    throw IoError("cube header has zero dimension: " + path);
  const std::uint64_t pixel_values = static_cast<std::uint64_t>(cube.height) *
                                     cube.width * cube.bands;
  const std::uint64_t gt_values =
      has_gt ? static_cast<std::uint64_t>(cube.height) * cube.width *
                   cube.n_endmembers
             : 0;
  constexpr std::uint64_t kMaxValues = 1ULL << 33; // 8 G values, sanity cap
  if (pixel_values > kMaxValues || gt_values > kMaxValues ||
      cube.height > (1ULL << 20) || cube.width > (1ULL << 20))
    throw IoError("cube header dimensions overflow: " + path);

  cube.pixels.resize(pixel_values);
  for (std::size_t i = 0; i < pixel_values; ++i)
    cube.pixels[i] = static_cast<double>(read_f32_le(in));
  if (!in) throw IoError("cube pixel payload truncated: " + path);
  if (has_gt) {
    cube.ground_truth.resize(gt_values);
    for (std::size_t i = 0; i < gt_values; ++i)
      cube.ground_truth[i] = read_f64_le(in);
    if (!in) throw IoError("cube ground-truth payload truncated: " + path);
  }
  in.peek();
  if (!in.eof()) throw IoError("cube has trailing bytes: " + path);

  cube.validate();
  return cube;
}

std::pair<HsiCube, double> normalize_cube(const HsiCube& cube) {
  double max_value = 0.0;
  for (double v : cube.pixels) max_value = std::max(max_value, v);
  if (max_value <= 0.0)
    throw DataError("normalize_cube: cube has no positive reflectance");
  HsiCube scaled = cube;
  for (double& v : scaled.pixels) v /= max_value;
  return {std::move(scaled), max_value};
}

namespace {

std::string safe_file_name(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.')
      c = '_';
  return out;
}

} // namespace

void write_abundance_maps(const std::string& dir, const std::string& prefix,
                          std::span<const double> abundances,
                          std::size_t height, std::size_t width,
                          const std::vector<std::string>& names) {
  const std::size_t n = names.size();
  if (abundances.size() != height * width * n)
    throw ShapeError("write_abundance_maps: abundance size mismatch");
  for (std::size_t j = 0; j < n; ++j) {
    const std::string path = dir + "/" + prefix + safe_file_name(names[j]) + ".pgm";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open map for writing: " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    for (std::size_t p = 0; p < height * width; ++p) {
      const double a = std::clamp(abundances[p * n + j], 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(
          std::lround(a * 255.0))));
    }
    if (!out) throw IoError("map write failed: " + path);
  }
}

void write_abundance_csv(const std::string& path,
                         std::span<const double> abundances,
                         std::size_t height, std::size_t width,
                         const std::vector<std::string>& names) {
  const std::size_t n = names.size();
  if (abundances.size() != height * width * n)
    throw ShapeError("write_abundance_csv: abundance size mismatch");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open CSV for writing: " + path);
  out << "row,col";
  for (const std::string& name : names) out << "," << name;
  out << "\n";
  char buf[32];
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      out << r << "," << c;
      const double* a = abundances.data() + (r * width + c) * n;
      for (std::size_t j = 0; j < n; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", a[j]);
        out << "," << buf;
      }
      out << "\n";
    }
  }
  if (!out) throw IoError("CSV write failed: " + path);
}

} // namespace ldvae
