#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldvae/distributions.hpp"

namespace ldvae {

/// Reflectance over K bands, optionally with the band wavelengths in nm.
struct Spectrum {
  std::vector<double> values;
  std::vector<double> wavelengths; // empty or same length as values

  std::size_t bands() const { return values.size(); }
};

/// Named endmember spectra sharing one wavelength grid.
struct EndmemberSet {
  std::vector<std::string> names;
  std::vector<Spectrum> spectra;

  std::size_t count() const { return spectra.size(); }
  std::size_t bands() const { return spectra.empty() ? 0 : spectra[0].bands(); }
  const std::vector<double>& wavelengths() const {
    return spectra.front().wavelengths;
  }
  void validate() const;
};

/// H x W x K reflectance volume, pixel-major (all bands of pixel 0, then
/// pixel 1, ...), with optional per-pixel ground-truth abundances.
struct HsiCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bands = 0;
  std::size_t n_endmembers = 0; // 0 when no ground truth
  std::vector<double> pixels;       // height*width*bands
  std::vector<double> ground_truth; // height*width*n_endmembers or empty
  std::vector<std::string> endmember_names; // optional
  std::vector<double> wavelengths;          // optional

  std::size_t pixel_count() const { return height * width; }
  bool has_ground_truth() const { return !ground_truth.empty(); }

  std::span<const double> pixel(std::size_t index) const {
    return {pixels.data() + index * bands, bands};
  }
  std::span<double> pixel(std::size_t index) {
    return {pixels.data() + index * bands, bands};
  }
  std::span<const double> abundance(std::size_t index) const {
    return {ground_truth.data() + index * n_endmembers, n_endmembers};
  }
  void validate() const;
};

// Library CSV format: optional '#' comment lines, then a header
// "wavelength_nm,<name1>,<name2>,...", then one row of floats per wavelength.
// Negative reflectance entries are treated as missing-data sentinels and
// filled by linear interpolation along the wavelength axis.
EndmemberSet parse_spectral_library(const std::string& path);

/// Linear-mixture synthesis: per pixel, abundances drawn from
/// Dirichlet(prior) by exact per-component Gamma draws, pixel = sum a_j e_j.
HsiCube generate_cube(const EndmemberSet& library, std::size_t height,
                      std::size_t width, const DirichletParams& prior,
                      std::uint64_t seed);

/// Adds i.i.d. zero-mean Gaussian noise with variance
/// mean(signal^2) / 10^(snr_db/10) over the whole cube. Infinite snr_db
/// returns an unchanged copy. Ground truth is untouched.
HsiCube add_noise(const HsiCube& cube, double snr_db, std::uint64_t seed);

/// 10 log10(signal power / residual power) of `noisy` against `clean`.
double measure_snr_db(const HsiCube& clean, const HsiCube& noisy);

// Cube file: magic "HSICUBE1", u32 little-endian header length, JSON header
// {height, width, bands, has_ground_truth, names?, wavelengths?}, pixel
// payload as little-endian 32-bit floats (band-interleaved by pixel), then
// the optional ground-truth payload as little-endian doubles, pixel-major.
HsiCube read_cube(const std::string& path);
void write_cube(const HsiCube& cube, const std::string& path);

/// Divides all reflectance by the cube-wide max and returns that max as the
/// scale. Idempotent on already-normalized cubes.
std::pair<HsiCube, double> normalize_cube(const HsiCube& cube);

/// One 8-bit binary PGM per endmember, values scaled 0..255, written as
/// <dir>/<prefix><name>.pgm; `abundances` is height*width*n pixel-major.
void write_abundance_maps(const std::string& dir, const std::string& prefix,
                          std::span<const double> abundances,
                          std::size_t height, std::size_t width,
                          const std::vector<std::string>& names);

/// Raw per-pixel abundance CSV: header "row,col,<names...>".
void write_abundance_csv(const std::string& path,
                         std::span<const double> abundances,
                         std::size_t height, std::size_t width,
                         const std::vector<std::string>& names);

} // namespace ldvae
