#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "somn/fft.hpp"
#include "somn/ingest.hpp"
#include "somn/nn/kernels.hpp"

namespace somn::scattering {

struct ScatteringConfig {
  std::size_t order = 2;
  std::size_t wavelets_per_octave = 1;
  std::size_t averaging_scale = 128;  // T
  std::size_t input_length = 1200;

  /// ConfigError unless order == 2, Q == 1, T is a power of two and
  /// input_length >= 2T.
  void validate() const;
  std::size_t octaves() const;          // J = log2(T)
  std::size_t first_position() const { return averaging_scale; }
  std::size_t hop() const { return averaging_scale / 2; }
  /// Output positions T, T + T/2, ... up to N - T inclusive:
  /// floor((N - 2T) / (T/2)) + 1.
  std::size_t positions() const;
  /// 1 + J + J(J-1)/2.
  std::size_t path_count() const;
  std::size_t feature_length() const { return path_count() * positions(); }
};

struct Path {
  std::uint8_t order;
  std::uint8_t j1;  // 1-based octave, 0 when unused
  std::uint8_t j2;
};

/// S0, then S1(j1) for j1 = 1..J, then S2(j1, j2) for j1 < j2 in
/// lexicographic order. Each path contributes positions() values.
std::vector<Path> path_index(const ScatteringConfig& cfg);
nlohmann::json path_index_json(const ScatteringConfig& cfg);

class FilterBank {
 public:
  explicit FilterBank(const ScatteringConfig& cfg);

  const ScatteringConfig& config() const { return cfg_; }
  std::size_t size() const { return cfg_.input_length; }
  /// Frequency of DFT bin k in cycles per sample, in [-0.5, 0.5).
  double frequency(std::size_t k) const;
  const std::vector<double>& lowpass() const { return phi_; }
  const std::vector<double>& wavelet(std::size_t j) const { return psi_.at(j - 1); }
  double centre_frequency(std::size_t j) const { return xi_.at(j - 1); }
  double wavelet_scale() const { return scale_; }
  /// max over bins of |phi|^2 + sum_j (|psi_j(w)|^2 + |psi_j(-w)|^2) / 2.
  double littlewood_paley_max() const;
  const dsp::Fft& fft() const { return fft_; }

 private:
  ScatteringConfig cfg_;
  std::vector<double> phi_;
  std::vector<std::vector<double>> psi_;
  std::vector<double> xi_;
  double scale_ = 1.0;
  dsp::Fft fft_;
};

struct ScatterDetail {
  std::vector<double> features;
  double order1_energy = 0.0;  // sum_j1 ||U1(j1)||^2 before averaging
  double order2_energy = 0.0;  // sum over emitted paths of ||S2||^2 at full resolution
};

/// ShapeError when x.size() != input_length.
std::vector<double> scatter(const FilterBank& bank, std::span<const double> x);
ScatterDetail scatter_detail(const FilterBank& bank, std::span<const double> x);

/// Rows of `inputs` each of length input_length; output is row-major
/// count x feature_length.
std::vector<double> scatter_batch(const FilterBank& bank, const std::vector<std::vector<double>>& inputs,
                                  nn::Exec exec = nn::Exec::Parallel);

struct FeatureRecord {
  std::string subject_id;
  std::uint32_t epoch_index = 0;
  Stage stage = Stage::Unknown;
  std::vector<double> values;
};

struct FeatureSet {
  ScatteringConfig config;
  std::vector<FeatureRecord> records;
};

std::vector<std::uint8_t> encode_features(const FeatureSet& set);
FeatureSet decode_features(std::span<const std::uint8_t> bytes);
void save_features(const std::string& path, const FeatureSet& set);
FeatureSet load_features(const std::string& path);

}  // namespace somn::scattering
