#include "somn/scattering.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "somn/byte_io.hpp"
#include "somn/errors.hpp"

namespace somn::scattering {

void ScatteringConfig::validate() const {
  if (order != 2) throw ConfigError("scattering order must be 2");
  if (wavelets_per_octave != 1) throw ConfigError("scattering supports one wavelet per octave");
  if (averaging_scale < 2 || !std::has_single_bit(averaging_scale))
    throw ConfigError("averaging scale T must be a power of two >= 2");
  if (input_length < 2 * averaging_scale)
    throw ConfigError("input of " + std::to_string(input_length) + " samples is shorter than 2T = " +
                      std::to_string(2 * averaging_scale));
}

std::size_t ScatteringConfig::octaves() const {
  return static_cast<std::size_t>(std::countr_zero(averaging_scale));
}

std::size_t ScatteringConfig::positions() const {
  return (input_length - 2 * averaging_scale) / hop() + 1;
}

std::size_t ScatteringConfig::path_count() const {
  const std::size_t j = octaves();
  return 1 + j + j * (j - 1) / 2;
}

std::vector<Path> path_index(const ScatteringConfig& cfg) {
  const auto octaves = static_cast<std::uint8_t>(cfg.octaves());
  std::vector<Path> paths{{0, 0, 0}};
  for (std::uint8_t j1 = 1; j1 <= octaves; ++j1) paths.push_back({1, j1, 0});
  for (std::uint8_t j1 = 1; j1 <= octaves; ++j1)
    for (std::uint8_t j2 = j1 + 1; j2 <= octaves; ++j2) paths.push_back({2, j1, j2});
  return paths;
}

nlohmann::json path_index_json(const ScatteringConfig& cfg) {
  nlohmann::json paths = nlohmann::json::array();
  const std::size_t n_pos = cfg.positions();
  std::size_t offset = 0;
  for (const auto& p : path_index(cfg)) {
    nlohmann::json e{{"order", p.order}, {"offset", offset}, {"length", n_pos}};
    if (p.order >= 1) e["j1"] = p.j1;
    if (p.order == 2) e["j2"] = p.j2;
    paths.push_back(std::move(e));
    offset += n_pos;
  }
  nlohmann::json positions = nlohmann::json::array();
  for (std::size_t i = 0; i < n_pos; ++i) positions.push_back(cfg.first_position() + i * cfg.hop());
  return {{"order", cfg.order},
          {"wavelets_per_octave", cfg.wavelets_per_octave},
          {"averaging_scale", cfg.averaging_scale},
          {"input_length", cfg.input_length},
          {"feature_length", cfg.feature_length()},
          {"positions", positions},
          {"paths", paths}};
}

namespace {

// Centre frequency of the finest wavelet and the bandwidth rule for Q = 1
// follow the usual 1-D scattering filter-bank design.
constexpr double kXiMax = 0.35;
constexpr double kSigmaLowpass = 0.1;

double morlet_sigma(double xi) {
  const double factor = 0.5;  // 2^(-1/Q)
  return xi * (1.0 - factor) / (1.0 + factor) / std::sqrt(std::log(2.0));
}

double gauss(double w, double sigma) { return std::exp(-w * w / (2.0 * sigma * sigma)); }

}  // namespace

FilterBank::FilterBank(const ScatteringConfig& cfg) : cfg_(cfg), fft_((cfg.validate(), cfg.input_length)) {
  const std::size_t n = cfg_.input_length;
  const std::size_t octaves = cfg_.octaves();
  const double sigma_phi = kSigmaLowpass / static_cast<double>(cfg_.averaging_scale);

  phi_.resize(n);
  for (std::size_t k = 0; k < n; ++k) phi_[k] = gauss(frequency(k), sigma_phi);

  psi_.assign(octaves, std::vector<double>(n));
  for (std::size_t j = 1; j <= octaves; ++j) {
    const double xi = kXiMax * std::ldexp(1.0, -static_cast<int>(j - 1));
    const double sigma = morlet_sigma(xi);
    const double kappa = gauss(xi, sigma);  // removes the mean
    xi_.push_back(xi);
    auto& psi = psi_[j - 1];
    for (std::size_t k = 0; k < n; ++k) {
      const double w = frequency(k);
      psi[k] = gauss(w - xi, sigma) - kappa * gauss(w, sigma);
    }
    psi[0] = 0.0;
  }

  // Scale the wavelets so that |phi|^2 + sum_j (|psi_j(w)|^2 + |psi_j(-w)|^2)/2 <= 1
  // at every bin; this makes each layer of the transform non-expansive.
  scale_ = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t mirror = (n - k) % n;
    double band = 0.0;
    for (const auto& psi : psi_) band += 0.5 * (psi[k] * psi[k] + psi[mirror] * psi[mirror]);
    if (band <= 0.0) continue;
    scale_ = std::min(scale_, (1.0 - phi_[k] * phi_[k]) / band);
  }
  scale_ = std::sqrt(scale_);
  for (auto& psi : psi_)
    for (double& v : psi) v *= scale_;
}

double FilterBank::frequency(std::size_t k) const {
  const std::size_t n = cfg_.input_length;
  const auto kk = static_cast<double>(k);
  return (2 * k < n ? kk : kk - static_cast<double>(n)) / static_cast<double>(n);
}

double FilterBank::littlewood_paley_max() const {
  const std::size_t n = cfg_.input_length;
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t mirror = (n - k) % n;
    double sum = phi_[k] * phi_[k];
    for (const auto& psi : psi_) sum += 0.5 * (psi[k] * psi[k] + psi[mirror] * psi[mirror]);
    worst = std::max(worst, sum);
  }
  return worst;
}

namespace {

using cvec = std::vector<std::complex<double>>;

struct Workspace {
  cvec spec, tmp, inner_spec;
  std::vector<double> real;
};

// out = real(ifft(spec * filter))
void filter_real(const FilterBank& bank, const cvec& spec, const std::vector<double>& filter, Workspace& ws,
                 std::vector<double>& out) {
  const std::size_t n = bank.size();
  for (std::size_t k = 0; k < n; ++k) ws.tmp[k] = spec[k] * filter[k];
  bank.fft().inverse(ws.tmp.data(), ws.tmp.data());
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = ws.tmp[i].real();
}

// out = |ifft(spec * filter)|
void filter_modulus(const FilterBank& bank, const cvec& spec, const std::vector<double>& filter, Workspace& ws,
                    std::vector<double>& out) {
  const std::size_t n = bank.size();
  for (std::size_t k = 0; k < n; ++k) ws.tmp[k] = spec[k] * filter[k];
  bank.fft().inverse(ws.tmp.data(), ws.tmp.data());
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(ws.tmp[i]);
}

void to_spectrum(const FilterBank& bank, const std::vector<double>& x, cvec& spec) {
  for (std::size_t i = 0; i < x.size(); ++i) spec[i] = {x[i], 0.0};
  bank.fft().forward(spec.data(), spec.data());
}

double energy(const std::vector<double>& v) {
  double e = 0.0;
  for (double x : v) e += x * x;
  return e;
}

}  // namespace

ScatterDetail scatter_detail(const FilterBank& bank, std::span<const double> x) {
  const auto& cfg = bank.config();
  const std::size_t n = cfg.input_length;
  if (x.size() != n)
    throw ShapeError("scattering expects " + std::to_string(n) + " samples, got " + std::to_string(x.size()));
  const std::size_t octaves = cfg.octaves();
  const std::size_t n_pos = cfg.positions();

  Workspace ws;
  ws.spec.resize(n);
  ws.tmp.resize(n);
  ws.inner_spec.resize(n);
  ScatterDetail out;
  out.features.reserve(cfg.feature_length());
  const auto emit = [&](const std::vector<double>& averaged, bool modulus_path) {
    for (std::size_t p = 0; p < n_pos; ++p) {
      const double v = averaged[cfg.first_position() + p * cfg.hop()];
      // averaged moduli are non-negative; clamp rounding residue
      out.features.push_back(modulus_path ? std::max(v, 0.0) : v);
    }
  };

  std::vector<double> xin(x.begin(), x.end());
  to_spectrum(bank, xin, ws.spec);
  std::vector<double> averaged;
  filter_real(bank, ws.spec, bank.lowpass(), ws, averaged);
  emit(averaged, false);

  std::vector<std::vector<double>> u1(octaves);
  for (std::size_t j = 1; j <= octaves; ++j) {
    filter_modulus(bank, ws.spec, bank.wavelet(j), ws, u1[j - 1]);
    out.order1_energy += energy(u1[j - 1]);
  }

  std::vector<cvec> u1_spec(octaves, cvec(n));
  for (std::size_t j = 1; j <= octaves; ++j) {
    to_spectrum(bank, u1[j - 1], u1_spec[j - 1]);
    filter_real(bank, u1_spec[j - 1], bank.lowpass(), ws, averaged);
    emit(averaged, true);
  }

  std::vector<double> u2;
  for (std::size_t j1 = 1; j1 <= octaves; ++j1) {
    for (std::size_t j2 = j1 + 1; j2 <= octaves; ++j2) {
      filter_modulus(bank, u1_spec[j1 - 1], bank.wavelet(j2), ws, u2);
      to_spectrum(bank, u2, ws.inner_spec);
      filter_real(bank, ws.inner_spec, bank.lowpass(), ws, averaged);
      out.order2_energy += energy(averaged);
      emit(averaged, true);
    }
  }
  return out;
}

std::vector<double> scatter(const FilterBank& bank, std::span<const double> x) {
  return scatter_detail(bank, x).features;
}

std::vector<double> scatter_batch(const FilterBank& bank, const std::vector<std::vector<double>>& inputs,
                                  nn::Exec exec) {
  const std::size_t len = bank.config().feature_length();
  const auto count = static_cast<std::ptrdiff_t>(inputs.size());
  for (const auto& x : inputs)
    if (x.size() != bank.size()) throw ShapeError("scattering batch row has the wrong length");
  std::vector<double> out(inputs.size() * len);
#pragma omp parallel for schedule(dynamic) if (exec == nn::Exec::Parallel)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto f = scatter(bank, inputs[static_cast<std::size_t>(i)]);
    std::copy(f.begin(), f.end(), out.begin() + i * static_cast<std::ptrdiff_t>(len));
  }
  return out;
}

namespace {
constexpr std::uint16_t kFeaturesVersion = 1;
}

std::vector<std::uint8_t> encode_features(const FeatureSet& set) {
  set.config.validate();
  const std::size_t len = set.config.feature_length();
  io::ByteWriter w;
  w.raw("SMST", 4);
  w.le(kFeaturesVersion);
  w.le(static_cast<std::uint32_t>(set.config.input_length));
  w.le(static_cast<std::uint16_t>(set.config.averaging_scale));
  w.le(static_cast<std::uint16_t>(set.config.order));
  w.le(static_cast<std::uint16_t>(set.config.wavelets_per_octave));
  w.le(static_cast<std::uint32_t>(len));
  w.le(static_cast<std::uint32_t>(set.records.size()));
  for (const auto& r : set.records) {
    if (r.values.size() != len) throw FormatError("feature vector length disagrees with its configuration");
    w.str16(r.subject_id);
    w.le(r.epoch_index);
    w.le(static_cast<std::uint8_t>(r.stage));
    w.f64s(r.values);
  }
  return w.bytes();
}

FeatureSet decode_features(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.fixed(4) != "SMST") throw FormatError("not a scattering features file (bad magic)");
  if (const auto v = r.le<std::uint16_t>(); v != kFeaturesVersion)
    throw FormatError("unsupported features file version " + std::to_string(v));
  FeatureSet set;
  set.config.input_length = r.le<std::uint32_t>();
  set.config.averaging_scale = r.le<std::uint16_t>();
  set.config.order = r.le<std::uint16_t>();
  set.config.wavelets_per_octave = r.le<std::uint16_t>();
  try {
    set.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("features file header: ") + e.what());
  }
  const auto len = r.le<std::uint32_t>();
  if (len != set.config.feature_length()) throw FormatError("features file length field disagrees with header");
  const auto count = r.le<std::uint32_t>();
  set.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    FeatureRecord rec;
    rec.subject_id = r.str16();
    rec.epoch_index = r.le<std::uint32_t>();
    const auto stage = r.le<std::uint8_t>();
    if (stage > static_cast<std::uint8_t>(Stage::Unknown))
      throw FormatError("invalid stage code " + std::to_string(stage));
    rec.stage = static_cast<Stage>(stage);
    rec.values.resize(len);
    r.f64s(rec.values);
    set.records.push_back(std::move(rec));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after last feature record");
  return set;
}

void save_features(const std::string& path, const FeatureSet& set) { io::write_file(path, encode_features(set)); }

FeatureSet load_features(const std::string& path) { return decode_features(read_file_bytes(path)); }

}  // namespace somn::scattering
