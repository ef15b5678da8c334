#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>

#include "somn/errors.hpp"
#include "somn/rng.hpp"
#include "somn/scattering.hpp"
#include "somn/st_head.hpp"
#include "synth.hpp"

using namespace somn;
using namespace somn::scattering;

namespace {

double norm(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

std::vector<double> diff(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

std::vector<double> noise(std::size_t n, Rng& rng, double sd = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = sd * rng.normal();
  return v;
}

const FilterBank& default_bank() {
  static const FilterBank bank{ScatteringConfig{}};
  return bank;
}

}  // namespace

TEST_CASE("layout of the default configuration") {
  const ScatteringConfig cfg;
  CHECK(cfg.octaves() == 7);
  CHECK(cfg.positions() == 15);  // 128, 192, ..., 1024
  CHECK(cfg.path_count() == 29);
  CHECK(cfg.feature_length() == 435);
  const auto paths = path_index(cfg);
  REQUIRE(paths.size() == 29);
  CHECK(paths[0].order == 0);
  CHECK(paths[1].j1 == 1);
  CHECK(paths[7].j1 == 7);
  CHECK((paths[8].order == 2 && paths[8].j1 == 1 && paths[8].j2 == 2));
  CHECK((paths[28].j1 == 6 && paths[28].j2 == 7));
  CHECK(std::count_if(paths.begin(), paths.end(), [](const Path& p) { return p.order == 2; }) == 21);
  for (const auto& p : paths)
    if (p.order == 2) CHECK(p.j2 > p.j1);
  const auto j = path_index_json(cfg);
  CHECK(j["positions"].back() == 1024);
  CHECK(j["paths"][28]["offset"] == 28 * 15);

  ScatteringConfig small;
  small.averaging_scale = 16;
  small.input_length = 120;
  CHECK(small.path_count() == 11);
  CHECK(small.positions() == 12);  // 16, 24, ..., 104

  ScatteringConfig bad;
  bad.averaging_scale = 100;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.averaging_scale = 1024;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.order = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("Littlewood-Paley sum stays below one") {
  for (std::size_t t : {16u, 64u, 128u, 256u}) {
    ScatteringConfig cfg;
    cfg.averaging_scale = t;
    const FilterBank bank(cfg);
    CAPTURE(t);
    CHECK(bank.littlewood_paley_max() <= 1.0 + 1e-6);
    // the scale is tight: some bin reaches the bound
    CHECK(bank.littlewood_paley_max() > 0.999);
    CHECK(bank.lowpass()[0] == 1.0);
    for (std::size_t j = 1; j <= cfg.octaves(); ++j) CHECK(bank.wavelet(j)[0] == 0.0);
  }
}

TEST_CASE("wavelets are analytic-side band-pass filters centred on their octave") {
  const auto& bank = default_bank();
  for (std::size_t j = 1; j <= 7; ++j) {
    const auto& psi = bank.wavelet(j);
    std::size_t peak = 0;
    for (std::size_t k = 0; k < psi.size(); ++k)
      if (psi[k] > psi[peak]) peak = k;
    CHECK(bank.frequency(peak) > 0.0);
    CHECK(std::abs(bank.frequency(peak) - bank.centre_frequency(j)) < 2.0 / 1200.0);
    CHECK(bank.centre_frequency(j) == doctest::Approx(0.35 / std::pow(2.0, double(j) - 1)));
  }
}

TEST_CASE("constant input leaves only the zeroth order") {
  const auto& bank = default_bank();
  for (double c : {1.0, 60.0, -3.5}) {
    const auto s = scatter(bank, std::vector<double>(1200, c));
    for (std::size_t i = 0; i < 15; ++i) CHECK(s[i] == doctest::Approx(c).epsilon(1e-9));
    double worst = 0.0;
    for (std::size_t i = 15; i < s.size(); ++i) worst = std::max(worst, std::abs(s[i]));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("the transform is non-expansive") {
  const auto& bank = default_bank();
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const double sd = rng.uniform(0.1, 20.0);
    auto x = noise(1200, rng, sd);
    auto y = trial % 2 == 0 ? noise(1200, rng, sd) : x;
    if (trial % 2 == 1)
      for (double& v : y) v += 0.1 * sd * rng.normal();
    const double lhs = norm(diff(scatter(bank, x), scatter(bank, y)));
    CHECK(lhs <= norm(diff(x, y)) * (1.0 + 1e-9));
  }
}

TEST_CASE("energy does not grow with order") {
  const auto& bank = default_bank();
  Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = noise(1200, rng);
    const auto d = scatter_detail(bank, x);
    CHECK(d.order1_energy <= norm(x) * norm(x));
    CHECK(d.order2_energy <= d.order1_energy);
  }
}

TEST_CASE("translations move the coefficients little, less for smaller shifts") {
  // Each of the three orders is a low-pass of a translation-covariant
  // signal of norm <= ||x||; translating a Gaussian low-pass of width s by
  // tau moves it by at most 2 pi tau s e^{-1/2}.
  const auto& bank = default_bank();
  Rng rng(43);
  const double s = 0.1 / 128.0;
  for (int trial = 0; trial < 5; ++trial) {
    auto x = noise(1200, rng);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += 3.0 * std::sin(0.05 * double(i));
    const auto base = scatter(bank, x);
    double previous = 0.0;
    for (std::size_t tau : {8u, 16u, 32u}) {  // T/16, T/8, T/4
      std::vector<double> shifted(1200);
      for (std::size_t i = 0; i < 1200; ++i) shifted[(i + tau) % 1200] = x[i];
      const double moved = norm(diff(base, scatter(bank, shifted)));
      const double bound = 3.0 * 2.0 * std::numbers::pi * double(tau) * s * std::exp(-0.5);
      CHECK(moved <= bound * norm(x));
      CHECK(moved > previous);
      CHECK(moved / norm(base) < 0.5);
      previous = moved;
    }
  }
}

TEST_CASE("order-one coefficients pick out the oscillation octave") {
  const auto& bank = default_bank();
  // 0.35 / 8 cycles per sample is the centre of octave 4.
  std::vector<double> x(1200);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2 * std::numbers::pi * 0.35 / 8 * double(i));
  const auto s = scatter(bank, x);
  std::vector<double> band(8, 0.0);
  for (std::size_t j = 1; j <= 7; ++j)
    for (std::size_t p = 0; p < 15; ++p) band[j] += s[j * 15 + p];
  const auto best = std::max_element(band.begin() + 1, band.end()) - band.begin();
  CHECK(best == 4);
}

TEST_CASE("scattering input validation and batch equivalence") {
  const auto& bank = default_bank();
  CHECK_THROWS_AS(scatter(bank, std::vector<double>(1199, 0.0)), ShapeError);
  Rng rng(44);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 5; ++i) rows.push_back(noise(1200, rng));
  const auto ser = scatter_batch(bank, rows, nn::Exec::Serial);
  const auto par = scatter_batch(bank, rows, nn::Exec::Parallel);
  CHECK(ser == par);
  const auto one = scatter(bank, rows[3]);
  CHECK(std::equal(one.begin(), one.end(), ser.begin() + 3 * 435));
  rows[2].pop_back();
  CHECK_THROWS_AS(scatter_batch(bank, rows), ShapeError);
}

TEST_CASE("features file round trip") {
  FeatureSet set;
  set.config.averaging_scale = 16;
  set.config.input_length = 120;
  Rng rng(45);
  for (std::uint32_t i = 0; i < 3; ++i)
    set.records.push_back({"subj" + std::to_string(i), i * 7, Stage::Rem, noise(set.config.feature_length(), rng)});
  const auto bytes = encode_features(set);
  const auto back = decode_features(bytes);
  CHECK(back.config.averaging_scale == 16);
  REQUIRE(back.records.size() == 3);
  CHECK(back.records[2].subject_id == "subj2");
  CHECK(back.records[2].epoch_index == 14);
  CHECK(back.records[2].stage == Stage::Rem);
  CHECK(back.records[2].values == set.records[2].values);

  auto bad = bytes;
  bad[1] = 'X';
  CHECK_THROWS_AS(decode_features(bad), FormatError);
  auto extra = bytes;
  extra.push_back(1);
  CHECK_THROWS_AS(decode_features(extra), FormatError);
  set.records[0].values.pop_back();
  CHECK_THROWS_AS(encode_features(set), FormatError);

  set.records[0].values.push_back(0.0);
  const auto path = (std::filesystem::temp_directory_path() / "somn_feat.bin").string();
  save_features(path, set);
  CHECK(load_features(path).records.size() == 3);
  std::filesystem::remove(path);
}

// --- scattering head --------------------------------------------------------

namespace {

struct Blobs {
  std::vector<double> x;
  std::vector<bool> positive;
};

Blobs blobs(std::size_t n_each, std::size_t d, double gap, std::uint64_t seed) {
  Rng rng(seed);
  Blobs b;
  for (std::size_t i = 0; i < 2 * n_each; ++i) {
    const bool pos = i % 2 == 0;
    for (std::size_t j = 0; j < d; ++j) b.x.push_back(100.0 + 5.0 * rng.normal() + (pos && j < 2 ? gap : 0.0));
    b.positive.push_back(pos);
  }
  return b;
}

double head_accuracy(const StHead& h, const Blobs& b, std::size_t d) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < b.positive.size(); ++i)
    hits += st_predict_positive(h, std::span<const double>(b.x).subspan(i * d, d)) == b.positive[i];
  return double(hits) / double(b.positive.size());
}

}  // namespace

TEST_CASE("standardizer") {
  const std::vector<double> data{1, 5, 2, 5, 3, 5, 6, 5};
  const auto s = Standardizer::fit(data, 4, 2);
  CHECK(s.mean[0] == doctest::Approx(3.0));
  CHECK(s.scale[0] == doctest::Approx(1.0 / std::sqrt(3.5)));
  CHECK(s.scale[1] == 1.0);  // constant column
  const auto z = s.apply(data);
  double m = 0, v = 0;
  for (int i = 0; i < 4; ++i) m += z[2 * i];
  for (int i = 0; i < 4; ++i) v += z[2 * i] * z[2 * i];
  CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v / 4 == doctest::Approx(1.0));
  CHECK(z[1] == 0.0);
  CHECK_THROWS_AS(s.apply(std::vector<double>(3)), ShapeError);
}

TEST_CASE("head gradient matches central differences") {
  const std::size_t d = 5;
  const auto b = blobs(6, d, 8.0, 1);
  auto head = init_st_head(d, 3);
  head.standardizer = Standardizer::fit(b.x, b.positive.size(), d);
  const auto x = head.standardizer.apply(b.x);
  std::vector<double> g;
  st_loss_grad(head, head.params, x, b.positive, &g);
  auto w = head.params;
  const double h = 1e-5;
  for (std::size_t p = 0; p < w.size(); ++p) {
    const double keep = w[p];
    w[p] = keep + h;
    const double up = st_loss_grad(head, w, x, b.positive, nullptr);
    w[p] = keep - h;
    const double down = st_loss_grad(head, w, x, b.positive, nullptr);
    w[p] = keep;
    const double numeric = (up - down) / (2 * h);
    CHECK(g[p] == doctest::Approx(numeric).epsilon(1e-6).scale(1e-4));
  }
}

TEST_CASE("scaled conjugate gradient separates two blobs") {
  const std::size_t d = 6;
  const auto b = blobs(40, d, 12.0, 2);
  ScgConfig cfg;
  cfg.seed = 5;
  const auto r = train_st_head(b.x, d, b.positive, cfg);
  CHECK_FALSE(r.symmetry_broken);
  CHECK(head_accuracy(r.head, b, d) == 1.0);
  REQUIRE_FALSE(r.log.empty());
  for (std::size_t i = 1; i < r.log.size(); ++i) CHECK(r.log[i].loss <= r.log[i - 1].loss);
  CHECK(r.log.back().loss < 0.05);

  const auto again = train_st_head(b.x, d, b.positive, cfg);
  CHECK(again.head == r.head);

  const auto json = st_head_to_json(r.head, "abc");
  CHECK(st_head_from_json(json) == r.head);
  CHECK_THROWS_AS(st_head_from_json("{\"format\":\"x\"}"), FormatError);
}

TEST_CASE("a symmetric start is broken by a seeded re-initialization") {
  const std::size_t d = 4;
  const auto b = blobs(20, d, 12.0, 3);
  ScgConfig cfg;
  cfg.seed = 6;
  cfg.iterations = 100;
  const auto n_params = init_st_head(d, 0).param_count();
  const auto r = train_st_head(b.x, d, b.positive, cfg, std::vector<double>(n_params, 0.0));
  CHECK(r.symmetry_broken);
  CHECK(head_accuracy(r.head, b, d) == 1.0);
  // hidden units are no longer interchangeable
  CHECK(r.head.params[0] != r.head.params[d]);
  const auto again = train_st_head(b.x, d, b.positive, cfg, std::vector<double>(n_params, 0.0));
  CHECK(again.head == r.head);
  CHECK_THROWS_AS(train_st_head(b.x, d, b.positive, cfg, std::vector<double>(3, 0.0)), ShapeError);
}
