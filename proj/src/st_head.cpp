#include "somn/st_head.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "somn/errors.hpp"
#include "somn/rng.hpp"

namespace somn::scattering {

Standardizer Standardizer::fit(std::span<const double> data, std::size_t n, std::size_t d) {
  if (n == 0 || data.size() != n * d) throw ShapeError("standardizer needs an n x d matrix with n > 0");
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += data[i * d + j];
  for (double& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = data[i * d + j] - s.mean[j];
      var[j] += c * c;
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    s.scale[j] = sd > 0.0 ? 1.0 / sd : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> data) const {
  const std::size_t d = mean.size();
  if (d == 0 || data.size() % d != 0) throw ShapeError("standardizer applied to rows of the wrong width");
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = (data[i] - mean[i % d]) * scale[i % d];
  return out;
}

std::size_t StHead::param_count() const {
  return hidden1 * input_dim + hidden1 + hidden2 * hidden1 + hidden2 + outputs * hidden2 + outputs;
}

namespace {

struct Offsets {
  std::size_t w1, b1, w2, b2, w3, b3, total;
};

Offsets offsets(const StHead& h) {
  Offsets o{};
  o.w1 = 0;
  o.b1 = o.w1 + h.hidden1 * h.input_dim;
  o.w2 = o.b1 + h.hidden1;
  o.b2 = o.w2 + h.hidden2 * h.hidden1;
  o.w3 = o.b2 + h.hidden2;
  o.b3 = o.w3 + h.outputs * h.hidden2;
  o.total = o.b3 + h.outputs;
  return o;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void glorot(std::vector<double>& p, std::size_t off, std::size_t fan_out, std::size_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < fan_out * fan_in; ++i) p[off + i] = rng.uniform(-limit, limit);
}

struct Activations {
  std::vector<double> h1, h2, probs;
};

void forward_one(const StHead& h, const Offsets& o, std::span<const double> p, const double* x, Activations& a) {
  a.h1.resize(h.hidden1);
  a.h2.resize(h.hidden2);
  a.probs.resize(h.outputs);
  for (std::size_t i = 0; i < h.hidden1; ++i) {
    double z = p[o.b1 + i];
    const double* w = &p[o.w1 + i * h.input_dim];
    for (std::size_t j = 0; j < h.input_dim; ++j) z += w[j] * x[j];
    a.h1[i] = sigmoid(z);
  }
  for (std::size_t i = 0; i < h.hidden2; ++i) {
    double z = p[o.b2 + i];
    for (std::size_t j = 0; j < h.hidden1; ++j) z += p[o.w2 + i * h.hidden1 + j] * a.h1[j];
    a.h2[i] = sigmoid(z);
  }
  double zmax = -INFINITY;
  for (std::size_t i = 0; i < h.outputs; ++i) {
    double z = p[o.b3 + i];
    for (std::size_t j = 0; j < h.hidden2; ++j) z += p[o.w3 + i * h.hidden2 + j] * a.h2[j];
    a.probs[i] = z;
    zmax = std::max(zmax, z);
  }
  double sum = 0.0;
  for (double& v : a.probs) sum += (v = std::exp(v - zmax));
  for (double& v : a.probs) v /= sum;
}

constexpr double kLossFloor = 1e-12;
constexpr std::size_t kChunk = 256;

}  // namespace

StHead init_st_head(std::size_t input_dim, std::uint64_t seed) {
  if (input_dim == 0) throw ShapeError("scattering head needs a positive input dimension");
  StHead h;
  h.input_dim = input_dim;
  const Offsets o = offsets(h);
  h.params.assign(o.total, 0.0);
  Rng rng = Rng::substream(seed, "st-init");
  glorot(h.params, o.w1, h.hidden1, h.input_dim, rng);
  glorot(h.params, o.w2, h.hidden2, h.hidden1, rng);
  glorot(h.params, o.w3, h.outputs, h.hidden2, rng);
  h.standardizer.mean.assign(input_dim, 0.0);
  h.standardizer.scale.assign(input_dim, 1.0);
  return h;
}

std::vector<double> st_probs(const StHead& head, std::span<const double> raw) {
  if (raw.size() != head.input_dim) throw ShapeError("feature vector length does not match the head");
  const auto x = head.standardizer.apply(raw);
  Activations a;
  forward_one(head, offsets(head), head.params, x.data(), a);
  return a.probs;
}

bool st_predict_positive(const StHead& head, std::span<const double> raw) {
  const auto p = st_probs(head, raw);
  return p[0] >= p[1];
}

double st_loss_grad(const StHead& head, std::span<const double> params, std::span<const double> x,
                    const std::vector<bool>& positive, std::vector<double>* grad) {
  const Offsets o = offsets(head);
  const std::size_t d = head.input_dim;
  const std::size_t n = positive.size();
  if (params.size() != o.total) throw ShapeError("parameter vector has the wrong length");
  if (n == 0 || x.size() != n * d) throw ShapeError("feature matrix does not match labels");
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> chunk_loss(chunks, 0.0);
  std::vector<std::vector<double>> chunk_grad(grad ? chunks : 0);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    std::vector<double> g(grad ? o.total : 0, 0.0);
    Activations a;
    std::vector<double> d3(head.outputs), d2(head.hidden2), d1(head.hidden1);
    double loss = 0.0;
    for (std::size_t i = cu * kChunk; i < std::min(n, (cu + 1) * kChunk); ++i) {
      const double* xi = &x[i * d];
      forward_one(head, o, params, xi, a);
      const std::size_t target = positive[i] ? 0 : 1;
      loss -= std::log(std::max(a.probs[target], kLossFloor));
      if (!grad) continue;
      for (std::size_t k = 0; k < head.outputs; ++k) d3[k] = a.probs[k] - (k == target ? 1.0 : 0.0);
      for (std::size_t k = 0; k < head.outputs; ++k) {
        g[o.b3 + k] += d3[k];
        for (std::size_t j = 0; j < head.hidden2; ++j) g[o.w3 + k * head.hidden2 + j] += d3[k] * a.h2[j];
      }
      for (std::size_t j = 0; j < head.hidden2; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < head.outputs; ++k) s += params[o.w3 + k * head.hidden2 + j] * d3[k];
        d2[j] = s * a.h2[j] * (1.0 - a.h2[j]);
        g[o.b2 + j] += d2[j];
        for (std::size_t m = 0; m < head.hidden1; ++m) g[o.w2 + j * head.hidden1 + m] += d2[j] * a.h1[m];
      }
      for (std::size_t m = 0; m < head.hidden1; ++m) {
        double s = 0.0;
        for (std::size_t j = 0; j < head.hidden2; ++j) s += params[o.w2 + j * head.hidden1 + m] * d2[j];
        d1[m] = s * a.h1[m] * (1.0 - a.h1[m]);
        g[o.b1 + m] += d1[m];
        double* gw = &g[o.w1 + m * d];
        for (std::size_t q = 0; q < d; ++q) gw[q] += d1[m] * xi[q];
      }
    }
    chunk_loss[cu] = loss;
    if (grad) chunk_grad[cu] = std::move(g);
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (double l : chunk_loss) loss += l;
  if (grad) {
    grad->assign(o.total, 0.0);
    for (const auto& g : chunk_grad)
      for (std::size_t i = 0; i < o.total; ++i) (*grad)[i] += g[i];
    for (double& v : *grad) v *= inv_n;
  }
  return loss * inv_n;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

StTrainResult train_st_head(std::span<const double> features, std::size_t d, const std::vector<bool>& positive,
                            const ScgConfig& cfg, std::optional<std::vector<double>> initial) {
  const std::size_t n = positive.size();
  if (d == 0 || n == 0 || features.size() != n * d) throw ShapeError("training features do not match labels");

  StTrainResult result;
  StHead& head = result.head;
  head = init_st_head(d, cfg.seed);
  if (initial) {
    if (initial->size() != head.param_count()) throw ShapeError("initial parameters have the wrong length");
    head.params = *initial;
  }
  head.standardizer = Standardizer::fit(features, n, d);
  const auto x = head.standardizer.apply(features);

  std::vector<double>& w = head.params;
  std::vector<double> g;
  double loss = st_loss_grad(head, w, x, positive, &g);
  const bool all_zero = std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; });
  const bool flat = std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; });
  if (all_zero || flat) {
    // a symmetric start makes hidden units indistinguishable; re-seed
    w = init_st_head(d, Rng::substream(cfg.seed, "st-symmetry").next_u64()).params;
    loss = st_loss_grad(head, w, x, positive, &g);
    result.symmetry_broken = true;
  }
  if (!std::isfinite(loss)) throw TrainError("non-finite loss at the initial point", 0, 0);

  const std::size_t nw = w.size();
  std::vector<double> r(nw), p(nw), s(nw), trial(nw), g_trial;
  for (std::size_t i = 0; i < nw; ++i) r[i] = p[i] = -g[i];
  double lambda = cfg.lambda, lambda_bar = 0.0, delta = 0.0;
  bool success = true;

  for (std::size_t k = 1; k <= cfg.iterations; ++k) {
    const double pp = dot(p, p);
    if (pp == 0.0) break;
    if (success) {
      const double sigma_k = cfg.sigma / std::sqrt(pp);
      for (std::size_t i = 0; i < nw; ++i) trial[i] = w[i] + sigma_k * p[i];
      st_loss_grad(head, trial, x, positive, &g_trial);
      for (std::size_t i = 0; i < nw; ++i) s[i] = (g_trial[i] - g[i]) / sigma_k;
      delta = dot(p, s);
    }
    delta += (lambda - lambda_bar) * pp;
    if (delta <= 0.0) {
      lambda_bar = 2.0 * (lambda - delta / pp);
      delta = -delta + lambda * pp;
      lambda = lambda_bar;
    }
    double mu = dot(p, r);
    if (mu <= 0.0) {
      // lost descent: restart along the steepest-descent direction
      p = r;
      mu = dot(r, r);
      if (mu == 0.0) break;
      success = true;
      lambda_bar = 0.0;
      result.log.push_back({k, loss, lambda, false});
      continue;
    }
    const double alpha = mu / delta;
    for (std::size_t i = 0; i < nw; ++i) trial[i] = w[i] + alpha * p[i];
    const double trial_loss = st_loss_grad(head, trial, x, positive, &g_trial);
    if (!std::isfinite(trial_loss)) throw TrainError("non-finite loss in scaled conjugate gradient", k, 0);
    const double comparison = 2.0 * delta * (loss - trial_loss) / (mu * mu);

    if (comparison >= 0.0) {
      w = trial;
      loss = trial_loss;
      g = g_trial;
      std::vector<double> r_new(nw);
      for (std::size_t i = 0; i < nw; ++i) r_new[i] = -g[i];
      lambda_bar = 0.0;
      success = true;
      if (k % nw == 0) {
        p = r_new;
      } else {
        const double beta = (dot(r_new, r_new) - dot(r_new, r)) / mu;
        for (std::size_t i = 0; i < nw; ++i) p[i] = r_new[i] + beta * p[i];
      }
      r = std::move(r_new);
      if (comparison >= 0.75) lambda *= 0.25;
    } else {
      lambda_bar = lambda;
      success = false;
    }
    if (comparison < 0.25) lambda += delta * (1.0 - comparison) / pp;
    lambda = std::min(lambda, 1e20);
    result.log.push_back({k, loss, lambda, comparison >= 0.0});
    if (dot(r, r) == 0.0) break;
  }
  return result;
}

std::string st_head_to_json(const StHead& head, const std::string& config_hash) {
  nlohmann::json j{{"format", "somn-st-head"},
                   {"version", 1},
                   {"input_dim", head.input_dim},
                   {"hidden1", head.hidden1},
                   {"hidden2", head.hidden2},
                   {"outputs", head.outputs},
                   {"params", head.params},
                   {"standardizer", {{"mean", head.standardizer.mean}, {"scale", head.standardizer.scale}}}};
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  return j.dump(1);
}

StHead st_head_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "somn-st-head" || j.at("version") != 1)
      throw FormatError("not a scattering head file");
    StHead h;
    h.input_dim = j.at("input_dim");
    h.hidden1 = j.at("hidden1");
    h.hidden2 = j.at("hidden2");
    h.outputs = j.at("outputs");
    h.params = j.at("params").get<std::vector<double>>();
    h.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
    h.standardizer.scale = j.at("standardizer").at("scale").get<std::vector<double>>();
    if (h.outputs != 2 || h.params.size() != h.param_count() || h.standardizer.mean.size() != h.input_dim ||
        h.standardizer.scale.size() != h.input_dim)
      throw FormatError("scattering head file has inconsistent sizes");
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed scattering head file: ") + e.what());
  }
}

}  // namespace somn::scattering
