#include "somn/nn/network.hpp"

#include <algorithm>
#include <cmath>

#include "somn/errors.hpp"

namespace somn::nn {

namespace {

using Slice = ParamLayout::Slice;

std::span<const double> view(const std::vector<double>& p, const Slice& s) {
  return {p.data() + s.offset, s.size};
}
std::span<double> view(std::span<double> p, const Slice& s) { return p.subspan(s.offset, s.size); }

ConvShape conv_shape(const ArchitectureSpec& spec, std::size_t layer, std::size_t n_in) {
  return {n_in, spec.in_channels(layer), spec.filters, spec.kernel, spec.stride(layer)};
}

void relu(std::vector<double>& v) {
  for (double& x : v) x = x < 0.0 ? 0.0 : x;  // NaN passes through
}

// Inverted dropout: keep with probability 1 - p and scale kept units by 1/(1 - p).
std::vector<double> dropout_mask(std::size_t n, double p, Rng& rng) {
  std::vector<double> mask(n);
  const double scale = 1.0 / (1.0 - p);
  for (double& m : mask) m = rng.uniform() < p ? 0.0 : scale;
  return mask;
}

void apply_mask(std::vector<double>& v, const std::vector<double>& mask) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= mask[i];
}

}  // namespace

CnnModel CnnModel::zeros(const ArchitectureSpec& spec) {
  spec.validate();
  CnnModel m;
  m.spec = spec;
  m.params.assign(ParamLayout(spec).total, 0.0);
  return m;
}

CnnModel CnnModel::initialize(const ArchitectureSpec& spec, std::uint64_t seed) {
  CnnModel m = zeros(spec);
  m.rng_seed = seed;
  const ParamLayout lay(spec);
  Rng rng = Rng::substream(seed, "init");
  auto fill = [&](const Slice& s, double fan_in, double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < s.size; ++i) m.params[s.offset + i] = rng.uniform(-bound, bound);
  };
  for (std::size_t l = 0; l < spec.conv_layers(); ++l)
    fill(lay.conv_w[l], static_cast<double>(spec.kernel * spec.in_channels(l)),
         static_cast<double>(spec.kernel * spec.filters));
  fill(lay.d1_w, static_cast<double>(spec.flattened_size()), static_cast<double>(spec.dense1));
  fill(lay.d2_w, static_cast<double>(spec.dense1), static_cast<double>(spec.dense2));
  fill(lay.out_w, static_cast<double>(spec.dense2), static_cast<double>(spec.n_outputs));
  return m;
}

std::vector<double> conv1d_relu(const ConvShape& shape, std::span<const double> in,
                                std::span<const double> w, std::span<const double> b, Exec exec) {
  if (shape.n_in < 1) throw ShapeError("convolution input must hold at least one sample");
  if (in.size() != shape.n_in * shape.c_in || w.size() != shape.weight_count() ||
      b.size() != shape.filters)
    throw ShapeError("convolution operand sizes disagree with the layer shape");
  std::vector<double> out(shape.n_out() * shape.filters);
  kernels::conv1d_forward(shape, in, w, b, out, exec);
  relu(out);
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += (p[i] = std::exp(logits[i] - mx));
  for (double& v : p) v /= sum;
  return p;
}

ForwardCache forward(const CnnModel& model, std::span<const double> x, Mode mode, Rng* dropout_rng,
                     Exec exec) {
  const auto& spec = model.spec;
  if (x.size() != spec.input_length)
    throw ShapeError("input has " + std::to_string(x.size()) + " samples, model expects " +
                     std::to_string(spec.input_length));
  if (model.params.size() != ParamLayout(spec).total)
    throw ShapeError("parameter vector does not match the architecture");
  const bool train = mode == Mode::Train && spec.dropout_p > 0.0;
  if (train && dropout_rng == nullptr) throw ShapeError("training-mode forward needs a dropout stream");
  const ParamLayout lay(spec);

  ForwardCache c;
  c.input.assign(x.begin(), x.end());
  std::size_t n = spec.input_length;
  const std::vector<double>* prev = &c.input;
  c.conv_out.reserve(spec.conv_layers());
  for (std::size_t l = 0; l < spec.conv_layers(); ++l) {
    const ConvShape s = conv_shape(spec, l, n);
    c.conv_out.push_back(conv1d_relu(s, *prev, view(model.params, lay.conv_w[l]),
                                     view(model.params, lay.conv_b[l]), exec));
    prev = &c.conv_out.back();
    n = s.n_out();
  }

  c.flat = c.conv_out.back();
  if (train) {
    c.conv_mask = dropout_mask(c.flat.size(), spec.dropout_p, *dropout_rng);
    apply_mask(c.flat, c.conv_mask);
  }

  c.d1_act.resize(spec.dense1);
  kernels::dense_forward(c.flat, view(model.params, lay.d1_w), view(model.params, lay.d1_b), c.d1_act);
  relu(c.d1_act);
  c.d1_out = c.d1_act;
  if (train) {
    c.d1_mask = dropout_mask(c.d1_out.size(), spec.dropout_p, *dropout_rng);
    apply_mask(c.d1_out, c.d1_mask);
  }

  c.d2_act.resize(spec.dense2);
  kernels::dense_forward(c.d1_out, view(model.params, lay.d2_w), view(model.params, lay.d2_b), c.d2_act);
  relu(c.d2_act);
  c.d2_out = c.d2_act;
  if (train) {
    c.d2_mask = dropout_mask(c.d2_out.size(), spec.dropout_p, *dropout_rng);
    apply_mask(c.d2_out, c.d2_mask);
  }

  c.logits.resize(spec.n_outputs);
  kernels::dense_forward(c.d2_out, view(model.params, lay.out_w), view(model.params, lay.out_b), c.logits);
  c.probs = softmax(c.logits);
  return c;
}

std::vector<double> conv_features(const CnnModel& model, std::span<const double> x, Exec exec) {
  const auto& spec = model.spec;
  if (x.size() != spec.input_length)
    throw ShapeError("input has " + std::to_string(x.size()) + " samples, model expects " +
                     std::to_string(spec.input_length));
  const ParamLayout lay(spec);
  std::vector<double> cur(x.begin(), x.end());
  std::size_t n = spec.input_length;
  for (std::size_t l = 0; l < spec.conv_layers(); ++l) {
    const ConvShape s = conv_shape(spec, l, n);
    cur = conv1d_relu(s, cur, view(model.params, lay.conv_w[l]), view(model.params, lay.conv_b[l]), exec);
    n = s.n_out();
  }
  return cur;
}

bool predict_positive(std::span<const double> probs) { return probs[0] >= probs[1]; }

double cross_entropy(std::span<const double> probs, bool positive) {
  const double p = probs[positive ? 0 : 1];
  return -std::log(std::max(p, kLossFloor));
}

void backward_into(const CnnModel& model, const ForwardCache& c, bool positive,
                   std::span<double> grad, Exec exec) {
  const auto& spec = model.spec;
  const ParamLayout lay(spec);
  if (grad.size() != lay.total) throw ShapeError("gradient buffer does not match the architecture");

  // Softmax + cross-entropy: d loss / d logits = probs - one_hot.
  std::vector<double> g_logits = c.probs;
  g_logits[positive ? 0 : 1] -= 1.0;

  std::vector<double> g_d2(spec.dense2);
  kernels::dense_backward(c.d2_out, view(model.params, lay.out_w), g_logits, view(grad, lay.out_w),
                          view(grad, lay.out_b), g_d2);
  for (std::size_t i = 0; i < g_d2.size(); ++i) {
    if (!c.d2_mask.empty()) g_d2[i] *= c.d2_mask[i];
    if (!(c.d2_act[i] > 0.0)) g_d2[i] = 0.0;
  }

  std::vector<double> g_d1(spec.dense1);
  kernels::dense_backward(c.d1_out, view(model.params, lay.d2_w), g_d2, view(grad, lay.d2_w),
                          view(grad, lay.d2_b), g_d1);
  for (std::size_t i = 0; i < g_d1.size(); ++i) {
    if (!c.d1_mask.empty()) g_d1[i] *= c.d1_mask[i];
    if (!(c.d1_act[i] > 0.0)) g_d1[i] = 0.0;
  }

  std::vector<double> g_act(spec.flattened_size());
  kernels::dense_backward(c.flat, view(model.params, lay.d1_w), g_d1, view(grad, lay.d1_w),
                          view(grad, lay.d1_b), g_act);
  if (!c.conv_mask.empty())
    for (std::size_t i = 0; i < g_act.size(); ++i) g_act[i] *= c.conv_mask[i];

  const auto lengths = spec.conv_lengths();
  std::vector<double> g_in;
  for (std::size_t li = spec.conv_layers(); li-- > 0;) {
    const auto& out = c.conv_out[li];
    for (std::size_t i = 0; i < g_act.size(); ++i)
      if (!(out[i] > 0.0)) g_act[i] = 0.0;
    const std::size_t n_in = li == 0 ? spec.input_length : lengths[li - 1];
    const ConvShape s = conv_shape(spec, li, n_in);
    const auto& in = li == 0 ? c.input : c.conv_out[li - 1];
    g_in.assign(li == 0 ? 0 : n_in * s.c_in, 0.0);
    kernels::conv1d_backward(s, in, view(model.params, lay.conv_w[li]), g_act,
                             view(grad, lay.conv_w[li]), view(grad, lay.conv_b[li]), g_in, exec);
    g_act.swap(g_in);
  }
}

std::vector<double> backward(const CnnModel& model, const ForwardCache& cache, bool positive,
                             Exec exec) {
  std::vector<double> grad(ParamLayout(model.spec).total, 0.0);
  backward_into(model, cache, positive, grad, exec);
  return grad;
}

}  // namespace somn::nn
