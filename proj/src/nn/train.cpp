#include "somn/nn/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "somn/errors.hpp"

namespace somn::nn {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || batch_size == 0 || epochs == 0)
    throw ConfigError("training needs lr >= 0, batch size > 0 and epochs > 0");
}

double accuracy(const CnnModel& model, const TrainingSet& data) {
  const auto n = static_cast<std::ptrdiff_t>(data.size());
  std::vector<char> correct(data.size(), 0);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto c = forward(model, data.inputs[k], Mode::Infer);
    correct[k] = predict_positive(c.probs) == data.positive[k];
  }
  const auto hits = std::accumulate(correct.begin(), correct.end(), std::size_t{0});
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainResult train(CnnModel model, const TrainingSet& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw ConfigError("training set is empty");
  if (data.positive.size() != data.size()) throw ShapeError("labels and inputs differ in count");
  for (const auto& x : data.inputs)
    if (x.size() != model.spec.input_length)
      throw ShapeError("training window length disagrees with the architecture");

  const std::size_t n = data.size();
  const std::size_t n_params = model.params.size();
  std::vector<std::vector<double>> grads(cfg.batch_size, std::vector<double>(n_params));
  std::vector<double> losses(cfg.batch_size);
  std::vector<double> sum(n_params);
  std::vector<std::size_t> order(n);
  Rng shuffle = Rng::substream(cfg.seed, "shuffle");

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_no) {
      const std::size_t bsize = std::min(cfg.batch_size, n - start);
#pragma omp parallel for schedule(dynamic, 1)
      for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(bsize); ++bi) {
        const auto b = static_cast<std::size_t>(bi);
        const std::size_t ex = order[start + b];
        Rng drop = Rng::substream(cfg.seed, "dropout", (epoch - 1) * n + ex);
        const auto cache = forward(model, data.inputs[ex], Mode::Train, &drop);
        losses[b] = cross_entropy(cache.probs, data.positive[ex]);
        std::fill(grads[b].begin(), grads[b].end(), 0.0);
        backward_into(model, cache, data.positive[ex], grads[b]);
      }
      std::fill(sum.begin(), sum.end(), 0.0);
      for (std::size_t b = 0; b < bsize; ++b) {
        if (!std::isfinite(losses[b])) throw TrainError("non-finite loss", epoch, batch_no);
        loss_sum += losses[b];
        for (std::size_t p = 0; p < n_params; ++p) sum[p] += grads[b][p];
      }
      const double scale = cfg.learning_rate / static_cast<double>(bsize);
      for (std::size_t p = 0; p < n_params; ++p) model.params[p] -= scale * sum[p];
    }
    const double acc = cfg.track_accuracy ? accuracy(model, data)
                                          : std::numeric_limits<double>::quiet_NaN();
    result.log.push_back({epoch, loss_sum / static_cast<double>(n), acc});
  }
  result.model = std::move(model);
  return result;
}

std::string log_to_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,mean_loss,train_accuracy\n";
  for (const auto& e : log) out << e.epoch << ',' << e.mean_loss << ',' << e.train_accuracy << '\n';
  return out.str();
}

}  // namespace somn::nn
