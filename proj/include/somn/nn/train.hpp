#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "somn/nn/network.hpp"

namespace somn::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 24;
  std::size_t epochs = 180;
  std::uint64_t seed = 0;
  /// Evaluate inference-mode training accuracy after every epoch.
  bool track_accuracy = true;

  void validate() const;
};

/// A training example already in network input form (median-normalized).
struct TrainingSet {
  std::vector<std::vector<double>> inputs;
  std::vector<bool> positive;

  std::size_t size() const { return inputs.size(); }
};

struct EpochLog {
  std::size_t epoch;  // 1-based
  double mean_loss;
  double train_accuracy;  // NaN when not tracked
};

struct TrainResult {
  CnnModel model;
  std::vector<EpochLog> log;
};

/// Mini-batch gradient descent with a constant learning rate.
///
/// Each epoch draws a fresh permutation from the "shuffle" stream and walks
/// it in batches of batch_size (the final short batch is kept). Examples in a
/// batch are processed in parallel; each has its own dropout stream keyed by
/// (epoch, example index), and per-example gradients are summed in batch
/// order by one thread, so results do not depend on the worker count.
TrainResult train(CnnModel model, const TrainingSet& data, const TrainConfig& cfg);

double accuracy(const CnnModel& model, const TrainingSet& data);

/// Loss log as CSV `epoch,mean_loss,train_accuracy`.
std::string log_to_csv(const std::vector<EpochLog>& log);

}  // namespace somn::nn
