#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "iotad/nn/tensor.hpp"
#include "iotad/preprocess.hpp"

namespace iotad {

struct EpochRecord {
  std::size_t epoch = 0;
  std::map<std::string, double> metrics;
};

/// Per-epoch metrics plus free-form notes emitted during training.
struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::map<std::string, double> summary;
  std::vector<std::string> notes;
};

/// Rows of `m` at `positions` as a [b, cols] tensor.
nn::Tensor<float> gather_rows(const FeatureMatrix& m, std::span<const std::size_t> positions);

/// Shuffled row positions for one epoch, split into consecutive batches
/// (the last may be short).
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t rows, std::size_t batch_size,
                                                    std::uint64_t seed, std::size_t epoch);

/// Throws kDivergence when a loss is not finite.
void require_finite_loss(double loss, const char* model, std::size_t epoch);

}  // namespace iotad
