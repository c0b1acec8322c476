#include "iotad/detectors/training.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

#include "iotad/rng.hpp"

namespace iotad {

nn::Tensor<float> gather_rows(const FeatureMatrix& m, std::span<const std::size_t> positions) {
  nn::Tensor<float> out({positions.size(), m.cols});
  for (std::size_t i = 0; i < positions.size(); ++i) {
    std::memcpy(out.data() + i * m.cols, m.values.data() + positions[i] * m.cols,
                m.cols * sizeof(float));
  }
  return out;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t rows, std::size_t batch_size,
                                                    std::uint64_t seed, std::size_t epoch) {
  if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch size must be positive");
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, epoch));
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < rows; start += batch_size) {
    const std::size_t end = std::min(rows, start + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

void require_finite_loss(double loss, const char* model, std::size_t epoch) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::kDivergence, std::string(model) + ": loss became non-finite in epoch " +
                                            std::to_string(epoch));
  }
}

}  // namespace iotad
