#pragma once

#include <vector>

#include "iotad/preprocess.hpp"

namespace iotad {

/// Anything that maps feature rows to class codes. The ensemble routes
/// between three of these.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::vector<int> predict(const FeatureMatrix& queries) const = 0;
  virtual std::size_t input_width() const = 0;
};

}  // namespace iotad
