#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace iotad::testkit {

struct GradientSuiteEntry {
  std::string name;
  std::size_t configurations = 0;
  std::size_t gradients_checked = 0;
  double max_relative_error = 0.0;
  std::string worst;
};

/// Analytic vs central finite-difference gradients for every layer kind and
/// loss, each on `configurations` random small shapes (64-bit).
std::vector<GradientSuiteEntry> run_gradient_suite(std::size_t configurations, std::uint64_t seed);

}  // namespace iotad::testkit
