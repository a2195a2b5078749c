#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace asckit {

// Thrown for bad configs, malformed files and violated preconditions.
// The CLI maps it to exit code 1; everything else that escapes is exit code 2.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr int kNumClasses = 10;

// TAU Urban Acoustic Scenes label vocabulary, alphabetical.
const std::array<std::string_view, kNumClasses>& scene_labels();

// Index of a scene label, or -1 if not in the vocabulary.
int scene_index(std::string_view label);

// Row-major double matrix, used for targets / logits / probability rows.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
  double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
};

}  // namespace asckit
