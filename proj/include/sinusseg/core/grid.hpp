#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sinusseg/core/error.hpp"

namespace sinusseg {

/// Row-major 2D grid. Pixel (row, col) lives at index row * width + col.
template <class T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(checked_size(width, height), fill) {}
  Grid(int width, int height, std::vector<T> values) : width_(width), height_(height), data_(std::move(values)) {
    if (data_.size() != checked_size(width, height)) {
      raise(ErrorKind::Shape, "grid value count does not match " + std::to_string(width) + "x" + std::to_string(height));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& at(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }
  const T& at(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  template <class U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }
  bool contains(int row, int col) const noexcept { return row >= 0 && row < height_ && col >= 0 && col < width_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
  }

 private:
  static std::size_t checked_size(int width, int height) {
    if (width < 0 || height < 0) raise(ErrorKind::Shape, "negative grid dimension");
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Foreground/background mask. Stored values are always 0 or 1.
using BinaryMask = Grid<std::uint8_t>;
/// Real-valued per-pixel logits (pre-sigmoid).
using LogitMap = Grid<double>;
/// Per-pixel probabilities in [0, 1].
using ProbabilityMap = Grid<double>;
/// 8-bit grayscale image.
using GrayImage = Grid<std::uint8_t>;

template <class A, class B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    raise(ErrorKind::Shape, std::string(what) + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

/// Count of foreground pixels.
std::size_t foreground_count(const BinaryMask& mask) noexcept;

/// Binarize probabilities: p >= threshold -> 1.
BinaryMask binarize(const ProbabilityMap& probs, double threshold);

/// Binarize logits through the sigmoid without materializing probabilities.
BinaryMask binarize_logits(const LogitMap& logits, double threshold);

/// Nearest-neighbour resample of a mask to the target size.
BinaryMask resize_nearest(const BinaryMask& mask, int width, int height);

}  // namespace sinusseg
