#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace temporef {

// Row-major [frames x bands] float matrix; one row per time frame.
class FrameMatrix {
 public:
  FrameMatrix() = default;
  FrameMatrix(std::size_t frames, std::size_t bands, float fill = 0.0f)
      : frames_(frames), bands_(bands), data_(frames * bands, fill) {}

  std::size_t frames() const noexcept { return frames_; }
  std::size_t bands() const noexcept { return bands_; }
  bool empty() const noexcept { return data_.empty(); }

  float& operator()(std::size_t frame, std::size_t band) { return data_[frame * bands_ + band]; }
  float operator()(std::size_t frame, std::size_t band) const { return data_[frame * bands_ + band]; }

  std::span<float> row(std::size_t frame) { return {data_.data() + frame * bands_, bands_}; }
  std::span<const float> row(std::size_t frame) const { return {data_.data() + frame * bands_, bands_}; }

  std::vector<float>& values() noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  // Rows [first, first + count).
  FrameMatrix slice(std::size_t first, std::size_t count) const;

  friend bool operator==(const FrameMatrix&, const FrameMatrix&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t bands_ = 0;
  std::vector<float> data_;
};

inline FrameMatrix FrameMatrix::slice(std::size_t first, std::size_t count) const {
  FrameMatrix out(count, bands_);
  const auto begin = data_.begin() + static_cast<std::ptrdiff_t>(first * bands_);
  std::copy(begin, begin + static_cast<std::ptrdiff_t>(count * bands_), out.data_.begin());
  return out;
}

}  // namespace temporef
