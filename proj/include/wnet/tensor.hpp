#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <vector>

#include "wnet/common.hpp"

namespace wnet {

/// Dense row-major n-d tensor. Images are stored CHW, batches NCHW.
template <class S>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape, S fill = S(0)) : shape_(std::move(shape)) {
    for (int d : shape_)
      if (d < 0) throw ShapeError("negative tensor dimension");
    data_.assign(numel_of(shape_), fill);
  }

  Tensor(std::initializer_list<int> shape, S fill = S(0))
      : Tensor(std::vector<int>(shape), fill) {}

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  std::vector<S>& flat() { return data_; }
  const std::vector<S>& flat() const { return data_; }

  S& operator[](size_t i) { return data_[i]; }
  const S& operator[](size_t i) const { return data_[i]; }

  // CHW accessors (rank 3).
  S& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  const S& at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  // NCHW accessors (rank 4).
  S& at(int n, int c, int y, int x) {
    return data_[((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  const S& at(int n, int c, int y, int x) const {
    return data_[((static_cast<size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }

  void fill(S v) { data_.assign(data_.size(), v); }

  /// Reshapes without preserving contents. Reuses the allocation when the
  /// element count already matches; callers overwrite every element.
  void ensure_shape(const std::vector<int>& shape) {
    if (shape_ == shape) return;
    const size_t n = numel_of(shape);
    shape_ = shape;
    if (data_.size() != n) data_.resize(n);
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void require_shape(const Tensor& other, const char* what) const {
    if (!same_shape(other)) {
      std::ostringstream os;
      os << what << ": shape mismatch " << shape_str(shape_) << " vs "
         << shape_str(other.shape_);
      throw ShapeError(os.str());
    }
  }

  bool all_finite() const {
    for (const S& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  static size_t numel_of(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) n *= static_cast<size_t>(d);
    return shape.empty() ? 0 : n;
  }

  static std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
  }

 private:
  std::vector<int> shape_;
  std::vector<S> data_;
};

/// Image payload: rank-3 CHW float tensor, values in [0,1] for images.
using Image = Tensor<float>;

inline int channels(const Image& im) { return im.dim(0); }
inline int height(const Image& im) { return im.dim(1); }
inline int width(const Image& im) { return im.dim(2); }

inline void require_image(const Image& im, const char* what) {
  if (im.rank() != 3) throw ShapeError(std::string(what) + ": expected CHW image");
  if (im.dim(0) != 1 && im.dim(0) != 3)
    throw InvalidParameter(std::string(what) + ": channels must be 1 or 3");
}

inline void clamp01(Image& im) {
  for (float& v : im.flat()) v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
}

}  // namespace wnet
