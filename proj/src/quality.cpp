#include "wnet/metrics/quality.hpp"

#include <cmath>
#include <vector>

namespace wnet::metrics {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

std::vector<double> to_luminance(const Image& im) {
  const int h = height(im), w = width(im);
  std::vector<double> out(static_cast<size_t>(h) * w);
  if (channels(im) == 1) {
    for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(im[i]);
  } else {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out[static_cast<size_t>(y) * w + x] = 0.299 * im.at(0, y, x) + 0.587 * im.at(1, y, x) +
                                              0.114 * im.at(2, y, x);
  }
  return out;
}

const std::vector<double>& gaussian_window() {
  static const std::vector<double> win = [] {
    std::vector<double> w(kWindow * kWindow);
    double sum = 0.0;
    for (int y = 0; y < kWindow; ++y)
      for (int x = 0; x < kWindow; ++x) {
        const double dy = y - (kWindow - 1) / 2.0, dx = x - (kWindow - 1) / 2.0;
        const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
        w[static_cast<size_t>(y) * kWindow + x] = v;
        sum += v;
      }
    for (double& v : w) v /= sum;
    return w;
  }();
  return win;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_image(a, "psnr");
  a.require_shape(b, "psnr");
  double mse = 0.0;
  for (size_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(a.numel());
  if (mse <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  require_image(a, "ssim");
  a.require_shape(b, "ssim");
  const int h = height(a), w = width(a);
  if (h < kWindow || w < kWindow) throw InvalidParameter("ssim: image smaller than 11x11 window");

  const auto la = to_luminance(a);
  const auto lb = to_luminance(b);
  const auto& win = gaussian_window();

  const double c1 = kK1 * kK1;  // (K1*L)^2 with L=1
  const double c2 = kK2 * kK2;

  double total = 0.0;
  long long count = 0;
  for (int y = 0; y + kWindow <= h; ++y)
    for (int x = 0; x + kWindow <= w; ++x) {
      double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      for (int wy = 0; wy < kWindow; ++wy)
        for (int wx = 0; wx < kWindow; ++wx) {
          const double g = win[static_cast<size_t>(wy) * kWindow + wx];
          const double va = la[static_cast<size_t>(y + wy) * w + (x + wx)];
          const double vb = lb[static_cast<size_t>(y + wy) * w + (x + wx)];
          mu_a += g * va;
          mu_b += g * vb;
          aa += g * va * va;
          bb += g * vb * vb;
          ab += g * va * vb;
        }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                       ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      total += s;
      ++count;
    }
  return total / static_cast<double>(count);
}

}  // namespace wnet::metrics
