#pragma once

#include "wnet/tensor.hpp"

namespace wnet::metrics {

/// 10*log10(1/MSE) over all elements (RGB included), capped at 99 dB.
/// Inputs are expected in [0,1].
double psnr(const Image& a, const Image& b);

/// Mean local SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
/// dynamic range 1. Three-channel inputs are converted to luminance
/// (0.299/0.587/0.114) first. Windows are valid-only; images smaller than
/// the window are an error.
double ssim(const Image& a, const Image& b);

}  // namespace wnet::metrics
