#pragma once

#include <filesystem>
#include <stdexcept>

#include "saec/tensor.hpp"

namespace saec {

class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a portable graymap/pixmap (P2, P3, P5, P6; maxval <= 255) into a
/// [C,H,W] tensor with values in [0, 1]. C is 1 for graymaps, 3 for pixmaps.
Tensor read_pnm(const std::filesystem::path& path);

/// Writes a [C,H,W] tensor with values in [0, 1] as binary P5 (C=1) or P6
/// (C=3). Values are clamped and rounded to 8 bits.
void write_pnm(const std::filesystem::path& path, const Tensor& image);

enum class ResizeMode { nearest, bilinear };

/// [C,H,W] -> [C,height,width]
Tensor resize_image(const Tensor& image, std::size_t height, std::size_t width, ResizeMode mode);

/// Channel-mean to 1 channel, or replication from 1 to 3 channels.
Tensor convert_channels(const Tensor& image, std::size_t channels);

/// Tiles equally sized [C,H,W] panels into a rows x cols grid with a
/// one-pixel separator of value `border`.
Tensor tile_images(const std::vector<Tensor>& panels, std::size_t cols, double border = 1.0);

}  // namespace saec
