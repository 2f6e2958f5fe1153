#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "agcn/tensor.hpp"

namespace agcn {

// 8-bit interleaved RGB raster.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(std::size_t w, std::size_t h) : width(w), height(h), rgb(w * h * 3, 0) {}

  std::uint8_t* pixel(std::size_t x, std::size_t y) { return rgb.data() + (y * width + x) * 3; }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const { return rgb.data() + (y * width + x) * 3; }
};

// Binary P6 (RGB) or P5 (grey, expanded to RGB), maxval 255.
Image read_pnm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& image);

// [3,H,W] with values in [0,1].
Tensor image_to_tensor(const Image& image);
Image tensor_to_image(const Tensor& chw);

// Bilinear resize of a [C,H,W] tensor.
Tensor resize_chw(const Tensor& chw, std::size_t out_h, std::size_t out_w);

// Reads an image and returns the network input [3,size_h,size_w].
Tensor load_visual_input(const std::filesystem::path& path, std::size_t size_h, std::size_t size_w);

// Min-max normalised grey rendering of channel 0 of a [C,H,W] tensor.
Image render_heatmap(const Tensor& chw);

}  // namespace agcn
