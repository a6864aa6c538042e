#pragma once

#include "kseg/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace kseg {

enum class ImageFormat { Pgm, Png };

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Sniffs magic bytes; throws Format for anything but binary PGM (P5) or PNG.
ImageFormat detect_format(std::span<const std::uint8_t> bytes);

/// 8-bit grayscale PGM (P5, maxval 255) or PNG; intensities divided by 255.
GrayImage load_image(const std::filesystem::path& path);
GrayImage decode_image(std::span<const std::uint8_t> bytes);

/// Raw 8-bit samples of an 8-bit grayscale file, no scaling.
struct Gray8 {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};
Gray8 decode_gray8(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const Gray8& img);
std::vector<std::uint8_t> encode_pgm(const Gray8& img);

/// round(255 * v) per pixel.
Gray8 quantize(const GrayImage& img);

/// Masks are stored as {0,255}; any other sample value is a format error.
BinaryMask decode_mask(std::span<const std::uint8_t> bytes);
BinaryMask load_mask(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_mask_png(const BinaryMask& m);

}  // namespace kseg
