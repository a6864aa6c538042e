#include "kseg/image_io.hpp"

#include "kseg/error.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

namespace kseg {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::Io, "read failed: " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

ImageFormat detect_format(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return ImageFormat::Png;
    if (bytes.size() >= 2 && bytes[0] == 'P') {
        if (bytes[1] == '5') return ImageFormat::Pgm;
        throw Error(ErrorCode::Format, "only binary grayscale PGM (P5) is supported");
    }
    throw Error(ErrorCode::Format, "unrecognized image format (expected PGM or PNG)");
}

namespace {

// Reads the next whitespace-delimited integer from a PGM header, skipping comments.
int pgm_header_int(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    for (;;) {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        if (pos < bytes.size() && bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw Error(ErrorCode::Format, "malformed PGM header");
    long value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        value = value * 10 + (bytes[pos] - '0');
        if (value > 1'000'000) throw Error(ErrorCode::Format, "PGM header value too large");
        ++pos;
    }
    return static_cast<int>(value);
}

Gray8 decode_pgm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 2;
    Gray8 img;
    img.width = pgm_header_int(bytes, pos);
    img.height = pgm_header_int(bytes, pos);
    const int maxval = pgm_header_int(bytes, pos);
    if (img.width <= 0 || img.height <= 0) throw Error(ErrorCode::Format, "PGM dimensions must be positive");
    if (maxval != 255) throw Error(ErrorCode::Format, "only 8-bit PGM (maxval 255) is supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw Error(ErrorCode::Format, "malformed PGM header");
    ++pos;
    const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    if (bytes.size() - pos < n) throw Error(ErrorCode::Format, "truncated PGM pixel data");
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return img;
}

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

Gray8 decode_png(std::span<const std::uint8_t> bytes) {
    // IHDR is mandated to be the first chunk: 8 sig + 4 len + 4 type + 13 data.
    if (bytes.size() < 33 || std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
        throw Error(ErrorCode::Format, "malformed PNG header");
    }
    const std::uint8_t bit_depth = bytes[24];
    const std::uint8_t color_type = bytes[25];
    if (color_type != 0) throw Error(ErrorCode::Format, "PNG is not single-channel grayscale");
    if (bit_depth != 8) throw Error(ErrorCode::Format, "PNG is not 8-bit");

    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw Error(ErrorCode::Format, std::string("PNG decode failed: ") + image.message);
    }
    image.format = PNG_FORMAT_GRAY;
    Gray8 img;
    img.width = static_cast<int>(image.width);
    img.height = static_cast<int>(image.height);
    if (img.width != static_cast<int>(be32(bytes.data() + 16)) || img.height != static_cast<int>(be32(bytes.data() + 20))) {
        png_image_free(&image);
        throw Error(ErrorCode::Format, "PNG header mismatch");
    }
    img.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw Error(ErrorCode::Format, "PNG decode failed: " + msg);
    }
    return img;
}

}  // namespace

Gray8 decode_gray8(std::span<const std::uint8_t> bytes) {
    return detect_format(bytes) == ImageFormat::Png ? decode_png(bytes) : decode_pgm(bytes);
}

GrayImage decode_image(std::span<const std::uint8_t> bytes) {
    const Gray8 raw = decode_gray8(bytes);
    std::vector<double> data(raw.pixels.size());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = raw.pixels[i] / 255.0;
    return GrayImage(raw.width, raw.height, std::move(data));
}

GrayImage load_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

std::vector<std::uint8_t> encode_png(const Gray8& img) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_GRAY;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
        throw Error(ErrorCode::Io, std::string("PNG encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
        throw Error(ErrorCode::Io, std::string("PNG encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

std::vector<std::uint8_t> encode_pgm(const Gray8& img) {
    const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

Gray8 quantize(const GrayImage& img) {
    Gray8 out{img.width(), img.height(), std::vector<std::uint8_t>(img.size())};
    const auto data = img.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        out.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * data[i]));
    }
    return out;
}

BinaryMask decode_mask(std::span<const std::uint8_t> bytes) {
    const Gray8 raw = decode_gray8(bytes);
    std::vector<std::uint8_t> labels(raw.pixels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto v = raw.pixels[i];
        if (v != 0 && v != 255) throw Error(ErrorCode::Format, "mask samples must be 0 or 255");
        labels[i] = v ? 1 : 0;
    }
    return BinaryMask(raw.width, raw.height, std::move(labels));
}

BinaryMask load_mask(const std::filesystem::path& path) { return decode_mask(read_file(path)); }

std::vector<std::uint8_t> encode_mask_png(const BinaryMask& m) {
    Gray8 raw{m.width(), m.height(), std::vector<std::uint8_t>(m.size())};
    for (std::size_t i = 0; i < raw.pixels.size(); ++i) raw.pixels[i] = m.data()[i] ? 255 : 0;
    return encode_png(raw);
}

}  // namespace kseg
