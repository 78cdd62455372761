//*****************************************************************************
// Copyright 2026 The twostage Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//*****************************************************************************
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "twostage/core/error.hpp"
#include "twostage/core/text.hpp"

namespace twostage {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb &, const Rgb &) = default;
};

/// Owned 8-bit RGB raster, row-major, three interleaved channels.
class Image {
  public:
    Image(int width, int height, Rgb fill = {}) : width_(width), height_(height) {
        check_dims(width, height);
        pixels_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
        for (std::size_t i = 0; i < pixels_.size(); i += 3) {
            pixels_[i] = fill.r;
            pixels_[i + 1] = fill.g;
            pixels_[i + 2] = fill.b;
        }
    }

    Image(int width, int height, std::vector<std::uint8_t> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        check_dims(width, height);
        if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
            throw InvalidInputError("image pixel buffer length " + std::to_string(pixels_.size()) +
                                    " does not match " + std::to_string(width) + "x" +
                                    std::to_string(height) + "x3");
        }
    }

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    [[nodiscard]] std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    [[nodiscard]] Rgb at(int x, int y) const {
        const auto i = offset(x, y);
        return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
    }

    void set(int x, int y, Rgb c) {
        const auto i = offset(x, y);
        pixels_[i] = c.r;
        pixels_[i + 1] = c.g;
        pixels_[i + 2] = c.b;
    }

    friend bool operator==(const Image &, const Image &) = default;

  private:
    static void check_dims(int width, int height) {
        if (width < 1 || height < 1) {
            throw InvalidInputError("image dimensions must be >= 1, got " + std::to_string(width) + "x" +
                                    std::to_string(height));
        }
    }

    [[nodiscard]] std::size_t offset(int x, int y) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    }

    int width_;
    int height_;
    std::vector<std::uint8_t> pixels_;
};

/// Content hash of an image: 64-bit FNV-1a over dimensions and pixel bytes, as 16 hex digits.
inline std::string fingerprint(const Image &image) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](std::uint8_t byte) {
        h ^= byte;
        h *= 0x100000001b3ULL;
    };
    for (int dim : {image.width(), image.height()}) {
        for (int s = 0; s < 32; s += 8) {
            mix(static_cast<std::uint8_t>((static_cast<std::uint32_t>(dim) >> s) & 0xFF));
        }
    }
    for (auto byte : image.pixels()) {
        mix(byte);
    }
    return text::to_hex(h);
}

/// Integer pixel rectangle, half-open: [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    [[nodiscard]] int width() const noexcept { return x1 - x0; }
    [[nodiscard]] int height() const noexcept { return y1 - y0; }
    [[nodiscard]] bool empty() const noexcept { return x1 <= x0 || y1 <= y0; }

    friend bool operator==(const PixelRect &, const PixelRect &) = default;
};

/// Axis-aligned box in continuous image coordinates, origin top-left.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    [[nodiscard]] bool valid() const noexcept {
        return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max) &&
               x_min < x_max && y_min < y_max;
    }

    [[nodiscard]] double width() const noexcept { return x_max - x_min; }
    [[nodiscard]] double height() const noexcept { return y_max - y_min; }
    [[nodiscard]] double area() const noexcept { return valid() ? width() * height() : 0.0; }

    [[nodiscard]] bool intersects(int image_width, int image_height) const noexcept {
        return valid() && x_max > 0.0 && y_max > 0.0 && x_min < image_width && y_min < image_height;
    }

    [[nodiscard]] BoundingBox clamped(int image_width, int image_height) const noexcept {
        return {std::clamp(x_min, 0.0, static_cast<double>(image_width)),
                std::clamp(y_min, 0.0, static_cast<double>(image_height)),
                std::clamp(x_max, 0.0, static_cast<double>(image_width)),
                std::clamp(y_max, 0.0, static_cast<double>(image_height))};
    }

    /// floor(min), ceil(max), then clamp to the image; may be empty when the box misses the image.
    [[nodiscard]] PixelRect to_pixels(int image_width, int image_height) const noexcept {
        auto lo = [](double v, int hi) { return static_cast<int>(std::clamp(std::floor(v), 0.0, double(hi))); };
        auto up = [](double v, int hi) { return static_cast<int>(std::clamp(std::ceil(v), 0.0, double(hi))); };
        return {lo(x_min, image_width), lo(y_min, image_height), up(x_max, image_width), up(y_max, image_height)};
    }

    friend bool operator==(const BoundingBox &, const BoundingBox &) = default;
};

inline double iou(const BoundingBox &a, const BoundingBox &b) {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// "x_min,y_min,x_max,y_max" with round-trip precision.
inline std::string format_box(const BoundingBox &b) {
    return text::format_double(b.x_min) + "," + text::format_double(b.y_min) + "," + text::format_double(b.x_max) +
           "," + text::format_double(b.y_max);
}

} // namespace twostage
