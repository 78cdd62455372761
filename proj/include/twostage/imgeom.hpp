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

// Deterministic image geometry: crop, square padding, resizing and
// conversion to a normalized channel-major model input.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "twostage/core/error.hpp"
#include "twostage/core/image.hpp"

namespace twostage {

enum class ResizeFilter { nearest, bilinear };

struct ResizePolicy {
    int target_width = 224;
    int target_height = 224;
    ResizeFilter filter = ResizeFilter::bilinear;

    void validate() const {
        if (target_width < 1 || target_height < 1) {
            throw InvalidInputError("resize target must be >= 1x1");
        }
    }
};

struct NormalizationSpec {
    std::array<double, 3> mean{0.485, 0.456, 0.406};
    std::array<double, 3> std{0.229, 0.224, 0.225};

    void validate() const {
        for (int c = 0; c < 3; ++c) {
            if (!(std[c] > 0.0) || !std::isfinite(std[c]) || !std::isfinite(mean[c])) {
                throw InvalidInputError("normalization std entries must be finite and > 0");
            }
        }
    }
};

/// Channel-major (C x H x W) float tensor.
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    [[nodiscard]] float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

inline Image crop(const Image &image, const BoundingBox &box) {
    if (!box.valid()) {
        throw InvalidInputError("crop box must satisfy x_min < x_max and y_min < y_max");
    }
    const PixelRect r = box.to_pixels(image.width(), image.height());
    if (r.empty()) {
        throw EmptyIntersectionError("crop box " + format_box(box) + " does not intersect the " +
                                     std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                                     " image");
    }
    std::vector<std::uint8_t> out(static_cast<std::size_t>(r.width()) * r.height() * 3);
    const auto src = image.pixels();
    const std::size_t row_bytes = static_cast<std::size_t>(r.width()) * 3;
    for (int y = 0; y < r.height(); ++y) {
        const auto from = (static_cast<std::size_t>(r.y0 + y) * image.width() + r.x0) * 3;
        std::memcpy(out.data() + y * row_bytes, src.data() + from, row_bytes);
    }
    return Image(r.width(), r.height(), std::move(out));
}

/// Where the original sits inside its square-padded version.
inline PixelRect square_pad_placement(int width, int height) {
    const int side = std::max(width, height);
    const int x0 = (side - width) / 2;
    const int y0 = (side - height) / 2;
    return {x0, y0, x0 + width, y0 + height};
}

/// Centers the image on a max(w,h) square; an odd remainder puts the extra fill column/row right/bottom.
inline Image square_pad(const Image &image, Rgb fill = {}) {
    const int side = std::max(image.width(), image.height());
    if (image.width() == side && image.height() == side) {
        return image;
    }
    Image out(side, side, fill);
    const PixelRect at = square_pad_placement(image.width(), image.height());
    const std::size_t row_bytes = static_cast<std::size_t>(image.width()) * 3;
    auto dst = out.pixels();
    const auto src = image.pixels();
    for (int y = 0; y < image.height(); ++y) {
        std::memcpy(dst.data() + (static_cast<std::size_t>(at.y0 + y) * side + at.x0) * 3,
                    src.data() + static_cast<std::size_t>(y) * row_bytes, row_bytes);
    }
    return out;
}

namespace detail {

struct Tap {
    int lo = 0;
    int hi = 0;
    /// Weight of `hi` is frac / denom, weight of `lo` is (denom - frac) / denom.
    std::int64_t frac = 0;
};

// Half-pixel-center source coordinate s = ((2i + 1) * src - dst) / (2 * dst), clamped
// to the edge samples. Kept as an exact fraction over 2 * dst.
inline std::vector<Tap> bilinear_taps(int src, int dst) {
    std::vector<Tap> taps(static_cast<std::size_t>(dst));
    const std::int64_t denom = 2 * static_cast<std::int64_t>(dst);
    for (int i = 0; i < dst; ++i) {
        const std::int64_t num = (2 * static_cast<std::int64_t>(i) + 1) * src - dst;
        if (num <= 0) {
            taps[i] = {0, std::min(1, src - 1), 0};
            continue;
        }
        const auto lo = static_cast<int>(num / denom);
        if (lo >= src - 1) {
            taps[i] = {src - 1, src - 1, 0};
            continue;
        }
        taps[i] = {lo, lo + 1, num - lo * denom};
    }
    return taps;
}

// Nearest source index; exact .5 ties round down.
inline std::vector<int> nearest_taps(int src, int dst) {
    std::vector<int> taps(static_cast<std::size_t>(dst));
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
        const double s = (i + 0.5) * scale - 0.5;
        taps[i] = std::clamp(static_cast<int>(std::ceil(s - 0.5)), 0, src - 1);
    }
    return taps;
}

} // namespace detail

inline Image resize(const Image &image, const ResizePolicy &policy) {
    policy.validate();
    const int sw = image.width();
    const int sh = image.height();
    const int dw = policy.target_width;
    const int dh = policy.target_height;
    const auto src = image.pixels();
    std::vector<std::uint8_t> out(static_cast<std::size_t>(dw) * dh * 3);

    if (policy.filter == ResizeFilter::nearest) {
        const auto xs = detail::nearest_taps(sw, dw);
        const auto ys = detail::nearest_taps(sh, dh);
        for (int y = 0; y < dh; ++y) {
            const auto row = static_cast<std::size_t>(ys[y]) * sw;
            for (int x = 0; x < dw; ++x) {
                const auto s = (row + xs[x]) * 3;
                const auto d = (static_cast<std::size_t>(y) * dw + x) * 3;
                out[d] = src[s];
                out[d + 1] = src[s + 1];
                out[d + 2] = src[s + 2];
            }
        }
        return Image(dw, dh, std::move(out));
    }

    // Integer weights: the interpolated value is exact, so rounding half up is decided exactly.
    const auto xs = detail::bilinear_taps(sw, dw);
    const auto ys = detail::bilinear_taps(sh, dh);
    const std::int64_t dx = 2 * static_cast<std::int64_t>(dw);
    const std::int64_t dy = 2 * static_cast<std::int64_t>(dh);
    const std::int64_t total = dx * dy;
    for (int y = 0; y < dh; ++y) {
        const auto &ty = ys[y];
        const auto row0 = static_cast<std::size_t>(ty.lo) * sw;
        const auto row1 = static_cast<std::size_t>(ty.hi) * sw;
        for (int x = 0; x < dw; ++x) {
            const auto &tx = xs[x];
            const auto d = (static_cast<std::size_t>(y) * dw + x) * 3;
            for (int c = 0; c < 3; ++c) {
                const std::int64_t p00 = src[(row0 + tx.lo) * 3 + c];
                const std::int64_t p01 = src[(row0 + tx.hi) * 3 + c];
                const std::int64_t p10 = src[(row1 + tx.lo) * 3 + c];
                const std::int64_t p11 = src[(row1 + tx.hi) * 3 + c];
                const std::int64_t top = p00 * (dx - tx.frac) + p01 * tx.frac;
                const std::int64_t bottom = p10 * (dx - tx.frac) + p11 * tx.frac;
                const std::int64_t v = top * (dy - ty.frac) + bottom * ty.frac;
                out[d + c] = static_cast<std::uint8_t>((2 * v + total) / (2 * total));
            }
        }
    }
    return Image(dw, dh, std::move(out));
}

/// resize, scale to [0,1], then (x - mean) / std per channel; channel-major output.
inline Tensor to_model_input(const Image &image, const ResizePolicy &policy, const NormalizationSpec &norm) {
    policy.validate();
    norm.validate();
    const Image sized = (image.width() == policy.target_width && image.height() == policy.target_height)
                            ? image
                            : resize(image, policy);
    Tensor t{3, sized.height(), sized.width(), {}};
    const std::size_t plane = static_cast<std::size_t>(t.height) * t.width;
    t.data.resize(plane * 3);
    const auto px = sized.pixels();
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < 3; ++c) {
            const double v = px[i * 3 + c] / 255.0;
            t.data[c * plane + i] = static_cast<float>((v - norm.mean[c]) / norm.std[c]);
        }
    }
    return t;
}

} // namespace twostage
