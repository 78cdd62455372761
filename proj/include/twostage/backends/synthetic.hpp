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

// Analytic stand-ins for the detector and the brand classifier. They are
// only meaningful on images from the synthetic corpus generator: one solid,
// saturated rectangle on a near-neutral noise background.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "twostage/backends/contracts.hpp"
#include "twostage/core/error.hpp"
#include "twostage/imgeom.hpp"

namespace twostage {

/// max channel - min channel, i.e. distance from the neutral (gray) axis.
inline int chroma(Rgb c) noexcept {
    return std::max({c.r, c.g, c.b}) - std::min({c.r, c.g, c.b});
}

/// HSV hue in degrees, [0, 360). Zero for neutral pixels.
inline double hue_degrees(Rgb c) noexcept {
    const int mx = std::max({c.r, c.g, c.b});
    const int mn = std::min({c.r, c.g, c.b});
    const double d = mx - mn;
    if (d == 0.0) {
        return 0.0;
    }
    double h = 0.0;
    if (mx == c.r) {
        h = std::fmod((c.g - c.b) / d, 6.0);
    } else if (mx == c.g) {
        h = (c.b - c.r) / d + 2.0;
    } else {
        h = (c.r - c.g) / d + 4.0;
    }
    h *= 60.0;
    return h < 0.0 ? h + 360.0 : h;
}

/// Saturated color with the given hue (degrees) and value (max channel).
inline Rgb rgb_from_hue(double hue, std::uint8_t value) noexcept {
    hue = std::fmod(hue, 360.0);
    if (hue < 0.0) {
        hue += 360.0;
    }
    const double h6 = hue / 60.0;
    const double x = 1.0 - std::fabs(std::fmod(h6, 2.0) - 1.0);
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h6)) {
    case 0: r = 1; g = x; break;
    case 1: r = x; g = 1; break;
    case 2: g = 1; b = x; break;
    case 3: g = x; b = 1; break;
    case 4: r = x; b = 1; break;
    default: r = 1; b = x; break;
    }
    auto q = [value](double v) { return static_cast<std::uint8_t>(std::lround(v * value)); };
    return {q(r), q(g), q(b)};
}

inline double circular_distance_deg(double a, double b) noexcept {
    double d = std::fabs(std::fmod(a - b, 360.0));
    return d > 180.0 ? 360.0 - d : d;
}

struct HueBand {
    double center = 0.0; // degrees
    double width = 0.0;  // degrees, full width

    [[nodiscard]] bool contains(double hue) const noexcept { return circular_distance_deg(hue, center) <= width / 2; }
};

/// Evenly spaced bands; each band spans `width_fraction` of the pitch 360/K.
inline std::vector<HueBand> default_hue_bands(std::size_t class_count, double width_fraction = 0.5) {
    std::vector<HueBand> bands;
    const double pitch = 360.0 / static_cast<double>(class_count);
    for (std::size_t i = 0; i < class_count; ++i) {
        bands.push_back({(static_cast<double>(i) + 0.5) * pitch, width_fraction * pitch});
    }
    return bands;
}

/// Throws ConfigError unless every band has positive width and no two bands overlap.
inline void validate_hue_bands(const std::vector<HueBand> &bands) {
    for (std::size_t i = 0; i < bands.size(); ++i) {
        if (!(bands[i].width > 0.0) || bands[i].width >= 360.0) {
            throw ConfigError("hue band " + std::to_string(i) + " must have width in (0, 360)");
        }
        for (std::size_t j = 0; j < i; ++j) {
            const double gap = circular_distance_deg(bands[i].center, bands[j].center);
            if (gap < (bands[i].width + bands[j].width) / 2) {
                throw ConfigError("hue bands " + std::to_string(j) + " and " + std::to_string(i) + " overlap");
            }
        }
    }
}

/// Chroma above which a pixel counts as part of the foreground rectangle.
inline constexpr int synthetic_chroma_threshold = 160;

/// Reports the tight box of the largest 4-connected region of high-chroma pixels.
class SyntheticShapeDetector final : public DetectorBackend {
  public:
    [[nodiscard]] const std::vector<std::string> &vocabulary() const override { return vocabulary_; }

  protected:
    [[nodiscard]] std::vector<Detection> do_detect(const Image &image) const override {
        const int w = image.width();
        const int h = image.height();
        const std::size_t n = static_cast<std::size_t>(w) * h;
        std::vector<std::uint8_t> mask(n);
        const auto px = image.pixels();
        for (std::size_t i = 0; i < n; ++i) {
            mask[i] = chroma({px[i * 3], px[i * 3 + 1], px[i * 3 + 2]}) > synthetic_chroma_threshold;
        }

        std::vector<std::uint8_t> seen(n);
        std::vector<std::size_t> stack;
        std::size_t best_count = 0;
        PixelRect best{};
        for (std::size_t start = 0; start < n; ++start) {
            if (!mask[start] || seen[start]) {
                continue;
            }
            std::size_t count = 0;
            PixelRect r{w, h, 0, 0};
            stack.push_back(start);
            seen[start] = 1;
            while (!stack.empty()) {
                const auto i = stack.back();
                stack.pop_back();
                ++count;
                const int x = static_cast<int>(i % w);
                const int y = static_cast<int>(i / w);
                r.x0 = std::min(r.x0, x);
                r.y0 = std::min(r.y0, y);
                r.x1 = std::max(r.x1, x + 1);
                r.y1 = std::max(r.y1, y + 1);
                auto visit = [&](std::size_t j) {
                    if (mask[j] && !seen[j]) {
                        seen[j] = 1;
                        stack.push_back(j);
                    }
                };
                if (x > 0) visit(i - 1);
                if (x + 1 < w) visit(i + 1);
                if (y > 0) visit(i - w);
                if (y + 1 < h) visit(i + w);
            }
            if (count > best_count) {
                best_count = count;
                best = r;
            }
        }
        if (best_count == 0) {
            return {};
        }
        const double area = static_cast<double>(best.width()) * best.height();
        return {Detection{{double(best.x0), double(best.y0), double(best.x1), double(best.y1)},
                          static_cast<double>(best_count) / area, 0}};
    }

  private:
    std::vector<std::string> vocabulary_{"bottle"};
};

/// Logit for class k: gain * R * (1 - d_k), where R in [0,1] is the chroma-weighted hue
/// coherence of the image, and d_k the circular distance from the mean hue to the band
/// center in units of the band pitch (360/K). Like a real network, it first resizes its
/// input to a fixed 224x224 grid.
class SyntheticColorClassifier final : public ClassifierBackend {
  public:
    static constexpr double gain = 20.0;

    explicit SyntheticColorClassifier(std::vector<HueBand> bands, ResizePolicy input = {224, 224})
        : bands_(std::move(bands)), input_(input) {
        input_.validate();
        if (bands_.size() < 2) {
            throw ConfigError("synthetic classifier needs at least two classes");
        }
        validate_hue_bands(bands_);
    }

    [[nodiscard]] std::size_t class_count() const override { return bands_.size(); }
    [[nodiscard]] const std::vector<HueBand> &bands() const noexcept { return bands_; }

    struct HueSummary {
        double mean_hue = 0.0;
        double coherence = 0.0;
    };

    [[nodiscard]] static HueSummary summarize(const Image &image) {
        const auto px = image.pixels();
        double sx = 0.0;
        double sy = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i + 2 < px.size(); i += 3) {
            const Rgb c{px[i], px[i + 1], px[i + 2]};
            const int ch = chroma(c);
            if (ch == 0) {
                continue;
            }
            const double a = hue_degrees(c) * std::numbers::pi / 180.0;
            sx += ch * std::cos(a);
            sy += ch * std::sin(a);
            total += ch;
        }
        if (total == 0.0) {
            return {};
        }
        double mean = std::atan2(sy, sx) * 180.0 / std::numbers::pi;
        if (mean < 0.0) {
            mean += 360.0;
        }
        return {mean, std::hypot(sx, sy) / total};
    }

  protected:
    [[nodiscard]] std::vector<double> do_classify(const Image &image) const override {
        const auto s = summarize(resize(image, input_));
        const double pitch = 360.0 / static_cast<double>(bands_.size());
        std::vector<double> logits(bands_.size());
        for (std::size_t k = 0; k < bands_.size(); ++k) {
            const double d = circular_distance_deg(s.mean_hue, bands_[k].center) / pitch;
            logits[k] = gain * s.coherence * (1.0 - d);
        }
        return logits;
    }

  private:
    std::vector<HueBand> bands_;
    ResizePolicy input_;
};

/// Chroma-weighted hue histogram (bins of 360/dimension degrees), normalized by pixel count.
class SyntheticHueFeatureExtractor final : public FeatureExtractorBackend {
  public:
    explicit SyntheticHueFeatureExtractor(std::size_t dimension = 64, ResizePolicy input = {224, 224})
        : dimension_(dimension), input_(input) {
        if (dimension_ < 1) {
            throw ConfigError("feature dimension must be >= 1");
        }
        input_.validate();
    }

    [[nodiscard]] std::size_t dimension() const override { return dimension_; }

  protected:
    [[nodiscard]] std::vector<double> do_extract(const Image &image) const override {
        const Image sized = resize(image, input_);
        std::vector<double> hist(dimension_);
        const auto px = sized.pixels();
        const double bin = 360.0 / static_cast<double>(dimension_);
        for (std::size_t i = 0; i + 2 < px.size(); i += 3) {
            const Rgb c{px[i], px[i + 1], px[i + 2]};
            const int ch = chroma(c);
            if (ch == 0) {
                continue;
            }
            const auto k = std::min(dimension_ - 1, static_cast<std::size_t>(hue_degrees(c) / bin));
            hist[k] += ch / 255.0;
        }
        const double n = static_cast<double>(px.size() / 3);
        for (double &v : hist) {
            v /= n;
        }
        return hist;
    }

  private:
    std::size_t dimension_;
    ResizePolicy input_;
};

inline DetectorPtr synthetic_shape_detector() { return std::make_shared<SyntheticShapeDetector>(); }

inline ClassifierPtr synthetic_color_classifier(std::vector<HueBand> bands) {
    return std::make_shared<SyntheticColorClassifier>(std::move(bands));
}

/// Classifier over a registry using the default evenly spaced bands, one per class.
inline ClassifierPtr synthetic_color_classifier(const ClassRegistry &registry) {
    return synthetic_color_classifier(default_hue_bands(registry.size()));
}

} // namespace twostage
