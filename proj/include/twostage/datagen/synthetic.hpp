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

// Seeded generator for ground-truth-annotated desk-scale corpora.
//
// Every image holds exactly one solid, fully saturated rectangle whose hue lies
// inside its class band, on a background made of
//   base gray + smooth gray texture + a per-image colour tint + per-pixel noise.
// The background's chroma never exceeds tint_chroma + 2 * amplitude, which
// validate() keeps below the synthetic detector's chroma threshold.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "twostage/backends/synthetic.hpp"
#include "twostage/core/error.hpp"
#include "twostage/core/image.hpp"
#include "twostage/core/manifest.hpp"
#include "twostage/core/parallel.hpp"
#include "twostage/io/ppm.hpp"

namespace twostage::datagen {

struct NoiseParams {
    int base_level = 128;
    /// Per-pixel, per-channel uniform noise in [-amplitude, amplitude].
    int amplitude = 12;
    /// Upper bound of the per-image tint chroma; the actual tint is drawn from [tint/2, tint].
    int tint_chroma = 0;
    /// Amplitude of the smooth gray texture (same offset on all channels).
    int texture_amplitude = 12;
    int texture_cell = 32;
};

inline NoiseParams easy_noise() { return {}; }

/// Strong coloured tint: whole-frame hue statistics are dominated by the background.
inline NoiseParams hard_noise() { return {128, 40, 70, 20, 32}; }

struct SyntheticSpec {
    std::size_t class_count = 44;
    int image_width = 256;
    int image_height = 256;
    /// Rectangle side length as a fraction of the frame side.
    double rect_min_fraction = 0.15;
    double rect_max_fraction = 0.4;
    /// Empty means default_hue_bands(class_count).
    std::vector<HueBand> hue_bands;
    NoiseParams noise;
    std::uint8_t rect_value = 230;
    std::uint64_t seed = 42;

    [[nodiscard]] std::vector<HueBand> bands() const {
        return hue_bands.empty() ? default_hue_bands(class_count) : hue_bands;
    }

    void validate() const {
        if (class_count < 2) {
            throw ConfigError("synthetic corpus needs at least two classes");
        }
        if (image_width < 2 || image_height < 2) {
            throw ConfigError("synthetic image size must be at least 2x2");
        }
        if (!(rect_min_fraction > 0.0 && rect_min_fraction <= rect_max_fraction && rect_max_fraction <= 1.0)) {
            throw ConfigError("rectangle fractions must satisfy 0 < min <= max <= 1");
        }
        const auto b = bands();
        if (b.size() != class_count) {
            throw ConfigError("need exactly one hue band per class");
        }
        validate_hue_bands(b);
        if (noise.amplitude < 0 || noise.tint_chroma < 0 || noise.texture_amplitude < 0 || noise.texture_cell < 1) {
            throw ConfigError("noise parameters must be non-negative");
        }
        if (noise.tint_chroma + 2 * noise.amplitude >= synthetic_chroma_threshold) {
            throw ConfigError("background chroma bound " + std::to_string(noise.tint_chroma + 2 * noise.amplitude) +
                              " reaches the detector threshold " + std::to_string(synthetic_chroma_threshold));
        }
        if (rect_value <= synthetic_chroma_threshold) {
            throw ConfigError("rectangle value must exceed the detector chroma threshold");
        }
    }
};

struct SplitCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
    std::size_t final_test = 0;

    [[nodiscard]] std::size_t of(Split s) const {
        switch (s) {
        case Split::train:
            return train;
        case Split::val:
            return val;
        case Split::test:
            return test;
        case Split::final_test:
            return final_test;
        }
        return 0;
    }
};

struct GroundTruth {
    std::string image_path;
    Label label;
    BoundingBox box;
};

struct SyntheticCorpus {
    ClassRegistry registry;
    DatasetManifest manifest;
    /// Parallel to manifest.records.
    std::vector<Image> images;
    std::vector<GroundTruth> truths;
};

/// mt19937_64 with explicit integer/real mappings, so output does not depend on the standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Integer in [lo, hi].
    int integer(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

  private:
    std::mt19937_64 engine_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::string synthetic_class_name(std::size_t id) {
    std::string digits = std::to_string(id);
    return "class" + std::string(digits.size() < 2 ? 2 - digits.size() : 0, '0') + digits;
}

/// Background only: texture, tint and noise.
inline Image noise_image(int width, int height, const NoiseParams &p, Rng &rng) {
    const int cells_x = width / p.texture_cell + 2;
    const int cells_y = height / p.texture_cell + 2;
    std::vector<double> grid(static_cast<std::size_t>(cells_x) * cells_y);
    for (double &g : grid) {
        g = rng.uniform(-1.0, 1.0) * p.texture_amplitude;
    }
    std::array<int, 3> tint{0, 0, 0};
    if (p.tint_chroma > 0) {
        const int strength = rng.integer(p.tint_chroma / 2, p.tint_chroma);
        const Rgb t = rgb_from_hue(rng.uniform(0.0, 360.0), static_cast<std::uint8_t>(strength));
        tint = {t.r - strength / 2, t.g - strength / 2, t.b - strength / 2};
    }
    Image out(width, height);
    auto px = out.pixels();
    for (int y = 0; y < height; ++y) {
        const double gy = static_cast<double>(y) / p.texture_cell;
        const int cy = static_cast<int>(gy);
        const double fy = gy - cy;
        for (int x = 0; x < width; ++x) {
            const double gx = static_cast<double>(x) / p.texture_cell;
            const int cx = static_cast<int>(gx);
            const double fx = gx - cx;
            auto g = [&](int ix, int iy) { return grid[static_cast<std::size_t>(iy) * cells_x + ix]; };
            const double texture = (1 - fy) * ((1 - fx) * g(cx, cy) + fx * g(cx + 1, cy)) +
                                   fy * ((1 - fx) * g(cx, cy + 1) + fx * g(cx + 1, cy + 1));
            const int base = p.base_level + static_cast<int>(std::lround(texture));
            const auto i = (static_cast<std::size_t>(y) * width + x) * 3;
            for (int c = 0; c < 3; ++c) {
                const int v = base + tint[c] + rng.integer(-p.amplitude, p.amplitude);
                px[i + c] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
            }
        }
    }
    return out;
}

struct SyntheticImage {
    Image image;
    BoundingBox box;
};

inline SyntheticImage generate_synthetic_image(const SyntheticSpec &spec, std::size_t class_id, Rng &rng) {
    const auto bands = spec.bands();
    Image img = noise_image(spec.image_width, spec.image_height, spec.noise, rng);
    auto side = [&](int frame) {
        const int lo = std::max(1, static_cast<int>(std::lround(spec.rect_min_fraction * frame)));
        const int hi = std::max(lo, static_cast<int>(std::lround(spec.rect_max_fraction * frame)));
        return std::min(frame, rng.integer(lo, hi));
    };
    const int w = side(spec.image_width);
    const int h = side(spec.image_height);
    const int x0 = rng.integer(0, spec.image_width - w);
    const int y0 = rng.integer(0, spec.image_height - h);
    const auto &band = bands.at(class_id);
    // Stay off the band edge so 8-bit quantization cannot push the hue outside it.
    const double hue = band.center + rng.uniform(-0.45, 0.45) * band.width;
    const Rgb color = rgb_from_hue(hue, spec.rect_value);
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) {
            img.set(x, y, color);
        }
    }
    return {std::move(img), {double(x0), double(y0), double(x0 + w), double(y0 + h)}};
}

inline ClassRegistry synthetic_registry(std::size_t class_count) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < class_count; ++k) {
        names.push_back(synthetic_class_name(k));
    }
    return ClassRegistry(std::move(names));
}

/// Deterministic under spec.seed. Classes are assigned round-robin within each split.
inline SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec &spec, const SplitCounts &counts,
                                                 unsigned jobs = 1) {
    spec.validate();
    SyntheticCorpus corpus;
    corpus.registry = synthetic_registry(spec.class_count);
    for (auto split : all_splits) {
        for (std::size_t i = 0; i < counts.of(split); ++i) {
            const auto k = i % spec.class_count;
            const auto path = std::string(to_string(split)) + "/" + corpus.registry.name(k) + "_" +
                              std::to_string(i) + ".ppm";
            corpus.manifest.records.push_back({path, corpus.registry.label(k), split});
        }
    }
    const auto n = corpus.manifest.records.size();
    std::vector<SyntheticImage> generated(n, SyntheticImage{Image(1, 1), {}});
    parallel_for(n, jobs, [&](std::size_t i) {
        Rng rng(mix_seed(spec.seed, i));
        generated[i] = generate_synthetic_image(spec, corpus.manifest.records[i].label.class_id, rng);
    });
    for (std::size_t i = 0; i < n; ++i) {
        const auto &r = corpus.manifest.records[i];
        corpus.truths.push_back({r.image_path, r.label, generated[i].box});
        corpus.images.push_back(std::move(generated[i].image));
    }
    return corpus;
}

/// `<image path>\t<class>\t<x_min,y_min,x_max,y_max>` per line.
inline std::string serialize_ground_truth(const std::vector<GroundTruth> &truths) {
    std::string out;
    for (const auto &t : truths) {
        out += t.image_path + "\t" + t.label.class_name + "\t" + format_box(t.box) + "\n";
    }
    return out;
}

inline std::vector<GroundTruth> load_ground_truth(const std::filesystem::path &path, const ClassRegistry &registry) {
    std::vector<GroundTruth> out;
    const auto lines = text::read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty()) {
            continue;
        }
        const auto f = text::split(lines[i], '\t');
        auto box = f.size() == 3 ? text::parse_real_list(f[2]) : std::nullopt;
        const auto id = f.size() == 3 ? registry.find(std::string(f[1])) : std::nullopt;
        if (!box || box->size() != 4 || !id) {
            throw ParseError(path.string(), i + 1, "expected <image>\\t<class>\\t<x_min,y_min,x_max,y_max>");
        }
        out.push_back({std::string(f[0]), registry.label(*id), {(*box)[0], (*box)[1], (*box)[2], (*box)[3]}});
    }
    return out;
}

/// Writes images, manifest.tsv, classes.txt and ground_truth.tsv under `dir`.
inline void write_synthetic_corpus(const SyntheticCorpus &corpus, const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    for (std::size_t i = 0; i < corpus.images.size(); ++i) {
        io::write_image(dir / corpus.manifest.records[i].image_path, corpus.images[i]);
    }
    corpus.manifest.save(dir / "manifest.tsv");
    corpus.registry.save(dir / "classes.txt");
    text::write_text(dir / "ground_truth.tsv", serialize_ground_truth(corpus.truths));
}

} // namespace twostage::datagen
