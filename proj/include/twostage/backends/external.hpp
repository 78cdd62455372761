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

// Adapters from a serialized-graph inference engine to the backend contracts.
// The engine is abstracted as an InferenceSession (named input tensor in,
// named flat output tensors out); io_spec text says how to feed and decode it.
//
// io_spec keys:
//   role              detector | classifier | feature_extractor
//   model             artifact path, relative to the io_spec file
//   input.name        input tensor name
//   input.width / input.height / input.filter (nearest|bilinear)
//   input.mean / input.std       three comma-separated reals (optional)
//   output.logits                classifier
//   output.features, output.dimension          feature_extractor
//   output.boxes, output.scores, output.classes, boxes.convention,
//   vocabulary (comma list) or vocabulary_file, operating_floor (optional)   detector

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "twostage/backends/contracts.hpp"
#include "twostage/core/error.hpp"
#include "twostage/core/keyvalue.hpp"
#include "twostage/imgeom.hpp"

namespace twostage {

enum class BackendRole { detector, classifier, feature_extractor };

inline std::string_view to_string(BackendRole r) {
    switch (r) {
    case BackendRole::detector:
        return "detector";
    case BackendRole::classifier:
        return "classifier";
    case BackendRole::feature_extractor:
        return "feature_extractor";
    }
    return "?";
}

enum class BoxConvention {
    /// Corners in [0,1] relative to the image.
    xyxy_normalized,
    /// Corners in pixels of the resized model input.
    xyxy_input_pixels,
    /// Corners in pixels of the original image.
    xyxy_image_pixels,
};

struct IoSpec {
    BackendRole role = BackendRole::classifier;
    std::filesystem::path model_path;
    std::string input_name;
    ResizePolicy input;
    NormalizationSpec normalization;
    std::string logits_output;
    std::string features_output;
    std::size_t feature_dimension = 0;
    std::string boxes_output;
    std::string scores_output;
    std::string classes_output;
    BoxConvention box_convention = BoxConvention::xyxy_normalized;
    std::vector<std::string> vocabulary;
    double operating_floor = 0.0;
};

inline IoSpec parse_io_spec(const KeyValues &kv, const std::filesystem::path &base_dir = {}) {
    IoSpec spec;
    const auto &role = kv.require("role");
    if (role == "detector") {
        spec.role = BackendRole::detector;
    } else if (role == "classifier") {
        spec.role = BackendRole::classifier;
    } else if (role == "feature_extractor") {
        spec.role = BackendRole::feature_extractor;
    } else {
        kv.bad("role", "detector, classifier or feature_extractor");
    }
    spec.model_path = base_dir / kv.require("model");
    spec.input_name = kv.require("input.name");
    const auto w = kv.integer("input.width");
    const auto h = kv.integer("input.height");
    if (w < 1 || h < 1 || w > 16384 || h > 16384) {
        kv.bad("input.width", "an input size between 1 and 16384");
    }
    spec.input.target_width = static_cast<int>(w);
    spec.input.target_height = static_cast<int>(h);
    if (auto f = kv.get("input.filter")) {
        if (*f == "nearest") {
            spec.input.filter = ResizeFilter::nearest;
        } else if (*f != "bilinear") {
            kv.bad("input.filter", "nearest or bilinear");
        }
    }
    for (auto [key, target] : {std::pair{"input.mean", &spec.normalization.mean},
                               std::pair{"input.std", &spec.normalization.std}}) {
        if (kv.contains(key)) {
            auto v = kv.reals(key);
            if (v.size() != 3) {
                kv.bad(key, "three comma-separated reals");
            }
            std::copy(v.begin(), v.end(), target->begin());
        }
    }
    try {
        spec.normalization.validate();
    } catch (const InvalidInputError &e) {
        throw ConfigError(kv.source() + ": " + e.what());
    }

    switch (spec.role) {
    case BackendRole::classifier:
        spec.logits_output = kv.require("output.logits");
        break;
    case BackendRole::feature_extractor: {
        spec.features_output = kv.require("output.features");
        const auto d = kv.integer("output.dimension");
        if (d < 1) {
            kv.bad("output.dimension", "a positive integer");
        }
        spec.feature_dimension = static_cast<std::size_t>(d);
        break;
    }
    case BackendRole::detector: {
        spec.boxes_output = kv.require("output.boxes");
        spec.scores_output = kv.require("output.scores");
        spec.classes_output = kv.require("output.classes");
        const auto &conv = kv.require("boxes.convention");
        if (conv == "xyxy_normalized") {
            spec.box_convention = BoxConvention::xyxy_normalized;
        } else if (conv == "xyxy_input_pixels") {
            spec.box_convention = BoxConvention::xyxy_input_pixels;
        } else if (conv == "xyxy_image_pixels") {
            spec.box_convention = BoxConvention::xyxy_image_pixels;
        } else {
            kv.bad("boxes.convention", "xyxy_normalized, xyxy_input_pixels or xyxy_image_pixels");
        }
        if (auto file = kv.get("vocabulary_file")) {
            for (auto &line : text::read_lines(base_dir / *file)) {
                if (!text::trim(line).empty()) {
                    spec.vocabulary.emplace_back(text::trim(line));
                }
            }
        } else {
            for (auto name : text::split(kv.require("vocabulary"), ',')) {
                spec.vocabulary.emplace_back(text::trim(name));
            }
        }
        if (kv.contains("operating_floor")) {
            spec.operating_floor = kv.real("operating_floor");
            if (!(spec.operating_floor >= 0.0 && spec.operating_floor <= 1.0)) {
                kv.bad("operating_floor", "in [0, 1]");
            }
        }
        break;
    }
    }
    return spec;
}

inline IoSpec load_io_spec(const std::filesystem::path &path) {
    return parse_io_spec(KeyValues::load(path), path.parent_path());
}

/// Single model execution: one named input, named flat float outputs.
/// Implementations must tolerate concurrent run() calls.
class InferenceSession {
  public:
    virtual ~InferenceSession() = default;
    [[nodiscard]] virtual std::map<std::string, std::vector<float>> run(const std::string &input_name,
                                                                        const Tensor &input,
                                                                        const std::vector<std::string> &outputs) const = 0;
};

using SessionPtr = std::shared_ptr<const InferenceSession>;

namespace detail {

inline std::map<std::string, std::vector<float>> probe(const InferenceSession &session, const IoSpec &spec,
                                                       const std::vector<std::string> &outputs) {
    Tensor zero{3, spec.input.target_height, spec.input.target_width, {}};
    zero.data.assign(static_cast<std::size_t>(3) * zero.height * zero.width, 0.0f);
    std::map<std::string, std::vector<float>> result;
    try {
        result = session.run(spec.input_name, zero, outputs);
    } catch (const BackendError &e) {
        throw ShapeMismatchError(std::string("model rejected a ") + std::to_string(zero.width) + "x" +
                                 std::to_string(zero.height) + " input: " + e.what());
    }
    for (const auto &name : outputs) {
        if (!result.contains(name)) {
            throw ShapeMismatchError("model has no output named '" + name + "'");
        }
    }
    return result;
}

inline void require_role(const IoSpec &spec, BackendRole role) {
    if (spec.role != role) {
        throw ConfigError("io_spec declares role " + std::string(to_string(spec.role)) + ", expected " +
                          std::string(to_string(role)));
    }
}

inline std::vector<double> widen(const std::vector<float> &v) { return {v.begin(), v.end()}; }

} // namespace detail

class ExternalClassifier final : public ClassifierBackend {
  public:
    ExternalClassifier(SessionPtr session, IoSpec spec, std::size_t class_count)
        : session_(std::move(session)), spec_(std::move(spec)), class_count_(class_count) {
        detail::require_role(spec_, BackendRole::classifier);
        const auto out = detail::probe(*session_, spec_, {spec_.logits_output});
        const auto n = out.at(spec_.logits_output).size();
        if (n != class_count_) {
            throw ShapeMismatchError("classifier output '" + spec_.logits_output + "' has " + std::to_string(n) +
                                     " logits, class registry has " + std::to_string(class_count_));
        }
    }

    [[nodiscard]] std::size_t class_count() const override { return class_count_; }

  protected:
    [[nodiscard]] std::vector<double> do_classify(const Image &image) const override {
        const auto t = to_model_input(image, spec_.input, spec_.normalization);
        return detail::widen(session_->run(spec_.input_name, t, {spec_.logits_output}).at(spec_.logits_output));
    }

  private:
    SessionPtr session_;
    IoSpec spec_;
    std::size_t class_count_;
};

class ExternalFeatureExtractor final : public FeatureExtractorBackend {
  public:
    ExternalFeatureExtractor(SessionPtr session, IoSpec spec) : session_(std::move(session)), spec_(std::move(spec)) {
        detail::require_role(spec_, BackendRole::feature_extractor);
        const auto out = detail::probe(*session_, spec_, {spec_.features_output});
        const auto n = out.at(spec_.features_output).size();
        if (n != spec_.feature_dimension) {
            throw ShapeMismatchError("feature output '" + spec_.features_output + "' has " + std::to_string(n) +
                                     " values, io_spec declares " + std::to_string(spec_.feature_dimension));
        }
    }

    [[nodiscard]] std::size_t dimension() const override { return spec_.feature_dimension; }

  protected:
    [[nodiscard]] std::vector<double> do_extract(const Image &image) const override {
        const auto t = to_model_input(image, spec_.input, spec_.normalization);
        return detail::widen(
            session_->run(spec_.input_name, t, {spec_.features_output}).at(spec_.features_output));
    }

  private:
    SessionPtr session_;
    IoSpec spec_;
};

/// Boxes are N x 4 corners, scores and classes N values each. Boxes are mapped to
/// image pixels and clamped; candidates below the operating floor, with an unknown
/// class, or not overlapping the image are dropped.
class ExternalDetector final : public DetectorBackend {
  public:
    ExternalDetector(SessionPtr session, IoSpec spec) : session_(std::move(session)), spec_(std::move(spec)) {
        detail::require_role(spec_, BackendRole::detector);
        if (spec_.vocabulary.empty()) {
            throw ConfigError("detector io_spec has an empty vocabulary");
        }
        check_shapes(detail::probe(*session_, spec_, outputs()));
    }

    [[nodiscard]] const std::vector<std::string> &vocabulary() const override { return spec_.vocabulary; }
    [[nodiscard]] double operating_floor() const override { return spec_.operating_floor; }

  protected:
    [[nodiscard]] std::vector<Detection> do_detect(const Image &image) const override {
        const auto t = to_model_input(image, spec_.input, spec_.normalization);
        const auto out = session_->run(spec_.input_name, t, outputs());
        const auto n = check_shapes(out);
        const auto &boxes = out.at(spec_.boxes_output);
        const auto &scores = out.at(spec_.scores_output);
        const auto &classes = out.at(spec_.classes_output);
        double sx = 1.0;
        double sy = 1.0;
        switch (spec_.box_convention) {
        case BoxConvention::xyxy_normalized:
            sx = image.width();
            sy = image.height();
            break;
        case BoxConvention::xyxy_input_pixels:
            sx = static_cast<double>(image.width()) / spec_.input.target_width;
            sy = static_cast<double>(image.height()) / spec_.input.target_height;
            break;
        case BoxConvention::xyxy_image_pixels:
            break;
        }
        std::vector<Detection> result;
        for (std::size_t i = 0; i < n; ++i) {
            const double score = scores[i];
            const double cls = classes[i];
            if (!std::isfinite(score) || score < spec_.operating_floor || score > 1.0 || !std::isfinite(cls) ||
                cls < 0.0 || cls >= static_cast<double>(spec_.vocabulary.size()) || cls != std::floor(cls)) {
                continue;
            }
            const BoundingBox raw{boxes[4 * i] * sx, boxes[4 * i + 1] * sy, boxes[4 * i + 2] * sx,
                                  boxes[4 * i + 3] * sy};
            if (!raw.intersects(image.width(), image.height())) {
                continue;
            }
            const auto box = raw.clamped(image.width(), image.height());
            if (!box.valid()) {
                continue;
            }
            result.push_back({box, score, static_cast<int>(cls)});
        }
        return result;
    }

  private:
    [[nodiscard]] std::vector<std::string> outputs() const {
        return {spec_.boxes_output, spec_.scores_output, spec_.classes_output};
    }

    std::size_t check_shapes(const std::map<std::string, std::vector<float>> &out) const {
        const auto nb = out.at(spec_.boxes_output).size();
        const auto ns = out.at(spec_.scores_output).size();
        const auto nc = out.at(spec_.classes_output).size();
        if (nb % 4 != 0 || nb / 4 != ns || ns != nc) {
            throw ShapeMismatchError("detector outputs disagree: " + std::to_string(nb) + " box values, " +
                                     std::to_string(ns) + " scores, " + std::to_string(nc) + " classes");
        }
        return ns;
    }

    SessionPtr session_;
    IoSpec spec_;
};

} // namespace twostage
