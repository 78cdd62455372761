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

// Detect-then-classify pipeline engine.
//
// Three strategies share one detector pass and one crop chain:
//   whole_image     classify the full frame, no detector involved
//   top_confidence  classify every surviving box, keep the most confident,
//                   accept it if its max logit clears the gate
//   per_box_loop    walk surviving boxes by detector score, accept the first
//                   whose max logit clears the gate
// Both detector strategies fall back to whole-image classification, so
// every valid image gets a verdict.
//
// Confidence is always the maximum raw logit, never a softmax probability:
// the gates (9.0, 8.0) live in logit space.

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "twostage/backends/contracts.hpp"
#include "twostage/core/error.hpp"
#include "twostage/core/types.hpp"
#include "twostage/imgeom.hpp"

namespace twostage {

enum class Strategy { whole_image, top_confidence, per_box_loop };

inline std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::whole_image:
        return "whole_image";
    case Strategy::top_confidence:
        return "top_confidence";
    case Strategy::per_box_loop:
        return "per_box_loop";
    }
    return "?";
}

inline std::optional<Strategy> parse_strategy(std::string_view s) {
    for (auto v : {Strategy::whole_image, Strategy::top_confidence, Strategy::per_box_loop}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    return std::nullopt;
}

/// crop -> square pad -> resize, the same chain used to build the crop classifier's training set.
struct CropPreprocess {
    Rgb fill{};
    ResizePolicy resize{1024, 1024, ResizeFilter::bilinear};
};

inline Image prepare_crop(const Image &image, const BoundingBox &box, const CropPreprocess &pre) {
    return twostage::resize(square_pad(crop(image, box), pre.fill), pre.resize);
}

/// Detector class filter; nullopt accepts every class.
using ClassFilter = std::optional<std::set<int>>;

struct PipelineConfig {
    Strategy strategy = Strategy::top_confidence;
    /// Strictly descending, each in (0, 1].
    std::vector<double> detector_thresholds{0.3, 0.1, 0.01};
    /// Minimum max-logit for a crop classification to be accepted.
    double classification_gate = 9.0;
    ClassFilter bottle_class_ids;
    DetectorPtr detector;
    ClassifierPtr crop_classifier;
    ClassifierPtr fallback_classifier;
    CropPreprocess crop_preprocess;
    /// Names for verdict labels; ids are printed when absent.
    std::shared_ptr<const ClassRegistry> registry;

    void validate() const;
};

inline void validate_thresholds(const std::vector<double> &thresholds) {
    if (thresholds.empty()) {
        throw ConfigError("detector thresholds must not be empty");
    }
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0 && thresholds[i] <= 1.0)) {
            throw ConfigError("detector threshold " + text::format_double(thresholds[i]) + " outside (0, 1]");
        }
        if (i > 0 && !(thresholds[i] < thresholds[i - 1])) {
            throw ConfigError("detector thresholds must be strictly descending (got " +
                              text::format_double(thresholds[i - 1]) + " then " +
                              text::format_double(thresholds[i]) + ")");
        }
    }
}

inline void PipelineConfig::validate() const {
    if (!fallback_classifier) {
        throw ConfigError("pipeline needs a whole-image (fallback) classifier");
    }
    if (strategy == Strategy::whole_image) {
        return;
    }
    validate_thresholds(detector_thresholds);
    if (!detector) {
        throw ConfigError(std::string("strategy ") + std::string(to_string(strategy)) + " needs a detector");
    }
    if (!crop_classifier) {
        throw ConfigError(std::string("strategy ") + std::string(to_string(strategy)) + " needs a crop classifier");
    }
    if (!std::isfinite(classification_gate)) {
        throw ConfigError("classification gate must be finite");
    }
    if (crop_classifier->class_count() != fallback_classifier->class_count()) {
        throw ConfigError("crop and fallback classifiers disagree on class count");
    }
    crop_preprocess.resize.validate();
}

enum class VerdictSource { crop, fallback_whole_image };

inline std::string_view to_string(VerdictSource s) {
    return s == VerdictSource::crop ? "crop" : "fallback_whole_image";
}

struct PipelineVerdict {
    Label label;
    /// Winning max logit.
    double confidence = 0.0;
    VerdictSource source = VerdictSource::fallback_whole_image;
    /// Present iff source == crop.
    std::optional<BoundingBox> chosen_box;
    /// Raw detector output, for reporting.
    std::vector<Detection> all_detections;
};

/// Keeps class-filtered detections scoring >= t for the first threshold t that keeps any.
/// Input order is preserved; an empty result means nothing reached the last threshold.
inline std::vector<Detection> cascade_filter(const std::vector<Detection> &detections,
                                             const std::vector<double> &thresholds,
                                             const ClassFilter &class_filter = std::nullopt) {
    validate_thresholds(thresholds);
    std::vector<Detection> candidates;
    for (const auto &d : detections) {
        if (!class_filter || class_filter->contains(d.class_id)) {
            candidates.push_back(d);
        }
    }
    for (double t : thresholds) {
        std::vector<Detection> kept;
        for (const auto &d : candidates) {
            if (d.score >= t) {
                kept.push_back(d);
            }
        }
        if (!kept.empty()) {
            return kept;
        }
    }
    return {};
}

namespace detail {

inline Label make_label(std::size_t id, const std::shared_ptr<const ClassRegistry> &registry) {
    if (registry) {
        return registry->label(id);
    }
    return {id, std::to_string(id)};
}

} // namespace detail

inline PipelineVerdict run_whole_image(const Image &image, const ClassifierBackend &classifier,
                                       const std::shared_ptr<const ClassRegistry> &registry = nullptr) {
    const auto scores = classifier.classify(image);
    const auto best = scores.best_class();
    return {detail::make_label(best, registry), scores.logits()[best], VerdictSource::fallback_whole_image,
            std::nullopt, {}};
}

namespace detail {

struct CropResult {
    BoundingBox box;
    std::size_t class_id = 0;
    double confidence = 0.0;
};

inline CropResult classify_crop(const Image &image, const Detection &d, const PipelineConfig &cfg) {
    const auto scores = cfg.crop_classifier->classify(prepare_crop(image, d.box, cfg.crop_preprocess));
    const auto best = scores.best_class();
    return {d.box, best, scores.logits()[best]};
}

inline PipelineVerdict fallback(const Image &image, const PipelineConfig &cfg, std::vector<Detection> all) {
    auto v = run_whole_image(image, *cfg.fallback_classifier, cfg.registry);
    v.all_detections = std::move(all);
    return v;
}

inline PipelineVerdict accept(const CropResult &r, const PipelineConfig &cfg, std::vector<Detection> all) {
    return {make_label(r.class_id, cfg.registry), r.confidence, VerdictSource::crop, r.box, std::move(all)};
}

} // namespace detail

inline PipelineVerdict run_top_confidence(const Image &image, const PipelineConfig &cfg) {
    cfg.validate();
    auto all = cfg.detector->detect(image);
    const auto boxes = cascade_filter(all, cfg.detector_thresholds, cfg.bottle_class_ids);
    std::optional<detail::CropResult> best;
    for (const auto &d : boxes) {
        auto r = detail::classify_crop(image, d, cfg);
        if (!best || r.confidence > best->confidence) {
            best = r;
        }
    }
    if (best && best->confidence >= cfg.classification_gate) {
        return detail::accept(*best, cfg, std::move(all));
    }
    return detail::fallback(image, cfg, std::move(all));
}

inline PipelineVerdict run_per_box_loop(const Image &image, const PipelineConfig &cfg) {
    cfg.validate();
    auto all = cfg.detector->detect(image);
    const auto boxes = cascade_filter(all, cfg.detector_thresholds, cfg.bottle_class_ids);
    for (const auto &d : boxes) {
        const auto r = detail::classify_crop(image, d, cfg);
        if (r.confidence >= cfg.classification_gate) {
            return detail::accept(r, cfg, std::move(all));
        }
    }
    return detail::fallback(image, cfg, std::move(all));
}

inline PipelineVerdict run_pipeline(const Image &image, const PipelineConfig &cfg) {
    switch (cfg.strategy) {
    case Strategy::whole_image:
        cfg.validate();
        return run_whole_image(image, *cfg.fallback_classifier, cfg.registry);
    case Strategy::top_confidence:
        return run_top_confidence(image, cfg);
    case Strategy::per_box_loop:
        return run_per_box_loop(image, cfg);
    }
    throw ConfigError("unknown strategy");
}

/// `<image path>\t<predicted class>\t<confidence>\t<source>\t<box or ->`
inline std::string format_verdict(std::string_view image_path, const PipelineVerdict &v) {
    std::string out(image_path);
    out += '\t';
    out += v.label.class_name;
    out += '\t';
    out += text::format_double(v.confidence);
    out += '\t';
    out += to_string(v.source);
    out += '\t';
    out += v.chosen_box ? format_box(*v.chosen_box) : std::string("-");
    return out;
}

} // namespace twostage
