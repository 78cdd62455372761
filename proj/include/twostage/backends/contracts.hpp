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

// Contracts for the three model roles. Public entry points are non-virtual:
// they call the backend hook and then enforce the contract (sorting, ranges,
// shapes) so every implementation looks the same to the pipeline.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "twostage/core/error.hpp"
#include "twostage/core/image.hpp"
#include "twostage/core/types.hpp"

namespace twostage {

class DetectorBackend {
  public:
    virtual ~DetectorBackend() = default;

    /// All candidates at the backend's operating floor, sorted by descending score.
    [[nodiscard]] std::vector<Detection> detect(const Image &image) const {
        auto detections = do_detect(image);
        for (const auto &d : detections) {
            if (!(d.score >= 0.0 && d.score <= 1.0)) {
                throw BackendError("detector emitted score outside [0,1]: " + text::format_double(d.score));
            }
            if (!d.box.intersects(image.width(), image.height())) {
                throw BackendError("detector emitted a box outside the image: " + format_box(d.box));
            }
        }
        sort_by_score(detections);
        return detections;
    }

    /// Detector class index -> name.
    [[nodiscard]] virtual const std::vector<std::string> &vocabulary() const = 0;
    /// Lowest score the backend will ever emit.
    [[nodiscard]] virtual double operating_floor() const { return 0.0; }

  protected:
    [[nodiscard]] virtual std::vector<Detection> do_detect(const Image &image) const = 0;
};

class ClassifierBackend {
  public:
    virtual ~ClassifierBackend() = default;

    [[nodiscard]] ClassScores classify(const Image &image) const {
        auto logits = do_classify(image);
        if (logits.size() != class_count()) {
            throw BackendError("classifier returned " + std::to_string(logits.size()) + " logits for " +
                               std::to_string(class_count()) + " classes");
        }
        for (double v : logits) {
            if (!std::isfinite(v)) {
                throw BackendError("classifier returned a non-finite logit");
            }
        }
        return ClassScores(std::move(logits));
    }

    [[nodiscard]] virtual std::size_t class_count() const = 0;

  protected:
    [[nodiscard]] virtual std::vector<double> do_classify(const Image &image) const = 0;
};

class FeatureExtractorBackend {
  public:
    virtual ~FeatureExtractorBackend() = default;

    [[nodiscard]] std::vector<double> extract(const Image &image) const {
        auto features = do_extract(image);
        if (features.size() != dimension()) {
            throw BackendError("feature extractor returned " + std::to_string(features.size()) +
                               " values, declared dimension " + std::to_string(dimension()));
        }
        for (double v : features) {
            if (!std::isfinite(v)) {
                throw BackendError("feature extractor returned a non-finite value");
            }
        }
        return features;
    }

    [[nodiscard]] virtual std::size_t dimension() const = 0;

  protected:
    [[nodiscard]] virtual std::vector<double> do_extract(const Image &image) const = 0;
};

using DetectorPtr = std::shared_ptr<const DetectorBackend>;
using ClassifierPtr = std::shared_ptr<const ClassifierBackend>;
using FeatureExtractorPtr = std::shared_ptr<const FeatureExtractorBackend>;

} // namespace twostage
