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

// Builds backends and pipelines from an AppConfig.

#include <map>
#include <memory>
#include <mutex>

#include "twostage/app/config.hpp"
#include "twostage/backends/opencv_runtime.hpp"
#include "twostage/backends/scripted.hpp"
#include "twostage/backends/synthetic.hpp"
#include "twostage/svm/model_io.hpp"

namespace twostage::app {

/// Loads each fixture file once, however many roles refer to it.
class BackendFactory {
  public:
    explicit BackendFactory(std::shared_ptr<const ClassRegistry> registry) : registry_(std::move(registry)) {}

    [[nodiscard]] DetectorPtr detector(const AppConfig &c) {
        switch (c.detector.kind) {
        case BackendDescriptor::Kind::synthetic:
            return synthetic_shape_detector();
        case BackendDescriptor::Kind::fixture:
            return scripted_detector(fixture(c.detector.path),
                                     c.detector_vocabulary.empty() ? std::vector<std::string>{"bottle"}
                                                                   : c.detector_vocabulary);
        case BackendDescriptor::Kind::external:
            return external_detector(load_io_spec(c.detector.path));
        }
        throw ConfigError("unknown detector kind");
    }

    [[nodiscard]] ClassifierPtr classifier(const BackendDescriptor &d) {
        switch (d.kind) {
        case BackendDescriptor::Kind::synthetic:
            return synthetic_color_classifier(*registry_);
        case BackendDescriptor::Kind::fixture:
            return scripted_classifier(fixture(d.path), registry_->size());
        case BackendDescriptor::Kind::external:
            return external_classifier(load_io_spec(d.path), registry_->size());
        }
        throw ConfigError("unknown classifier kind");
    }

    [[nodiscard]] FeatureExtractorPtr feature_extractor(const BackendDescriptor &d) {
        switch (d.kind) {
        case BackendDescriptor::Kind::synthetic:
            return std::make_shared<SyntheticHueFeatureExtractor>();
        case BackendDescriptor::Kind::fixture:
            return std::make_shared<ScriptedFeatureExtractor>(fixture(d.path));
        case BackendDescriptor::Kind::external:
            return external_feature_extractor(load_io_spec(d.path));
        }
        throw ConfigError("unknown feature extractor kind");
    }

    [[nodiscard]] PipelineConfig pipeline(const AppConfig &c) {
        if (c.is_svm()) {
            throw ConfigError("strategy svm has no detector/classifier pipeline");
        }
        PipelineConfig p;
        p.strategy = c.pipeline_strategy();
        p.detector_thresholds = c.detector_thresholds;
        p.classification_gate = c.classification_gate;
        p.crop_preprocess = c.crop;
        p.registry = registry_;
        p.fallback_classifier = in_context("fallback_classifier", [&] { return classifier(c.fallback_classifier); });
        if (p.strategy != Strategy::whole_image) {
            p.detector = in_context("detector", [&] { return detector(c); });
            p.bottle_class_ids = resolve_class_filter(c, p.detector->vocabulary());
            p.crop_classifier = c.crop_classifier == c.fallback_classifier
                                    ? p.fallback_classifier
                                    : in_context("crop_classifier", [&] { return classifier(c.crop_classifier); });
        }
        p.validate();
        return p;
    }

    [[nodiscard]] const std::shared_ptr<const ClassRegistry> &registry() const noexcept { return registry_; }

  private:
    FixturePtr fixture(const std::filesystem::path &path) {
        const auto key = path.lexically_normal().generic_string();
        auto it = fixtures_.find(key);
        if (it == fixtures_.end()) {
            it = fixtures_.emplace(key, std::make_shared<const ScriptedFixture>(ScriptedFixture::load(path))).first;
        }
        return it->second;
    }

    std::shared_ptr<const ClassRegistry> registry_;
    std::map<std::string, FixturePtr> fixtures_;
};

/// Image -> verdict for an SVM model on top of a feature extractor; confidence is the winning decision value.
inline std::function<PipelineVerdict(const Image &)> svm_classify_fn(FeatureExtractorPtr extractor,
                                                                     std::shared_ptr<const svm::OneVsRestModel> model,
                                                                     std::shared_ptr<const ClassRegistry> registry) {
    if (static_cast<std::size_t>(model->input_dimension) != extractor->dimension()) {
        throw DimensionMismatchError(static_cast<std::size_t>(model->input_dimension), extractor->dimension(),
                                     "svm model vs feature extractor");
    }
    if (model->class_count() != registry->size()) {
        throw ConfigError("svm model has " + std::to_string(model->class_count()) + " classes, registry has " +
                          std::to_string(registry->size()));
    }
    return [extractor = std::move(extractor), model = std::move(model),
            registry = std::move(registry)](const Image &image) {
        const auto f = extractor->extract(image);
        const auto values = svm::ovr_decision_values(*model, Eigen::Map<const Eigen::VectorXd>(
                                                                  f.data(), static_cast<Eigen::Index>(f.size())));
        const auto best = argmax(values);
        PipelineVerdict v;
        v.label = registry->label(best);
        v.confidence = values[best];
        v.source = VerdictSource::fallback_whole_image;
        return v;
    };
}

} // namespace twostage::app
