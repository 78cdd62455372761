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
// Wires the per-box-loop pipeline by hand with the analytic backends and runs
// it on a few generated frames, then shows the whole-image fallback when the
// detector finds nothing.

#include <iostream>

#include "twostage/cascade.hpp"
#include "twostage/datagen/synthetic.hpp"

using namespace twostage;

int main() {
    datagen::SyntheticSpec spec;
    spec.class_count = 8;
    spec.noise = datagen::hard_noise();
    const auto corpus = datagen::generate_synthetic_corpus(spec, {0, 0, 4, 0});
    auto registry = std::make_shared<const ClassRegistry>(corpus.registry);

    PipelineConfig cfg;
    cfg.strategy = Strategy::per_box_loop;
    cfg.detector_thresholds = {0.5, 0.2, 0.01};
    cfg.classification_gate = 8.0;
    cfg.detector = synthetic_shape_detector();
    cfg.crop_classifier = synthetic_color_classifier(*registry);
    cfg.fallback_classifier = cfg.crop_classifier;
    cfg.crop_preprocess.resize = {224, 224, ResizeFilter::bilinear};
    cfg.registry = registry;
    cfg.validate();

    for (std::size_t i = 0; i < corpus.images.size(); ++i) {
        const auto v = run_pipeline(corpus.images[i], cfg);
        std::cout << format_verdict(corpus.truths[i].image_path, v) << "   (truth " << corpus.truths[i].label.class_name
                  << ")\n";
    }

    // A flat grey frame has nothing for the detector to find.
    const Image blank(64, 64, Rgb{128, 128, 128});
    std::cout << format_verdict("blank", run_pipeline(blank, cfg)) << "\n";
    return 0;
}
