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

// Application configuration: layered `key = value` files (see KeyValues).
// Layers, lowest precedence first: built-in defaults, --preset, --config,
// per-model file (evaluate), command-line flags. Relative paths in a file are
// resolved against that file's directory.

#include <algorithm>
#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "twostage/cascade.hpp"
#include "twostage/core/error.hpp"
#include "twostage/core/keyvalue.hpp"
#include "twostage/core/manifest.hpp"
#include "twostage/svm/ovr.hpp"

namespace twostage::app {

inline constexpr std::string_view default_layer = R"(# built-in defaults
strategy = top_confidence
detector_thresholds = 0.3,0.1,0.01
classification_gate = 9.0
bottle_class_names = bottle
detector = synthetic
crop_classifier = synthetic
fallback_classifier = synthetic
feature_extractor = synthetic
crop.fill = 0,0,0
crop.size = 1024
crop.filter = bilinear
svm.c = 50
svm.gamma = auto
svm.tol = 0.001
svm.max_iter = 1000000
pca.variance_fraction = none
datagen.floor_threshold = 0.05
jobs = 1
strict = true
)";

struct Preset {
    std::string_view name;
    std::string_view text;
};

// Kept byte-identical to configs/<name>.conf.
inline constexpr std::array<Preset, 5> presets{{
    {"model1", R"(# whole-image classification, no detector
strategy = whole_image
)"},
    {"model3", R"(# feature extractor + one-vs-rest RBF SVM; best run used no PCA
strategy = svm
feature_extractor = synthetic
svm.c = 50
svm.gamma = auto
pca.variance_fraction = none
# pca.variance_fraction = 0.99
)"},
    {"model4", R"(# general detector filtered to its bottle class, best crop gated at 9.0
strategy = top_confidence
detector_thresholds = 0.3,0.1,0.01
classification_gate = 9.0
bottle_class_names = bottle
)"},
    {"model5", R"(# single-class bottle detector, best crop gated at 9.0
strategy = top_confidence
detector_thresholds = 0.5,0.2,0.01
classification_gate = 9.0
bottle_class_names = *
)"},
    {"model6", R"(# boxes tried in detector-score order, first crop clearing 8.0 wins
strategy = per_box_loop
detector_thresholds = 0.5,0.2,0.01
classification_gate = 8.0
bottle_class_names = *
)"},
}};

inline std::vector<std::string> lines_of(std::string_view s) {
    std::vector<std::string> out;
    for (auto l : text::split(s, '\n')) {
        out.emplace_back(l);
    }
    return out;
}

inline std::optional<KeyValues> find_preset(std::string_view name) {
    for (const auto &p : presets) {
        if (p.name == name) {
            return KeyValues::parse(lines_of(p.text), "preset " + std::string(name));
        }
    }
    return std::nullopt;
}

inline KeyValues preset(std::string_view name) {
    auto p = find_preset(name);
    if (!p) {
        std::string known;
        for (const auto &q : presets) {
            known += (known.empty() ? "" : ", ") + std::string(q.name);
        }
        throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
    }
    return *p;
}

inline KeyValues defaults() { return KeyValues::parse(lines_of(default_layer), "defaults"); }

inline constexpr std::array<std::string_view, 4> path_keys{"class_registry", "manifest", "svm.model", "output"};
inline constexpr std::array<std::string_view, 4> backend_keys{"detector", "crop_classifier", "fallback_classifier",
                                                             "feature_extractor"};

/// Rewrites relative paths in `kv` (plain path keys and fixture:/external: backend paths) against `base`.
inline void resolve_paths(KeyValues &kv, const std::filesystem::path &base) {
    if (base.empty()) {
        return;
    }
    auto rebase = [&](const std::string &p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? p : (base / path).lexically_normal().generic_string();
    };
    for (auto key : path_keys) {
        if (auto v = kv.get(std::string(key)); v && !v->empty()) {
            kv.set(std::string(key), rebase(*v));
        }
    }
    for (auto key : backend_keys) {
        if (auto v = kv.get(std::string(key))) {
            for (std::string prefix : {"fixture:", "external:"}) {
                if (v->starts_with(prefix)) {
                    kv.set(std::string(key), prefix + rebase(v->substr(prefix.size())));
                }
            }
        }
    }
}

inline KeyValues load_layer(const std::filesystem::path &path) {
    auto kv = KeyValues::load(path);
    resolve_paths(kv, path.parent_path());
    return kv;
}

/// defaults < preset < files (in order) < overrides. Override paths stay relative to the working directory.
inline KeyValues compose_layers(const std::optional<std::string> &preset_name,
                                const std::vector<std::filesystem::path> &files,
                                const std::vector<std::pair<std::string, std::string>> &overrides) {
    auto kv = defaults();
    if (preset_name) {
        kv.merge(preset(*preset_name));
    }
    for (const auto &f : files) {
        kv.merge(load_layer(f));
    }
    for (const auto &[k, v] : overrides) {
        kv.set(k, v, "command line");
    }
    return kv;
}

struct BackendDescriptor {
    enum class Kind { synthetic, fixture, external };
    Kind kind = Kind::synthetic;
    std::filesystem::path path;

    friend bool operator==(const BackendDescriptor &, const BackendDescriptor &) = default;
};

inline BackendDescriptor parse_backend_descriptor(const KeyValues &kv, const std::string &key) {
    const auto &v = kv.require(key);
    if (v == "synthetic") {
        return {BackendDescriptor::Kind::synthetic, {}};
    }
    for (auto [prefix, kind] : {std::pair{std::string("fixture:"), BackendDescriptor::Kind::fixture},
                                std::pair{std::string("external:"), BackendDescriptor::Kind::external}}) {
        if (v.starts_with(prefix) && v.size() > prefix.size()) {
            return {kind, v.substr(prefix.size())};
        }
    }
    kv.bad(key, "synthetic, fixture:<path> or external:<io_spec path>");
}

/// "svm" is accepted in addition to the cascade strategies; it only applies to evaluation.
struct AppConfig {
    std::string strategy = "top_confidence";
    std::vector<double> detector_thresholds;
    double classification_gate = 9.0;
    /// Detector class names that count as a bottle; nullopt keeps every class.
    std::optional<std::vector<std::string>> bottle_class_names;
    /// Explicit detector class ids; overrides names when set.
    std::optional<std::set<int>> bottle_class_ids;
    std::vector<std::string> detector_vocabulary;
    std::filesystem::path class_registry;
    std::filesystem::path manifest;
    BackendDescriptor detector;
    BackendDescriptor crop_classifier;
    BackendDescriptor fallback_classifier;
    BackendDescriptor feature_extractor;
    CropPreprocess crop;
    svm::OvrParams svm;
    std::filesystem::path svm_model;
    double datagen_floor = 0.05;
    std::filesystem::path output;
    unsigned jobs = 1;
    bool strict = true;
    /// Splits `evaluate` reports; empty means every split the manifest uses.
    std::vector<Split> eval_splits;

    [[nodiscard]] bool is_svm() const { return strategy == "svm"; }
    [[nodiscard]] Strategy pipeline_strategy() const { return *parse_strategy(strategy); }
};

inline AppConfig parse_app_config(const KeyValues &kv) {
    AppConfig c;
    c.strategy = kv.require("strategy");
    if (c.strategy != "svm" && !parse_strategy(c.strategy)) {
        kv.bad("strategy", "whole_image, top_confidence, per_box_loop or svm");
    }
    c.detector_thresholds = kv.reals("detector_thresholds");
    try {
        validate_thresholds(c.detector_thresholds);
    } catch (const ConfigError &e) {
        throw ConfigError(kv.origin("detector_thresholds") + ": field 'detector_thresholds': " + e.what());
    }
    c.classification_gate = kv.real("classification_gate");
    if (!std::isfinite(c.classification_gate)) {
        kv.bad("classification_gate", "finite");
    }
    if (auto ids = kv.get("bottle_class_ids"); ids && !ids->empty()) {
        std::set<int> s;
        for (auto part : text::split(*ids, ',')) {
            auto v = text::parse_int(part);
            if (!v || *v < 0) {
                kv.bad("bottle_class_ids", "a comma-separated list of non-negative ids");
            }
            s.insert(static_cast<int>(*v));
        }
        c.bottle_class_ids = std::move(s);
    } else if (const auto &names = kv.require("bottle_class_names"); names != "*") {
        std::vector<std::string> list;
        for (auto part : text::split(names, ',')) {
            if (text::trim(part).empty()) {
                kv.bad("bottle_class_names", "'*' or a comma-separated list of detector class names");
            }
            list.emplace_back(text::trim(part));
        }
        c.bottle_class_names = std::move(list);
    }
    if (auto vocab = kv.get("detector.vocabulary"); vocab && !vocab->empty()) {
        for (auto part : text::split(*vocab, ',')) {
            c.detector_vocabulary.emplace_back(text::trim(part));
        }
    }
    c.class_registry = kv.get("class_registry").value_or("");
    c.manifest = kv.get("manifest").value_or("");
    c.detector = parse_backend_descriptor(kv, "detector");
    c.crop_classifier = parse_backend_descriptor(kv, "crop_classifier");
    c.fallback_classifier = parse_backend_descriptor(kv, "fallback_classifier");
    c.feature_extractor = parse_backend_descriptor(kv, "feature_extractor");

    const auto fill = kv.reals("crop.fill");
    if (fill.size() != 3 || std::any_of(fill.begin(), fill.end(), [](double v) {
            return !(v >= 0.0 && v <= 255.0) || v != std::floor(v);
        })) {
        kv.bad("crop.fill", "three integers in [0, 255]");
    }
    c.crop.fill = {static_cast<std::uint8_t>(fill[0]), static_cast<std::uint8_t>(fill[1]),
                   static_cast<std::uint8_t>(fill[2])};
    const auto size = kv.integer("crop.size");
    if (size < 1 || size > 16384) {
        kv.bad("crop.size", "between 1 and 16384");
    }
    c.crop.resize = {static_cast<int>(size), static_cast<int>(size), ResizeFilter::bilinear};
    if (const auto &f = kv.require("crop.filter"); f == "nearest") {
        c.crop.resize.filter = ResizeFilter::nearest;
    } else if (f != "bilinear") {
        kv.bad("crop.filter", "nearest or bilinear");
    }

    c.svm.c = kv.real("svm.c");
    if (!(c.svm.c > 0.0) || !std::isfinite(c.svm.c)) {
        kv.bad("svm.c", "a positive number");
    }
    if (kv.require("svm.gamma") != "auto") {
        c.svm.gamma = kv.real("svm.gamma");
        if (!(*c.svm.gamma > 0.0) || !std::isfinite(*c.svm.gamma)) {
            kv.bad("svm.gamma", "'auto' or a positive number");
        }
    }
    c.svm.tol = kv.real("svm.tol");
    if (!(c.svm.tol > 0.0)) {
        kv.bad("svm.tol", "a positive number");
    }
    const auto iters = kv.integer("svm.max_iter");
    if (iters < 1) {
        kv.bad("svm.max_iter", "a positive integer");
    }
    c.svm.max_iterations = static_cast<std::size_t>(iters);
    if (kv.require("pca.variance_fraction") != "none") {
        c.svm.pca_variance_fraction = kv.real("pca.variance_fraction");
        if (!(*c.svm.pca_variance_fraction > 0.0 && *c.svm.pca_variance_fraction <= 1.0)) {
            kv.bad("pca.variance_fraction", "'none' or a number in (0, 1]");
        }
    }
    c.svm_model = kv.get("svm.model").value_or("");
    c.datagen_floor = kv.real("datagen.floor_threshold");
    if (!(c.datagen_floor > 0.0 && c.datagen_floor < 1.0)) {
        kv.bad("datagen.floor_threshold", "in (0, 1)");
    }
    c.output = kv.get("output").value_or("");
    const auto jobs = kv.integer("jobs");
    if (jobs < 1 || jobs > 1024) {
        kv.bad("jobs", "between 1 and 1024");
    }
    c.jobs = static_cast<unsigned>(jobs);
    c.svm.jobs = c.jobs;
    c.strict = kv.boolean("strict");
    if (const auto splits = kv.get("eval.splits"); splits && !text::trim(*splits).empty()) {
        for (auto s : text::split(*splits, ',')) {
            const auto split = parse_split(text::trim(s));
            if (!split) {
                kv.bad("eval.splits", "a comma-separated list of train, val, test, final_test");
            }
            if (std::find(c.eval_splits.begin(), c.eval_splits.end(), *split) == c.eval_splits.end()) {
                c.eval_splits.push_back(*split);
            }
        }
    }
    return c;
}

/// Input files named by the config must exist. Output locations and the SVM
/// model path (written by `svm train`) are left to the commands that use them.
inline void check_referenced_files(const AppConfig &c) {
    auto need = [](std::string_view key, const std::filesystem::path &p) {
        std::error_code ec;
        if (!p.empty() && !std::filesystem::is_regular_file(p, ec)) {
            throw ConfigError("field '" + std::string(key) + "': no such file " + p.string());
        }
    };
    need("class_registry", c.class_registry);
    need("manifest", c.manifest);
    for (const auto &[key, d] : {std::pair{"detector", &c.detector}, std::pair{"crop_classifier", &c.crop_classifier},
                                 std::pair{"fallback_classifier", &c.fallback_classifier},
                                 std::pair{"feature_extractor", &c.feature_extractor}}) {
        if (d->kind != BackendDescriptor::Kind::synthetic) {
            need(key, d->path);
        }
    }
}

/// Detector class ids selected by the config for a detector with `vocabulary`.
inline ClassFilter resolve_class_filter(const AppConfig &c, const std::vector<std::string> &vocabulary) {
    if (c.bottle_class_ids) {
        for (int id : *c.bottle_class_ids) {
            if (static_cast<std::size_t>(id) >= vocabulary.size()) {
                throw ConfigError("bottle_class_ids: id " + std::to_string(id) + " outside detector vocabulary of " +
                                  std::to_string(vocabulary.size()));
            }
        }
        return c.bottle_class_ids;
    }
    if (!c.bottle_class_names) {
        return std::nullopt;
    }
    std::set<int> ids;
    for (const auto &name : *c.bottle_class_names) {
        auto it = std::find(vocabulary.begin(), vocabulary.end(), name);
        if (it == vocabulary.end()) {
            throw ConfigError("bottle_class_names: detector vocabulary has no class '" + name + "'");
        }
        ids.insert(static_cast<int>(it - vocabulary.begin()));
    }
    return ids;
}

} // namespace twostage::app
