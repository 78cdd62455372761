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

// Scripted backends replay canned outputs keyed by image fingerprint.
//
// Fixture file, one record per line:
//   <fingerprint-hex>\t<kind>\t<payload>
// kind is one of detections / logits / features. Detection payloads are
// "x_min,y_min,x_max,y_max,score,class" items joined by ';' (empty = none);
// logits and features are comma-separated reals.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "twostage/backends/contracts.hpp"
#include "twostage/core/error.hpp"
#include "twostage/core/text.hpp"

namespace twostage {

class ScriptedFixture {
  public:
    struct Entry {
        std::optional<std::vector<Detection>> detections;
        std::optional<std::vector<double>> logits;
        std::optional<std::vector<double>> features;
    };

    void add_detections(const std::string &fp, std::vector<Detection> d) { entries_[fp].detections = std::move(d); }
    void add_logits(const std::string &fp, std::vector<double> l) { entries_[fp].logits = std::move(l); }
    void add_features(const std::string &fp, std::vector<double> f) { entries_[fp].features = std::move(f); }

    [[nodiscard]] const Entry *find(const std::string &fp) const {
        auto it = entries_.find(fp);
        return it == entries_.end() ? nullptr : &it->second;
    }

    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] const std::map<std::string, Entry> &entries() const noexcept { return entries_; }

    static ScriptedFixture parse(const std::vector<std::string> &lines, const std::string &source = "<fixture>") {
        ScriptedFixture fx;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto line_no = i + 1;
            const auto trimmed = text::trim(lines[i]);
            if (trimmed.empty() || trimmed.front() == '#') {
                continue;
            }
            const auto fields = text::split(lines[i], '\t');
            if (fields.size() != 3) {
                throw ParseError(source, line_no, "expected <fingerprint>\\t<kind>\\t<payload>");
            }
            const std::string fp(text::trim(fields[0]));
            const auto kind = text::trim(fields[1]);
            auto &entry = fx.entries_[fp];
            auto duplicate = [&] { throw ParseError(source, line_no, "duplicate " + std::string(kind) + " for " + fp); };
            if (kind == "detections") {
                if (entry.detections) {
                    duplicate();
                }
                entry.detections = parse_detections(fields[2], source, line_no);
            } else if (kind == "logits" || kind == "features") {
                auto values = text::parse_real_list(fields[2]);
                if (!values || values->empty()) {
                    throw ParseError(source, line_no, "payload is not a non-empty real vector");
                }
                auto &slot = kind == "logits" ? entry.logits : entry.features;
                if (slot) {
                    duplicate();
                }
                slot = std::move(*values);
            } else {
                throw ParseError(source, line_no, "unknown fixture kind '" + std::string(kind) + "'");
            }
        }
        return fx;
    }

    static ScriptedFixture load(const std::filesystem::path &path) {
        return parse(text::read_lines(path), path.string());
    }

    [[nodiscard]] std::string serialize() const {
        std::string out;
        for (const auto &[fp, e] : entries_) {
            if (e.detections) {
                out += fp + "\tdetections\t";
                for (std::size_t i = 0; i < e.detections->size(); ++i) {
                    const auto &d = (*e.detections)[i];
                    if (i > 0) {
                        out += ';';
                    }
                    out += format_box(d.box) + "," + text::format_double(d.score) + "," + std::to_string(d.class_id);
                }
                out += '\n';
            }
            if (e.logits) {
                out += fp + "\tlogits\t" + text::join_reals(*e.logits) + "\n";
            }
            if (e.features) {
                out += fp + "\tfeatures\t" + text::join_reals(*e.features) + "\n";
            }
        }
        return out;
    }

    void save(const std::filesystem::path &path) const { text::write_text(path, serialize()); }

  private:
    static std::vector<Detection> parse_detections(std::string_view payload, const std::string &source,
                                                   std::size_t line_no) {
        std::vector<Detection> out;
        if (text::trim(payload).empty()) {
            return out;
        }
        for (auto item : text::split(payload, ';')) {
            auto values = text::parse_real_list(item);
            if (!values || values->size() != 6) {
                throw ParseError(source, line_no, "detection must be x_min,y_min,x_max,y_max,score,class");
            }
            const auto &v = *values;
            Detection d{{v[0], v[1], v[2], v[3]}, v[4], static_cast<int>(v[5])};
            if (!d.box.valid() || !(d.score >= 0.0 && d.score <= 1.0) || v[5] != static_cast<double>(d.class_id)) {
                throw ParseError(source, line_no, "invalid detection '" + std::string(item) + "'");
            }
            out.push_back(d);
        }
        return out;
    }

    std::map<std::string, Entry> entries_;
};

using FixturePtr = std::shared_ptr<const ScriptedFixture>;

class ScriptedDetector final : public DetectorBackend {
  public:
    ScriptedDetector(FixturePtr fixture, std::vector<std::string> vocabulary)
        : fixture_(std::move(fixture)), vocabulary_(std::move(vocabulary)) {}

    [[nodiscard]] const std::vector<std::string> &vocabulary() const override { return vocabulary_; }

  protected:
    [[nodiscard]] std::vector<Detection> do_detect(const Image &image) const override {
        const auto fp = fingerprint(image);
        const auto *entry = fixture_->find(fp);
        if (entry == nullptr || !entry->detections) {
            throw FixtureMissError(fp);
        }
        return *entry->detections;
    }

  private:
    FixturePtr fixture_;
    std::vector<std::string> vocabulary_;
};

class ScriptedClassifier final : public ClassifierBackend {
  public:
    ScriptedClassifier(FixturePtr fixture, std::size_t class_count)
        : fixture_(std::move(fixture)), class_count_(class_count) {}

    [[nodiscard]] std::size_t class_count() const override { return class_count_; }

  protected:
    [[nodiscard]] std::vector<double> do_classify(const Image &image) const override {
        const auto fp = fingerprint(image);
        const auto *entry = fixture_->find(fp);
        if (entry == nullptr || !entry->logits) {
            throw FixtureMissError(fp);
        }
        return *entry->logits;
    }

  private:
    FixturePtr fixture_;
    std::size_t class_count_;
};

class ScriptedFeatureExtractor final : public FeatureExtractorBackend {
  public:
    ScriptedFeatureExtractor(FixturePtr fixture, std::size_t dimension)
        : fixture_(std::move(fixture)), dimension_(dimension) {}

    /// Dimension taken from the first feature record in the fixture.
    explicit ScriptedFeatureExtractor(FixturePtr fixture) : fixture_(std::move(fixture)) {
        for (const auto &[fp, e] : fixture_->entries()) {
            if (e.features) {
                dimension_ = e.features->size();
                return;
            }
        }
        throw ConfigError("fixture contains no feature records");
    }

    [[nodiscard]] std::size_t dimension() const override { return dimension_; }

  protected:
    [[nodiscard]] std::vector<double> do_extract(const Image &image) const override {
        const auto fp = fingerprint(image);
        const auto *entry = fixture_->find(fp);
        if (entry == nullptr || !entry->features) {
            throw FixtureMissError(fp);
        }
        return *entry->features;
    }

  private:
    FixturePtr fixture_;
    std::size_t dimension_ = 0;
};

inline DetectorPtr scripted_detector(FixturePtr fixture, std::vector<std::string> vocabulary = {"bottle"}) {
    return std::make_shared<ScriptedDetector>(std::move(fixture), std::move(vocabulary));
}

inline ClassifierPtr scripted_classifier(FixturePtr fixture, std::size_t class_count) {
    return std::make_shared<ScriptedClassifier>(std::move(fixture), class_count);
}

} // namespace twostage
