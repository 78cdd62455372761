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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "twostage/core/error.hpp"
#include "twostage/core/image.hpp"
#include "twostage/core/text.hpp"

namespace twostage {

/// Stable softmax (max-subtraction form).
inline std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw InvalidInputError("softmax of an empty vector");
    }
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw InvalidInputError("softmax input contains a non-finite entry");
        }
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double &v : out) {
        v /= total;
    }
    return out;
}

/// Index of the largest element; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> values) {
    if (values.empty()) {
        throw InvalidInputError("argmax of an empty vector");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

/// Raw per-class logits from a classifier together with their softmax.
class ClassScores {
  public:
    explicit ClassScores(std::vector<double> logits) : logits_(std::move(logits)), probabilities_(softmax(logits_)) {}

    [[nodiscard]] const std::vector<double> &logits() const noexcept { return logits_; }
    [[nodiscard]] const std::vector<double> &probabilities() const noexcept { return probabilities_; }
    [[nodiscard]] std::size_t size() const noexcept { return logits_.size(); }
    [[nodiscard]] std::size_t best_class() const { return argmax(logits_); }
    [[nodiscard]] double max_logit() const { return logits_[best_class()]; }

  private:
    std::vector<double> logits_;
    std::vector<double> probabilities_;
};

struct Detection {
    BoundingBox box;
    double score = 0.0;
    int class_id = 0;

    friend bool operator==(const Detection &, const Detection &) = default;
};

/// Stable sort by descending score; equal scores keep backend order.
inline void sort_by_score(std::vector<Detection> &detections) {
    std::stable_sort(detections.begin(), detections.end(),
                     [](const Detection &a, const Detection &b) { return a.score > b.score; });
}

struct Label {
    std::size_t class_id = 0;
    std::string class_name;

    friend bool operator==(const Label &, const Label &) = default;
};

/// Ordered list of dataset class names; line index is the class id.
class ClassRegistry {
  public:
    ClassRegistry() = default;

    explicit ClassRegistry(std::vector<std::string> names) : names_(std::move(names)) {
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i].empty()) {
                throw InvalidInputError("class registry entry " + std::to_string(i) + " is empty");
            }
            if (!index_.emplace(names_[i], i).second) {
                throw InvalidInputError("duplicate class name in registry: " + names_[i]);
            }
        }
    }

    static ClassRegistry load(const std::filesystem::path &path) {
        auto lines = text::read_lines(path);
        while (!lines.empty() && text::trim(lines.back()).empty()) {
            lines.pop_back();
        }
        std::vector<std::string> names;
        names.reserve(lines.size());
        for (std::size_t i = 0; i < lines.size(); ++i) {
            auto name = std::string(text::trim(lines[i]));
            if (name.empty()) {
                throw ParseError(path.string(), i + 1, "empty class name");
            }
            names.push_back(std::move(name));
        }
        try {
            return ClassRegistry(std::move(names));
        } catch (const InvalidInputError &e) {
            throw ParseError(path.string(), 0, e.what());
        }
    }

    void save(const std::filesystem::path &path) const {
        std::string out;
        for (const auto &n : names_) {
            out += n;
            out += '\n';
        }
        text::write_text(path, out);
    }

    [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
    [[nodiscard]] const std::vector<std::string> &names() const noexcept { return names_; }

    [[nodiscard]] const std::string &name(std::size_t id) const {
        if (id >= names_.size()) {
            throw InvalidInputError("class id " + std::to_string(id) + " outside registry of size " +
                                    std::to_string(names_.size()));
        }
        return names_[id];
    }

    [[nodiscard]] std::optional<std::size_t> find(const std::string &name) const {
        auto it = index_.find(name);
        if (it == index_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] Label label(std::size_t id) const { return {id, name(id)}; }

  private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace twostage
