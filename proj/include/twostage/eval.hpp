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
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twostage/cascade.hpp"
#include "twostage/core/error.hpp"
#include "twostage/core/manifest.hpp"
#include "twostage/core/parallel.hpp"
#include "twostage/io/ppm.hpp"

namespace twostage {

using ClassifyFn = std::function<PipelineVerdict(const Image &)>;
using ImageLoader = std::function<Image(const std::filesystem::path &)>;

struct EvalOptions {
    /// Any per-image failure aborts the run when true; otherwise it becomes an error row.
    bool strict = true;
    unsigned jobs = 1;
};

struct EvalRow {
    std::string image_path;
    Label truth;
    std::optional<PipelineVerdict> verdict;
    std::string error;
};

struct EvalReport {
    Split split = Split::test;
    /// confusion[truth][predicted]
    std::vector<std::vector<std::size_t>> confusion;
    /// Manifest order.
    std::vector<EvalRow> rows;
    std::size_t evaluated = 0;
    std::size_t correct = 0;
    std::size_t errors = 0;
    double accuracy = 0.0;
    double wall_seconds = 0.0;

    /// One verdict record per row; failed rows read `<path>\t-\t-\terror\t<message>`.
    [[nodiscard]] std::string verdict_log() const {
        std::string out;
        for (const auto &r : rows) {
            if (r.verdict) {
                out += format_verdict(r.image_path, *r.verdict);
            } else {
                out += r.image_path + "\t-\t-\terror\t" + r.error;
            }
            out += '\n';
        }
        return out;
    }
};

inline double accuracy_from_confusion(const std::vector<std::vector<std::size_t>> &confusion) {
    std::size_t total = 0;
    std::size_t trace = 0;
    for (std::size_t i = 0; i < confusion.size(); ++i) {
        for (std::size_t j = 0; j < confusion[i].size(); ++j) {
            total += confusion[i][j];
        }
        trace += i < confusion[i].size() ? confusion[i][i] : 0;
    }
    return total == 0 ? 0.0 : static_cast<double>(trace) / static_cast<double>(total);
}

inline EvalReport evaluate(const ClassifyFn &classify, const DatasetManifest &manifest, Split split,
                           std::size_t class_count, const EvalOptions &options = {},
                           const ImageLoader &loader = io::read_image) {
    const auto start = std::chrono::steady_clock::now();
    const auto records = manifest.in_split(split);
    if (records.empty()) {
        throw InvalidInputError("nothing to evaluate: split '" + std::string(to_string(split)) + "' is empty");
    }
    EvalReport report;
    report.split = split;
    report.rows.resize(records.size());
    parallel_for(records.size(), options.jobs, [&](std::size_t i) {
        auto &row = report.rows[i];
        row.image_path = records[i].image_path;
        row.truth = records[i].label;
        try {
            row.verdict = classify(loader(manifest.resolve(records[i])));
            if (row.verdict->label.class_id >= class_count) {
                throw BackendError("predicted class id " + std::to_string(row.verdict->label.class_id) +
                                   " outside " + std::to_string(class_count) + " classes");
            }
        } catch (const Error &e) {
            if (options.strict) {
                throw;
            }
            row.verdict.reset();
            row.error = e.what();
        }
    });

    report.confusion.assign(class_count, std::vector<std::size_t>(class_count, 0));
    for (const auto &row : report.rows) {
        if (!row.verdict) {
            ++report.errors;
            continue;
        }
        ++report.evaluated;
        ++report.confusion.at(row.truth.class_id).at(row.verdict->label.class_id);
        if (row.verdict->label.class_id == row.truth.class_id) {
            ++report.correct;
        }
    }
    report.accuracy = report.evaluated == 0 ? 0.0 : static_cast<double>(report.correct) / static_cast<double>(report.evaluated);
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

struct ModelResults {
    std::string name;
    std::map<Split, double> accuracy;
};

inline ModelResults summarize(std::string name, const std::vector<EvalReport> &reports) {
    ModelResults m{std::move(name), {}};
    for (const auto &r : reports) {
        m.accuracy[r.split] = r.accuracy;
    }
    return m;
}

/// One row per model: train / val / test / final-test accuracy in percent with two decimals,
/// "-" where a split was not evaluated.
inline std::string emit_results_table(const std::vector<ModelResults> &models) {
    std::size_t name_width = 5;
    for (const auto &m : models) {
        name_width = std::max(name_width, m.name.size());
    }
    auto pad_right = [](std::string s, std::size_t w) {
        s.resize(std::max(w, s.size()), ' ');
        return s;
    };
    auto pad_left = [](const std::string &s, std::size_t w) {
        return std::string(w > s.size() ? w - s.size() : 0, ' ') + s;
    };
    constexpr std::size_t cell = 6;
    std::string out = pad_right("model", name_width);
    for (const char *h : {"train", "val", "test", "final"}) {
        out += ' ' + pad_left(h, cell);
    }
    out += '\n';
    for (const auto &m : models) {
        out += pad_right(m.name, name_width);
        for (auto split : all_splits) {
            auto it = m.accuracy.find(split);
            out += ' ' + pad_left(it == m.accuracy.end() ? "-" : text::format_fixed(it->second * 100.0, 2), cell);
        }
        out += '\n';
    }
    return out;
}

} // namespace twostage
