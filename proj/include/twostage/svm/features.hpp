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

// Feature file: one sample per line, "<class name>\t<comma-separated reals>".

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "twostage/core/error.hpp"
#include "twostage/core/text.hpp"
#include "twostage/core/types.hpp"

namespace twostage::svm {

struct FeatureMatrix {
    Eigen::MatrixXd values; // rows = samples
    std::vector<std::size_t> labels;

    [[nodiscard]] Eigen::Index rows() const noexcept { return values.rows(); }
    [[nodiscard]] Eigen::Index cols() const noexcept { return values.cols(); }

    void validate() const {
        if (labels.size() != static_cast<std::size_t>(values.rows())) {
            throw InvalidInputError("feature matrix has " + std::to_string(values.rows()) + " rows but " +
                                    std::to_string(labels.size()) + " labels");
        }
        if (!values.allFinite()) {
            throw InvalidInputError("feature matrix contains non-finite values");
        }
    }
};

inline FeatureMatrix parse_features(const std::vector<std::string> &lines, const ClassRegistry &registry,
                                    const std::string &source = "<features>") {
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto trimmed = text::trim(lines[i]);
        if (trimmed.empty() || trimmed.front() == '#') {
            continue;
        }
        const auto fields = text::split(lines[i], '\t');
        if (fields.size() != 2) {
            throw ParseError(source, i + 1, "expected <class>\\t<reals>");
        }
        const auto id = registry.find(std::string(text::trim(fields[0])));
        if (!id) {
            throw ParseError(source, i + 1, "unknown class '" + std::string(text::trim(fields[0])) + "'");
        }
        auto values = text::parse_real_list(fields[1]);
        if (!values || values->empty()) {
            throw ParseError(source, i + 1, "feature vector is not a list of reals");
        }
        for (double v : *values) {
            if (!std::isfinite(v)) {
                throw ParseError(source, i + 1, "non-finite feature value");
            }
        }
        if (!rows.empty() && values->size() != rows.front().size()) {
            throw ParseError(source, i + 1,
                             "feature dimension " + std::to_string(values->size()) + " differs from first row's " +
                                 std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(*values));
        labels.push_back(*id);
    }
    FeatureMatrix m;
    const auto d = rows.empty() ? 0 : rows.front().size();
    m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    m.labels = std::move(labels);
    return m;
}

inline FeatureMatrix load_features(const std::filesystem::path &path, const ClassRegistry &registry) {
    return parse_features(text::read_lines(path), registry, path.string());
}

inline std::string format_feature_row(const std::string &class_name, const std::vector<double> &values) {
    return class_name + "\t" + text::join_reals(values) + "\n";
}

inline void save_features(const std::filesystem::path &path, const FeatureMatrix &m, const ClassRegistry &registry) {
    std::string out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(m.values.row(r).begin(), m.values.row(r).end());
        out += format_feature_row(registry.name(m.labels[static_cast<std::size_t>(r)]), row);
    }
    text::write_text(path, out);
}

} // namespace twostage::svm
