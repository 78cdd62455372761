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

// Dataset manifest: tab-separated "<relative image path>\t<class name>\t<split>" lines,
// '#' starts a comment line.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twostage/core/error.hpp"
#include "twostage/core/text.hpp"
#include "twostage/core/types.hpp"

namespace twostage {

enum class Split { train, val, test, final_test };

inline constexpr std::array<Split, 4> all_splits{Split::train, Split::val, Split::test, Split::final_test};

inline std::string_view to_string(Split s) {
    switch (s) {
    case Split::train:
        return "train";
    case Split::val:
        return "val";
    case Split::test:
        return "test";
    case Split::final_test:
        return "final_test";
    }
    return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
    for (auto split : all_splits) {
        if (s == to_string(split)) {
            return split;
        }
    }
    return std::nullopt;
}

class ManifestError : public ParseError {
  public:
    enum class Kind { missing_file, malformed_line, unknown_split, unknown_class };

    ManifestError(Kind kind, const std::string &source, std::size_t line, const std::string &message)
        : ParseError(source, line, message), kind_(kind) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }

  private:
    Kind kind_;
};

struct ManifestRecord {
    std::string image_path;
    Label label;
    Split split = Split::train;

    friend bool operator==(const ManifestRecord &, const ManifestRecord &) = default;
};

struct DatasetManifest {
    /// Directory relative image paths are resolved against.
    std::filesystem::path base_dir;
    std::vector<ManifestRecord> records;

    [[nodiscard]] std::filesystem::path resolve(const ManifestRecord &r) const {
        std::filesystem::path p(r.image_path);
        return p.is_absolute() ? p : base_dir / p;
    }

    [[nodiscard]] std::vector<ManifestRecord> in_split(Split s) const {
        std::vector<ManifestRecord> out;
        for (const auto &r : records) {
            if (r.split == s) {
                out.push_back(r);
            }
        }
        return out;
    }

    [[nodiscard]] std::string serialize() const {
        std::string out;
        for (const auto &r : records) {
            out += r.image_path;
            out += '\t';
            out += r.label.class_name;
            out += '\t';
            out += to_string(r.split);
            out += '\n';
        }
        return out;
    }

    void save(const std::filesystem::path &path) const { text::write_text(path, serialize()); }
};

inline DatasetManifest parse_manifest(const std::vector<std::string> &lines, const ClassRegistry &registry,
                                      const std::string &source = "<manifest>") {
    DatasetManifest manifest;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        std::string_view line = lines[i];
        if (text::trim(line).empty() || text::trim(line).front() == '#') {
            continue;
        }
        const auto fields = text::split(line, '\t');
        if (fields.size() != 3 || text::trim(fields[0]).empty()) {
            throw ManifestError(ManifestError::Kind::malformed_line, source, line_no,
                                "expected <path>\\t<class>\\t<split>, got " + std::to_string(fields.size()) +
                                    " field(s)");
        }
        const auto split = parse_split(text::trim(fields[2]));
        if (!split) {
            throw ManifestError(ManifestError::Kind::unknown_split, source, line_no,
                                "unknown split '" + std::string(text::trim(fields[2])) + "'");
        }
        const std::string class_name(text::trim(fields[1]));
        const auto class_id = registry.find(class_name);
        if (!class_id) {
            throw ManifestError(ManifestError::Kind::unknown_class, source, line_no,
                                "unknown class '" + class_name + "'");
        }
        manifest.records.push_back({std::string(text::trim(fields[0])), {*class_id, class_name}, *split});
    }
    return manifest;
}

inline DatasetManifest load_manifest(const std::filesystem::path &path, const ClassRegistry &registry) {
    if (!std::filesystem::is_regular_file(path)) {
        throw ManifestError(ManifestError::Kind::missing_file, path.string(), 0, "manifest file not found");
    }
    auto manifest = parse_manifest(text::read_lines(path), registry, path.string());
    manifest.base_dir = path.parent_path();
    return manifest;
}

} // namespace twostage
