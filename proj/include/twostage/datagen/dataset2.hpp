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

// Crop dataset generation: run the detector at a low floor over a manifest,
// crop + square-pad + resize every kept box, write the crops, and let a human
// reviewer exclude false positives afterwards.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twostage/backends/contracts.hpp"
#include "twostage/cascade.hpp"
#include "twostage/core/error.hpp"
#include "twostage/core/manifest.hpp"
#include "twostage/core/parallel.hpp"
#include "twostage/io/ppm.hpp"

namespace twostage::datagen {

enum class ReviewStatus { pending_review, accepted, rejected };

inline std::string_view to_string(ReviewStatus s) {
    switch (s) {
    case ReviewStatus::pending_review:
        return "pending_review";
    case ReviewStatus::accepted:
        return "accepted";
    case ReviewStatus::rejected:
        return "rejected";
    }
    return "?";
}

inline std::optional<ReviewStatus> parse_review_status(std::string_view s) {
    for (auto v : {ReviewStatus::pending_review, ReviewStatus::accepted, ReviewStatus::rejected}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    return std::nullopt;
}

struct CropRecord {
    std::string source_path;
    Label label;
    Split split = Split::train;
    Detection detection;
    /// Relative to the output directory.
    std::string crop_path;
    ReviewStatus status = ReviewStatus::pending_review;

    friend bool operator==(const CropRecord &, const CropRecord &) = default;
};

struct Dataset2Options {
    double floor_threshold = 0.05;
    ClassFilter class_filter;
    CropPreprocess preprocess;
    unsigned jobs = 1;
};

struct Dataset2Result {
    std::size_t images = 0;
    std::vector<CropRecord> records;
    /// One message per unreadable or failing source image.
    std::vector<std::string> errors;
};

/// "train/a/img.ppm" -> "train_a_img"
inline std::string crop_stem(const std::string &source_path) {
    std::filesystem::path p(source_path);
    std::string stem = (p.parent_path() / p.stem()).generic_string();
    for (char &c : stem) {
        if (c == '/' || c == '\\' || c == ':') {
            c = '_';
        }
    }
    while (!stem.empty() && (stem.front() == '_' || stem.front() == '.')) {
        stem.erase(stem.begin());
    }
    return stem;
}

inline std::string crop_file_name(const std::string &source_path, std::size_t index, double score) {
    return crop_stem(source_path) + "_det" + std::to_string(index) + "_s" + text::format_fixed(score, 3) + ".ppm";
}

inline Dataset2Result generate_dataset2(const DatasetManifest &manifest, const DetectorBackend &detector,
                                        const Dataset2Options &options, const std::filesystem::path &out_dir) {
    if (!(options.floor_threshold > 0.0 && options.floor_threshold < 1.0)) {
        throw ConfigError("dataset floor threshold must be in (0, 1)");
    }
    options.preprocess.resize.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw IoError("cannot create output directory " + out_dir.string());
    }

    const auto n = manifest.records.size();
    std::vector<std::vector<CropRecord>> per_image(n);
    std::vector<std::string> per_image_error(n);
    parallel_for(n, options.jobs, [&](std::size_t i) {
        const auto &src = manifest.records[i];
        try {
            const Image image = io::read_image(manifest.resolve(src));
            std::size_t index = 0;
            for (const auto &d : detector.detect(image)) {
                if (options.class_filter && !options.class_filter->contains(d.class_id)) {
                    continue;
                }
                if (d.score < options.floor_threshold) {
                    continue;
                }
                const Image out = prepare_crop(image, d.box, options.preprocess);
                const auto rel = std::string(to_string(src.split)) + "/" + crop_file_name(src.image_path, index, d.score);
                io::write_image(out_dir / rel, out);
                per_image[i].push_back({src.image_path, src.label, src.split, d, rel, ReviewStatus::pending_review});
                ++index;
            }
        } catch (const Error &e) {
            per_image[i].clear();
            per_image_error[i] = src.image_path + ": " + e.what();
        }
    });

    Dataset2Result result;
    result.images = n;
    for (std::size_t i = 0; i < n; ++i) {
        for (auto &r : per_image[i]) {
            result.records.push_back(std::move(r));
        }
        if (!per_image_error[i].empty()) {
            result.errors.push_back(std::move(per_image_error[i]));
        }
    }
    return result;
}

/// `<crop path>\t<source path>\t<class>\t<split>\t<score>\t<box>\t<detector class>\t<status>`
inline std::string serialize_crop_records(const std::vector<CropRecord> &records) {
    std::string out;
    for (const auto &r : records) {
        out += r.crop_path + "\t" + r.source_path + "\t" + r.label.class_name + "\t" +
               std::string(twostage::to_string(r.split)) + "\t" + text::format_double(r.detection.score) + "\t" +
               format_box(r.detection.box) + "\t" + std::to_string(r.detection.class_id) + "\t" +
               std::string(to_string(r.status)) + "\n";
    }
    return out;
}

inline std::vector<CropRecord> parse_crop_records(const std::vector<std::string> &lines, const ClassRegistry &registry,
                                                  const std::string &source = "<crops>") {
    std::vector<CropRecord> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (text::trim(lines[i]).empty() || text::trim(lines[i]).front() == '#') {
            continue;
        }
        const auto f = text::split(lines[i], '\t');
        auto fail = [&](const std::string &m) { throw ParseError(source, i + 1, m); };
        if (f.size() != 8) {
            fail("expected 8 tab-separated fields");
        }
        const auto id = registry.find(std::string(f[2]));
        const auto split = parse_split(f[3]);
        const auto score = text::parse_double(f[4]);
        const auto box = text::parse_real_list(f[5]);
        const auto cls = text::parse_int(f[6]);
        const auto status = parse_review_status(f[7]);
        if (!id || !split || !score || !box || box->size() != 4 || !cls || !status) {
            fail("malformed crop record");
        }
        out.push_back({std::string(f[1]),
                       registry.label(*id),
                       *split,
                       {{(*box)[0], (*box)[1], (*box)[2], (*box)[3]}, *score, static_cast<int>(*cls)},
                       std::string(f[0]),
                       *status});
    }
    return out;
}

/// Template for the reviewer: every crop listed as accepted; flip lines to "reject".
inline std::string pending_review_list(const std::vector<CropRecord> &records) {
    std::string out = "# <crop path>\\t<accept|reject>; unlisted crops are accepted\n";
    for (const auto &r : records) {
        if (r.status == ReviewStatus::pending_review) {
            out += r.crop_path + "\taccept\n";
        }
    }
    return out;
}

struct ReviewOutcome {
    std::vector<CropRecord> records;
    DatasetManifest manifest;
    std::size_t rejected = 0;
    std::vector<std::string> warnings;
};

/// Review lines are `<crop path>\t<accept|reject>`. Crops without a line are accepted.
inline ReviewOutcome apply_review(std::vector<CropRecord> records, const std::vector<std::string> &review_lines,
                                  const std::string &source = "<review>") {
    std::map<std::string, std::size_t> by_path;
    for (std::size_t i = 0; i < records.size(); ++i) {
        by_path.emplace(records[i].crop_path, i);
    }
    ReviewOutcome outcome;
    std::map<std::size_t, ReviewStatus> verdicts;
    for (std::size_t i = 0; i < review_lines.size(); ++i) {
        const auto trimmed = text::trim(review_lines[i]);
        if (trimmed.empty() || trimmed.front() == '#') {
            continue;
        }
        const auto f = text::split(trimmed, '\t');
        const auto verdict = f.size() == 2 ? text::trim(f[1]) : std::string_view{};
        if (f.size() != 2 || (verdict != "accept" && verdict != "reject")) {
            throw ParseError(source, i + 1, "expected <crop path>\\t<accept|reject>");
        }
        const auto it = by_path.find(std::string(text::trim(f[0])));
        if (it == by_path.end()) {
            outcome.warnings.push_back(source + ":" + std::to_string(i + 1) + ": unknown crop path '" +
                                       std::string(text::trim(f[0])) + "'");
            continue;
        }
        verdicts[it->second] = verdict == "reject" ? ReviewStatus::rejected : ReviewStatus::accepted;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto it = verdicts.find(i);
        records[i].status = it == verdicts.end() ? ReviewStatus::accepted : it->second;
        if (records[i].status == ReviewStatus::rejected) {
            ++outcome.rejected;
        } else {
            outcome.manifest.records.push_back({records[i].crop_path, records[i].label, records[i].split});
        }
    }
    outcome.records = std::move(records);
    return outcome;
}

inline constexpr std::string_view rejected_dir = "rejected";

/// Moves the files of rejected crops under `<out_dir>/rejected/`, so the split
/// directories hold exactly the accepted crops, and moves accepted crops that an
/// earlier review rejected back. Records keep their original paths.
/// Returns the number of files moved.
inline std::size_t relocate_rejected(const std::filesystem::path &out_dir, const std::vector<CropRecord> &records) {
    std::size_t moved = 0;
    for (const auto &r : records) {
        const auto live = out_dir / r.crop_path;
        const auto parked = out_dir / rejected_dir / r.crop_path;
        const bool reject = r.status == ReviewStatus::rejected;
        const auto &from = reject ? live : parked;
        const auto &to = reject ? parked : live;
        std::error_code ec;
        if (!std::filesystem::exists(from, ec)) {
            continue;
        }
        std::filesystem::create_directories(to.parent_path(), ec);
        std::filesystem::rename(from, to, ec);
        if (ec) {
            throw IoError("cannot move crop " + from.string() + ": " + ec.message());
        }
        ++moved;
    }
    return moved;
}

} // namespace twostage::datagen
