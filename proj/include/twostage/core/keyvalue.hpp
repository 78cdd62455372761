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

// `key = value` text: one pair per line, '#' starts a comment line, keys are
// unique, and values keep inner spaces.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "twostage/core/error.hpp"
#include "twostage/core/text.hpp"

namespace twostage {

class KeyValues {
  public:
    KeyValues() = default;
    explicit KeyValues(std::string source) : source_(std::move(source)) {}

    static KeyValues parse(const std::vector<std::string> &lines, const std::string &source) {
        KeyValues kv(source);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const auto line = text::trim(lines[i]);
            if (line.empty() || line.front() == '#') {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ParseError(source, i + 1, "expected 'key = value'");
            }
            const std::string key(text::trim(line.substr(0, eq)));
            if (key.empty()) {
                throw ParseError(source, i + 1, "empty key");
            }
            if (kv.values_.contains(key)) {
                throw ParseError(source, i + 1, "duplicate key '" + key + "'");
            }
            kv.values_[key] = std::string(text::trim(line.substr(eq + 1)));
            kv.origins_[key] = source;
        }
        return kv;
    }

    static KeyValues load(const std::filesystem::path &path) { return parse(text::read_lines(path), path.string()); }

    [[nodiscard]] const std::string &source() const noexcept { return source_; }
    [[nodiscard]] const std::map<std::string, std::string> &values() const noexcept { return values_; }
    [[nodiscard]] bool contains(const std::string &key) const { return values_.contains(key); }

    /// `origin` names where the value came from in error messages; defaults to this object's source.
    void set(const std::string &key, std::string value, std::string origin = {}) {
        values_[key] = std::move(value);
        origins_[key] = origin.empty() ? source_ : std::move(origin);
    }

    /// Later layers win; each value remembers the layer it came from.
    void merge(const KeyValues &over) {
        for (const auto &[k, v] : over.values_) {
            values_[k] = v;
            origins_[k] = over.origin(k);
        }
    }

    /// Source of the layer that set `key`, or this object's source.
    [[nodiscard]] const std::string &origin(const std::string &key) const {
        auto it = origins_.find(key);
        return it == origins_.end() ? source_ : it->second;
    }

    [[nodiscard]] std::optional<std::string> get(const std::string &key) const {
        auto it = values_.find(key);
        if (it == values_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] const std::string &require(const std::string &key) const {
        auto it = values_.find(key);
        if (it == values_.end() || it->second.empty()) {
            throw ConfigError(source_ + ": missing field '" + key + "'");
        }
        return it->second;
    }

    [[nodiscard]] double real(const std::string &key) const {
        auto v = text::parse_double(require(key));
        if (!v) {
            bad(key, "a number");
        }
        return *v;
    }

    [[nodiscard]] long long integer(const std::string &key) const {
        auto v = text::parse_int(require(key));
        if (!v) {
            bad(key, "an integer");
        }
        return *v;
    }

    [[nodiscard]] std::vector<double> reals(const std::string &key) const {
        auto v = text::parse_real_list(require(key));
        if (!v) {
            bad(key, "a comma-separated list of numbers");
        }
        return *v;
    }

    [[nodiscard]] bool boolean(const std::string &key) const {
        const auto &v = require(key);
        if (v == "true" || v == "1" || v == "yes") {
            return true;
        }
        if (v == "false" || v == "0" || v == "no") {
            return false;
        }
        bad(key, "true or false");
    }

    [[noreturn]] void bad(const std::string &key, const std::string &expected) const {
        throw ConfigError(origin(key) + ": field '" + key + "' must be " + expected + ", got '" +
                          get(key).value_or("") + "'");
    }

  private:
    std::string source_;
    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> origins_;
};

} // namespace twostage
