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

// Binary PPM (P6, maxval 255) reader/writer. Lossless, so written crops
// hash to the same fingerprint when read back.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "twostage/core/error.hpp"
#include "twostage/core/image.hpp"

namespace twostage::io {

namespace detail {

inline int read_header_int(std::istream &in, const std::string &source) {
    int c = in.peek();
    while (in && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
        } else {
            in.get();
        }
        c = in.peek();
    }
    int value = 0;
    if (!(in >> value) || value < 0) {
        throw IoError(source + ": malformed PPM header");
    }
    return value;
}

} // namespace detail

inline Image decode_ppm(std::istream &in, const std::string &source) {
    char magic[2] = {};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '6') {
        throw IoError(source + ": not a binary PPM (P6) file");
    }
    const int width = detail::read_header_int(in, source);
    const int height = detail::read_header_int(in, source);
    const int maxval = detail::read_header_int(in, source);
    if (maxval != 255) {
        throw IoError(source + ": only 8-bit PPM (maxval 255) is supported");
    }
    if (width < 1 || height < 1) {
        throw IoError(source + ": PPM has zero size");
    }
    if (width > 65535 || height > 65535) {
        throw IoError(source + ": PPM larger than 65535 pixels per side");
    }
    in.get(); // single whitespace before raster
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    in.read(reinterpret_cast<char *>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(pixels.size())) {
        throw IoError(source + ": truncated PPM raster");
    }
    return Image(width, height, std::move(pixels));
}

inline Image read_image(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image " + path.string());
    }
    return decode_ppm(in, path.string());
}

inline void write_image(const std::filesystem::path &path, const Image &image) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write image " + path.string());
    }
    out << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
    const auto px = image.pixels();
    out.write(reinterpret_cast<const char *>(px.data()), static_cast<std::streamsize>(px.size()));
    if (!out) {
        throw IoError("write failed for image " + path.string());
    }
}

} // namespace twostage::io
