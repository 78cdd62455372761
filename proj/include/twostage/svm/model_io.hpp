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

// Text container for a trained one-vs-rest model.
//
//   twostage-svm
//   version 1
//   classes <K> input_dim <d>
//   pca <0|1>
//   [pca_total <t>]  [pca_mean <reals>]  [pca_spectrum <n> <reals>]
//   [pca_axes <k>]  [pca_axis <variance> <reals>]  (k lines)
//   model <k> gamma <g> c <C> bias <b> sv <m> dim <d>
//   sv <coef> <reals>                        (m lines)
//   end
//
// Reals use shortest round-trip formatting, so load(save(m)) is exact.

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "twostage/core/error.hpp"
#include "twostage/core/text.hpp"
#include "twostage/svm/ovr.hpp"

namespace twostage::svm {

inline constexpr std::string_view model_magic = "twostage-svm";
inline constexpr int model_format_version = 1;

namespace detail {

inline std::string join(const Eigen::Ref<const Eigen::VectorXd> &v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i > 0) {
            out.push_back(',');
        }
        out += text::format_double(v(i));
    }
    return out;
}

class LineReader {
  public:
    LineReader(std::vector<std::string> lines, std::string source)
        : lines_(std::move(lines)), source_(std::move(source)) {}

    std::vector<std::string_view> next(std::string_view keyword, std::size_t min_fields) {
        if (pos_ >= lines_.size()) {
            fail("unexpected end of file, expected '" + std::string(keyword) + "'");
        }
        // Returned views point into current_ and stay valid until the next call.
        current_ = lines_[pos_++];
        auto fields = text::split(current_, ' ');
        if (fields.empty() || fields[0] != keyword || fields.size() < min_fields) {
            fail("expected '" + std::string(keyword) + "' record");
        }
        return fields;
    }

    double real(std::string_view s) {
        auto v = text::parse_double(s);
        if (!v) {
            fail("bad number '" + std::string(s) + "'");
        }
        return *v;
    }

    long long integer(std::string_view s) {
        auto v = text::parse_int(s);
        if (!v || *v < 0) {
            fail("bad count '" + std::string(s) + "'");
        }
        return *v;
    }

    Eigen::VectorXd vec(std::string_view s, Eigen::Index expected) {
        auto v = text::parse_real_list(s);
        if (!v || static_cast<Eigen::Index>(v->size()) != expected) {
            fail("expected " + std::to_string(expected) + " comma-separated reals");
        }
        return Eigen::Map<const Eigen::VectorXd>(v->data(), expected);
    }

    [[noreturn]] void fail(const std::string &msg) const { throw ParseError(source_, pos_, msg); }

  private:
    std::vector<std::string> lines_;
    std::string source_;
    std::string current_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::string serialize_model(const OneVsRestModel &m) {
    std::ostringstream out;
    out << model_magic << "\nversion " << model_format_version << "\nclasses " << m.models.size() << " input_dim "
        << m.input_dimension << "\npca " << (m.pca ? 1 : 0) << "\n";
    if (m.pca) {
        const auto &p = *m.pca;
        out << "pca_total " << text::format_double(p.total_variance) << "\n";
        out << "pca_mean " << detail::join(p.mean) << "\n";
        out << "pca_spectrum " << p.spectrum.size() << " " << detail::join(p.spectrum) << "\n";
        out << "pca_axes " << p.components() << "\n";
        for (Eigen::Index k = 0; k < p.components(); ++k) {
            out << "pca_axis " << text::format_double(p.explained_variance(k)) << " "
                << detail::join(p.axes.row(k).transpose()) << "\n";
        }
    }
    for (std::size_t k = 0; k < m.models.size(); ++k) {
        const auto &b = m.models[k];
        out << "model " << k << " gamma " << text::format_double(b.gamma) << " c " << text::format_double(b.c)
            << " bias " << text::format_double(b.bias) << " sv " << b.support_vectors.rows() << " dim "
            << b.support_vectors.cols() << "\n";
        for (Eigen::Index s = 0; s < b.support_vectors.rows(); ++s) {
            out << "sv " << text::format_double(b.coefficients(s)) << " "
                << detail::join(b.support_vectors.row(s).transpose()) << "\n";
        }
    }
    out << "end\n";
    return out.str();
}

inline OneVsRestModel parse_model(std::vector<std::string> lines, const std::string &source = "<svm model>") {
    detail::LineReader in(std::move(lines), source);
    {
        auto f = in.next(model_magic, 1);
        (void)f;
    }
    {
        auto f = in.next("version", 2);
        if (in.integer(f[1]) != model_format_version) {
            in.fail("unsupported model format version " + std::string(f[1]));
        }
    }
    OneVsRestModel m;
    auto header = in.next("classes", 4);
    const auto classes = in.integer(header[1]);
    m.input_dimension = in.integer(header[3]);
    auto pca_flag = in.next("pca", 2);
    if (in.integer(pca_flag[1]) == 1) {
        PcaModel p;
        p.total_variance = in.real(in.next("pca_total", 2)[1]);
        p.mean = in.vec(in.next("pca_mean", 2)[1], m.input_dimension);
        auto spec = in.next("pca_spectrum", 3);
        p.spectrum = in.vec(spec[2], in.integer(spec[1]));
        const auto k = in.integer(in.next("pca_axes", 2)[1]);
        p.axes.resize(k, m.input_dimension);
        p.explained_variance.resize(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            auto f = in.next("pca_axis", 3);
            p.explained_variance(a) = in.real(f[1]);
            p.axes.row(a) = in.vec(f[2], m.input_dimension).transpose();
        }
        m.pca = std::move(p);
    }
    for (long long k = 0; k < classes; ++k) {
        auto f = in.next("model", 12);
        if (in.integer(f[1]) != k) {
            in.fail("models out of order");
        }
        BinarySvmModel b;
        b.gamma = in.real(f[3]);
        b.c = in.real(f[5]);
        b.bias = in.real(f[7]);
        const auto count = in.integer(f[9]);
        const auto dim = in.integer(f[11]);
        b.support_vectors.resize(count, dim);
        b.coefficients.resize(count);
        for (Eigen::Index s = 0; s < count; ++s) {
            auto sv = in.next("sv", 3);
            b.coefficients(s) = in.real(sv[1]);
            b.support_vectors.row(s) = in.vec(sv[2], dim).transpose();
        }
        m.models.push_back(std::move(b));
    }
    in.next("end", 1);
    return m;
}

inline void save_model(const std::filesystem::path &path, const OneVsRestModel &m) {
    text::write_text(path, serialize_model(m));
}

inline OneVsRestModel load_model(const std::filesystem::path &path) {
    return parse_model(text::read_lines(path), path.string());
}

} // namespace twostage::svm
