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
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "test_support.hpp"
#include "twostage/core/keyvalue.hpp"
#include "twostage/core/manifest.hpp"
#include "twostage/core/parallel.hpp"
#include "twostage/core/types.hpp"
#include "twostage/io/ppm.hpp"

using namespace twostage;
using testing_support::Gen;
using testing_support::TempDir;

TEST(Softmax, UniformLogitsGiveUniformProbabilities) {
    const auto p = softmax(std::vector<double>{0, 0, 0});
    for (double v : p) {
        EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
    }
}

TEST(Softmax, LargeMagnitudeDoesNotOverflow) {
    const auto p = softmax(std::vector<double>{1000, 0});
    EXPECT_NEAR(p[0], 1.0, 1e-15);
    EXPECT_GE(p[1], 0.0);
    EXPECT_LT(p[1], 1e-300);
}

TEST(Softmax, MatchesExtendedPrecisionValues) {
    // 40-digit evaluation of exp(x_i) / sum exp(x_j).
    const std::vector<double> expected{0.090030573170380457998, 0.24472847105479765247, 0.66524095577482188953};
    for (double shift : {0.0, 999.0, -500.0}) {
        const auto p = softmax(std::vector<double>{1 + shift, 2 + shift, 3 + shift});
        for (std::size_t i = 0; i < 3; ++i) {
            EXPECT_NEAR(p[i], expected[i], 1e-12) << "shift " << shift;
        }
    }
    const auto q = softmax(std::vector<double>{-5, 0, 5, 5});
    EXPECT_NEAR(q[0], 0.00002262323425793035594, 1e-12);
    EXPECT_NEAR(q[1], 0.0033575856653370794557, 1e-12);
    EXPECT_NEAR(q[2], 0.49830989555020249509, 1e-12);
    EXPECT_EQ(q[2], q[3]);
}

TEST(Softmax, RejectsEmptyAndNonFinite) {
    EXPECT_THROW(softmax(std::vector<double>{}), InvalidInputError);
    EXPECT_THROW(softmax(std::vector<double>{1.0, NAN}), InvalidInputError);
    EXPECT_THROW(softmax(std::vector<double>{INFINITY}), InvalidInputError);
}

TEST(Softmax, PropertyShiftInvarianceAndOrder) {
    Gen g(11);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> x(static_cast<std::size_t>(g.integer(1, 50)));
        for (auto &v : x) {
            v = g.real(-30, 30);
        }
        const double shift = g.real(-100, 100);
        auto shifted = x;
        for (auto &v : shifted) {
            v += shift;
        }
        const auto p = softmax(x);
        const auto q = softmax(shifted);
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            EXPECT_NEAR(p[i], q[i], 1e-12);
            EXPECT_GE(p[i], 0.0);
            EXPECT_LE(p[i], 1.0);
            sum += p[i];
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);
        EXPECT_EQ(argmax(x), argmax(p));
        const ClassScores s(x);
        EXPECT_EQ(s.best_class(), argmax(s.probabilities()));
        EXPECT_EQ(s.max_logit(), x[argmax(x)]);
    }
}

TEST(Argmax, TiesGoToLowestIndex) {
    EXPECT_EQ(argmax(std::vector<double>{1, 3, 3, 2}), 1u);
    EXPECT_THROW(argmax(std::vector<double>{}), InvalidInputError);
}

TEST(Image, ValidatesDimensionsAndBuffer) {
    EXPECT_THROW(Image(0, 3), InvalidInputError);
    EXPECT_THROW(Image(2, 2, std::vector<std::uint8_t>(11)), InvalidInputError);
    Image img(2, 3, Rgb{1, 2, 3});
    EXPECT_EQ(img.pixels().size(), 18u);
    img.set(1, 2, {9, 8, 7});
    EXPECT_EQ(img.at(1, 2), (Rgb{9, 8, 7}));
    EXPECT_EQ(img.at(0, 0), (Rgb{1, 2, 3}));
}

TEST(Fingerprint, DependsOnContentAndShapeOnly) {
    const Image a(4, 2, Rgb{10, 20, 30});
    const Image b(4, 2, Rgb{10, 20, 30});
    const Image c(2, 4, Rgb{10, 20, 30});
    Image d = a;
    d.set(3, 1, {10, 20, 31});
    EXPECT_EQ(fingerprint(a), fingerprint(b));
    EXPECT_NE(fingerprint(a), fingerprint(c));
    EXPECT_NE(fingerprint(a), fingerprint(d));
    EXPECT_EQ(fingerprint(a).size(), 16u);
}

TEST(Fingerprint, KnownValueOfOnePixel) {
    // FNV-1a 64 over 01 00 00 00 01 00 00 00 00 00 00, computed by hand-rolled loop below.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t byte : {1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0}) {
        h = (h ^ byte) * 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    EXPECT_EQ(fingerprint(Image(1, 1)), std::string(buf));
}

TEST(BoundingBox, ValidityClampAndPixels) {
    EXPECT_FALSE((BoundingBox{2, 0, 2, 1}.valid()));
    EXPECT_TRUE((BoundingBox{0, 0, 1, 1}.valid()));
    const BoundingBox b{-2.5, 1.2, 10.1, 3.7};
    const auto c = b.clamped(8, 8);
    EXPECT_EQ(c, (BoundingBox{0, 1.2, 8, 3.7}));
    EXPECT_EQ(b.to_pixels(8, 8), (PixelRect{0, 1, 8, 4}));
    EXPECT_FALSE((BoundingBox{9, 9, 10, 10}.intersects(8, 8)));
    EXPECT_TRUE((BoundingBox{7.5, 7.5, 10, 10}.intersects(8, 8)));
}

TEST(BoundingBox, IouBasics) {
    const BoundingBox a{0, 0, 2, 2};
    EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
    EXPECT_DOUBLE_EQ(iou(a, {2, 2, 3, 3}), 0.0);
    EXPECT_DOUBLE_EQ(iou(a, {1, 0, 3, 2}), 2.0 / 6.0);
}

TEST(Detections, SortIsStableDescending) {
    std::vector<Detection> d{{{0, 0, 1, 1}, 0.2, 0}, {{0, 0, 1, 1}, 0.9, 1}, {{0, 0, 1, 1}, 0.2, 2}};
    sort_by_score(d);
    EXPECT_EQ(d[0].class_id, 1);
    EXPECT_EQ(d[1].class_id, 0);
    EXPECT_EQ(d[2].class_id, 2);
}

TEST(ClassRegistry, UniqueNamesAndLookup) {
    EXPECT_THROW(ClassRegistry({"a", "a"}), InvalidInputError);
    EXPECT_THROW(ClassRegistry({"a", ""}), InvalidInputError);
    const ClassRegistry r({"ale", "lager"});
    EXPECT_EQ(r.size(), 2u);
    EXPECT_EQ(r.find("lager"), 1u);
    EXPECT_FALSE(r.find("stout"));
    EXPECT_EQ(r.label(0).class_name, "ale");
    EXPECT_THROW(r.label(2), InvalidInputError);
}

TEST(ClassRegistry, FileRoundTrip) {
    TempDir dir;
    const ClassRegistry r({"x", "y", "z"});
    r.save(dir / "classes.txt");
    EXPECT_EQ(ClassRegistry::load(dir / "classes.txt").names(), r.names());
}

namespace {

const ClassRegistry registry({"ale", "lager", "stout"});

std::vector<std::string> lines(std::initializer_list<const char *> l) { return {l.begin(), l.end()}; }

} // namespace

TEST(Manifest, EmptyFileGivesNoRecords) {
    TempDir dir;
    text::write_text(dir / "m.tsv", "");
    EXPECT_TRUE(load_manifest(dir / "m.tsv", registry).records.empty());
}

TEST(Manifest, OneLinePerSplit) {
    const auto m = parse_manifest(lines({"# comment", "a.ppm\tale\ttrain", "b.ppm\tlager\tval", "",
                                         "c.ppm\tstout\ttest", "d.ppm\tale\tfinal_test"}),
                                  registry);
    ASSERT_EQ(m.records.size(), 4u);
    EXPECT_EQ(m.records[0].split, Split::train);
    EXPECT_EQ(m.records[1].label.class_id, 1u);
    EXPECT_EQ(m.records[2].split, Split::test);
    EXPECT_EQ(m.records[3].split, Split::final_test);
    for (auto s : all_splits) {
        EXPECT_EQ(m.in_split(s).size(), 1u);
    }
}

TEST(Manifest, DistinctErrorsNameTheLine) {
    auto kind_of = [](const std::vector<std::string> &l) {
        try {
            parse_manifest(l, registry, "m.tsv");
        } catch (const ManifestError &e) {
            return std::pair{e.kind(), e.line()};
        }
        ADD_FAILURE() << "no error";
        return std::pair{ManifestError::Kind::missing_file, std::size_t{0}};
    };
    EXPECT_EQ(kind_of(lines({"a.ppm\tale\tholdout"})), std::pair(ManifestError::Kind::unknown_split, std::size_t{1}));
    EXPECT_EQ(kind_of(lines({"a.ppm\tale\ttrain", "b.ppm\tporter\ttrain"})),
              std::pair(ManifestError::Kind::unknown_class, std::size_t{2}));
    EXPECT_EQ(kind_of(lines({"#", "a.ppm ale train"})), std::pair(ManifestError::Kind::malformed_line, std::size_t{2}));
    try {
        parse_manifest(lines({"a.ppm\tale\tholdout"}), registry, "m.tsv");
    } catch (const ParseError &e) {
        EXPECT_NE(std::string(e.what()).find("m.tsv:1"), std::string::npos);
    }
    try {
        load_manifest("/nonexistent/manifest.tsv", registry);
        ADD_FAILURE();
    } catch (const ManifestError &e) {
        EXPECT_EQ(e.kind(), ManifestError::Kind::missing_file);
    }
}

TEST(Manifest, PropertyWriteThenLoadRoundTrips) {
    Gen g(5);
    TempDir dir;
    for (int trial = 0; trial < 50; ++trial) {
        DatasetManifest m;
        const int n = g.integer(0, 30);
        for (int i = 0; i < n; ++i) {
            const auto id = static_cast<std::size_t>(g.integer(0, 2));
            m.records.push_back({"dir" + std::to_string(g.integer(0, 3)) + "/img " + std::to_string(i) + ".ppm",
                                 registry.label(id), all_splits[static_cast<std::size_t>(g.integer(0, 3))]});
        }
        m.save(dir / "m.tsv");
        const auto back = load_manifest(dir / "m.tsv", registry);
        EXPECT_EQ(back.records, m.records);
        EXPECT_EQ(back.base_dir, dir.path());
    }
}

TEST(Text, NumberParsing) {
    EXPECT_EQ(text::parse_double(" +1.5 "), 1.5);
    EXPECT_FALSE(text::parse_double("1.5x"));
    EXPECT_FALSE(text::parse_double(""));
    EXPECT_EQ(text::parse_int("-12"), -12);
    EXPECT_FALSE(text::parse_int("1.0"));
    EXPECT_EQ(*text::parse_real_list("1,2.5,-3"), (std::vector<double>{1, 2.5, -3}));
    EXPECT_FALSE(text::parse_real_list("1,,2"));
    EXPECT_EQ(text::format_fixed(99.865, 2), "99.86");
    EXPECT_EQ(text::format_fixed(100.0, 2), "100.00");
}

TEST(Text, ShortestFormattingRoundTrips) {
    Gen g(3);
    for (int i = 0; i < 1000; ++i) {
        const double v = g.real(-1e6, 1e6) * std::pow(10.0, g.integer(-20, 20));
        EXPECT_EQ(*text::parse_double(text::format_double(v)), v);
    }
}

TEST(KeyValues, ParsesAndRejectsDuplicates) {
    const auto kv = KeyValues::parse(lines({"# c", "a = 1", " b=two words ", ""}), "cfg");
    EXPECT_EQ(kv.require("a"), "1");
    EXPECT_EQ(kv.require("b"), "two words");
    EXPECT_EQ(kv.integer("a"), 1);
    EXPECT_THROW((void)kv.require("c"), ConfigError);
    EXPECT_THROW(KeyValues::parse(lines({"a = 1", "a = 2"}), "cfg"), ParseError);
    EXPECT_THROW(KeyValues::parse(lines({"novalue"}), "cfg"), ParseError);
    try {
        (void)kv.real("b");
        ADD_FAILURE();
    } catch (const ConfigError &e) {
        EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
    }
}

TEST(Ppm, RoundTripAndErrors) {
    TempDir dir;
    Gen g(9);
    const auto img = g.image(7, 5);
    io::write_image(dir / "sub/a.ppm", img);
    EXPECT_EQ(io::read_image(dir / "sub/a.ppm"), img);
    EXPECT_THROW(io::read_image(dir / "missing.ppm"), IoError);
    text::write_text(dir / "bad.ppm", "P3\n1 1\n255\n0 0 0\n");
    EXPECT_THROW(io::read_image(dir / "bad.ppm"), IoError);
}

TEST(Parallel, CoversEveryIndexOnceAndRethrowsLowest) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    EXPECT_EQ(std::accumulate(hits.begin(), hits.end(), 0), 1000);
    EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    try {
        parallel_for(100, 4, [](std::size_t i) {
            if (i == 17 || i == 60) {
                throw std::runtime_error(std::to_string(i));
            }
        });
        ADD_FAILURE();
    } catch (const std::runtime_error &e) {
        EXPECT_STREQ(e.what(), "17");
    }
}
