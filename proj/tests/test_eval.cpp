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

#include <algorithm>
#include <cmath>
#include <random>

#include "test_support.hpp"
#include "twostage/eval.hpp"

using namespace twostage;

namespace {

// Manifest of n images over k classes; image i is encoded as an (i+1) x 1 frame by the loader below.
DatasetManifest numbered_manifest(const ClassRegistry &reg, std::size_t n, Split split = Split::test) {
    DatasetManifest m;
    for (std::size_t i = 0; i < n; ++i) {
        m.records.push_back({"img" + std::to_string(i) + ".ppm", reg.label(i % reg.size()), split});
    }
    return m;
}

std::size_t index_of(const std::filesystem::path &p) {
    const auto stem = p.stem().string();
    return static_cast<std::size_t>(std::stoul(stem.substr(3)));
}

Image numbered_loader(const std::filesystem::path &p) { return Image(static_cast<int>(index_of(p)) + 1, 1); }

PipelineVerdict verdict(std::size_t id) { return {{id, std::to_string(id)}, 1.0, VerdictSource::crop, BoundingBox{0, 0, 1, 1}, {}}; }

ClassRegistry registry(std::size_t k) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) {
        names.push_back("c" + std::to_string(i));
    }
    return ClassRegistry(names);
}

// log P(X >= k) for X ~ Binomial(n, p), summed exactly in log space.
double binomial_upper_tail(int n, double p, int k) {
    double total = 0.0;
    for (int i = k; i <= n; ++i) {
        const double log_term = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                                i * std::log(p) + (n - i) * std::log1p(-p);
        total += std::exp(log_term);
    }
    return total;
}

} // namespace

TEST(Evaluate, PerfectClassifier) {
    const auto reg = registry(4);
    const auto m = numbered_manifest(reg, 12);
    const auto report = evaluate([&](const Image &img) { return verdict(static_cast<std::size_t>(img.width() - 1) % 4); },
                                 m, Split::test, 4, {}, numbered_loader);
    EXPECT_DOUBLE_EQ(report.accuracy, 1.0);
    EXPECT_EQ(report.evaluated, 12U);
    EXPECT_EQ(report.correct, 12U);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_EQ(report.confusion[i][j], i == j ? 3U : 0U);
        }
    }
}

TEST(Evaluate, UniformRandomClassifierStaysNearChance) {
    // Accuracy above 0.08 needs at least 36 hits out of 440 at p = 1/44 (mean 10).
    const double tail = binomial_upper_tail(440, 1.0 / 44.0, 36);
    EXPECT_LT(tail, 1e-9);

    const auto reg = registry(44);
    const auto m = numbered_manifest(reg, 440);
    for (std::uint64_t seed : {1U, 2U, 3U, 4U, 5U}) {
        std::vector<std::size_t> guesses(440);
        std::mt19937_64 rng(seed);
        for (auto &g : guesses) {
            g = std::uniform_int_distribution<std::size_t>(0, 43)(rng);
        }
        const auto report = evaluate(
            [&](const Image &img) { return verdict(guesses[static_cast<std::size_t>(img.width() - 1)]); }, m,
            Split::test, 44, {}, numbered_loader);
        EXPECT_GE(report.accuracy, 0.0);
        EXPECT_LE(report.accuracy, 0.08);
    }
}

TEST(Evaluate, EmptySplitIsAnError) {
    const auto reg = registry(2);
    const auto m = numbered_manifest(reg, 4, Split::train);
    EXPECT_THROW(evaluate([](const Image &) { return verdict(0); }, m, Split::test, 2, {}, numbered_loader),
                 InvalidInputError);
}

TEST(Evaluate, StrictAbortsLenientRecords) {
    const auto reg = registry(2);
    const auto m = numbered_manifest(reg, 6);
    auto loader = [](const std::filesystem::path &p) {
        if (index_of(p) == 2) {
            throw IoError("cannot open " + p.string());
        }
        return numbered_loader(p);
    };
    auto classify = [](const Image &img) { return verdict(static_cast<std::size_t>(img.width() - 1) % 2); };
    EXPECT_THROW(evaluate(classify, m, Split::test, 2, {true, 1}, loader), IoError);
    const auto report = evaluate(classify, m, Split::test, 2, {false, 2}, loader);
    EXPECT_EQ(report.errors, 1U);
    EXPECT_EQ(report.evaluated, 5U);
    EXPECT_DOUBLE_EQ(report.accuracy, 1.0);
    EXPECT_FALSE(report.rows[2].verdict);
    EXPECT_NE(report.verdict_log().find("\nimg2.ppm\t-\t-\terror\tcannot open img2.ppm\n"), std::string::npos);
}

TEST(Evaluate, OutOfRangePredictionIsBackendError) {
    const auto reg = registry(2);
    const auto m = numbered_manifest(reg, 2);
    EXPECT_THROW(evaluate([](const Image &) { return verdict(5); }, m, Split::test, 2, {}, numbered_loader),
                 BackendError);
}

TEST(Evaluate, VerdictLogFollowsManifestOrder) {
    const auto reg = registry(3);
    const auto m = numbered_manifest(reg, 5);
    const auto report = evaluate([](const Image &) { return verdict(1); }, m, Split::test, 3, {true, 4}, numbered_loader);
    EXPECT_EQ(report.verdict_log(), "img0.ppm\t1\t1\tcrop\t0,0,1,1\n"
                                    "img1.ppm\t1\t1\tcrop\t0,0,1,1\n"
                                    "img2.ppm\t1\t1\tcrop\t0,0,1,1\n"
                                    "img3.ppm\t1\t1\tcrop\t0,0,1,1\n"
                                    "img4.ppm\t1\t1\tcrop\t0,0,1,1\n");
}

TEST(EvaluateProperty, ConfusionInvariantsAndOrderIndependence) {
    testing_support::Gen g(77);
    for (int iter = 0; iter < 50; ++iter) {
        const auto k = static_cast<std::size_t>(g.integer(2, 6));
        const auto reg = registry(k);
        auto m = numbered_manifest(reg, static_cast<std::size_t>(g.integer(1, 60)));
        std::vector<std::size_t> guesses(m.records.size());
        for (auto &x : guesses) {
            x = static_cast<std::size_t>(g.integer(0, static_cast<int>(k) - 1));
        }
        auto classify = [&](const Image &img) { return verdict(guesses[static_cast<std::size_t>(img.width() - 1)]); };
        const auto a = evaluate(classify, m, Split::test, k, {true, 1}, numbered_loader);
        std::size_t total = 0;
        for (const auto &row : a.confusion) {
            for (auto c : row) {
                total += c;
            }
        }
        EXPECT_EQ(total, a.evaluated);
        EXPECT_NEAR(accuracy_from_confusion(a.confusion), a.accuracy, 1e-12);

        std::shuffle(m.records.begin(), m.records.end(), g.engine());
        const auto b = evaluate(classify, m, Split::test, k, {true, 3}, numbered_loader);
        EXPECT_EQ(a.confusion, b.confusion);
        EXPECT_EQ(a.accuracy, b.accuracy);
    }
}

TEST(ResultsTable, AllSplitsAtFullAccuracy) {
    ModelResults m{"model4", {{Split::train, 1.0}, {Split::val, 1.0}, {Split::test, 1.0}, {Split::final_test, 1.0}}};
    EXPECT_EQ(emit_results_table({m}), "model   train    val   test  final\n"
                                       "model4 100.00 100.00 100.00 100.00\n");
}

TEST(ResultsTable, MissingSplitShowsDash) {
    ModelResults m{"model3", {{Split::train, 0.9987}, {Split::val, 0.61333}, {Split::test, 0.55694}}};
    EXPECT_EQ(emit_results_table({m}), "model   train    val   test  final\n"
                                       "model3  99.87  61.33  55.69      -\n");
}

TEST(ResultsTable, NoModelsIsHeaderOnly) { EXPECT_EQ(emit_results_table({}), "model  train    val   test  final\n"); }

TEST(ResultsTable, SummarizeCollectsSplits) {
    EvalReport r1;
    r1.split = Split::val;
    r1.accuracy = 0.5;
    EvalReport r2;
    r2.split = Split::test;
    r2.accuracy = 0.25;
    const auto m = summarize("x", {r1, r2});
    EXPECT_EQ(m.accuracy.size(), 2U);
    EXPECT_EQ(emit_results_table({m}), "model  train    val   test  final\n"
                                       "x          -  50.00  25.00      -\n");
}
