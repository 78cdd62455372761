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
// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance_suite <path to the twostage CLI>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "cascade_cases.hpp"
#include "oracles/bilinear_reference.hpp"
#include "pca_cases.hpp"
#include "svm_cases.hpp"
#include "test_support.hpp"
#include "twostage/app/config.hpp"
#include "twostage/backends/scripted.hpp"
#include "twostage/backends/synthetic.hpp"
#include "twostage/datagen/synthetic.hpp"
#include "twostage/eval.hpp"
#include "twostage/imgeom.hpp"

using namespace twostage;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string secs(double s) { return text::format_fixed(s, 2) + " s"; }

// 1 ---------------------------------------------------------------------------
Outcome cascade_equivalence() {
    const auto t0 = Clock::now();
    testing_support::Gen g(10'000);
    int mismatches = 0;
    std::string first;
    constexpr int cases = 10'000;
    for (int i = 0; i < cases; ++i) {
        auto s = cascade_cases::make_scenario(g);
        for (auto strategy : {Strategy::top_confidence, Strategy::per_box_loop}) {
            s.config.strategy = strategy;
            const auto want = strategy == Strategy::top_confidence ? oracle::top_confidence(s.reference)
                                                                   : oracle::per_box_loop(s.reference);
            const auto why = cascade_cases::compare(s, run_pipeline(s.image, s.config), want);
            if (!why.empty()) {
                if (mismatches++ == 0) {
                    first = " first: case " + std::to_string(i) + " " + std::string(to_string(strategy)) + ": " + why;
                }
            }
        }
    }
    const double t = since(t0);
    return {mismatches == 0 && t < 10.0, std::to_string(cases) + " cases x 2 strategies, " +
                                              std::to_string(mismatches) + " mismatches, " + secs(t) +
                                              " (limit 10 s)" + first};
}

// 2 ---------------------------------------------------------------------------
Outcome filter_exhaustive() {
    int count = 0;
    const int bad =
        cascade_cases::exhaustive_filter_mismatches({0.005, 0.05, 0.25, 0.42, 0.85}, 4, {0.3, 0.1, 0.01}, &count);
    return {bad == 0 && count == 126,
            std::to_string(count) + " multisets, " + std::to_string(bad) + " mismatches"};
}

// 3 ---------------------------------------------------------------------------
std::vector<double> plane(const Image &img, int c) {
    std::vector<double> out;
    const auto px = img.pixels();
    for (std::size_t i = static_cast<std::size_t>(c); i < px.size(); i += 3) {
        out.push_back(px[i]);
    }
    return out;
}

Outcome geometry() {
    const auto t0 = Clock::now();
    testing_support::Gen g(3);
    int failures = 0;
    int checks = 0;
    auto expect = [&](bool ok) {
        ++checks;
        failures += ok ? 0 : 1;
    };
    // Pad then crop the placement back: identity, with fill everywhere else.
    for (int trial = 0; trial < 300; ++trial) {
        const int w = g.integer(1, 40);
        const int h = g.integer(1, 40);
        const auto img = g.image(w, h);
        const Rgb fill{static_cast<std::uint8_t>(g.integer(0, 255)), 3, 5};
        const auto p = square_pad(img, fill);
        const int s = std::max(w, h);
        const auto r = square_pad_placement(w, h);
        expect(p.width() == s && p.height() == s);
        expect(r.x0 == (s - w) / 2 && r.y0 == (s - h) / 2 && r.x1 - r.x0 == w && r.y1 - r.y0 == h);
        expect(crop(p, {double(r.x0), double(r.y0), double(r.x1), double(r.y1)}) == img);
        bool fill_ok = true;
        for (int y = 0; y < s; ++y) {
            for (int x = 0; x < s; ++x) {
                if ((x < r.x0 || x >= r.x1 || y < r.y0 || y >= r.y1) && !(p.at(x, y) == fill)) {
                    fill_ok = false;
                }
            }
        }
        expect(fill_ok);
    }
    // Odd remainder: 5x2 gets one row above and two below.
    const auto odd = square_pad(Image(5, 2, Rgb{9, 9, 9}), {1, 1, 1});
    expect(odd.at(0, 0) == (Rgb{1, 1, 1}) && odd.at(0, 1) == (Rgb{9, 9, 9}) && odd.at(0, 2) == (Rgb{9, 9, 9}) &&
           odd.at(0, 3) == (Rgb{1, 1, 1}) && odd.at(0, 4) == (Rgb{1, 1, 1}));
    // Same-size resize is the identity for both filters.
    for (int trial = 0; trial < 50; ++trial) {
        const auto img = g.image(g.integer(1, 30), g.integer(1, 30));
        expect(resize(img, {img.width(), img.height(), ResizeFilter::nearest}) == img);
        expect(resize(img, {img.width(), img.height(), ResizeFilter::bilinear}) == img);
    }
    // Hand values: a 0..255 two-pixel ramp stretched to 4, and a checkerboard shrunk to 1.
    Image ramp(2, 1);
    ramp.set(1, 0, {255, 255, 255});
    const auto r4 = resize(ramp, {4, 1, ResizeFilter::bilinear});
    expect(r4.at(0, 0).r == 0 && r4.at(1, 0).r == 64 && r4.at(2, 0).r == 191 && r4.at(3, 0).r == 255);
    Image checker(2, 2);
    checker.set(1, 0, {255, 255, 255});
    checker.set(0, 1, {255, 255, 255});
    expect(resize(checker, {1, 1, ResizeFilter::bilinear}).at(0, 0).r == 128);
    // Every output pixel against the exact rational reference.
    for (int trial = 0; trial < 200; ++trial) {
        const auto img = g.image(g.integer(1, 12), g.integer(1, 12));
        const int dw = g.integer(1, 20);
        const int dh = g.integer(1, 20);
        const auto out = resize(img, {dw, dh, ResizeFilter::bilinear});
        bool ok = true;
        for (int c = 0; c < 3; ++c) {
            const auto pl = plane(img, c);
            for (int y = 0; y < dh; ++y) {
                for (int x = 0; x < dw; ++x) {
                    const auto px = out.at(x, y);
                    const std::uint8_t got = c == 0 ? px.r : (c == 1 ? px.g : px.b);
                    ok = ok && got == oracle::bilinear_pixel(pl, img.width(), img.height(), dw, dh, x, y);
                }
            }
        }
        expect(ok);
    }
    // Real-valued normalisation.
    const auto t = to_model_input(Image(1, 1, Rgb{255, 0, 0}), {1, 1, ResizeFilter::bilinear}, {});
    expect(std::abs(t.at(0, 0, 0) - (1.0 - 0.485) / 0.229) < 1e-6 && std::abs(t.at(1, 0, 0) + 0.456 / 0.224) < 1e-6);
    const double elapsed = since(t0);
    return {failures == 0 && elapsed < 1.0, std::to_string(checks) + " checks, " + std::to_string(failures) +
                                                " failures, " + secs(elapsed) + " (limit 1 s)"};
}

// 4 ---------------------------------------------------------------------------
Outcome svm_correctness() {
    const auto t0 = Clock::now();
    const auto instances = svm_cases::corpus(404, 300);
    int failures = 0;
    std::string first;
    for (const auto &inst : instances) {
        const auto why = svm_cases::check(inst);
        if (!why.empty() && failures++ == 0) {
            first = " first: " + inst.name + ": " + why;
        }
    }
    const double t = since(t0);
    return {failures == 0 && t < 30.0, std::to_string(instances.size()) +
                                           " instances (2-point, XOR, blobs, random; <= 30 points), " +
                                           std::to_string(failures) + " failures, " + secs(t) + " (limit 30 s)" +
                                           first};
}

// 5 ---------------------------------------------------------------------------
Outcome pca() {
    testing_support::Gen g(55);
    int failures = 0;
    int cases = 0;
    std::string first;
    auto run = [&](const std::vector<std::vector<double>> &rows, double fraction) {
        ++cases;
        const auto why = pca_cases::check(rows, fraction);
        if (!why.empty() && failures++ == 0) {
            first = " first: " + why;
        }
    };
    for (int i = 0; i < 100; ++i) {
        const int d = g.integer(1, 6);
        run(pca_cases::random_rows(g, g.integer(d + 1, 40), d), g.pick(std::vector<double>{0.5, 0.8, 0.9, 0.99, 1.0}));
    }
    for (int i = 0; i < 20; ++i) {
        const int d = g.integer(5, 8);
        run(pca_cases::random_rows(g, g.integer(2, d - 1), d), 0.99); // more dimensions than samples
    }
    // Rank one at 0.99 keeps exactly one axis, along the generating direction.
    Eigen::MatrixXd x(20, 5);
    Eigen::VectorXd dir(5);
    dir << 1, -2, 0.5, 3, 1;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        x.row(i) = (g.real(-4, 4) * dir).transpose();
    }
    const auto m = svm::pca_fit(x, 0.99);
    const bool rank1 = m.components() == 1 && std::abs(std::abs(m.axes.row(0).dot(dir.normalized())) - 1.0) < 1e-9;
    return {failures == 0 && rank1, std::to_string(cases) + " oracle cases, " + std::to_string(failures) +
                                        " failures; rank-1 data keeps " + std::to_string(m.components()) +
                                        " axis" + first};
}

// 6 ---------------------------------------------------------------------------
PipelineConfig preset_pipeline(const std::string &name, const std::shared_ptr<const ClassRegistry> &registry) {
    auto kv = app::defaults();
    kv.merge(app::preset(name));
    const auto c = app::parse_app_config(kv);
    PipelineConfig p;
    p.strategy = c.pipeline_strategy();
    p.detector_thresholds = c.detector_thresholds;
    p.classification_gate = c.classification_gate;
    p.crop_preprocess = c.crop;
    p.registry = registry;
    p.fallback_classifier = synthetic_color_classifier(*registry);
    p.crop_classifier = p.fallback_classifier;
    if (p.strategy != Strategy::whole_image) {
        p.detector = synthetic_shape_detector();
        p.bottle_class_ids = app::resolve_class_filter(c, p.detector->vocabulary());
    }
    p.validate();
    return p;
}

Outcome synthetic_end_to_end() {
    const auto t0 = Clock::now();
    std::map<std::string, double> acc;
    for (const char *noise : {"easy", "hard"}) {
        datagen::SyntheticSpec spec;
        spec.class_count = 44;
        spec.noise = std::string(noise) == "hard" ? datagen::hard_noise() : datagen::easy_noise();
        auto corpus = datagen::generate_synthetic_corpus(spec, {0, 0, 440, 0});
        auto registry = std::make_shared<const ClassRegistry>(corpus.registry);
        const auto images = std::make_shared<std::vector<Image>>(std::move(corpus.images));
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < corpus.manifest.records.size(); ++i) {
            index[corpus.manifest.records[i].image_path] = i;
        }
        const ImageLoader loader = [&](const fs::path &p) { return (*images)[index.at(p.generic_string())]; };
        for (const char *model : {"model4", "model6", "model1"}) {
            const auto cfg = preset_pipeline(model, registry);
            const auto report = evaluate([&](const Image &img) { return run_pipeline(img, cfg); }, corpus.manifest,
                                         Split::test, registry->size(), {}, loader);
            acc[std::string(model) + "/" + noise] = report.accuracy;
        }
    }
    const double t = since(t0);
    const bool ok = acc["model4/easy"] == 1.0 && acc["model6/easy"] == 1.0 && acc["model4/hard"] == 1.0 &&
                    acc["model6/hard"] == 1.0 && acc["model1/hard"] < 1.0 && t < 60.0;
    std::string detail = "44 classes x 10 test images;";
    for (const auto &[k, v] : acc) {
        detail += " " + k + " " + text::format_fixed(100.0 * v, 2) + "%";
    }
    return {ok, detail + "; " + secs(t) + " (limit 60 s)"};
}

// 7 ---------------------------------------------------------------------------
Outcome fallback_totality() {
    auto registry = std::make_shared<const ClassRegistry>(std::vector<std::string>{"a", "b", "c"});
    auto fixture = std::make_shared<ScriptedFixture>();
    testing_support::Gen g(7);
    std::vector<Image> images;
    for (int i = 0; i < 20; ++i) {
        images.push_back(g.image(g.integer(4, 24), g.integer(4, 24)));
        const auto fp = fingerprint(images.back());
        // Half the images have no detections at all, half only ones below every threshold.
        std::vector<Detection> dets;
        if (i % 2 == 1) {
            dets.push_back({{0, 0, 2, 2}, 0.004, 0});
            dets.push_back({{1, 1, 3, 3}, 0.0, 0});
        }
        fixture->add_detections(fp, dets);
        fixture->add_logits(fp, {double(i % 3), 1.5, 0.5});
    }
    PipelineConfig cfg;
    cfg.detector_thresholds = {0.5, 0.2, 0.01};
    cfg.classification_gate = 8.0;
    cfg.detector = scripted_detector(fixture);
    cfg.crop_classifier = scripted_classifier(fixture, registry->size());
    cfg.fallback_classifier = cfg.crop_classifier;
    cfg.registry = registry;
    int good = 0;
    int total = 0;
    for (auto strategy : {Strategy::top_confidence, Strategy::per_box_loop}) {
        cfg.strategy = strategy;
        for (std::size_t i = 0; i < images.size(); ++i) {
            ++total;
            try {
                const auto v = run_pipeline(images[i], cfg);
                const std::size_t want = i % 3 == 2 ? 0 : 1;
                good += v.source == VerdictSource::fallback_whole_image && !v.chosen_box && v.label.class_id == want
                            ? 1
                            : 0;
            } catch (const std::exception &) {
            }
        }
    }
    return {good == total, std::to_string(good) + "/" + std::to_string(total) +
                               " empty-detection verdicts were whole-image fallbacks without error"};
}

// 8 ---------------------------------------------------------------------------
Outcome table() {
    const std::vector<ModelResults> models{
        {"model3", {{Split::train, 0.99871}, {Split::val, 0.61333}, {Split::test, 0.556875}}},
        {"model6", {{Split::train, 1.0}, {Split::val, 1.0}, {Split::test, 0.9933}, {Split::final_test, 1.0}}},
    };
    const auto got = emit_results_table(models);
    const std::string want = "model   train    val   test  final\n"
                             "model3  99.87  61.33  55.69      -\n"
                             "model6 100.00 100.00  99.33 100.00\n";
    return {got == want, got == want ? "missing final-test cell renders '-', others 2-decimal percents"
                                     : "table differs:\n" + got};
}

// 9 ---------------------------------------------------------------------------
std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path &dir) {
    std::map<std::string, std::string> files;
    for (const auto &e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            files[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
        }
    }
    return files;
}

Outcome cli_determinism(const std::string &cli) {
    testing_support::TempDir root("accept");
    const std::string data = " --registry corpus/classes.txt --manifest corpus/manifest.tsv";
    const std::vector<std::string> commands{
        "synth --out corpus --classes 6 --train 3 --val 1 --test 2 --final-test 1 --size 96 --noise hard --jobs 3",
        "classify --preset model6 --registry corpus/classes.txt --jobs 3 corpus/test/class00_0.ppm "
        "corpus/test/class03_3.ppm > classify.txt",
        "datagen --preset model4" + data + " --out ds --set crop.size=32 --jobs 3 > datagen.txt",
        "review-apply --out ds --review review.tsv > review.txt",
        "evaluate" + data + " --model model4 --model model5 --model model6 --model model1 --out ev --jobs 3 "
        "> evaluate.txt",
        "svm extract --preset model3" + data + " --split train --out f_train.tsv --jobs 3",
        "svm extract --preset model3" + data + " --split test --out f_test.tsv",
        "svm train --preset model3 --registry corpus/classes.txt --model-file m.svm --jobs 3 f_train.tsv "
        "| grep -v ' s$' > train.txt",
        "svm predict --preset model3 --registry corpus/classes.txt --model-file m.svm f_test.tsv --out pred.tsv",
        "backends check --preset model4 --registry corpus/classes.txt > backends.txt",
    };
    std::map<std::string, std::string> first;
    for (int pass = 0; pass < 2; ++pass) {
        const auto dir = root / ("run" + std::to_string(pass));
        fs::create_directories(dir);
        text::write_text(dir / "review.tsv", "train/train_class01_1_det0_s1.000.ppm\treject\n");
        for (const auto &c : commands) {
            // Stdout is part of the compared output unless the command already redirects it.
            const bool redirected = c.find('>') != std::string::npos;
            const std::string cmd = "cd '" + dir.string() + "' && '" + cli + "' " + c +
                                    (redirected ? "" : " > stdout_" + std::to_string(&c - commands.data()) + ".txt") +
                                    " 2>/dev/null";
            const int status = std::system(cmd.c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
                return {false, "command failed: twostage " + c};
            }
        }
        auto snap = snapshot(dir);
        if (pass == 0) {
            first = std::move(snap);
        } else if (snap != first) {
            for (const auto &[k, v] : first) {
                if (!snap.contains(k) || snap.at(k) != v) {
                    return {false, "output differs between runs: " + k};
                }
            }
            return {false, "second run wrote extra files"};
        }
    }
    return {true, std::to_string(commands.size()) + " commands run twice, " + std::to_string(first.size()) +
                      " output files byte-identical"};
}

} // namespace

int main(int argc, char **argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance_suite <twostage cli>\n";
        return 2;
    }
    const std::string cli = fs::absolute(argv[1]).string();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"cascade oracle equivalence", cascade_equivalence},
        {"cascade_filter exhaustive", filter_exhaustive},
        {"geometry", geometry},
        {"svm vs QP oracle", svm_correctness},
        {"pca", pca},
        {"synthetic end-to-end", synthetic_end_to_end},
        {"fallback totality", fallback_totality},
        {"results table", table},
        {"cli determinism", [&] { return cli_determinism(cli); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception &e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS " : "FAIL ") << (i + 1) << " " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
