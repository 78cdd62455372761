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
// twostage command-line tool. Exit codes: 0 ok, 1 config or invalid input,
// 2 file or parse error, 3 backend failure.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <regex>

#include "CLI11.hpp"

#include "twostage/app/config.hpp"
#include "twostage/app/factory.hpp"
#include "twostage/datagen/dataset2.hpp"
#include "twostage/datagen/synthetic.hpp"
#include "twostage/eval.hpp"
#include "twostage/svm/features.hpp"
#include "twostage/svm/model_io.hpp"

namespace fs = std::filesystem;
using namespace twostage;
using namespace twostage::app;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 1;
constexpr int exit_io = 2;
constexpr int exit_backend = 3;

/// Options every config-driven subcommand accepts. Flags form the top layer.
struct Common {
    std::vector<std::string> configs;
    std::string preset;
    std::string registry;
    std::string manifest;
    std::vector<std::string> splits;
    std::string out;
    unsigned jobs = 0;
    std::string strict;
    std::vector<std::string> sets;

    void attach(CLI::App &app) {
        app.add_option("--config", configs, "config file; repeat to layer several, later files win")
            ->check(CLI::ExistingFile);
        app.add_option("--preset", preset, "built-in preset applied below config files")
            ->check(CLI::IsMember({"model1", "model3", "model4", "model5", "model6"}));
        app.add_option("--registry", registry, "class registry file (one class name per line)");
        app.add_option("--manifest", manifest, "dataset manifest (<image>\\t<class>\\t<split> per line)");
        app.add_option("--split", splits, "split to use: train, val, test, final_test; repeatable");
        app.add_option("--out", out, "output location");
        app.add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 1024));
        auto *s = app.add_flag_callback("--strict", [this] { strict = "true"; }, "per-image failures are fatal");
        auto *l = app.add_flag_callback("--lenient", [this] { strict = "false"; },
                                        "per-image failures are counted and skipped");
        s->excludes(l);
        app.add_option("--set", sets, "override any config key: --set key=value; repeatable");
    }

    [[nodiscard]] std::vector<std::pair<std::string, std::string>> overrides() const {
        std::vector<std::pair<std::string, std::string>> o;
        if (!registry.empty()) {
            o.emplace_back("class_registry", registry);
        }
        if (!manifest.empty()) {
            o.emplace_back("manifest", manifest);
        }
        if (!splits.empty()) {
            o.emplace_back("eval.splits", text::join(splits, ","));
        }
        if (!out.empty()) {
            o.emplace_back("output", out);
        }
        if (jobs != 0) {
            o.emplace_back("jobs", std::to_string(jobs));
        }
        if (!strict.empty()) {
            o.emplace_back("strict", strict);
        }
        for (const auto &kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw ConfigError("command line: --set expects key=value, got '" + kv + "'");
            }
            o.emplace_back(std::string(text::trim(kv.substr(0, eq))), std::string(text::trim(kv.substr(eq + 1))));
        }
        return o;
    }

    /// defaults < preset < config files < per-model file < flags.
    [[nodiscard]] AppConfig load(const std::optional<std::string> &preset_name = std::nullopt,
                                 const std::optional<fs::path> &model_file = std::nullopt) const {
        std::vector<fs::path> files(configs.begin(), configs.end());
        if (model_file) {
            files.push_back(*model_file);
        }
        const auto p = preset_name ? preset_name : (preset.empty() ? std::nullopt : std::optional(preset));
        auto cfg = parse_app_config(compose_layers(p, files, overrides()));
        check_referenced_files(cfg);
        return cfg;
    }
};

ClassRegistry load_registry(const AppConfig &cfg) {
    if (cfg.class_registry.empty()) {
        throw ConfigError("field 'class_registry' is required (config key or --registry)");
    }
    return in_context("class_registry", [&] { return ClassRegistry::load(cfg.class_registry); });
}

DatasetManifest load_dataset(const AppConfig &cfg, const ClassRegistry &registry) {
    if (cfg.manifest.empty()) {
        throw ConfigError("field 'manifest' is required (config key or --manifest)");
    }
    return in_context("manifest", [&] { return load_manifest(cfg.manifest, registry); });
}

fs::path require_output(const AppConfig &cfg) {
    if (cfg.output.empty()) {
        throw ConfigError("field 'output' is required (config key or --out)");
    }
    return cfg.output;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ClassifyFn make_classify_fn(const AppConfig &cfg, BackendFactory &factory) {
    if (cfg.is_svm()) {
        if (cfg.svm_model.empty()) {
            throw ConfigError("field 'svm.model' is required for strategy svm");
        }
        auto model = std::make_shared<const svm::OneVsRestModel>(
            in_context("svm.model", [&] { return svm::load_model(cfg.svm_model); }));
        auto extractor = in_context("feature_extractor", [&] { return factory.feature_extractor(cfg.feature_extractor); });
        return svm_classify_fn(std::move(extractor), std::move(model), factory.registry());
    }
    return [pipeline = factory.pipeline(cfg)](const Image &image) { return run_pipeline(image, pipeline); };
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
    std::string out;
    std::size_t classes = 44;
    datagen::SplitCounts counts{0, 0, 10, 0};
    int size = 256;
    std::uint64_t seed = 42;
    std::string noise = "easy";
    unsigned jobs = 1;
};

int cmd_synth(const SynthArgs &a) {
    datagen::SyntheticSpec spec;
    spec.class_count = a.classes;
    spec.image_width = a.size;
    spec.image_height = a.size;
    spec.seed = a.seed;
    spec.noise = a.noise == "hard" ? datagen::hard_noise() : datagen::easy_noise();
    const datagen::SplitCounts counts{a.counts.train * a.classes, a.counts.val * a.classes,
                                      a.counts.test * a.classes, a.counts.final_test * a.classes};
    const auto corpus = datagen::generate_synthetic_corpus(spec, counts, a.jobs);
    datagen::write_synthetic_corpus(corpus, a.out);
    std::cout << corpus.images.size() << " images, " << a.classes << " classes written to " << a.out << "\n";
    return exit_ok;
}

// --- classify --------------------------------------------------------------

int cmd_classify(const Common &common, const std::vector<std::string> &images) {
    const auto cfg = common.load();
    auto registry = std::make_shared<const ClassRegistry>(load_registry(cfg));
    BackendFactory factory(registry);
    const auto classify = make_classify_fn(cfg, factory);
    std::vector<std::string> lines(images.size());
    parallel_for(images.size(), cfg.jobs, [&](std::size_t i) {
        const auto image = in_context("image " + images[i], [&] { return io::read_image(images[i]); });
        lines[i] = format_verdict(images[i], classify(image));
    });
    for (const auto &l : lines) {
        std::cout << l << "\n";
    }
    return exit_ok;
}

// --- datagen / review-apply ------------------------------------------------

int cmd_datagen(const Common &common) {
    const auto cfg = common.load();
    auto registry = std::make_shared<const ClassRegistry>(load_registry(cfg));
    const auto manifest = load_dataset(cfg, *registry);
    const auto out = require_output(cfg);
    BackendFactory factory(registry);
    const auto detector = in_context("detector", [&] { return factory.detector(cfg); });
    datagen::Dataset2Options options;
    options.floor_threshold = cfg.datagen_floor;
    options.class_filter = resolve_class_filter(cfg, detector->vocabulary());
    options.preprocess = cfg.crop;
    options.jobs = cfg.jobs;
    const auto result = datagen::generate_dataset2(manifest, *detector, options, out);

    text::write_text(out / "crops.tsv", datagen::serialize_crop_records(result.records));
    text::write_text(out / "pending_review.tsv", datagen::pending_review_list(result.records));
    text::write_text(out / "errors.txt", result.errors.empty() ? "" : text::join(result.errors, "\n") + "\n");
    registry->save(out / "classes.txt");
    std::cout << result.images << " images, " << result.records.size() << " crops, " << result.errors.size()
              << " errors\n";
    for (const auto &e : result.errors) {
        std::cerr << "  " << e << "\n";
    }
    if (cfg.strict && !result.errors.empty()) {
        throw IoError(std::to_string(result.errors.size()) + " image(s) failed in strict mode; first: " +
                      result.errors.front());
    }
    return exit_ok;
}

int cmd_review_apply(const Common &common, const std::string &review) {
    const auto cfg = common.load();
    const auto out = require_output(cfg);
    const auto registry = cfg.class_registry.empty()
                              ? in_context("class_registry", [&] { return ClassRegistry::load(out / "classes.txt"); })
                              : load_registry(cfg);
    const auto crops_file = out / "crops.tsv";
    auto records = datagen::parse_crop_records(text::read_lines(crops_file), registry, crops_file.string());
    const auto outcome = datagen::apply_review(std::move(records), text::read_lines(review), review);
    for (const auto &w : outcome.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    text::write_text(crops_file, datagen::serialize_crop_records(outcome.records));
    outcome.manifest.save(out / "manifest.tsv");
    const auto moved = datagen::relocate_rejected(out, outcome.records);
    std::cout << outcome.records.size() << " crops reviewed, " << outcome.manifest.records.size() << " accepted, "
              << outcome.rejected << " rejected, " << moved << " files moved\n";
    return exit_ok;
}

// --- evaluate --------------------------------------------------------------

struct ModelSpec {
    std::string name;
    std::optional<fs::path> file;
};

ModelSpec parse_model_spec(const std::string &arg) {
    const auto eq = arg.find('=');
    ModelSpec m{arg.substr(0, eq), std::nullopt};
    if (eq != std::string::npos) {
        m.file = arg.substr(eq + 1);
    }
    static const std::regex valid("[A-Za-z0-9_.-]+");
    if (!std::regex_match(m.name, valid)) {
        throw ConfigError("model name '" + m.name + "' must use letters, digits, '_', '.' or '-'");
    }
    if (!m.file && !find_preset(m.name)) {
        throw ConfigError("unknown model '" + m.name + "': not a preset; use --model " + m.name + "=<config file>");
    }
    return m;
}

int cmd_evaluate(const Common &common, const std::vector<std::string> &model_args) {
    std::vector<ModelSpec> models;
    for (const auto &a : model_args) {
        models.push_back(parse_model_spec(a));
    }
    std::vector<ModelResults> rows;
    std::optional<fs::path> out_dir;
    for (const auto &m : models) {
        const auto preset_name = find_preset(m.name) ? std::optional(m.name) : std::nullopt;
        const auto cfg = in_context("model " + m.name, [&] { return common.load(preset_name, m.file); });
        auto registry = std::make_shared<const ClassRegistry>(load_registry(cfg));
        const auto manifest = load_dataset(cfg, *registry);
        BackendFactory factory(registry);
        const auto classify = make_classify_fn(cfg, factory);
        auto splits = cfg.eval_splits;
        if (splits.empty()) {
            for (auto s : all_splits) {
                if (!manifest.in_split(s).empty()) {
                    splits.push_back(s);
                }
            }
        }
        std::vector<EvalReport> reports;
        for (auto s : splits) {
            auto report = evaluate(classify, manifest, s, registry->size(), {cfg.strict, cfg.jobs});
            std::cerr << m.name << " " << to_string(s) << ": " << report.correct << "/" << report.evaluated
                      << " correct, " << report.errors << " errors, " << text::format_fixed(report.wall_seconds, 2)
                      << " s\n";
            if (!cfg.output.empty()) {
                out_dir = cfg.output;
                text::write_text(cfg.output / (m.name + "." + std::string(to_string(s)) + ".verdicts.tsv"),
                                 report.verdict_log());
            }
            reports.push_back(std::move(report));
        }
        rows.push_back(summarize(m.name, reports));
    }
    const auto table = emit_results_table(rows);
    if (out_dir) {
        text::write_text(*out_dir / "results.txt", table);
    }
    std::cout << table;
    return exit_ok;
}

// --- svm -------------------------------------------------------------------

fs::path require_model_path(const AppConfig &cfg) {
    if (cfg.svm_model.empty()) {
        throw ConfigError("field 'svm.model' is required (config key or --model-file)");
    }
    return cfg.svm_model;
}

std::string percent(std::size_t k, std::size_t n) {
    return text::format_fixed(n == 0 ? 0.0 : 100.0 * static_cast<double>(k) / static_cast<double>(n), 2) + "% (" +
           std::to_string(k) + "/" + std::to_string(n) + ")";
}

int cmd_svm_train(const Common &common, const std::string &features) {
    const auto cfg = common.load();
    const auto registry = load_registry(cfg);
    const auto model_path = require_model_path(cfg);
    const auto data = svm::load_features(features, registry);
    const auto t0 = std::chrono::steady_clock::now();
    const auto model = svm::ovr_train(data, registry.size(), cfg.svm);
    const double secs = seconds_since(t0);
    svm::save_model(model_path, model);

    std::size_t correct = 0;
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        correct += svm::ovr_predict(model, Eigen::VectorXd(data.values.row(r).transpose())) ==
                   data.labels[static_cast<std::size_t>(r)];
    }
    for (std::size_t k = 0; k < model.models.size(); ++k) {
        std::cout << "class " << registry.name(k) << ": " << model.models[k].support_vectors.rows()
                  << " support vectors\n";
    }
    std::cout << "trained " << model.models.size() << " classifiers on " << data.rows() << " samples x "
              << data.cols() << " features";
    if (model.pca) {
        std::cout << " (pca " << model.pca->axes.cols() << " components)";
    }
    std::cout << " in " << text::format_fixed(secs, 3) << " s\n";
    std::cout << "train accuracy: " << percent(correct, static_cast<std::size_t>(data.rows())) << "\n";
    std::cout << "model written to " << model_path.string() << "\n";
    return exit_ok;
}

int cmd_svm_predict(const Common &common, const std::string &features) {
    const auto cfg = common.load();
    const auto registry = load_registry(cfg);
    const auto model = in_context("svm.model", [&] { return svm::load_model(require_model_path(cfg)); });
    const auto data = svm::load_features(features, registry);
    if (data.cols() != model.input_dimension) {
        throw DimensionMismatchError(static_cast<std::size_t>(model.input_dimension),
                                     static_cast<std::size_t>(data.cols()), "feature file vs svm model");
    }
    if (model.class_count() != registry.size()) {
        throw ConfigError("svm model has " + std::to_string(model.class_count()) + " classes, registry has " +
                          std::to_string(registry.size()));
    }
    std::string out;
    std::size_t correct = 0;
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        const auto truth = data.labels[static_cast<std::size_t>(r)];
        const auto pred = svm::ovr_predict(model, Eigen::VectorXd(data.values.row(r).transpose()));
        correct += pred == truth;
        out += registry.name(truth) + "\t" + registry.name(pred) + "\n";
    }
    if (!cfg.output.empty()) {
        text::write_text(cfg.output, out);
    } else {
        std::cout << out;
    }
    std::cout << "accuracy: " << percent(correct, static_cast<std::size_t>(data.rows())) << "\n";
    return exit_ok;
}

int cmd_svm_extract(const Common &common) {
    const auto cfg = common.load();
    auto registry = std::make_shared<const ClassRegistry>(load_registry(cfg));
    const auto manifest = load_dataset(cfg, *registry);
    const auto out = require_output(cfg);
    BackendFactory factory(registry);
    const auto extractor = in_context("feature_extractor", [&] { return factory.feature_extractor(cfg.feature_extractor); });
    auto splits = cfg.eval_splits;
    if (splits.empty()) {
        splits.assign(all_splits.begin(), all_splits.end());
    }
    std::vector<ManifestRecord> records;
    for (const auto &r : manifest.records) {
        if (std::find(splits.begin(), splits.end(), r.split) != splits.end()) {
            records.push_back(r);
        }
    }
    std::vector<std::string> rows(records.size());
    std::vector<std::string> errors(records.size());
    parallel_for(records.size(), cfg.jobs, [&](std::size_t i) {
        try {
            const auto image = io::read_image(manifest.resolve(records[i]));
            rows[i] = svm::format_feature_row(records[i].label.class_name, extractor->extract(image));
        } catch (const Error &e) {
            if (cfg.strict) {
                throw;
            }
            errors[i] = records[i].image_path + ": " + e.what();
        }
    });
    std::string text_out;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        text_out += rows[i];
        if (!errors[i].empty()) {
            std::cerr << "  " << errors[i] << "\n";
            ++failed;
        }
    }
    text::write_text(out, text_out);
    std::cout << records.size() << " images, " << records.size() - failed << " feature rows of dimension "
              << extractor->dimension() << ", " << failed << " errors\n";
    return exit_ok;
}

// --- backends check --------------------------------------------------------

std::string describe(const BackendDescriptor &d) {
    switch (d.kind) {
    case BackendDescriptor::Kind::synthetic:
        return "synthetic";
    case BackendDescriptor::Kind::fixture:
        return "fixture:" + d.path.string();
    case BackendDescriptor::Kind::external:
        return "external:" + d.path.string();
    }
    return "?";
}

int exit_code_of(const std::exception_ptr &e);

int cmd_backends_check(const Common &common) {
    const auto cfg = common.load();
    auto registry = std::make_shared<const ClassRegistry>(load_registry(cfg));
    BackendFactory factory(registry);
    int code = exit_ok;
    auto check = [&](const std::string &role, const BackendDescriptor &d, auto &&build) {
        try {
            const std::string detail = build();
            std::cout << role << ": " << describe(d) << " ok (" << detail << ")\n";
        } catch (const Error &e) {
            std::cout << role << ": " << describe(d) << " FAILED: " << e.what() << "\n";
            if (code == exit_ok) {
                code = exit_code_of(std::current_exception());
            }
        }
    };
    const bool uses_detector = !cfg.is_svm() && cfg.pipeline_strategy() != Strategy::whole_image;
    if (uses_detector) {
        check("detector", cfg.detector, [&] {
            const auto det = factory.detector(cfg);
            return "vocabulary " + text::join(det->vocabulary(), ",");
        });
        check("crop_classifier", cfg.crop_classifier,
              [&] { return std::to_string(factory.classifier(cfg.crop_classifier)->class_count()) + " classes"; });
    }
    if (cfg.is_svm()) {
        check("feature_extractor", cfg.feature_extractor, [&] {
            return "dimension " + std::to_string(factory.feature_extractor(cfg.feature_extractor)->dimension());
        });
    } else {
        check("fallback_classifier", cfg.fallback_classifier,
              [&] { return std::to_string(factory.classifier(cfg.fallback_classifier)->class_count()) + " classes"; });
    }
    return code;
}

// --- errors ----------------------------------------------------------------

int exit_code_of(const std::exception_ptr &e) {
    try {
        std::rethrow_exception(e);
    } catch (const ConfigError &) {
        return exit_config;
    } catch (const InvalidInputError &) {
        return exit_config;
    } catch (const NonConvergenceError &) {
        return exit_config;
    } catch (const IoError &) {
        return exit_io;
    } catch (const ParseError &) {
        return exit_io;
    } catch (const BackendError &) {
        return exit_backend;
    } catch (...) {
        return exit_config;
    }
}

std::string category_of(const std::exception_ptr &e) {
    try {
        std::rethrow_exception(e);
    } catch (const ShapeMismatchError &) {
        return "shape mismatch";
    } catch (const ConfigError &) {
        return "config error";
    } catch (const InvalidLabelsError &) {
        return "invalid labels";
    } catch (const DimensionMismatchError &) {
        return "dimension mismatch";
    } catch (const InvalidInputError &) {
        return "invalid input";
    } catch (const NonConvergenceError &) {
        return "training did not converge";
    } catch (const IoError &) {
        return "io error";
    } catch (const ParseError &) {
        return "parse error";
    } catch (const BackendError &) {
        return "backend error";
    } catch (...) {
        return "error";
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Two-stage detect-then-classify toolkit"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every subcommand");

    Common common;
    std::function<int()> run;

    SynthArgs synth;
    auto *c_synth = app.add_subcommand("synth", "write a seeded synthetic corpus (images, manifest, classes, boxes)");
    c_synth->add_option("--out", synth.out, "output directory")->required();
    c_synth->add_option("--classes", synth.classes, "number of classes")->check(CLI::Range(2, 360));
    c_synth->add_option("--train", synth.counts.train, "training images per class");
    c_synth->add_option("--val", synth.counts.val, "validation images per class");
    c_synth->add_option("--test", synth.counts.test, "test images per class");
    c_synth->add_option("--final-test", synth.counts.final_test, "final test images per class");
    c_synth->add_option("--size", synth.size, "image side length")->check(CLI::Range(16, 4096));
    c_synth->add_option("--seed", synth.seed, "generator seed");
    c_synth->add_option("--noise", synth.noise, "background noise level")->check(CLI::IsMember({"easy", "hard"}));
    c_synth->add_option("--jobs", synth.jobs, "worker threads")->check(CLI::Range(1, 1024));
    c_synth->callback([&] { run = [&] { return cmd_synth(synth); }; });

    std::vector<std::string> images;
    auto *c_classify = app.add_subcommand("classify", "print one verdict line per image");
    common.attach(*c_classify);
    c_classify->add_option("images", images, "PPM images")->required();
    c_classify->callback([&] { run = [&] { return cmd_classify(common, images); }; });

    auto *c_datagen = app.add_subcommand("datagen", "crop detector boxes from a manifest into a reviewable dataset");
    common.attach(*c_datagen);
    c_datagen->callback([&] { run = [&] { return cmd_datagen(common); }; });

    std::string review;
    auto *c_review = app.add_subcommand("review-apply", "apply accept/reject decisions to a datagen output");
    common.attach(*c_review);
    c_review->add_option("--review", review, "review file: <crop path>\\t<accept|reject> per line")
        ->required()
        ->check(CLI::ExistingFile);
    c_review->callback([&] { run = [&] { return cmd_review_apply(common, review); }; });

    std::vector<std::string> model_args;
    auto *c_eval = app.add_subcommand("evaluate", "accuracy table per model and split");
    common.attach(*c_eval);
    c_eval->add_option("--model", model_args, "preset name, or name=<config file>; repeatable")->required();
    c_eval->callback([&] { run = [&] { return cmd_evaluate(common, model_args); }; });

    std::string features;
    std::string model_file;
    auto model_override = [&] {
        if (!model_file.empty()) {
            common.sets.insert(common.sets.begin(), "svm.model=" + model_file);
        }
    };
    auto *c_svm = app.add_subcommand("svm", "one-vs-rest RBF SVM on feature files");
    c_svm->require_subcommand(1);
    auto *c_train = c_svm->add_subcommand("train", "train and save a model; prints support vectors per class");
    common.attach(*c_train);
    c_train->add_option("features", features, "feature file: <class>\\t<comma-separated values> per line")
        ->required()
        ->check(CLI::ExistingFile);
    c_train->add_option("--model-file", model_file, "where to write the model (config key svm.model)");
    c_train->callback([&] {
        model_override();
        run = [&] { return cmd_svm_train(common, features); };
    });
    auto *c_predict = c_svm->add_subcommand("predict", "predict a feature file; prints truth and prediction");
    common.attach(*c_predict);
    c_predict->add_option("features", features, "feature file")->required()->check(CLI::ExistingFile);
    c_predict->add_option("--model-file", model_file, "model to load (config key svm.model)");
    c_predict->callback([&] {
        model_override();
        run = [&] { return cmd_svm_predict(common, features); };
    });
    auto *c_extract = c_svm->add_subcommand("extract", "write a feature file for manifest images");
    common.attach(*c_extract);
    c_extract->callback([&] { run = [&] { return cmd_svm_extract(common); }; });

    auto *c_backends = app.add_subcommand("backends", "backend diagnostics");
    c_backends->require_subcommand(1);
    auto *c_check = c_backends->add_subcommand("check", "build every configured backend and report its shape");
    common.attach(*c_check);
    c_check->callback([&] { run = [&] { return cmd_backends_check(common); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        return run();
    } catch (const std::exception &e) {
        const auto ptr = std::current_exception();
        std::cerr << "twostage: " << category_of(ptr) << ": " << e.what() << "\n";
        return exit_code_of(ptr);
    }
}
