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

// One-vs-rest multi-class SVM with an optional PCA stage in front.

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "twostage/core/error.hpp"
#include "twostage/core/parallel.hpp"
#include "twostage/core/types.hpp"
#include "twostage/svm/features.hpp"
#include "twostage/svm/pca.hpp"
#include "twostage/svm/smo.hpp"

namespace twostage::svm {

struct OvrParams {
    double c = 50.0;
    /// nullopt: 1 / (feature dimension * variance of all feature entries), on the (projected) training data.
    std::optional<double> gamma;
    double tol = 1e-3;
    std::size_t max_iterations = 1'000'000;
    /// nullopt disables PCA.
    std::optional<double> pca_variance_fraction;
    unsigned jobs = 1;
};

struct OneVsRestModel {
    std::optional<PcaModel> pca;
    /// One binary model per class, index == class id.
    std::vector<BinarySvmModel> models;
    Eigen::Index input_dimension = 0;

    [[nodiscard]] std::size_t class_count() const noexcept { return models.size(); }
};

inline double default_gamma(const Eigen::MatrixXd &x) {
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    if (!(var > 0.0)) {
        throw DegenerateDataError("cannot derive a default gamma from zero-variance features");
    }
    return 1.0 / (static_cast<double>(x.cols()) * var);
}

inline OneVsRestModel ovr_train(const FeatureMatrix &data, std::size_t class_count, const OvrParams &params) {
    data.validate();
    if (class_count < 2) {
        throw InvalidLabelsError("one-vs-rest needs at least 2 classes");
    }
    std::vector<std::size_t> per_class(class_count);
    for (auto l : data.labels) {
        if (l >= class_count) {
            throw InvalidLabelsError("label " + std::to_string(l) + " outside " + std::to_string(class_count) +
                                     " classes");
        }
        ++per_class[l];
    }
    for (std::size_t k = 0; k < class_count; ++k) {
        if (per_class[k] == 0) {
            throw InvalidLabelsError("class " + std::to_string(k) + " has no training samples");
        }
    }

    OneVsRestModel model;
    model.input_dimension = data.cols();
    Eigen::MatrixXd x = data.values;
    if (params.pca_variance_fraction) {
        model.pca = pca_fit(x, *params.pca_variance_fraction);
        x = pca_transform(*model.pca, x);
    }
    SvmParams sp{params.c, params.gamma.value_or(0.0), params.tol, params.max_iterations};
    if (!params.gamma) {
        sp.gamma = default_gamma(x);
    }
    const Eigen::MatrixXd gram = rbf_gram(x, sp.gamma);

    model.models.resize(class_count);
    parallel_for(class_count, params.jobs, [&](std::size_t k) {
        std::vector<int> y(data.labels.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] = data.labels[i] == k ? 1 : -1;
        }
        model.models[k] = svm_train_binary_with_gram(x, y, gram, sp);
    });
    return model;
}

inline std::vector<double> ovr_decision_values(const OneVsRestModel &model, const Eigen::VectorXd &x) {
    if (x.size() != model.input_dimension) {
        throw DimensionMismatchError(static_cast<std::size_t>(model.input_dimension),
                                     static_cast<std::size_t>(x.size()), "one-vs-rest predict");
    }
    const Eigen::VectorXd z = model.pca ? pca_transform(*model.pca, x) : x;
    std::vector<double> out(model.models.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = svm_decision(model.models[k], z);
    }
    return out;
}

/// Class with the largest decision value; ties go to the lowest class id.
inline std::size_t ovr_predict(const OneVsRestModel &model, const Eigen::VectorXd &x) {
    return argmax(ovr_decision_values(model, x));
}

inline Label ovr_predict(const OneVsRestModel &model, const Eigen::VectorXd &x, const ClassRegistry &registry) {
    return registry.label(ovr_predict(model, x));
}

} // namespace twostage::svm
