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

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

#include "twostage/core/error.hpp"

namespace twostage::svm {

/// Principal axes of a training set, truncated to a variance fraction.
struct PcaModel {
    Eigen::VectorXd mean;
    /// Retained axes as rows (k x d), orthonormal, by decreasing variance.
    Eigen::MatrixXd axes;
    /// Variance along each retained axis, non-increasing.
    Eigen::VectorXd explained_variance;
    /// Full eigenvalue spectrum of the covariance (descending), including dropped components.
    Eigen::VectorXd spectrum;
    double total_variance = 0.0;

    [[nodiscard]] Eigen::Index components() const noexcept { return axes.rows(); }
    [[nodiscard]] Eigen::Index input_dimension() const noexcept { return mean.size(); }
};

namespace detail {

// Flip each column so its largest-magnitude entry is positive; makes axes reproducible.
inline void canonical_signs(Eigen::MatrixXd &columns) {
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
        Eigen::Index at = 0;
        columns.col(c).cwiseAbs().maxCoeff(&at);
        if (columns(at, c) < 0.0) {
            columns.col(c) *= -1.0;
        }
    }
}

} // namespace detail

/// Keeps the smallest k whose cumulative variance reaches `variance_fraction` of the total.
/// Uses the d x d covariance when d <= n, otherwise the n x n Gram matrix of the centered rows.
inline PcaModel pca_fit(const Eigen::MatrixXd &x, double variance_fraction) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    if (n < 2) {
        throw InsufficientDataError("PCA needs at least 2 samples, got " + std::to_string(n));
    }
    if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) {
        throw InvalidInputError("variance fraction must be in (0, 1]");
    }
    if (!x.allFinite()) {
        throw InvalidInputError("PCA input contains non-finite values");
    }

    PcaModel model;
    model.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
    const double denom = static_cast<double>(n - 1);

    Eigen::VectorXd values;
    Eigen::MatrixXd vectors; // columns, d-dimensional
    if (d <= n) {
        const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        values = solver.eigenvalues().reverse();
        vectors = solver.eigenvectors().rowwise().reverse();
    } else {
        const Eigen::MatrixXd gram = (centered * centered.transpose()) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
        values = solver.eigenvalues().reverse();
        const Eigen::MatrixXd u = solver.eigenvectors().rowwise().reverse();
        vectors = Eigen::MatrixXd::Zero(d, n);
        for (Eigen::Index c = 0; c < n; ++c) {
            if (values(c) > 0.0) {
                vectors.col(c) = centered.transpose() * u.col(c);
                vectors.col(c).normalize();
            }
        }
    }
    values = values.cwiseMax(0.0);
    model.spectrum = values;
    model.total_variance = values.sum();
    if (!(model.total_variance > 0.0)) {
        throw DegenerateDataError("PCA input has zero total variance");
    }

    // Relative slack so fraction 1.0 stops at the numerical rank instead of chasing rounding noise.
    const double target = variance_fraction * model.total_variance * (1.0 - 1e-12);
    Eigen::Index k = 0;
    double cumulative = 0.0;
    while (k < values.size() && cumulative < target) {
        cumulative += values(k);
        ++k;
    }
    detail::canonical_signs(vectors);
    model.axes = vectors.leftCols(k).transpose();
    model.explained_variance = values.head(k);
    return model;
}

inline Eigen::MatrixXd pca_transform(const PcaModel &model, const Eigen::MatrixXd &x) {
    if (x.cols() != model.input_dimension()) {
        throw DimensionMismatchError(static_cast<std::size_t>(model.input_dimension()),
                                     static_cast<std::size_t>(x.cols()), "PCA transform");
    }
    return (x.rowwise() - model.mean.transpose()) * model.axes.transpose();
}

inline Eigen::VectorXd pca_transform(const PcaModel &model, const Eigen::VectorXd &x) {
    if (x.size() != model.input_dimension()) {
        throw DimensionMismatchError(static_cast<std::size_t>(model.input_dimension()),
                                     static_cast<std::size_t>(x.size()), "PCA transform");
    }
    return model.axes * (x - model.mean);
}

inline Eigen::MatrixXd pca_reconstruct(const PcaModel &model, const Eigen::MatrixXd &projected) {
    if (projected.cols() != model.components()) {
        throw DimensionMismatchError(static_cast<std::size_t>(model.components()),
                                     static_cast<std::size_t>(projected.cols()), "PCA reconstruct");
    }
    return (projected * model.axes).rowwise() + model.mean.transpose();
}

} // namespace twostage::svm
