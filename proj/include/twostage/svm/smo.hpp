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

// Soft-margin RBF SVM trained by sequential minimal optimization.
//
// Dual, written as a minimization:
//     min_a  f(a) = 1/2 a'Qa - e'a,   Q_ij = y_i y_j K(x_i, x_j)
//     s.t.   0 <= a_i <= C,  y'a = 0
// Each step picks the maximal-violating index i and, among the indices that
// can move against it, the j with the largest second-order decrease of f,
// then solves the two-variable subproblem in closed form. Training stops when
// the KKT gap  max_{I_up} -y G  -  min_{I_low} -y G  drops to `tol`.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "twostage/core/error.hpp"

namespace twostage::svm {

inline double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd> &a, const Eigen::Ref<const Eigen::VectorXd> &b,
                         double gamma) {
    return std::exp(-gamma * (a - b).squaredNorm());
}

/// Dense kernel matrix of the rows of x.
inline Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd &x, double gamma) {
    const Eigen::Index n = x.rows();
    const Eigen::VectorXd sq = x.rowwise().squaredNorm();
    Eigen::MatrixXd k = x * x.transpose();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            k(i, j) = i == j ? 1.0 : std::exp(-gamma * std::max(0.0, sq(i) + sq(j) - 2.0 * k(i, j)));
        }
    }
    return k;
}

struct SvmParams {
    double c = 50.0;
    double gamma = 1.0;
    /// Stop when the maximal KKT violation is at most this.
    double tol = 1e-3;
    std::size_t max_iterations = 1'000'000;
};

struct TrainingReport {
    /// Multipliers for every training sample, in input order.
    Eigen::VectorXd alpha;
    /// Dual objective sum(a) - 1/2 a'Qa (maximization form).
    double dual_objective = 0.0;
    double max_violation = 0.0;
    std::size_t iterations = 0;
};

struct BinarySvmModel {
    Eigen::MatrixXd support_vectors; // rows
    /// alpha_i * y_i per support vector.
    Eigen::VectorXd coefficients;
    double bias = 0.0;
    double gamma = 1.0;
    double c = 1.0;
    TrainingReport training;

    [[nodiscard]] Eigen::Index dimension() const noexcept { return support_vectors.cols(); }
};

inline double svm_decision(const BinarySvmModel &model, const Eigen::Ref<const Eigen::VectorXd> &x) {
    if (x.size() != model.dimension()) {
        throw DimensionMismatchError(static_cast<std::size_t>(model.dimension()), static_cast<std::size_t>(x.size()),
                                     "SVM decision");
    }
    double sum = model.bias;
    for (Eigen::Index i = 0; i < model.support_vectors.rows(); ++i) {
        sum += model.coefficients(i) * rbf_kernel(model.support_vectors.row(i).transpose(), x, model.gamma);
    }
    return sum;
}

namespace detail {

inline void check_binary_inputs(const Eigen::MatrixXd &x, const std::vector<int> &y, const SvmParams &p) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) {
        throw InvalidInputError("SVM training: " + std::to_string(x.rows()) + " rows but " +
                                std::to_string(y.size()) + " labels");
    }
    bool pos = false;
    bool neg = false;
    for (int v : y) {
        if (v == 1) {
            pos = true;
        } else if (v == -1) {
            neg = true;
        } else {
            throw InvalidLabelsError("binary SVM labels must be +1 or -1");
        }
    }
    if (!pos || !neg) {
        throw InvalidLabelsError("binary SVM training needs both classes present");
    }
    if (!(p.c > 0.0) || !(p.gamma > 0.0) || !(p.tol > 0.0)) {
        throw InvalidInputError("SVM C, gamma and tol must all be > 0");
    }
    if (!x.allFinite()) {
        throw InvalidInputError("SVM training data contains non-finite values");
    }
}

} // namespace detail

/// Trains on a precomputed kernel matrix `k` (n x n, rows of x).
inline BinarySvmModel svm_train_binary_with_gram(const Eigen::MatrixXd &x, const std::vector<int> &y,
                                                 const Eigen::MatrixXd &k, const SvmParams &p) {
    detail::check_binary_inputs(x, y, p);
    const Eigen::Index n = x.rows();
    constexpr double tau = 1e-12;
    const double c = p.c;

    Eigen::VectorXd yd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        yd(i) = y[static_cast<std::size_t>(i)];
    }
    auto q = [&](Eigen::Index i, Eigen::Index j) { return yd(i) * yd(j) * k(i, j); };

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
    auto in_up = [&](Eigen::Index t) { return (yd(t) > 0 && alpha(t) < c) || (yd(t) < 0 && alpha(t) > 0); };
    auto in_low = [&](Eigen::Index t) { return (yd(t) > 0 && alpha(t) > 0) || (yd(t) < 0 && alpha(t) < c); };

    std::size_t iter = 0;
    double gap = 0.0;
    while (true) {
        double gmax = -std::numeric_limits<double>::infinity();
        Eigen::Index i = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (in_up(t) && (i < 0 || -yd(t) * grad(t) > gmax)) {
                gmax = -yd(t) * grad(t);
                i = t;
            }
        }
        double gmin = std::numeric_limits<double>::infinity();
        Eigen::Index j = -1;
        double best_decrease = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            if (!in_low(t)) {
                continue;
            }
            const double v = -yd(t) * grad(t);
            gmin = std::min(gmin, v);
            if (i >= 0 && v < gmax) {
                const double b = gmax - v;
                double a = k(i, i) + k(t, t) - 2.0 * k(i, t);
                if (a <= 0.0) {
                    a = tau;
                }
                const double decrease = -(b * b) / a;
                if (decrease < best_decrease) {
                    best_decrease = decrease;
                    j = t;
                }
            }
        }
        gap = gmax - gmin;
        if (i < 0 || j < 0 || gap <= p.tol) {
            break;
        }
        if (iter >= p.max_iterations) {
            throw NonConvergenceError(iter, gap);
        }
        ++iter;

        const double old_ai = alpha(i);
        const double old_aj = alpha(j);
        if (yd(i) != yd(j)) {
            double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if (quad <= 0.0) {
                quad = tau;
            }
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0.0) {
                if (alpha(j) < 0.0) {
                    alpha(j) = 0.0;
                    alpha(i) = diff;
                }
            } else if (alpha(i) < 0.0) {
                alpha(i) = 0.0;
                alpha(j) = -diff;
            }
            if (diff > 0.0) {
                if (alpha(i) > c) {
                    alpha(i) = c;
                    alpha(j) = c - diff;
                }
            } else if (alpha(j) > c) {
                alpha(j) = c;
                alpha(i) = c + diff;
            }
        } else {
            double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if (quad <= 0.0) {
                quad = tau;
            }
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > c) {
                if (alpha(i) > c) {
                    alpha(i) = c;
                    alpha(j) = sum - c;
                }
            } else if (alpha(j) < 0.0) {
                alpha(j) = 0.0;
                alpha(i) = sum;
            }
            if (sum > c) {
                if (alpha(j) > c) {
                    alpha(j) = c;
                    alpha(i) = sum - c;
                }
            } else if (alpha(i) < 0.0) {
                alpha(i) = 0.0;
                alpha(j) = sum;
            }
        }
        const double dai = alpha(i) - old_ai;
        const double daj = alpha(j) - old_aj;
        for (Eigen::Index t = 0; t < n; ++t) {
            grad(t) += q(t, i) * dai + q(t, j) * daj;
        }
    }

    // rho: average of y G over free multipliers, else midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yg = yd(t) * grad(t);
        if (alpha(t) >= c) {
            if (yd(t) < 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else if (alpha(t) <= 0.0) {
            if (yd(t) > 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else {
            free_sum += yg;
            ++free_count;
        }
    }
    const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (ub + lb) / 2.0;

    BinarySvmModel model;
    model.gamma = p.gamma;
    model.c = c;
    model.bias = -rho;
    std::vector<Eigen::Index> sv;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (alpha(t) > 0.0) {
            sv.push_back(t);
        }
    }
    model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
    model.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
        model.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(sv[s]);
        model.coefficients(static_cast<Eigen::Index>(s)) = alpha(sv[s]) * yd(sv[s]);
    }
    // f(a) = 1/2 a'(G + e) - e'a, since G = Qa - e.
    const double f = 0.5 * alpha.dot(grad + Eigen::VectorXd::Ones(n)) - alpha.sum();
    model.training = {alpha, -f, gap, iter};
    return model;
}

inline BinarySvmModel svm_train_binary(const Eigen::MatrixXd &x, const std::vector<int> &y, const SvmParams &p) {
    detail::check_binary_inputs(x, y, p);
    return svm_train_binary_with_gram(x, y, rbf_gram(x, p.gamma), p);
}

} // namespace twostage::svm
