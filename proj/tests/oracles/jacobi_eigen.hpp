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

// Cyclic Jacobi rotations for small symmetric matrices. Plain nested vectors,
// no linear-algebra library.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

struct EigenPairs {
    /// Descending.
    std::vector<double> values;
    /// vectors[k] is the unit eigenvector for values[k].
    std::vector<std::vector<double>> vectors;
};

inline EigenPairs jacobi_eigen(Matrix a, int max_sweeps = 100) {
    const std::size_t n = a.size();
    Matrix v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        v[i][i] = 1.0;
    }
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        double scale = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = 0; q < n; ++q) {
                (p == q ? scale : off) += a[p][q] * a[p][q];
            }
        }
        if (off <= 1e-30 * std::max(scale, 1e-300)) {
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) {
                    continue;
                }
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p];
                    const double vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a[i][i] > a[j][j]; });
    EigenPairs out;
    for (auto i : order) {
        out.values.push_back(a[i][i]);
        std::vector<double> col(n);
        for (std::size_t k = 0; k < n; ++k) {
            col[k] = v[k][i];
        }
        out.vectors.push_back(std::move(col));
    }
    return out;
}

/// Sample covariance (divide by n - 1) of row-major samples.
inline Matrix covariance(const std::vector<std::vector<double>> &rows) {
    const std::size_t n = rows.size();
    const std::size_t d = rows.front().size();
    std::vector<double> mean(d, 0.0);
    for (const auto &r : rows) {
        for (std::size_t j = 0; j < d; ++j) {
            mean[j] += r[j] / static_cast<double>(n);
        }
    }
    Matrix c(d, std::vector<double>(d, 0.0));
    for (const auto &r : rows) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]) / static_cast<double>(n - 1);
            }
        }
    }
    return c;
}

} // namespace oracle
