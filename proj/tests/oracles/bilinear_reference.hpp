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

// Per-pixel bilinear sample with half-pixel centres, evaluated straight from
// the formula in exact rational arithmetic, for one output pixel and channel:
//   s = (i + 1/2) * src / dst - 1/2, clamped to [0, src - 1]
//   v = (1 - f) * p[floor(s)] + f * p[min(floor(s) + 1, src - 1)],  f = s - floor(s)
// applied along x and y; result is floor(v + 1/2).

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

__extension__ typedef __int128 i128;

struct Fraction {
    i128 num = 0;
    i128 den = 1;

    static Fraction make(i128 n, i128 d) {
        if (d < 0) {
            n = -n;
            d = -d;
        }
        const auto g = gcd(n < 0 ? -n : n, d);
        return {n / g, d / g};
    }
    static i128 gcd(i128 a, i128 b) {
        while (b != 0) {
            const auto t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }
    friend Fraction operator+(Fraction a, Fraction b) { return make(a.num * b.den + b.num * a.den, a.den * b.den); }
    friend Fraction operator-(Fraction a, Fraction b) { return make(a.num * b.den - b.num * a.den, a.den * b.den); }
    friend Fraction operator*(Fraction a, Fraction b) { return make(a.num * b.num, a.den * b.den); }
    friend bool operator<(Fraction a, Fraction b) { return a.num * b.den < b.num * a.den; }
    [[nodiscard]] i128 floor() const {
        const auto q = num / den;
        return (num % den != 0 && num < 0) ? q - 1 : q;
    }
};

inline Fraction frac(long long n, long long d = 1) { return Fraction::make(n, d); }

inline Fraction source_coord(int i, int src, int dst) {
    Fraction s = (frac(i) + frac(1, 2)) * frac(src, dst) - frac(1, 2);
    if (s < frac(0)) {
        s = frac(0);
    }
    if (frac(src - 1) < s) {
        s = frac(src - 1);
    }
    return s;
}

/// `plane` is one channel, row-major src_w x src_h.
inline std::uint8_t bilinear_pixel(const std::vector<double> &plane, int src_w, int src_h, int dst_w, int dst_h,
                                   int x, int y) {
    const Fraction sx = source_coord(x, src_w, dst_w);
    const Fraction sy = source_coord(y, src_h, dst_h);
    const int x0 = static_cast<int>(sx.floor());
    const int y0 = static_cast<int>(sy.floor());
    const int x1 = std::min(x0 + 1, src_w - 1);
    const int y1 = std::min(y0 + 1, src_h - 1);
    const Fraction fx = sx - frac(x0);
    const Fraction fy = sy - frac(y0);
    auto p = [&](int xx, int yy) { return frac(static_cast<long long>(plane[static_cast<std::size_t>(yy) * src_w + xx])); };
    const Fraction one = frac(1);
    const Fraction top = (one - fx) * p(x0, y0) + fx * p(x1, y0);
    const Fraction bottom = (one - fx) * p(x0, y1) + fx * p(x1, y1);
    const Fraction v = (one - fy) * top + fy * bottom;
    return static_cast<std::uint8_t>(std::clamp<long long>(static_cast<long long>((v + frac(1, 2)).floor()), 0, 255));
}

} // namespace oracle
