// Copyright 2026 The xfer Authors
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

// Independent reference implementations used by the test suites. These are
// deliberately naive and share no code with the library beyond the data types.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "xfer/types.hpp"

namespace oracle {

inline constexpr std::uint32_t kNone = 0xFFFFFFFFu;

// Unit vector with the norm taken in double and each component rounded once.
inline std::vector<float> unit(std::span<const float> x, double eps) {
    double sq = 0.0;
    for (float v : x) sq += double(v) * double(v);
    const double n = std::max(std::sqrt(sq), eps);
    std::vector<float> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = float(double(x[i]) / n);
    return out;
}

// Float dot product accumulated left to right, then clamped.
inline float cosine(const std::vector<float>& a, const std::vector<float>& b) {
    float s = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const float prod = a[i] * b[i];
        s = s + prod;
    }
    return std::clamp(s, -1.0f, 1.0f);
}

// Exhaustive argmax; the first (lowest index) maximum wins.
inline std::vector<std::uint32_t> match(const xfer::FeatureMap& t, const xfer::FeatureMap& r,
                                        const xfer::ObjectMask& mt, const xfer::ObjectMask& mr,
                                        double eps) {
    std::vector<std::vector<float>> ref_units(r.pixel_count());
    for (std::size_t p = 0; p < r.pixel_count(); ++p) {
        if (mr.test(p)) ref_units[p] = unit(r.pixel(p), eps);
    }
    std::vector<std::uint32_t> out(t.pixel_count(), kNone);
    for (std::size_t q = 0; q < t.pixel_count(); ++q) {
        if (!mt.test(q)) continue;
        const auto u = unit(t.pixel(q), eps);
        bool have = false;
        float best = 0.0f;
        for (std::size_t p = 0; p < r.pixel_count(); ++p) {
            if (!mr.test(p)) continue;
            const float s = cosine(u, ref_units[p]);
            if (!have || s > best) {
                have = true;
                best = s;
                out[q] = static_cast<std::uint32_t>(p);
            }
        }
    }
    return out;
}

// Per-pixel indexed copy; unmatched pixels are zero.
inline std::vector<float> gather(const xfer::FeatureMap& ref,
                                 const std::vector<std::uint32_t>& entries) {
    const std::size_t c = ref.channels();
    std::vector<float> out(entries.size() * c, 0.0f);
    for (std::size_t q = 0; q < entries.size(); ++q) {
        if (entries[q] == kNone) continue;
        for (std::size_t k = 0; k < c; ++k) out[q * c + k] = ref.pixel(entries[q])[k];
    }
    return out;
}

// Where mask is set take src, else keep dst.
inline void splice(std::vector<float>& dst, const std::vector<float>& src,
                   const xfer::ObjectMask& mask, std::size_t c) {
    for (std::size_t q = 0; q < mask.pixel_count(); ++q) {
        if (!mask.test(q)) continue;
        for (std::size_t k = 0; k < c; ++k) dst[q * c + k] = src[q * c + k];
    }
}

struct Stats {
    double mean = 0;
    double stddev = 0;
};

inline Stats masked_stats(const xfer::FeatureMap& f, const xfer::ObjectMask& m, std::size_t k) {
    std::vector<double> v;
    for (std::size_t q = 0; q < f.pixel_count(); ++q) {
        if (m.test(q)) v.push_back(f.pixel(q)[k]);
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    double sq = 0;
    for (double x : v) sq += (x - mean) * (x - mean);
    return {mean, std::sqrt(sq / double(v.size()))};
}

inline std::vector<double> histogram(const xfer::RgbImage& img, const xfer::ObjectMask& m,
                                     std::uint32_t bins) {
    std::vector<double> h(std::size_t{bins} * bins * bins, 0.0);
    double n = 0;
    for (std::size_t q = 0; q < img.pixel_count(); ++q) {
        if (!m.test(q)) continue;
        std::size_t idx[3];
        for (int ch = 0; ch < 3; ++ch) {
            const unsigned v = img.pixels[3 * q + ch];
            idx[ch] = std::min<std::size_t>(bins - 1, std::size_t(double(v) / 256.0 * bins));
        }
        h[(idx[0] * bins + idx[1]) * bins + idx[2]] += 1;
        n += 1;
    }
    for (double& x : h) x /= n;
    return h;
}

inline double flow_l1(const xfer::FlowMap& pred, const xfer::FlowMap& gt) {
    double sum = 0;
    double n = 0;
    for (std::size_t q = 0; q < gt.pixel_count(); ++q) {
        if (!gt.valid(q)) continue;
        sum += std::fabs(double(pred.dx(q)) - gt.dx(q)) + std::fabs(double(pred.dy(q)) - gt.dy(q));
        n += 1;
    }
    return sum / n;
}

inline bool same_bits(std::span<const float> a, std::span<const float> b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

// Uniform random map; for c >= 2 its pixels point in distinct directions.
inline xfer::FeatureMap distinct_map(std::mt19937_64& rng, std::uint32_t h, std::uint32_t w,
                                     std::uint32_t c) {
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    std::vector<float> data(std::size_t{h} * w * c);
    for (auto& v : data) v = dist(rng);
    return xfer::FeatureMap(h, w, c, std::move(data));
}

// Best and runner-up similarity for a query against masked references.
// Instances whose gap is below margin are rejected by the invariance tests so
// that a rescale cannot flip the winner through rounding alone.
inline bool unique_maxima(const xfer::FeatureMap& t, const xfer::FeatureMap& r,
                          const xfer::ObjectMask& mt, const xfer::ObjectMask& mr, double eps,
                          float margin) {
    for (std::size_t q = 0; q < t.pixel_count(); ++q) {
        if (!mt.test(q)) continue;
        const auto u = unit(t.pixel(q), eps);
        float best = -2, second = -2;
        for (std::size_t p = 0; p < r.pixel_count(); ++p) {
            if (!mr.test(p)) continue;
            const float s = cosine(u, unit(r.pixel(p), eps));
            if (s > best) {
                second = best;
                best = s;
            } else if (s > second) {
                second = s;
            }
        }
        if (second > -2 && best - second < margin) return false;
    }
    return true;
}

}  // namespace oracle
