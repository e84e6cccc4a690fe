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

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "xfer/types.hpp"

namespace xfer {

// Seeded instance generators for the self-check battery, benchmarks and tests.

using Rng = std::mt19937_64;

inline FeatureMap random_feature_map(Rng& rng, std::uint32_t h, std::uint32_t w, std::uint32_t c,
                                     float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> data(std::size_t{h} * w * c);
    for (auto& v : data) v = dist(rng);
    return FeatureMap(h, w, c, std::move(data));
}

/// Each pixel set with probability `fill`; if `non_empty`, one random pixel
/// is forced on.
inline ObjectMask random_mask(Rng& rng, std::uint32_t h, std::uint32_t w, double fill,
                              bool non_empty = true) {
    std::bernoulli_distribution bit(fill);
    std::vector<std::uint8_t> bits(std::size_t{h} * w);
    for (auto& b : bits) b = bit(rng) ? 1 : 0;
    if (non_empty && !bits.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, bits.size() - 1);
        bits[pick(rng)] = 1;
    }
    return ObjectMask(h, w, std::move(bits));
}

inline std::uint32_t random_dim(Rng& rng, std::uint32_t max_dim) {
    return std::uniform_int_distribution<std::uint32_t>(1, max_dim)(rng);
}

}  // namespace xfer
