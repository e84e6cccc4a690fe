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

#include "xfer/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "xfer/error.hpp"
#include "xfer/parallel.hpp"

namespace xfer {

namespace {

constexpr std::size_t kQueryChunk = 64;
constexpr int kRows = 8;
// Reference panels visited per pass over a query chunk; sized so the group
// stays resident in L2 while the chunk's queries stream through it.
constexpr std::size_t kPanelGroupBytes = 256 * 1024;

inline float clamp_unit(float v) {
    return std::min(1.0f, std::max(-1.0f, v));
}

void check_mask_dims(const ObjectMask& mask, std::uint32_t h, std::uint32_t w, const char* what) {
    if (mask.height() != h || mask.width() != w) {
        fail(ErrorCode::DimensionMismatch,
             std::string(what) + " is " + std::to_string(mask.height()) + "x" +
                 std::to_string(mask.width()) + ", map is " + std::to_string(h) + "x" +
                 std::to_string(w));
    }
}

struct Best {
    float score = -std::numeric_limits<float>::infinity();
    std::uint32_t index = CorrespondenceMap::kUnmatched;
};

using Lanes = float __attribute__((vector_size(PreparedReference::kPanel * sizeof(float))));

// Scores Rows queries against one panel of kPanel references and folds the
// results into best[]. Accumulation runs over channels in ascending order,
// one separately rounded multiply and add per step, same as cosine_similarity.
template <int Rows>
void score_panel(const float* queries, std::size_t channels, const float* panel,
                 const std::uint32_t* ref_index, std::size_t lanes, Best* best) {
    constexpr std::size_t P = PreparedReference::kPanel;
    Lanes acc[Rows];
    for (int i = 0; i < Rows; ++i) acc[i] = Lanes{};
    for (std::size_t k = 0; k < channels; ++k) {
        Lanes r;
        __builtin_memcpy(&r, panel + k * P, sizeof(r));
#pragma GCC unroll 8
        for (int i = 0; i < Rows; ++i) {
            const Lanes prod = queries[i * channels + k] * r;
            acc[i] = acc[i] + prod;
        }
    }
    for (int i = 0; i < Rows; ++i) {
        for (std::size_t j = 0; j < lanes; ++j) {
            const float v = clamp_unit(acc[i][j]);
            if (v > best[i].score) {
                best[i].score = v;
                best[i].index = ref_index[j];
            }
        }
    }
}

}  // namespace

void normalize_vector(std::span<const float> x, double epsilon, std::span<float> out) {
    double sq = 0.0;
    for (float v : x) {
        sq += static_cast<double>(v) * static_cast<double>(v);
    }
    const double denom = std::max(std::sqrt(sq), epsilon);
    for (std::size_t k = 0; k < x.size(); ++k) {
        out[k] = static_cast<float>(static_cast<double>(x[k]) / denom);
    }
}

float cosine_similarity(std::span<const float> a, std::span<const float> b, double epsilon) {
    if (a.size() != b.size()) {
        fail(ErrorCode::LengthMismatch, "cosine_similarity: vector lengths differ");
    }
    std::vector<float> an(a.size());
    std::vector<float> bn(b.size());
    normalize_vector(a, epsilon, an);
    normalize_vector(b, epsilon, bn);
    float dot = 0.0f;
    for (std::size_t k = 0; k < an.size(); ++k) {
        dot = dot + an[k] * bn[k];
    }
    return clamp_unit(dot);
}

PreparedReference::PreparedReference(const FeatureMap& reference, const ObjectMask& m_ref,
                                     double epsilon)
    : height_(reference.height()), width_(reference.width()),
      channels_(reference.channels()), epsilon_(epsilon) {
    check_mask_dims(m_ref, reference.height(), reference.width(), "reference mask");
    if (m_ref.empty()) {
        fail(ErrorCode::EmptyReferenceMask, "reference mask has no set pixels");
    }
    require_finite(reference, "reference feature map");
    if (!(epsilon > 0)) {
        fail(ErrorCode::InvalidArgument, "epsilon must be positive");
    }

    indices_ = m_ref.set_indices();
    const std::size_t c = channels_;
    packed_.assign(panel_count() * c * kPanel, 0.0f);
    std::vector<float> normalized(c);
    for (std::size_t n = 0; n < indices_.size(); ++n) {
        normalize_vector(reference.pixel(indices_[n]), epsilon, normalized);
        float* block = packed_.data() + (n / kPanel) * c * kPanel;
        const std::size_t lane = n % kPanel;
        for (std::size_t k = 0; k < c; ++k) {
            block[k * kPanel + lane] = normalized[k];
        }
    }
}

CorrespondenceMap masked_cosine_match(const FeatureMap& target, const PreparedReference& reference,
                                      const ObjectMask& m_target, const MatchOptions& options) {
    if (target.channels() != reference.channels()) {
        fail(ErrorCode::ChannelMismatch,
             "channel counts differ: " + std::to_string(target.channels()) + " vs " +
                 std::to_string(reference.channels()));
    }
    check_mask_dims(m_target, target.height(), target.width(), "target mask");
    require_finite(target, "target feature map");
    if (reference.candidate_count() == 0) {
        fail(ErrorCode::EmptyReferenceMask, "reference mask has no set pixels");
    }

    const std::size_t c = target.channels();
    const std::vector<std::uint32_t> queries = m_target.set_indices();
    std::vector<std::uint32_t> entries(target.pixel_count(), CorrespondenceMap::kUnmatched);

    const std::size_t panel_bytes = std::max<std::size_t>(c, 1) * PreparedReference::kPanel * 4;
    const std::size_t group = std::max<std::size_t>(1, kPanelGroupBytes / panel_bytes);
    const std::size_t panels = reference.panel_count();
    const std::size_t candidates = reference.candidate_count();
    const auto ref_indices = reference.indices();

    parallel_for(queries.size(), kQueryChunk, options.threads,
                 [&](std::size_t begin, std::size_t end) {
        const std::size_t n = end - begin;
        std::vector<float> qn(n * c);
        for (std::size_t i = 0; i < n; ++i) {
            normalize_vector(target.pixel(queries[begin + i]), reference.epsilon(),
                             std::span<float>(qn.data() + i * c, c));
        }
        std::vector<Best> best(n);

        for (std::size_t g0 = 0; g0 < panels; g0 += group) {
            const std::size_t g1 = std::min(panels, g0 + group);
            std::size_t i = 0;
            for (; i + kRows <= n; i += kRows) {
                for (std::size_t pi = g0; pi < g1; ++pi) {
                    const std::size_t first = pi * PreparedReference::kPanel;
                    const std::size_t lanes =
                        std::min<std::size_t>(PreparedReference::kPanel, candidates - first);
                    score_panel<kRows>(qn.data() + i * c, c, reference.panel(pi),
                                   ref_indices.data() + first, lanes, best.data() + i);
                }
            }
            for (; i < n; ++i) {
                for (std::size_t pi = g0; pi < g1; ++pi) {
                    const std::size_t first = pi * PreparedReference::kPanel;
                    const std::size_t lanes =
                        std::min<std::size_t>(PreparedReference::kPanel, candidates - first);
                    score_panel<1>(qn.data() + i * c, c, reference.panel(pi),
                                   ref_indices.data() + first, lanes, best.data() + i);
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            entries[queries[begin + i]] = best[i].index;
        }
    });

    return CorrespondenceMap(target.height(), target.width(), reference.height(),
                             reference.width(), std::move(entries));
}

CorrespondenceMap masked_cosine_match(const FeatureMap& target, const FeatureMap& reference,
                                      const ObjectMask& m_target, const ObjectMask& m_ref,
                                      double epsilon, const MatchOptions& options) {
    validate_pair(target, reference);
    check_mask_dims(m_target, target.height(), target.width(), "target mask");
    return masked_cosine_match(target, PreparedReference(reference, m_ref, epsilon), m_target,
                               options);
}

CorrespondenceMap brute_force_match(const FeatureMap& target, const FeatureMap& reference,
                                    const ObjectMask& m_target, const ObjectMask& m_ref,
                                    double epsilon) {
    validate_pair(target, reference);
    check_mask_dims(m_target, target.height(), target.width(), "target mask");
    check_mask_dims(m_ref, reference.height(), reference.width(), "reference mask");
    if (m_ref.empty()) {
        fail(ErrorCode::EmptyReferenceMask, "reference mask has no set pixels");
    }

    std::vector<std::uint32_t> entries(target.pixel_count(), CorrespondenceMap::kUnmatched);
    for (std::size_t q = 0; q < target.pixel_count(); ++q) {
        if (!m_target.test(q)) {
            continue;
        }
        float best = -2.0f;
        for (std::size_t p = 0; p < reference.pixel_count(); ++p) {
            if (!m_ref.test(p)) {
                continue;
            }
            const float s = cosine_similarity(target.pixel(q), reference.pixel(p), epsilon);
            if (s > best) {
                best = s;
                entries[q] = static_cast<std::uint32_t>(p);
            }
        }
    }
    return CorrespondenceMap(target.height(), target.width(), reference.height(),
                             reference.width(), std::move(entries));
}

FlowMap correspondence_to_flow(const CorrespondenceMap& corr) {
    const std::size_t n = corr.pixel_count();
    const std::size_t ref_pixels = std::size_t{corr.ref_height()} * corr.ref_width();
    std::vector<float> displacement(2 * n, 0.0f);
    std::vector<std::uint8_t> validity(n, 0);
    for (std::size_t q = 0; q < n; ++q) {
        const std::uint32_t p = corr[q];
        if (p == CorrespondenceMap::kUnmatched) {
            continue;
        }
        if (p >= ref_pixels) {
            fail(ErrorCode::IndexOutOfRange, "matched index outside reference grid");
        }
        const auto xq = static_cast<long long>(q % corr.width());
        const auto yq = static_cast<long long>(q / corr.width());
        const auto xp = static_cast<long long>(p % corr.ref_width());
        const auto yp = static_cast<long long>(p / corr.ref_width());
        displacement[2 * q] = static_cast<float>(xp - xq);
        displacement[2 * q + 1] = static_cast<float>(yp - yq);
        validity[q] = 1;
    }
    return FlowMap(corr.height(), corr.width(), std::move(displacement), std::move(validity));
}

}  // namespace xfer
