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
#include <span>
#include <vector>

#include "xfer/types.hpp"

namespace xfer {

// Similarity arithmetic shared by every matcher so that the blocked kernel and
// the brute-force oracle agree bit for bit:
//   x_hat[k] = float(x[k] / max(||x||, eps))   with ||x|| accumulated in double
//   sim      = clamp(sum_k x_hat[k] * y_hat[k], -1, 1)   float, k ascending
// Build with -ffp-contract=off; a fused multiply-add changes the rounding.

/// Cosine similarity a.b / (max(|a|,eps) * max(|b|,eps)), clamped to [-1, 1].
/// Throws LengthMismatch.
float cosine_similarity(std::span<const float> a, std::span<const float> b, double epsilon);

/// Writes x / max(||x||, eps) into out (same length as x).
void normalize_vector(std::span<const float> x, double epsilon, std::span<float> out);

struct MatchOptions {
    /// 0 picks the hardware concurrency. Results never depend on it.
    unsigned threads = 0;
};

/// Reference features restricted to m_ref, normalized and packed into
/// channel-major panels for the matching kernel. Build once per (t, layer)
/// and reuse across queries.
class PreparedReference {
public:
    static constexpr std::uint32_t kPanel = 16;

    PreparedReference() = default;
    PreparedReference(const FeatureMap& reference, const ObjectMask& m_ref, double epsilon);

    std::uint32_t height() const noexcept { return height_; }
    std::uint32_t width() const noexcept { return width_; }
    std::uint32_t channels() const noexcept { return channels_; }
    double epsilon() const noexcept { return epsilon_; }
    std::size_t candidate_count() const noexcept { return indices_.size(); }
    std::span<const std::uint32_t> indices() const noexcept { return indices_; }
    std::size_t panel_count() const noexcept {
        return (indices_.size() + kPanel - 1) / kPanel;
    }
    /// channels x kPanel block for one panel; padding lanes are zero.
    const float* panel(std::size_t i) const noexcept {
        return packed_.data() + i * std::size_t{channels_} * kPanel;
    }

private:
    std::uint32_t height_ = 0;
    std::uint32_t width_ = 0;
    std::uint32_t channels_ = 0;
    double epsilon_ = 1e-8;
    std::vector<std::uint32_t> indices_;
    std::vector<float> packed_;
};

/// For every q in m_target: argmax over p in m_ref of sim(target(q), reference(p)),
/// ties to the lowest p. Pixels outside m_target are kUnmatched.
/// Throws EmptyReferenceMask, ChannelMismatch, NonFiniteData, DimensionMismatch.
CorrespondenceMap masked_cosine_match(const FeatureMap& target, const FeatureMap& reference,
                                      const ObjectMask& m_target, const ObjectMask& m_ref,
                                      double epsilon, const MatchOptions& options = {});

CorrespondenceMap masked_cosine_match(const FeatureMap& target, const PreparedReference& reference,
                                      const ObjectMask& m_target,
                                      const MatchOptions& options = {});

/// Naive O(|M_t| |M_r| c) double loop with the same contract. Verification only.
CorrespondenceMap brute_force_match(const FeatureMap& target, const FeatureMap& reference,
                                    const ObjectMask& m_target, const ObjectMask& m_ref,
                                    double epsilon);

/// Displacement (x_p - x_q, y_p - y_q) for matched q; unmatched pixels are
/// invalid with zero displacement.
FlowMap correspondence_to_flow(const CorrespondenceMap& corr);

}  // namespace xfer
