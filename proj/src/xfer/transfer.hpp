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

#include <optional>
#include <span>
#include <vector>

#include "xfer/matching.hpp"
#include "xfer/types.hpp"

namespace xfer {

struct ObjectPair {
    FeatureMap reference;
    ObjectMask m_ref;
    ObjectMask m_target;
};

/// Gathers reference(p) into every matched target pixel q; unmatched pixels
/// are zero. Output has the correspondence's grid and the reference's channels.
FeatureMap rearrange(const FeatureMap& reference, const CorrespondenceMap& corr);

/// rearranged where m_target is set, target elsewhere (bit-exact copies).
FeatureMap inject(const FeatureMap& rearranged, const FeatureMap& target,
                  const ObjectMask& m_target);

/// Masked AdaIN: per channel, content pixels in m_content are renormalized to
/// the mean and population std of style pixels in m_style. Pixels outside
/// m_content are copied unchanged.
FeatureMap adain_masked(const FeatureMap& content, const FeatureMap& style,
                        const ObjectMask& m_content, const ObjectMask& m_style, double epsilon);

/// A reference already normalized for matching, plus the target-side mask.
/// The session cache stores these so a reference is packed once per (t, layer).
struct PreparedObject {
    const FeatureMap* reference = nullptr;
    const PreparedReference* prepared = nullptr;
    const ObjectMask* m_target = nullptr;
};

struct StepResult {
    FeatureMap output;
    /// Union of the per-object correspondences; set whenever matching ran.
    std::optional<CorrespondenceMap> correspondence;
};

/// One denoising step. Outside the configured (t, layer) window the target is
/// returned unchanged; inside it every object is matched against its own
/// masks, rearranged, and all of them are spliced into the target in a single
/// masked injection.
FeatureMap transfer_step(const FeatureMap& target, std::span<const ObjectPair> objects,
                         const SessionConfig& config, int t, int layer,
                         const MatchOptions& options = {});

/// Same as transfer_step over pre-packed references. When force_match is set
/// the correspondence is computed even if (t, layer) is outside the window.
StepResult transfer_step_prepared(const FeatureMap& target,
                                  std::span<const PreparedObject> objects,
                                  const SessionConfig& config, int t, int layer,
                                  bool force_match = false, const MatchOptions& options = {});

/// Throws OverlappingTargetMasks / DimensionMismatch.
void check_disjoint_masks(std::span<const ObjectMask* const> masks, std::uint32_t height,
                          std::uint32_t width);

}  // namespace xfer
