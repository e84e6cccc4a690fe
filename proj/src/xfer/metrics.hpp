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

#include <span>
#include <vector>

#include "xfer/types.hpp"

namespace xfer {

// Appearance, structure and correspondence metrics for evaluating transfers.

inline constexpr std::uint32_t kDefaultHistogramBins = 8;

/// Joint RGB histogram over masked pixels, uniform edges over [0, 256) per
/// channel, normalized to unit mass. Throws EmptyMask, DimensionMismatch.
Histogram color_histogram(const RgbImage& image, const ObjectMask& mask,
                          std::uint32_t bins_per_channel = kDefaultHistogramBins);

/// sqrt(1 - sum_i sqrt(p_i q_i)), clamped to [0, 1]. Throws LayoutMismatch.
double bhattacharyya(const Histogram& a, const Histogram& b);

/// Mean cosine similarity of paired embeddings, scaled to 0..100.
/// Throws LengthMismatch, EmptyList, InvariantViolation (zero-norm vector).
double clip_appearance_score(std::span<const EmbeddingVector> gt,
                             std::span<const EmbeddingVector> out);

/// Root mean squared difference over masked pixels (raw values).
double depth_rmse(const DepthMap& target, const DepthMap& output, const ObjectMask& mask);

/// Per-image min-max rescale to [0, 1]; a constant map becomes all zeros.
DepthMap normalize_depth(const DepthMap& depth);

double iou(const ObjectMask& a, const ObjectMask& b);
/// Mean IoU over paired masks. Throws EmptyUnion, LengthMismatch, EmptyList.
double miou(std::span<const ObjectMask> gt, std::span<const ObjectMask> out);

/// Object keypoint similarity using gt's scale, kappas and visibility.
/// Throws NoVisibleKeypoints, LengthMismatch.
double oks(const KeypointSet& pred, const KeypointSet& gt);

/// Thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> default_ap_thresholds();

/// Mean over thresholds of the fraction of OKS values >= threshold.
double keypoint_ap(std::span<const double> oks_values, std::span<const double> thresholds);

/// Per-image L1 flow error over gt-valid pixels divided by the valid count.
/// Throws DimensionMismatch, EmptyValidity.
double flow_l1(const FlowMap& pred, const FlowMap& gt);

/// Mean of per-image flow_l1 over a dataset. Throws LengthMismatch, EmptyList.
double flow_l1_dataset(std::span<const FlowMap> pred, std::span<const FlowMap> gt);

}  // namespace xfer
