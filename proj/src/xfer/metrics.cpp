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

#include "xfer/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "xfer/error.hpp"

namespace xfer {

Histogram color_histogram(const RgbImage& image, const ObjectMask& mask,
                          std::uint32_t bins_per_channel) {
    if (bins_per_channel < 1 || bins_per_channel > 256) {
        fail(ErrorCode::InvalidArgument, "bins_per_channel must be in [1, 256]");
    }
    if (mask.height() != image.height || mask.width() != image.width) {
        fail(ErrorCode::DimensionMismatch, "histogram mask grid differs from image");
    }
    if (mask.empty()) {
        fail(ErrorCode::EmptyMask, "histogram mask has no set pixels");
    }
    const std::size_t b = bins_per_channel;
    Histogram h{std::vector<double>(b * b * b, 0.0), bins_per_channel, "RGB"};
    for (std::size_t q = 0; q < image.pixel_count(); ++q) {
        if (!mask.test(q)) continue;
        const std::uint8_t* px = image.pixels.data() + 3 * q;
        const std::size_t r = px[0] * b / 256;
        const std::size_t g = px[1] * b / 256;
        const std::size_t bl = px[2] * b / 256;
        h.bins[(r * b + g) * b + bl] += 1.0;
    }
    const double total = static_cast<double>(mask.count());
    for (auto& v : h.bins) v /= total;
    return h;
}

double bhattacharyya(const Histogram& a, const Histogram& b) {
    if (!a.same_layout(b)) {
        fail(ErrorCode::LayoutMismatch, "histograms use different bin layouts");
    }
    double bc = 0.0;
    for (std::size_t i = 0; i < a.bins.size(); ++i) {
        bc += std::sqrt(a.bins[i] * b.bins[i]);
    }
    return std::clamp(std::sqrt(std::max(0.0, 1.0 - bc)), 0.0, 1.0);
}

double clip_appearance_score(std::span<const EmbeddingVector> gt,
                             std::span<const EmbeddingVector> out) {
    if (gt.size() != out.size()) {
        fail(ErrorCode::LengthMismatch, "embedding lists differ in length");
    }
    if (gt.empty()) {
        fail(ErrorCode::EmptyList, "no embedding pairs");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i].size() != out[i].size()) {
            fail(ErrorCode::LengthMismatch, "paired embeddings differ in length");
        }
        double dot = 0, na = 0, nb = 0;
        for (std::size_t k = 0; k < gt[i].size(); ++k) {
            dot += double{gt[i][k]} * out[i][k];
            na += double{gt[i][k]} * gt[i][k];
            nb += double{out[i][k]} * out[i][k];
        }
        if (na == 0.0 || nb == 0.0) {
            fail(ErrorCode::InvariantViolation, "embedding has zero norm");
        }
        sum += std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
    }
    return 100.0 * sum / static_cast<double>(gt.size());
}

double depth_rmse(const DepthMap& target, const DepthMap& output, const ObjectMask& mask) {
    if (target.height() != output.height() || target.width() != output.width() ||
        mask.height() != target.height() || mask.width() != target.width()) {
        fail(ErrorCode::DimensionMismatch, "depth maps and mask must share a grid");
    }
    if (mask.empty()) {
        fail(ErrorCode::EmptyMask, "depth mask has no set pixels");
    }
    const auto t = target.values();
    const auto o = output.values();
    double sum = 0.0;
    for (std::size_t q = 0; q < t.size(); ++q) {
        if (!mask.test(q)) continue;
        const double d = double{t[q]} - double{o[q]};
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(mask.count()));
}

DepthMap normalize_depth(const DepthMap& depth) {
    const auto v = depth.values();
    std::vector<float> out(v.size(), 0.0f);
    if (!v.empty()) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        const double range = double{*hi} - double{*lo};
        if (range > 0) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                out[i] = static_cast<float>((double{v[i]} - *lo) / range);
            }
        }
    }
    return DepthMap(depth.height(), depth.width(), std::move(out));
}

double iou(const ObjectMask& a, const ObjectMask& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        fail(ErrorCode::DimensionMismatch, "masks differ in size");
    }
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t q = 0; q < a.pixel_count(); ++q) {
        inter += a.test(q) && b.test(q);
        uni += a.test(q) || b.test(q);
    }
    if (uni == 0) {
        fail(ErrorCode::EmptyUnion, "both masks are empty");
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double miou(std::span<const ObjectMask> gt, std::span<const ObjectMask> out) {
    if (gt.size() != out.size()) {
        fail(ErrorCode::LengthMismatch, "mask lists differ in length");
    }
    if (gt.empty()) {
        fail(ErrorCode::EmptyList, "no mask pairs");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        sum += iou(gt[i], out[i]);
    }
    return sum / static_cast<double>(gt.size());
}

double oks(const KeypointSet& pred, const KeypointSet& gt) {
    if (pred.points.size() != gt.points.size()) {
        fail(ErrorCode::LengthMismatch, "keypoint sets differ in length");
    }
    gt.validate();
    double num = 0.0;
    std::size_t visible = 0;
    const double s2 = gt.scale * gt.scale;
    for (std::size_t i = 0; i < gt.points.size(); ++i) {
        const auto& g = gt.points[i];
        if (g.visibility <= 0) continue;
        ++visible;
        const double dx = pred.points[i].x - g.x;
        const double dy = pred.points[i].y - g.y;
        const double d2 = dx * dx + dy * dy;
        num += std::exp(-d2 / (2.0 * s2 * g.kappa * g.kappa));
    }
    if (visible == 0) {
        fail(ErrorCode::NoVisibleKeypoints, "ground truth has no visible keypoints");
    }
    return num / static_cast<double>(visible);
}

std::vector<double> default_ap_thresholds() {
    std::vector<double> t;
    for (int pct = 50; pct <= 95; pct += 5) {
        t.push_back(pct / 100.0);
    }
    return t;
}

double keypoint_ap(std::span<const double> oks_values, std::span<const double> thresholds) {
    if (oks_values.empty() || thresholds.empty()) {
        fail(ErrorCode::EmptyList, "keypoint_ap needs OKS values and thresholds");
    }
    double sum = 0.0;
    for (double tau : thresholds) {
        if (!(tau > 0.0 && tau <= 1.0)) {
            fail(ErrorCode::InvalidArgument, "AP thresholds must lie in (0, 1]");
        }
        const auto hits = std::count_if(oks_values.begin(), oks_values.end(),
                                        [tau](double v) { return v >= tau; });
        sum += static_cast<double>(hits) / static_cast<double>(oks_values.size());
    }
    return sum / static_cast<double>(thresholds.size());
}

double flow_l1(const FlowMap& pred, const FlowMap& gt) {
    if (pred.height() != gt.height() || pred.width() != gt.width()) {
        fail(ErrorCode::DimensionMismatch, "flow maps differ in size");
    }
    std::size_t valid = 0;
    double sum = 0.0;
    for (std::size_t q = 0; q < gt.pixel_count(); ++q) {
        if (!gt.valid(q)) continue;
        ++valid;
        sum += std::abs(double{pred.dx(q)} - gt.dx(q)) + std::abs(double{pred.dy(q)} - gt.dy(q));
    }
    if (valid == 0) {
        fail(ErrorCode::EmptyValidity, "ground-truth flow has no valid pixels");
    }
    return sum / static_cast<double>(valid);
}

double flow_l1_dataset(std::span<const FlowMap> pred, std::span<const FlowMap> gt) {
    if (pred.size() != gt.size()) {
        fail(ErrorCode::LengthMismatch, "flow lists differ in length");
    }
    if (pred.empty()) {
        fail(ErrorCode::EmptyList, "no flow pairs");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sum += flow_l1(pred[i], gt[i]);
    }
    return sum / static_cast<double>(pred.size());
}

}  // namespace xfer
