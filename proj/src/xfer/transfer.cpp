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

#include "xfer/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xfer/error.hpp"

namespace xfer {

namespace {

void require_same_grid(const FeatureMap& a, const FeatureMap& b, const char* what) {
    if (a.height() != b.height() || a.width() != b.width() || a.channels() != b.channels()) {
        fail(ErrorCode::DimensionMismatch, std::string(what) + ": feature map shapes differ");
    }
}

void require_mask_grid(const ObjectMask& m, const FeatureMap& f, const char* what) {
    if (m.height() != f.height() || m.width() != f.width()) {
        fail(ErrorCode::DimensionMismatch, std::string(what) + ": mask and map grids differ");
    }
}

struct Moments {
    std::vector<double> mean;
    std::vector<double> stddev;
};

Moments masked_moments(const FeatureMap& map, const ObjectMask& mask) {
    const std::size_t c = map.channels();
    Moments m{std::vector<double>(c, 0.0), std::vector<double>(c, 0.0)};
    const double n = static_cast<double>(mask.count());
    for (std::size_t q = 0; q < map.pixel_count(); ++q) {
        if (!mask.test(q)) continue;
        const auto px = map.pixel(q);
        for (std::size_t k = 0; k < c; ++k) m.mean[k] += px[k];
    }
    for (auto& v : m.mean) v /= n;
    for (std::size_t q = 0; q < map.pixel_count(); ++q) {
        if (!mask.test(q)) continue;
        const auto px = map.pixel(q);
        for (std::size_t k = 0; k < c; ++k) {
            const double d = px[k] - m.mean[k];
            m.stddev[k] += d * d;
        }
    }
    for (auto& v : m.stddev) v = std::sqrt(v / n);
    return m;
}

}  // namespace

FeatureMap rearrange(const FeatureMap& reference, const CorrespondenceMap& corr) {
    if (corr.ref_height() != reference.height() || corr.ref_width() != reference.width()) {
        fail(ErrorCode::DimensionMismatch, "correspondence was built for a different reference grid");
    }
    const std::size_t c = reference.channels();
    const std::size_t ref_pixels = reference.pixel_count();
    std::vector<float> out(corr.pixel_count() * c, 0.0f);
    const auto src = reference.data();
    for (std::size_t q = 0; q < corr.pixel_count(); ++q) {
        const std::uint32_t p = corr[q];
        if (p == CorrespondenceMap::kUnmatched) continue;
        if (p >= ref_pixels) {
            fail(ErrorCode::IndexOutOfRange, "matched index outside reference grid");
        }
        std::copy_n(src.data() + std::size_t{p} * c, c, out.data() + q * c);
    }
    return FeatureMap(corr.height(), corr.width(), reference.channels(), std::move(out));
}

FeatureMap inject(const FeatureMap& rearranged, const FeatureMap& target,
                  const ObjectMask& m_target) {
    require_same_grid(rearranged, target, "inject");
    require_mask_grid(m_target, target, "inject");
    const std::size_t c = target.channels();
    std::vector<float> out(target.data().begin(), target.data().end());
    const auto src = rearranged.data();
    for (std::size_t q = 0; q < target.pixel_count(); ++q) {
        if (m_target.test(q)) {
            std::copy_n(src.data() + q * c, c, out.data() + q * c);
        }
    }
    return FeatureMap(target.height(), target.width(), target.channels(), std::move(out),
                      target.timestep(), target.layer());
}

FeatureMap adain_masked(const FeatureMap& content, const FeatureMap& style,
                        const ObjectMask& m_content, const ObjectMask& m_style, double epsilon) {
    if (content.channels() != style.channels()) {
        fail(ErrorCode::ChannelMismatch, "adain: channel counts differ");
    }
    require_mask_grid(m_content, content, "adain content");
    require_mask_grid(m_style, style, "adain style");
    if (m_content.empty() || m_style.empty()) {
        fail(ErrorCode::EmptyMask, "adain: content and style masks must be non-empty");
    }
    require_finite(content, "adain content");
    require_finite(style, "adain style");

    const Moments cm = masked_moments(content, m_content);
    const Moments sm = masked_moments(style, m_style);
    const std::size_t c = content.channels();
    std::vector<double> gain(c);
    for (std::size_t k = 0; k < c; ++k) {
        gain[k] = sm.stddev[k] / std::max(cm.stddev[k], epsilon);
    }

    std::vector<float> out(content.data().begin(), content.data().end());
    for (std::size_t q = 0; q < content.pixel_count(); ++q) {
        if (!m_content.test(q)) continue;
        float* px = out.data() + q * c;
        for (std::size_t k = 0; k < c; ++k) {
            px[k] = static_cast<float>((px[k] - cm.mean[k]) * gain[k] + sm.mean[k]);
        }
    }
    return FeatureMap(content.height(), content.width(), content.channels(), std::move(out),
                      content.timestep(), content.layer());
}

void check_disjoint_masks(std::span<const ObjectMask* const> masks, std::uint32_t height,
                          std::uint32_t width) {
    std::vector<std::uint8_t> used(std::size_t{height} * width, 0);
    for (const ObjectMask* m : masks) {
        if (m->height() != height || m->width() != width) {
            fail(ErrorCode::DimensionMismatch, "target mask grid differs from target map");
        }
        const auto bits = m->bits();
        for (std::size_t q = 0; q < used.size(); ++q) {
            if (bits[q]) {
                if (used[q]) {
                    fail(ErrorCode::OverlappingTargetMasks,
                         "target masks overlap at pixel " + std::to_string(q));
                }
                used[q] = 1;
            }
        }
    }
}

StepResult transfer_step_prepared(const FeatureMap& target,
                                  std::span<const PreparedObject> objects,
                                  const SessionConfig& config, int t, int layer,
                                  bool force_match, const MatchOptions& options) {
    if (t < 1 || t > config.total_steps) {
        fail(ErrorCode::InvalidArgument, "timestep outside [1, total_steps]");
    }
    const bool active = config.injects_at(t, layer);
    if (!active && !force_match) {
        return {target, std::nullopt};
    }

    require_finite(target, "target feature map");
    std::vector<const ObjectMask*> masks;
    masks.reserve(objects.size());
    for (const auto& obj : objects) {
        if (obj.prepared->channels() != target.channels()) {
            fail(ErrorCode::ChannelMismatch, "object reference channels differ from target");
        }
        masks.push_back(obj.m_target);
    }
    check_disjoint_masks(masks, target.height(), target.width());

    const std::size_t c = target.channels();
    std::vector<float> out(target.data().begin(), target.data().end());
    std::vector<std::uint32_t> merged(target.pixel_count(), CorrespondenceMap::kUnmatched);
    std::uint32_t ref_h = 0;
    std::uint32_t ref_w = 0;
    bool uniform_ref_grid = true;

    for (std::size_t i = 0; i < objects.size(); ++i) {
        const auto& obj = objects[i];
        CorrespondenceMap corr = masked_cosine_match(target, *obj.prepared, *obj.m_target, options);
        FeatureMap gathered = rearrange(*obj.reference, corr);
        const auto src = gathered.data();
        for (std::size_t q = 0; q < target.pixel_count(); ++q) {
            if (!obj.m_target->test(q)) continue;
            merged[q] = corr[q];
            if (active) {
                std::copy_n(src.data() + q * c, c, out.data() + q * c);
            }
        }
        if (i == 0) {
            ref_h = corr.ref_height();
            ref_w = corr.ref_width();
        } else if (ref_h != corr.ref_height() || ref_w != corr.ref_width()) {
            uniform_ref_grid = false;
        }
    }

    StepResult result;
    if (active) {
        result.output = FeatureMap(target.height(), target.width(), target.channels(),
                                   std::move(out), target.timestep(), target.layer());
    } else {
        result.output = target;
    }
    // A merged map is only meaningful when every reference shares one grid.
    if (uniform_ref_grid && !objects.empty()) {
        result.correspondence =
            CorrespondenceMap(target.height(), target.width(), ref_h, ref_w, std::move(merged));
    }
    return result;
}

FeatureMap transfer_step(const FeatureMap& target, std::span<const ObjectPair> objects,
                         const SessionConfig& config, int t, int layer,
                         const MatchOptions& options) {
    if (!config.injects_at(t, layer)) {
        if (t < 1 || t > config.total_steps) {
            fail(ErrorCode::InvalidArgument, "timestep outside [1, total_steps]");
        }
        return target;
    }
    std::vector<PreparedReference> prepared;
    prepared.reserve(objects.size());
    for (const auto& obj : objects) {
        if (obj.reference.channels() != target.channels()) {
            fail(ErrorCode::ChannelMismatch, "object reference channels differ from target");
        }
        prepared.emplace_back(obj.reference, obj.m_ref, config.epsilon);
    }
    std::vector<PreparedObject> views;
    views.reserve(objects.size());
    for (std::size_t i = 0; i < objects.size(); ++i) {
        views.push_back({&objects[i].reference, &prepared[i], &objects[i].m_target});
    }
    return transfer_step_prepared(target, views, config, t, layer, false, options).output;
}

}  // namespace xfer
