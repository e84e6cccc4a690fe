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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace xfer {

// Pixels are linearized row-major: q = y * width + x. Every module that
// speaks in linear pixel indices (matcher, gather, flow, protocol) uses this.

/// Dense h x w x c feature tensor, stored (y, x, channel) row-major.
///
/// Immutable after construction. Finiteness is not enforced by the
/// constructor so that ingestion points can report NonFiniteData with
/// context; call is_finite() or validate_pair() at the boundary.
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
               std::vector<float> data,
               std::optional<int> timestep = std::nullopt,
               std::optional<int> layer = std::nullopt);

    std::uint32_t height() const noexcept { return height_; }
    std::uint32_t width() const noexcept { return width_; }
    std::uint32_t channels() const noexcept { return channels_; }
    std::size_t pixel_count() const noexcept {
        return std::size_t{height_} * width_;
    }
    std::optional<int> timestep() const noexcept { return timestep_; }
    std::optional<int> layer() const noexcept { return layer_; }

    std::span<const float> data() const noexcept { return data_; }
    std::span<const float> pixel(std::size_t q) const noexcept {
        return {data_.data() + q * channels_, channels_};
    }

    bool is_finite() const noexcept;

    /// Copy with a different (timestep, layer) tag; data is shared by value.
    FeatureMap retagged(std::optional<int> timestep, std::optional<int> layer) const;

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

private:
    std::uint32_t height_ = 0;
    std::uint32_t width_ = 0;
    std::uint32_t channels_ = 0;
    std::vector<float> data_;
    std::optional<int> timestep_;
    std::optional<int> layer_;
};

/// Binary h x w mask. Any nonzero input byte is stored as 1.
class ObjectMask {
public:
    ObjectMask() = default;
    ObjectMask(std::uint32_t height, std::uint32_t width, std::vector<std::uint8_t> bits);

    static ObjectMask filled(std::uint32_t height, std::uint32_t width, bool value);

    std::uint32_t height() const noexcept { return height_; }
    std::uint32_t width() const noexcept { return width_; }
    std::size_t pixel_count() const noexcept {
        return std::size_t{height_} * width_;
    }
    bool test(std::size_t q) const noexcept { return bits_[q] != 0; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    std::size_t count() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }

    /// Linear indices of set pixels, ascending.
    std::vector<std::uint32_t> set_indices() const;

    friend bool operator==(const ObjectMask& a, const ObjectMask& b) {
        return a.height_ == b.height_ && a.width_ == b.width_ && a.bits_ == b.bits_;
    }

private:
    std::uint32_t height_ = 0;
    std::uint32_t width_ = 0;
    std::vector<std::uint8_t> bits_;
    std::size_t count_ = 0;
};

/// Per-target-pixel matched reference index, or kUnmatched.
class CorrespondenceMap {
public:
    static constexpr std::uint32_t kUnmatched = 0xFFFFFFFFu;

    CorrespondenceMap() = default;
    CorrespondenceMap(std::uint32_t height, std::uint32_t width,
                      std::uint32_t ref_height, std::uint32_t ref_width,
                      std::vector<std::uint32_t> entries);

    std::uint32_t height() const noexcept { return height_; }
    std::uint32_t width() const noexcept { return width_; }
    std::uint32_t ref_height() const noexcept { return ref_height_; }
    std::uint32_t ref_width() const noexcept { return ref_width_; }
    std::size_t pixel_count() const noexcept {
        return std::size_t{height_} * width_;
    }
    std::span<const std::uint32_t> entries() const noexcept { return entries_; }
    std::uint32_t operator[](std::size_t q) const noexcept { return entries_[q]; }
    bool matched(std::size_t q) const noexcept { return entries_[q] != kUnmatched; }

    friend bool operator==(const CorrespondenceMap&, const CorrespondenceMap&) = default;

private:
    std::uint32_t height_ = 0;
    std::uint32_t width_ = 0;
    std::uint32_t ref_height_ = 0;
    std::uint32_t ref_width_ = 0;
    std::vector<std::uint32_t> entries_;
};

/// h x w displacement field (dx, dy interleaved) plus validity.
class FlowMap {
public:
    FlowMap() = default;
    FlowMap(std::uint32_t height, std::uint32_t width,
            std::vector<float> displacement, std::vector<std::uint8_t> validity);

    std::uint32_t height() const noexcept { return height_; }
    std::uint32_t width() const noexcept { return width_; }
    std::size_t pixel_count() const noexcept {
        return std::size_t{height_} * width_;
    }
    std::span<const float> displacement() const noexcept { return displacement_; }
    std::span<const std::uint8_t> validity() const noexcept { return validity_; }
    float dx(std::size_t q) const noexcept { return displacement_[2 * q]; }
    float dy(std::size_t q) const noexcept { return displacement_[2 * q + 1]; }
    bool valid(std::size_t q) const noexcept { return validity_[q] != 0; }
    std::size_t valid_count() const noexcept;

    friend bool operator==(const FlowMap&, const FlowMap&) = default;

private:
    std::uint32_t height_ = 0;
    std::uint32_t width_ = 0;
    std::vector<float> displacement_;
    std::vector<std::uint8_t> validity_;
};

/// Inclusive step range.
struct StepRange {
    int lo = 0;
    int hi = 0;

    bool contains(int t) const noexcept { return t >= lo && t <= hi; }
    friend bool operator==(const StepRange&, const StepRange&) = default;
};

struct SessionConfig {
    int total_steps = 100;
    StepRange inject_t_range{42, 100};
    std::vector<int> inject_layers{2, 3};
    StepRange adain_t_range{82, 100};
    int readout_t = 92;
    int readout_layer = 2;
    double epsilon = 1e-8;

    /// Throws InvalidConfig.
    void validate() const;

    bool injects_at(int t, int layer) const noexcept;
    bool adain_at(int t) const noexcept { return adain_t_range.contains(t); }
    bool is_readout(int t, int layer) const noexcept {
        return t == readout_t && layer == readout_layer;
    }

    friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

/// Parses "key=value" lines; unknown keys and malformed values are ParseError.
/// Missing keys keep their defaults. The result is validated.
SessionConfig parse_session_config(const std::string& text);
std::string format_session_config(const SessionConfig& config);

struct Histogram {
    std::vector<double> bins;
    std::uint32_t bins_per_channel = 0;
    std::string color_space;

    bool same_layout(const Histogram& other) const noexcept {
        return bins_per_channel == other.bins_per_channel &&
               color_space == other.color_space && bins.size() == other.bins.size();
    }
};

struct KeypointSet {
    struct Point {
        double x = 0;
        double y = 0;
        int visibility = 0;
        double kappa = 1;
    };
    std::vector<Point> points;
    double scale = 1;

    /// Throws InvariantViolation when scale or any kappa is non-positive.
    void validate() const;
};

class DepthMap {
public:
    DepthMap() = default;
    DepthMap(std::uint32_t height, std::uint32_t width, std::vector<float> values);

    std::uint32_t height() const noexcept { return height_; }
    std::uint32_t width() const noexcept { return width_; }
    std::span<const float> values() const noexcept { return values_; }

private:
    std::uint32_t height_ = 0;
    std::uint32_t width_ = 0;
    std::vector<float> values_;
};

using EmbeddingVector = std::vector<float>;

/// 8-bit RGB image, (y, x, channel) row-major.
struct RgbImage {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<std::uint8_t> pixels;

    std::size_t pixel_count() const noexcept { return std::size_t{height} * width; }
    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// ok iff channels equal and both maps finite. Spatial sizes may differ.
void validate_pair(const FeatureMap& a, const FeatureMap& b);

void require_finite(const FeatureMap& map, const char* what);

}  // namespace xfer
