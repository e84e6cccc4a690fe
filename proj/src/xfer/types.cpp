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

#include "xfer/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "xfer/error.hpp"

namespace xfer {

FeatureMap::FeatureMap(std::uint32_t height, std::uint32_t width, std::uint32_t channels,
                       std::vector<float> data, std::optional<int> timestep,
                       std::optional<int> layer)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)),
      timestep_(timestep), layer_(layer) {
    if (data_.size() != std::size_t{height} * width * channels) {
        fail(ErrorCode::DimensionMismatch, "feature map data length does not equal h*w*c");
    }
}

bool FeatureMap::is_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

FeatureMap FeatureMap::retagged(std::optional<int> timestep, std::optional<int> layer) const {
    FeatureMap copy = *this;
    copy.timestep_ = timestep;
    copy.layer_ = layer;
    return copy;
}

ObjectMask::ObjectMask(std::uint32_t height, std::uint32_t width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
    if (bits_.size() != std::size_t{height} * width) {
        fail(ErrorCode::DimensionMismatch, "mask length does not equal h*w");
    }
    for (auto& b : bits_) {
        b = b != 0 ? 1 : 0;
        count_ += b;
    }
}

ObjectMask ObjectMask::filled(std::uint32_t height, std::uint32_t width, bool value) {
    return ObjectMask(height, width,
                      std::vector<std::uint8_t>(std::size_t{height} * width, value ? 1 : 0));
}

std::vector<std::uint32_t> ObjectMask::set_indices() const {
    std::vector<std::uint32_t> out;
    out.reserve(count_);
    for (std::size_t q = 0; q < bits_.size(); ++q) {
        if (bits_[q]) {
            out.push_back(static_cast<std::uint32_t>(q));
        }
    }
    return out;
}

CorrespondenceMap::CorrespondenceMap(std::uint32_t height, std::uint32_t width,
                                     std::uint32_t ref_height, std::uint32_t ref_width,
                                     std::vector<std::uint32_t> entries)
    : height_(height), width_(width), ref_height_(ref_height), ref_width_(ref_width),
      entries_(std::move(entries)) {
    if (entries_.size() != std::size_t{height} * width) {
        fail(ErrorCode::DimensionMismatch, "correspondence length does not equal h*w");
    }
    const std::size_t ref_pixels = std::size_t{ref_height} * ref_width;
    for (auto p : entries_) {
        if (p != kUnmatched && p >= ref_pixels) {
            fail(ErrorCode::IndexOutOfRange, "correspondence entry outside reference grid");
        }
    }
}

FlowMap::FlowMap(std::uint32_t height, std::uint32_t width, std::vector<float> displacement,
                 std::vector<std::uint8_t> validity)
    : height_(height), width_(width), displacement_(std::move(displacement)),
      validity_(std::move(validity)) {
    const std::size_t n = std::size_t{height} * width;
    if (displacement_.size() != 2 * n || validity_.size() != n) {
        fail(ErrorCode::DimensionMismatch, "flow buffers do not match h*w");
    }
    for (std::size_t q = 0; q < n; ++q) {
        validity_[q] = validity_[q] != 0 ? 1 : 0;
        if (validity_[q] && !(std::isfinite(displacement_[2 * q]) &&
                              std::isfinite(displacement_[2 * q + 1]))) {
            fail(ErrorCode::NonFiniteData, "non-finite displacement at a valid flow pixel");
        }
    }
}

std::size_t FlowMap::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(validity_.begin(), validity_.end(), 1));
}

DepthMap::DepthMap(std::uint32_t height, std::uint32_t width, std::vector<float> values)
    : height_(height), width_(width), values_(std::move(values)) {
    if (values_.size() != std::size_t{height} * width) {
        fail(ErrorCode::DimensionMismatch, "depth length does not equal h*w");
    }
    if (!std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); })) {
        fail(ErrorCode::NonFiniteData, "depth map contains non-finite values");
    }
}

void KeypointSet::validate() const {
    if (!(scale > 0) || !std::isfinite(scale)) {
        fail(ErrorCode::InvariantViolation, "keypoint object scale must be positive");
    }
    for (const auto& p : points) {
        if (!(p.kappa > 0) || !std::isfinite(p.kappa)) {
            fail(ErrorCode::InvariantViolation, "keypoint kappa must be positive");
        }
        if (p.visibility < 0 || p.visibility > 2) {
            fail(ErrorCode::InvariantViolation, "keypoint visibility must be 0, 1 or 2");
        }
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            fail(ErrorCode::InvariantViolation, "keypoint coordinates must be finite");
        }
    }
}

void SessionConfig::validate() const {
    auto check_range = [&](const StepRange& r, const char* name) {
        if (r.lo > r.hi || r.lo < 1 || r.hi > total_steps) {
            fail(ErrorCode::InvalidConfig,
                 std::string(name) + " must satisfy 1 <= lo <= hi <= total_steps");
        }
    };
    if (total_steps < 1) {
        fail(ErrorCode::InvalidConfig, "total_steps must be positive");
    }
    check_range(inject_t_range, "inject_t_range");
    check_range(adain_t_range, "adain_t_range");
    if (readout_t < 1 || readout_t > total_steps) {
        fail(ErrorCode::InvalidConfig, "readout_t must lie in [1, total_steps]");
    }
    if (!(epsilon > 0) || !std::isfinite(epsilon)) {
        fail(ErrorCode::InvalidConfig, "epsilon must be positive");
    }
}

bool SessionConfig::injects_at(int t, int layer) const noexcept {
    return inject_t_range.contains(t) &&
           std::find(inject_layers.begin(), inject_layers.end(), layer) != inject_layers.end();
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& text, const std::string& key) {
    T value{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        fail(ErrorCode::ParseError, "bad value for " + key + ": '" + text + "'");
    }
    return value;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(parse_number<int>(item, key));
        }
    }
    return out;
}

StepRange parse_range(const std::string& text, const std::string& key) {
    auto values = parse_int_list(text, key);
    if (values.size() != 2) {
        fail(ErrorCode::ParseError, key + " expects 'lo,hi'");
    }
    return {values[0], values[1]};
}

}  // namespace

SessionConfig parse_session_config(const std::string& text) {
    SessionConfig config;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(ErrorCode::ParseError, "config line " + std::to_string(line_no) + " lacks '='");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key == "total_steps") {
            config.total_steps = parse_number<int>(value, key);
        } else if (key == "inject_t_range") {
            config.inject_t_range = parse_range(value, key);
        } else if (key == "inject_layers") {
            config.inject_layers = parse_int_list(value, key);
        } else if (key == "adain_t_range") {
            config.adain_t_range = parse_range(value, key);
        } else if (key == "readout_t") {
            config.readout_t = parse_number<int>(value, key);
        } else if (key == "readout_layer") {
            config.readout_layer = parse_number<int>(value, key);
        } else if (key == "epsilon") {
            config.epsilon = parse_number<double>(value, key);
        } else {
            fail(ErrorCode::ParseError, "unknown config key '" + key + "'");
        }
    }
    std::sort(config.inject_layers.begin(), config.inject_layers.end());
    config.inject_layers.erase(
        std::unique(config.inject_layers.begin(), config.inject_layers.end()),
        config.inject_layers.end());
    config.validate();
    return config;
}

std::string format_session_config(const SessionConfig& config) {
    std::ostringstream os;
    os.precision(17);
    os << "total_steps=" << config.total_steps << '\n'
       << "inject_t_range=" << config.inject_t_range.lo << ',' << config.inject_t_range.hi << '\n'
       << "inject_layers=";
    for (std::size_t i = 0; i < config.inject_layers.size(); ++i) {
        os << (i ? "," : "") << config.inject_layers[i];
    }
    os << '\n'
       << "adain_t_range=" << config.adain_t_range.lo << ',' << config.adain_t_range.hi << '\n'
       << "readout_t=" << config.readout_t << '\n'
       << "readout_layer=" << config.readout_layer << '\n'
       << "epsilon=" << config.epsilon << '\n';
    return os.str();
}

void require_finite(const FeatureMap& map, const char* what) {
    if (!map.is_finite()) {
        fail(ErrorCode::NonFiniteData, std::string(what) + " contains NaN or Inf");
    }
}

void validate_pair(const FeatureMap& a, const FeatureMap& b) {
    if (a.channels() != b.channels()) {
        fail(ErrorCode::ChannelMismatch,
             "channel counts differ: " + std::to_string(a.channels()) + " vs " +
                 std::to_string(b.channels()));
    }
    require_finite(a, "first feature map");
    require_finite(b, "second feature map");
}

}  // namespace xfer
