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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "xfer/bytes.hpp"
#include "xfer/types.hpp"

namespace xfer {

// Tensor container, little-endian throughout:
//
//   "EFT1" | version u16 | dtype u8 | ndim u8 | dims u32[ndim] | payload
//
// The payload is row-major with product(dims) elements. Wire messages carry
// the same layout without the magic.

inline constexpr char kTensorMagic[4] = {'E', 'F', 'T', '1'};
inline constexpr std::uint16_t kTensorVersion = 1;

enum class DType : std::uint8_t {
    F32 = 1,
    U8 = 2,
    U32 = 3,
};

struct Tensor {
    std::vector<std::uint32_t> dims;
    std::variant<std::vector<float>, std::vector<std::uint8_t>, std::vector<std::uint32_t>> values;

    DType dtype() const noexcept;
    std::size_t element_count() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

void encode_tensor_body(const Tensor& tensor, ByteWriter& out);
/// Throws TruncatedPayload, UnsupportedDtype, ParseError.
Tensor decode_tensor_body(ByteReader& in);

std::vector<std::uint8_t> encode_tensor_file(const Tensor& tensor);
/// Throws BadMagic plus everything decode_tensor_body throws. Trailing bytes
/// after the payload are a ParseError.
Tensor decode_tensor_file(std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

// Domain conversions. Each from_tensor checks dtype and rank (ParseError) and
// the domain invariants (NonFiniteData and friends).
Tensor to_tensor(const FeatureMap& map);
Tensor to_tensor(const ObjectMask& mask);
Tensor to_tensor(const CorrespondenceMap& corr);
Tensor to_tensor(const DepthMap& depth);
Tensor to_tensor(const RgbImage& image);
Tensor embedding_tensor(std::span<const float> values);

FeatureMap feature_map_from_tensor(const Tensor& tensor);
ObjectMask mask_from_tensor(const Tensor& tensor);
/// The file form does not carry the reference grid; pass it in.
CorrespondenceMap correspondence_from_tensor(const Tensor& tensor, std::uint32_t ref_height,
                                             std::uint32_t ref_width);
DepthMap depth_from_tensor(const Tensor& tensor);
RgbImage image_from_tensor(const Tensor& tensor);
EmbeddingVector embedding_from_tensor(const Tensor& tensor);

FeatureMap read_feature_map(const std::filesystem::path& path);
ObjectMask read_mask(const std::filesystem::path& path);
DepthMap read_depth(const std::filesystem::path& path);
EmbeddingVector read_embedding(const std::filesystem::path& path);

// Flow: an h x w x 2 f32 displacement tensor plus an optional h x w u8
// validity tensor (absent means every pixel is valid).
Tensor flow_displacement_tensor(const FlowMap& flow);
Tensor flow_validity_tensor(const FlowMap& flow);
FlowMap flow_from_tensors(const Tensor& displacement, const std::optional<Tensor>& validity);
FlowMap read_flow(const std::filesystem::path& flow_path,
                  const std::optional<std::filesystem::path>& validity_path = std::nullopt);
void write_flow(const FlowMap& flow, const std::filesystem::path& flow_path,
                const std::filesystem::path& validity_path);

// Keypoints: a "scale s" line followed by one "x y v kappa" line per point.
// Blank lines and lines starting with '#' are skipped.
KeypointSet parse_keypoints(const std::string& text);
std::string format_keypoints(const KeypointSet& keypoints);
KeypointSet read_keypoints(const std::filesystem::path& path);

// Binary PPM (P6, maxval 255).
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);
RgbImage decode_ppm(std::span<const std::uint8_t> bytes);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
/// Accepts either a P6 file or an h x w x 3 u8 tensor file.
RgbImage read_image(const std::filesystem::path& path);

/// output(q) = ref_colors(p) for matched q, black otherwise.
RgbImage render_correspondence(const CorrespondenceMap& corr, const RgbImage& ref_colors);

}  // namespace xfer
