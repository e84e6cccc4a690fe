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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xfer/error.hpp"
#include "xfer/types.hpp"

namespace xfer::wire {

// Frame layout (little-endian, 24-byte header):
//
//   magic "EFAE" | version u16 | msg_type u16 | session_id u64 | payload_len u64 | payload
//
// Payloads (tensor = tensor container body without its magic):
//   INIT_SESSION    config
//   PUT_REFERENCE   object u32 | t i32 | layer i32 | tensor f32[h,w,c] | tensor u8[h,w]
//   REARRANGE       t i32 | layer i32 | tensor f32[h,w,c] | count u32 | count x tensor u8[h,w]
//   ADAIN           t i32 | tensor content | tensor style | tensor u8 m_content | tensor u8 m_style
//   READOUT_FLOW    (empty)
//   CLOSE_SESSION   (empty)
//   OK              (empty; INIT_SESSION replies carry the new id in the header)
//   ERROR           code u32 | length u32 | utf-8 message
//   TENSOR_RESULT   count u32 | count x tensor
//
// config = total_steps u32 | inject lo i32 | hi i32 | n u32 | n x layer i32 |
//          adain lo i32 | hi i32 | readout_t i32 | readout_layer i32 | epsilon f64

inline constexpr std::array<std::uint8_t, 4> kMagic = {'E', 'F', 'A', 'E'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 24;
inline constexpr std::uint64_t kDefaultMaxPayload = std::uint64_t{1} << 31;

enum class MsgType : std::uint16_t {
    InitSession = 1,
    PutReference = 2,
    Rearrange = 3,
    Adain = 4,
    ReadoutFlow = 5,
    CloseSession = 6,
    Ok = 100,
    Error = 101,
    TensorResult = 102,
};

bool is_known_type(std::uint16_t raw) noexcept;

struct Header {
    std::uint16_t version = kVersion;
    std::uint16_t msg_type = 0;
    std::uint64_t session_id = 0;
    std::uint64_t payload_len = 0;
};

struct Frame {
    Header header;
    std::vector<std::uint8_t> payload;

    MsgType type() const noexcept { return static_cast<MsgType>(header.msg_type); }
};

std::array<std::uint8_t, kHeaderSize> encode_header(const Header& header);
/// Throws BadMagic; does not judge version or type.
Header decode_header(std::span<const std::uint8_t, kHeaderSize> bytes);

std::vector<std::uint8_t> encode_frame(const Frame& frame);
/// Decodes one complete frame from a buffer holding exactly header + payload.
Frame decode_frame(std::span<const std::uint8_t> bytes);

Frame make_frame(MsgType type, std::uint64_t session_id, std::vector<std::uint8_t> payload = {});

// Payload codecs.

std::vector<std::uint8_t> encode_config(const SessionConfig& config);
SessionConfig decode_config(std::span<const std::uint8_t> payload);

struct PutReference {
    std::uint32_t object_index = 0;
    std::int32_t t = 0;
    std::int32_t layer = 0;
    FeatureMap reference;
    ObjectMask m_ref;
};
std::vector<std::uint8_t> encode_put_reference(const PutReference& msg);
PutReference decode_put_reference(std::span<const std::uint8_t> payload);

struct Rearrange {
    std::int32_t t = 0;
    std::int32_t layer = 0;
    FeatureMap target;
    std::vector<ObjectMask> target_masks;
};
std::vector<std::uint8_t> encode_rearrange(const Rearrange& msg);
Rearrange decode_rearrange(std::span<const std::uint8_t> payload);

struct Adain {
    std::int32_t t = 0;
    FeatureMap content;
    FeatureMap style;
    ObjectMask m_content;
    ObjectMask m_style;
};
std::vector<std::uint8_t> encode_adain(const Adain& msg);
Adain decode_adain(std::span<const std::uint8_t> payload);

struct ErrorInfo {
    std::uint32_t code = 0;
    std::string message;
};
std::vector<std::uint8_t> encode_error(const ErrorInfo& info);
ErrorInfo decode_error(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encode_feature_result(const FeatureMap& map);
FeatureMap decode_feature_result(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encode_flow_result(const FlowMap& flow);
FlowMap decode_flow_result(std::span<const std::uint8_t> payload);

}  // namespace xfer::wire
