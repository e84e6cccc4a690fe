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

#include "xfer/protocol.hpp"

#include <algorithm>

#include "xfer/bytes.hpp"
#include "xfer/tensor_io.hpp"

namespace xfer::wire {

namespace {

void finish(const ByteReader& r, const char* what) {
    if (r.remaining() != 0) {
        fail(ErrorCode::MalformedFrame,
             std::string(what) + ": " + std::to_string(r.remaining()) + " unexpected trailing bytes");
    }
}

FeatureMap read_feature(ByteReader& r) {
    return feature_map_from_tensor(decode_tensor_body(r));
}

ObjectMask read_mask(ByteReader& r) {
    return mask_from_tensor(decode_tensor_body(r));
}

}  // namespace

bool is_known_type(std::uint16_t raw) noexcept {
    return (raw >= 1 && raw <= 6) || (raw >= 100 && raw <= 102);
}

std::array<std::uint8_t, kHeaderSize> encode_header(const Header& header) {
    ByteWriter w;
    w.raw(kMagic);
    w.u16(header.version);
    w.u16(header.msg_type);
    w.u64(header.session_id);
    w.u64(header.payload_len);
    std::array<std::uint8_t, kHeaderSize> out{};
    std::copy(w.bytes().begin(), w.bytes().end(), out.begin());
    return out;
}

Header decode_header(std::span<const std::uint8_t, kHeaderSize> bytes) {
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        fail(ErrorCode::BadMagic, "frame does not start with EFAE");
    }
    ByteReader r(std::span<const std::uint8_t>(bytes).subspan(4));
    Header h;
    h.version = r.u16();
    h.msg_type = r.u16();
    h.session_id = r.u64();
    h.payload_len = r.u64();
    return h;
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
    Header h = frame.header;
    h.payload_len = frame.payload.size();
    const auto head = encode_header(h);
    std::vector<std::uint8_t> out(head.size() + frame.payload.size());
    std::copy(head.begin(), head.end(), out.begin());
    std::copy(frame.payload.begin(), frame.payload.end(), out.begin() + head.size());
    return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) {
        fail(ErrorCode::TruncatedPayload, "frame shorter than its header");
    }
    Frame f;
    f.header = decode_header(bytes.first<kHeaderSize>());
    if (f.header.payload_len != bytes.size() - kHeaderSize) {
        fail(ErrorCode::MalformedFrame, "payload_len does not match the frame size");
    }
    f.payload.assign(bytes.begin() + kHeaderSize, bytes.end());
    return f;
}

Frame make_frame(MsgType type, std::uint64_t session_id, std::vector<std::uint8_t> payload) {
    Frame f;
    f.header.msg_type = static_cast<std::uint16_t>(type);
    f.header.session_id = session_id;
    f.header.payload_len = payload.size();
    f.payload = std::move(payload);
    return f;
}

std::vector<std::uint8_t> encode_config(const SessionConfig& config) {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(config.total_steps));
    w.i32(config.inject_t_range.lo);
    w.i32(config.inject_t_range.hi);
    w.u32(static_cast<std::uint32_t>(config.inject_layers.size()));
    for (int l : config.inject_layers) w.i32(l);
    w.i32(config.adain_t_range.lo);
    w.i32(config.adain_t_range.hi);
    w.i32(config.readout_t);
    w.i32(config.readout_layer);
    w.f64(config.epsilon);
    return w.take();
}

SessionConfig decode_config(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    SessionConfig c;
    const std::uint32_t total = r.u32();
    if (total > 0x7FFFFFFFu) {
        fail(ErrorCode::InvalidConfig, "total_steps out of range");
    }
    c.total_steps = static_cast<int>(total);
    c.inject_t_range.lo = r.i32();
    c.inject_t_range.hi = r.i32();
    const std::uint32_t n = r.u32();
    r.need(std::size_t{n} * 4);
    c.inject_layers.resize(n);
    for (auto& l : c.inject_layers) l = r.i32();
    c.adain_t_range.lo = r.i32();
    c.adain_t_range.hi = r.i32();
    c.readout_t = r.i32();
    c.readout_layer = r.i32();
    c.epsilon = r.f64();
    finish(r, "config");
    return c;
}

std::vector<std::uint8_t> encode_put_reference(const PutReference& msg) {
    ByteWriter w;
    w.u32(msg.object_index);
    w.i32(msg.t);
    w.i32(msg.layer);
    encode_tensor_body(to_tensor(msg.reference), w);
    encode_tensor_body(to_tensor(msg.m_ref), w);
    return w.take();
}

PutReference decode_put_reference(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    PutReference m;
    m.object_index = r.u32();
    m.t = r.i32();
    m.layer = r.i32();
    m.reference = read_feature(r);
    m.m_ref = read_mask(r);
    finish(r, "PUT_REFERENCE");
    return m;
}

std::vector<std::uint8_t> encode_rearrange(const Rearrange& msg) {
    ByteWriter w;
    w.i32(msg.t);
    w.i32(msg.layer);
    encode_tensor_body(to_tensor(msg.target), w);
    w.u32(static_cast<std::uint32_t>(msg.target_masks.size()));
    for (const auto& m : msg.target_masks) encode_tensor_body(to_tensor(m), w);
    return w.take();
}

Rearrange decode_rearrange(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    Rearrange m;
    m.t = r.i32();
    m.layer = r.i32();
    m.target = read_feature(r);
    const std::uint32_t n = r.u32();
    // Each mask needs at least a 4-byte tensor header.
    r.need(std::size_t{n} * 4);
    m.target_masks.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) m.target_masks.push_back(read_mask(r));
    finish(r, "REARRANGE");
    return m;
}

std::vector<std::uint8_t> encode_adain(const Adain& msg) {
    ByteWriter w;
    w.i32(msg.t);
    encode_tensor_body(to_tensor(msg.content), w);
    encode_tensor_body(to_tensor(msg.style), w);
    encode_tensor_body(to_tensor(msg.m_content), w);
    encode_tensor_body(to_tensor(msg.m_style), w);
    return w.take();
}

Adain decode_adain(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    Adain m;
    m.t = r.i32();
    m.content = read_feature(r);
    m.style = read_feature(r);
    m.m_content = read_mask(r);
    m.m_style = read_mask(r);
    finish(r, "ADAIN");
    return m;
}

std::vector<std::uint8_t> encode_error(const ErrorInfo& info) {
    ByteWriter w;
    w.u32(info.code);
    w.u32(static_cast<std::uint32_t>(info.message.size()));
    w.raw({reinterpret_cast<const std::uint8_t*>(info.message.data()), info.message.size()});
    return w.take();
}

ErrorInfo decode_error(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    ErrorInfo info;
    info.code = r.u32();
    const std::uint32_t n = r.u32();
    const auto text = r.raw(n);
    info.message.assign(text.begin(), text.end());
    finish(r, "ERROR");
    return info;
}

std::vector<std::uint8_t> encode_feature_result(const FeatureMap& map) {
    ByteWriter w;
    w.u32(1);
    encode_tensor_body(to_tensor(map), w);
    return w.take();
}

FeatureMap decode_feature_result(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    if (r.u32() != 1) {
        fail(ErrorCode::MalformedFrame, "expected a single tensor in the result");
    }
    Tensor t = decode_tensor_body(r);
    finish(r, "TENSOR_RESULT");
    if (t.dtype() != DType::F32 || t.dims.size() != 3) {
        fail(ErrorCode::MalformedFrame, "feature result must be an f32 rank-3 tensor");
    }
    return FeatureMap(t.dims[0], t.dims[1], t.dims[2], std::get<std::vector<float>>(t.values));
}

std::vector<std::uint8_t> encode_flow_result(const FlowMap& flow) {
    ByteWriter w;
    w.u32(2);
    encode_tensor_body(flow_displacement_tensor(flow), w);
    encode_tensor_body(flow_validity_tensor(flow), w);
    return w.take();
}

FlowMap decode_flow_result(std::span<const std::uint8_t> payload) {
    ByteReader r(payload);
    if (r.u32() != 2) {
        fail(ErrorCode::MalformedFrame, "expected displacement and validity tensors");
    }
    Tensor disp = decode_tensor_body(r);
    Tensor valid = decode_tensor_body(r);
    finish(r, "TENSOR_RESULT");
    return flow_from_tensors(disp, valid);
}

}  // namespace xfer::wire
