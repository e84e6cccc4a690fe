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

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "xfer/error.hpp"

namespace xfer {

// Little-endian encoders used by the tensor container and the wire protocol.

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { put_le(v); }
    void u32(std::uint32_t v) { put_le(v); }
    void u64(std::uint64_t v) { put_le(v); }
    void i32(std::int32_t v) { put_le(static_cast<std::uint32_t>(v)); }
    void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
    void raw(std::span<const std::uint8_t> bytes) {
        buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    }
    void f32_array(std::span<const float> values);
    void u32_array(std::span<const std::uint32_t> values);

    std::vector<std::uint8_t>& bytes() noexcept { return buf_; }
    std::vector<std::uint8_t> take() noexcept { return std::move(buf_); }

private:
    template <typename T>
    void put_le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader; running past the end throws TruncatedPayload.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get_le<std::uint8_t>()); }
    std::uint16_t u16() { return get_le<std::uint16_t>(); }
    std::uint32_t u32() { return get_le<std::uint32_t>(); }
    std::uint64_t u64() { return get_le<std::uint64_t>(); }
    std::int32_t i32() { return static_cast<std::int32_t>(get_le<std::uint32_t>()); }
    double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
    std::span<const std::uint8_t> raw(std::size_t n) {
        need(n);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }
    void f32_array(std::size_t n, std::vector<float>& out);
    void u32_array(std::size_t n, std::vector<std::uint32_t>& out);

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }

    void need(std::size_t n) const {
        if (n > remaining()) {
            fail(ErrorCode::TruncatedPayload,
                 "need " + std::to_string(n) + " bytes, have " + std::to_string(remaining()));
        }
    }

private:
    template <typename T>
    T get_le() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
        }
        pos_ += sizeof(T);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline void ByteWriter::f32_array(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
        buf_.insert(buf_.end(), p, p + values.size_bytes());
    } else {
        for (float v : values) u32(std::bit_cast<std::uint32_t>(v));
    }
}

inline void ByteWriter::u32_array(std::span<const std::uint32_t> values) {
    if constexpr (std::endian::native == std::endian::little) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(values.data());
        buf_.insert(buf_.end(), p, p + values.size_bytes());
    } else {
        for (auto v : values) u32(v);
    }
}

inline void ByteReader::f32_array(std::size_t n, std::vector<float>& out) {
    need(n * 4);
    out.resize(n);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data(), data_.data() + pos_, n * 4);
        pos_ += n * 4;
    } else {
        for (auto& v : out) v = std::bit_cast<float>(u32());
    }
}

inline void ByteReader::u32_array(std::size_t n, std::vector<std::uint32_t>& out) {
    need(n * 4);
    out.resize(n);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data(), data_.data() + pos_, n * 4);
        pos_ += n * 4;
    } else {
        for (auto& v : out) v = u32();
    }
}

}  // namespace xfer
