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
#include <stdexcept>
#include <string>
#include <string_view>

namespace xfer {

// Numeric values are part of the wire protocol and the C API; never renumber.
enum class ErrorCode : std::uint32_t {
    Ok = 0,
    VersionMismatch = 1,
    BadMagic = 2,
    UnknownMessageType = 3,
    MalformedFrame = 4,
    UnknownSession = 5,
    MissingReference = 6,
    NoReadoutRecorded = 7,
    InvalidConfig = 8,
    ChannelMismatch = 9,
    NonFiniteData = 10,
    EmptyReferenceMask = 11,
    EmptyMask = 12,
    DimensionMismatch = 13,
    IndexOutOfRange = 14,
    LengthMismatch = 15,
    OverlappingTargetMasks = 16,
    LayoutMismatch = 17,
    EmptyList = 18,
    EmptyUnion = 19,
    NoVisibleKeypoints = 20,
    EmptyValidity = 21,
    TruncatedPayload = 22,
    UnsupportedDtype = 23,
    ParseError = 24,
    InvariantViolation = 25,
    IoError = 26,
    InvalidArgument = 27,
    Internal = 28,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const char* message) {
    if (!condition) {
        fail(code, message);
    }
}

}  // namespace xfer
