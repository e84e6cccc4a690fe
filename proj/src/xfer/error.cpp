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

#include "xfer/error.hpp"

namespace xfer {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Ok: return "Ok";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::UnknownMessageType: return "UnknownMessageType";
        case ErrorCode::MalformedFrame: return "MalformedFrame";
        case ErrorCode::UnknownSession: return "UnknownSession";
        case ErrorCode::MissingReference: return "MissingReference";
        case ErrorCode::NoReadoutRecorded: return "NoReadoutRecorded";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::ChannelMismatch: return "ChannelMismatch";
        case ErrorCode::NonFiniteData: return "NonFiniteData";
        case ErrorCode::EmptyReferenceMask: return "EmptyReferenceMask";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::OverlappingTargetMasks: return "OverlappingTargetMasks";
        case ErrorCode::LayoutMismatch: return "LayoutMismatch";
        case ErrorCode::EmptyList: return "EmptyList";
        case ErrorCode::EmptyUnion: return "EmptyUnion";
        case ErrorCode::NoVisibleKeypoints: return "NoVisibleKeypoints";
        case ErrorCode::EmptyValidity: return "EmptyValidity";
        case ErrorCode::TruncatedPayload: return "TruncatedPayload";
        case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace xfer
