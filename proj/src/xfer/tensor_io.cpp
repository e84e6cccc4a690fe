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

#include "xfer/tensor_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "xfer/error.hpp"

namespace xfer {

namespace {

std::size_t dtype_size(DType d) {
    switch (d) {
        case DType::F32: return 4;
        case DType::U8: return 1;
        case DType::U32: return 4;
    }
    return 0;
}

std::string describe(const std::filesystem::path& path) {
    return "'" + path.string() + "'";
}

void expect_shape(const Tensor& t, DType dtype, std::size_t ndim, const char* what) {
    if (t.dtype() != dtype) {
        fail(ErrorCode::ParseError, std::string(what) + ": unexpected dtype");
    }
    if (t.dims.size() != ndim) {
        fail(ErrorCode::ParseError, std::string(what) + ": expected " + std::to_string(ndim) +
                                        " dims, got " + std::to_string(t.dims.size()));
    }
}

}  // namespace

DType Tensor::dtype() const noexcept {
    switch (values.index()) {
        case 0: return DType::F32;
        case 1: return DType::U8;
        default: return DType::U32;
    }
}

std::size_t Tensor::element_count() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, values);
}

void encode_tensor_body(const Tensor& tensor, ByteWriter& out) {
    std::size_t expected = 1;
    for (auto d : tensor.dims) expected *= d;
    if (expected != tensor.element_count()) {
        fail(ErrorCode::DimensionMismatch, "tensor element count does not match dims");
    }
    if (tensor.dims.size() > 255) {
        fail(ErrorCode::InvalidArgument, "tensor rank above 255");
    }
    out.u16(kTensorVersion);
    out.u8(static_cast<std::uint8_t>(tensor.dtype()));
    out.u8(static_cast<std::uint8_t>(tensor.dims.size()));
    for (auto d : tensor.dims) out.u32(d);
    std::visit(
        [&](const auto& v) {
            using T = typename std::decay_t<decltype(v)>::value_type;
            if constexpr (std::is_same_v<T, float>) {
                out.f32_array(v);
            } else if constexpr (std::is_same_v<T, std::uint32_t>) {
                out.u32_array(v);
            } else {
                out.raw(v);
            }
        },
        tensor.values);
}

Tensor decode_tensor_body(ByteReader& in) {
    const std::uint16_t version = in.u16();
    if (version != kTensorVersion) {
        fail(ErrorCode::ParseError, "unsupported tensor version " + std::to_string(version));
    }
    const std::uint8_t dtype_raw = in.u8();
    if (dtype_raw < 1 || dtype_raw > 3) {
        fail(ErrorCode::UnsupportedDtype, "unsupported tensor dtype " + std::to_string(dtype_raw));
    }
    const auto dtype = static_cast<DType>(dtype_raw);
    const std::uint8_t ndim = in.u8();
    Tensor t;
    t.dims.resize(ndim);
    // Checked against the remaining bytes before anything is allocated.
    unsigned __int128 count = 1;
    for (auto& d : t.dims) {
        d = in.u32();
        count *= d;
    }
    const unsigned __int128 bytes = count * dtype_size(dtype);
    if (bytes > in.remaining()) {
        fail(ErrorCode::TruncatedPayload, "tensor payload shorter than its header claims");
    }
    const auto n = static_cast<std::size_t>(count);
    switch (dtype) {
        case DType::F32: {
            std::vector<float> v;
            in.f32_array(n, v);
            t.values = std::move(v);
            break;
        }
        case DType::U8: {
            auto raw = in.raw(n);
            t.values = std::vector<std::uint8_t>(raw.begin(), raw.end());
            break;
        }
        case DType::U32: {
            std::vector<std::uint32_t> v;
            in.u32_array(n, v);
            t.values = std::move(v);
            break;
        }
    }
    return t;
}

std::vector<std::uint8_t> encode_tensor_file(const Tensor& tensor) {
    ByteWriter w;
    for (char c : kTensorMagic) w.u8(static_cast<std::uint8_t>(c));
    encode_tensor_body(tensor, w);
    return w.take();
}

Tensor decode_tensor_file(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4,
                                        reinterpret_cast<const std::uint8_t*>(kTensorMagic))) {
        fail(ErrorCode::BadMagic, "not a tensor file (bad magic)");
    }
    ByteReader r(bytes.subspan(4));
    Tensor t = decode_tensor_body(r);
    if (r.remaining() != 0) {
        fail(ErrorCode::ParseError, "trailing bytes after tensor payload");
    }
    return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + describe(path));
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) {
        fail(ErrorCode::IoError, "read failed for " + describe(path));
    }
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoError, "cannot open " + describe(path) + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(ErrorCode::IoError, "write failed for " + describe(path));
    }
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
    write_file_bytes(path, encode_tensor_file(tensor));
}

Tensor read_tensor(const std::filesystem::path& path) {
    try {
        return decode_tensor_file(read_file_bytes(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        fail(e.code(), describe(path) + ": " + e.what());
    }
}

Tensor to_tensor(const FeatureMap& map) {
    return {{map.height(), map.width(), map.channels()},
            std::vector<float>(map.data().begin(), map.data().end())};
}

Tensor to_tensor(const ObjectMask& mask) {
    return {{mask.height(), mask.width()},
            std::vector<std::uint8_t>(mask.bits().begin(), mask.bits().end())};
}

Tensor to_tensor(const CorrespondenceMap& corr) {
    return {{corr.height(), corr.width()},
            std::vector<std::uint32_t>(corr.entries().begin(), corr.entries().end())};
}

Tensor to_tensor(const DepthMap& depth) {
    return {{depth.height(), depth.width()},
            std::vector<float>(depth.values().begin(), depth.values().end())};
}

Tensor to_tensor(const RgbImage& image) {
    return {{image.height, image.width, 3}, image.pixels};
}

Tensor embedding_tensor(std::span<const float> values) {
    return {{static_cast<std::uint32_t>(values.size())},
            std::vector<float>(values.begin(), values.end())};
}

FeatureMap feature_map_from_tensor(const Tensor& tensor) {
    expect_shape(tensor, DType::F32, 3, "feature map");
    FeatureMap map(tensor.dims[0], tensor.dims[1], tensor.dims[2],
                   std::get<std::vector<float>>(tensor.values));
    require_finite(map, "feature map");
    return map;
}

ObjectMask mask_from_tensor(const Tensor& tensor) {
    expect_shape(tensor, DType::U8, 2, "mask");
    return ObjectMask(tensor.dims[0], tensor.dims[1],
                      std::get<std::vector<std::uint8_t>>(tensor.values));
}

CorrespondenceMap correspondence_from_tensor(const Tensor& tensor, std::uint32_t ref_height,
                                             std::uint32_t ref_width) {
    expect_shape(tensor, DType::U32, 2, "correspondence");
    return CorrespondenceMap(tensor.dims[0], tensor.dims[1], ref_height, ref_width,
                             std::get<std::vector<std::uint32_t>>(tensor.values));
}

DepthMap depth_from_tensor(const Tensor& tensor) {
    expect_shape(tensor, DType::F32, 2, "depth map");
    return DepthMap(tensor.dims[0], tensor.dims[1], std::get<std::vector<float>>(tensor.values));
}

RgbImage image_from_tensor(const Tensor& tensor) {
    expect_shape(tensor, DType::U8, 3, "image");
    if (tensor.dims[2] != 3) {
        fail(ErrorCode::ParseError, "image tensor must have 3 channels");
    }
    return {tensor.dims[0], tensor.dims[1], std::get<std::vector<std::uint8_t>>(tensor.values)};
}

EmbeddingVector embedding_from_tensor(const Tensor& tensor) {
    expect_shape(tensor, DType::F32, 1, "embedding");
    auto values = std::get<std::vector<float>>(tensor.values);
    if (!std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); })) {
        fail(ErrorCode::NonFiniteData, "embedding contains non-finite values");
    }
    return values;
}

FeatureMap read_feature_map(const std::filesystem::path& path) {
    return feature_map_from_tensor(read_tensor(path));
}

ObjectMask read_mask(const std::filesystem::path& path) {
    return mask_from_tensor(read_tensor(path));
}

DepthMap read_depth(const std::filesystem::path& path) {
    return depth_from_tensor(read_tensor(path));
}

EmbeddingVector read_embedding(const std::filesystem::path& path) {
    return embedding_from_tensor(read_tensor(path));
}

Tensor flow_displacement_tensor(const FlowMap& flow) {
    return {{flow.height(), flow.width(), 2},
            std::vector<float>(flow.displacement().begin(), flow.displacement().end())};
}

Tensor flow_validity_tensor(const FlowMap& flow) {
    return {{flow.height(), flow.width()},
            std::vector<std::uint8_t>(flow.validity().begin(), flow.validity().end())};
}

FlowMap flow_from_tensors(const Tensor& displacement, const std::optional<Tensor>& validity) {
    expect_shape(displacement, DType::F32, 3, "flow");
    if (displacement.dims[2] != 2) {
        fail(ErrorCode::ParseError, "flow tensor must be h x w x 2");
    }
    const std::uint32_t h = displacement.dims[0];
    const std::uint32_t w = displacement.dims[1];
    std::vector<std::uint8_t> valid(std::size_t{h} * w, 1);
    if (validity) {
        expect_shape(*validity, DType::U8, 2, "flow validity");
        if (validity->dims[0] != h || validity->dims[1] != w) {
            fail(ErrorCode::ParseError, "flow validity grid differs from flow grid");
        }
        valid = std::get<std::vector<std::uint8_t>>(validity->values);
    }
    return FlowMap(h, w, std::get<std::vector<float>>(displacement.values), std::move(valid));
}

FlowMap read_flow(const std::filesystem::path& flow_path,
                  const std::optional<std::filesystem::path>& validity_path) {
    std::optional<Tensor> validity;
    if (validity_path) {
        validity = read_tensor(*validity_path);
    }
    return flow_from_tensors(read_tensor(flow_path), validity);
}

void write_flow(const FlowMap& flow, const std::filesystem::path& flow_path,
                const std::filesystem::path& validity_path) {
    write_tensor(flow_path, flow_displacement_tensor(flow));
    write_tensor(validity_path, flow_validity_tensor(flow));
}

namespace {

double parse_double(const std::string& token, int line_no) {
    double v = 0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        fail(ErrorCode::ParseError,
             "keypoints line " + std::to_string(line_no) + ": bad number '" + token + "'");
    }
    return v;
}

}  // namespace

KeypointSet parse_keypoints(const std::string& text) {
    KeypointSet set;
    bool have_scale = false;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::vector<std::string> tokens{std::istream_iterator<std::string>(fields), {}};
        if (tokens.empty() || tokens[0][0] == '#') {
            continue;
        }
        if (!have_scale) {
            if (tokens.size() != 2 || tokens[0] != "scale") {
                fail(ErrorCode::ParseError, "keypoints file must start with 'scale s'");
            }
            set.scale = parse_double(tokens[1], line_no);
            have_scale = true;
            continue;
        }
        if (tokens.size() != 4) {
            fail(ErrorCode::ParseError,
                 "keypoints line " + std::to_string(line_no) + ": expected 'x y v kappa'");
        }
        KeypointSet::Point p;
        p.x = parse_double(tokens[0], line_no);
        p.y = parse_double(tokens[1], line_no);
        const double v = parse_double(tokens[2], line_no);
        if (v != std::floor(v)) {
            fail(ErrorCode::ParseError, "keypoint visibility must be an integer");
        }
        p.visibility = static_cast<int>(v);
        p.kappa = parse_double(tokens[3], line_no);
        set.points.push_back(p);
    }
    if (!have_scale) {
        fail(ErrorCode::ParseError, "keypoints file lacks a 'scale' line");
    }
    set.validate();
    return set;
}

std::string format_keypoints(const KeypointSet& keypoints) {
    std::ostringstream os;
    os.precision(17);
    os << "scale " << keypoints.scale << '\n';
    for (const auto& p : keypoints.points) {
        os << p.x << ' ' << p.y << ' ' << p.visibility << ' ' << p.kappa << '\n';
    }
    return os.str();
}

KeypointSet read_keypoints(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_keypoints(std::string(bytes.begin(), bytes.end()));
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
    const std::string header =
        "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels.begin(), image.pixels.end());
    return out;
}

RgbImage decode_ppm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&]() -> std::uint32_t {
        skip_space();
        std::uint64_t v = 0;
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 0xFFFFFFFFu) fail(ErrorCode::ParseError, "PPM header value too large");
            ++pos;
        }
        if (pos == start) fail(ErrorCode::ParseError, "malformed PPM header");
        return static_cast<std::uint32_t>(v);
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
        fail(ErrorCode::BadMagic, "not a binary PPM (P6) image");
    }
    pos = 2;
    RgbImage img;
    img.width = read_uint();
    img.height = read_uint();
    const std::uint32_t maxval = read_uint();
    if (maxval != 255) {
        fail(ErrorCode::ParseError, "only maxval 255 PPM images are supported");
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        fail(ErrorCode::ParseError, "malformed PPM header");
    }
    ++pos;
    const std::size_t n = img.pixel_count() * 3;
    if (bytes.size() - pos < n) {
        fail(ErrorCode::TruncatedPayload, "PPM pixel data shorter than header claims");
    }
    img.pixels.assign(bytes.begin() + pos, bytes.begin() + pos + n);
    return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
    write_file_bytes(path, encode_ppm(image));
}

RgbImage read_image(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') {
        return decode_ppm(bytes);
    }
    return image_from_tensor(decode_tensor_file(bytes));
}

RgbImage render_correspondence(const CorrespondenceMap& corr, const RgbImage& ref_colors) {
    const std::size_t ref_pixels = ref_colors.pixel_count();
    RgbImage out{corr.height(), corr.width(), std::vector<std::uint8_t>(corr.pixel_count() * 3, 0)};
    for (std::size_t q = 0; q < corr.pixel_count(); ++q) {
        const std::uint32_t p = corr[q];
        if (p == CorrespondenceMap::kUnmatched) continue;
        if (p >= ref_pixels) {
            fail(ErrorCode::IndexOutOfRange, "matched index outside reference image");
        }
        std::copy_n(ref_colors.pixels.begin() + std::size_t{p} * 3, 3, out.pixels.begin() + q * 3);
    }
    return out;
}

}  // namespace xfer
