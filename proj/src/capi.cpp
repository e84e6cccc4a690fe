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

#include "xfer/xfer.h"

#include <cmath>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "xfer/error.hpp"
#include "xfer/eval.hpp"
#include "xfer/matching.hpp"
#include "xfer/metrics.hpp"
#include "xfer/selfcheck.hpp"
#include "xfer/service.hpp"
#include "xfer/tensor_io.hpp"
#include "xfer/transfer.hpp"

struct xfer_feature_map {
    xfer::FeatureMap value;
};
struct xfer_mask {
    xfer::ObjectMask value;
};
struct xfer_corr {
    xfer::CorrespondenceMap value;
};
struct xfer_flow {
    xfer::FlowMap value;
};
struct xfer_image {
    xfer::RgbImage value;
};
struct xfer_config {
    xfer::SessionConfig value;
};
struct xfer_server {
    std::unique_ptr<xfer::Server> server;
};

namespace {

std::string& last_error() {
    thread_local std::string message;
    return message;
}

xfer_status record(xfer::ErrorCode code, const char* message) {
    try {
        last_error() = message;
    } catch (...) {
    }
    return static_cast<xfer_status>(code);
}

// Runs body, translating exceptions into a status and the thread's message.
template <typename Body>
xfer_status guarded(Body&& body) noexcept {
    try {
        body();
        return XFER_OK;
    } catch (const xfer::Error& e) {
        return record(e.code(), e.what());
    } catch (const std::bad_alloc&) {
        return record(xfer::ErrorCode::Internal, "out of memory");
    } catch (const std::exception& e) {
        return record(xfer::ErrorCode::Internal, e.what());
    } catch (...) {
        return record(xfer::ErrorCode::Internal, "unknown error");
    }
}

template <typename T>
void require_arg(const T* p, const char* name) {
    if (p == nullptr) {
        xfer::fail(xfer::ErrorCode::InvalidArgument, std::string(name) + " is NULL");
    }
}

template <typename Handle, typename Value>
void emit(Handle** out, Value&& value) {
    *out = new Handle{std::forward<Value>(value)};
}

}  // namespace

extern "C" {

uint32_t xfer_abi_version(void) {
    return XFER_ABI_VERSION;
}

const char* xfer_last_error(void) {
    return last_error().c_str();
}

const char* xfer_status_name(int status) {
    return xfer::error_name(static_cast<xfer::ErrorCode>(status)).data();
}

// Feature maps

xfer_status xfer_feature_map_create(uint32_t height, uint32_t width, uint32_t channels,
                                    const float* data, xfer_feature_map** out) {
    return guarded([&] {
        require_arg(out, "out");
        const std::size_t n = std::size_t{height} * width * channels;
        if (n != 0) require_arg(data, "data");
        xfer::FeatureMap map(height, width, channels, std::vector<float>(data, data + n));
        xfer::require_finite(map, "feature map");
        emit(out, std::move(map));
    });
}

xfer_status xfer_feature_map_load(const char* path, xfer_feature_map** out) {
    return guarded([&] {
        require_arg(path, "path");
        require_arg(out, "out");
        emit(out, xfer::read_feature_map(path));
    });
}

xfer_status xfer_feature_map_save(const xfer_feature_map* map, const char* path) {
    return guarded([&] {
        require_arg(map, "map");
        require_arg(path, "path");
        xfer::write_tensor(path, xfer::to_tensor(map->value));
    });
}

void xfer_feature_map_shape(const xfer_feature_map* map, uint32_t* height, uint32_t* width,
                            uint32_t* channels) {
    if (height) *height = map->value.height();
    if (width) *width = map->value.width();
    if (channels) *channels = map->value.channels();
}

const float* xfer_feature_map_data(const xfer_feature_map* map) {
    return map->value.data().data();
}

void xfer_feature_map_free(xfer_feature_map* map) {
    delete map;
}

// Masks

xfer_status xfer_mask_create(uint32_t height, uint32_t width, const uint8_t* bits, xfer_mask** out) {
    return guarded([&] {
        require_arg(out, "out");
        const std::size_t n = std::size_t{height} * width;
        if (n != 0) require_arg(bits, "bits");
        emit(out, xfer::ObjectMask(height, width, std::vector<std::uint8_t>(bits, bits + n)));
    });
}

xfer_status xfer_mask_fill(uint32_t height, uint32_t width, int value, xfer_mask** out) {
    return guarded([&] {
        require_arg(out, "out");
        emit(out, xfer::ObjectMask::filled(height, width, value != 0));
    });
}

xfer_status xfer_mask_load(const char* path, xfer_mask** out) {
    return guarded([&] {
        require_arg(path, "path");
        require_arg(out, "out");
        emit(out, xfer::read_mask(path));
    });
}

xfer_status xfer_mask_save(const xfer_mask* mask, const char* path) {
    return guarded([&] {
        require_arg(mask, "mask");
        require_arg(path, "path");
        xfer::write_tensor(path, xfer::to_tensor(mask->value));
    });
}

void xfer_mask_shape(const xfer_mask* mask, uint32_t* height, uint32_t* width) {
    if (height) *height = mask->value.height();
    if (width) *width = mask->value.width();
}

const uint8_t* xfer_mask_data(const xfer_mask* mask) {
    return mask->value.bits().data();
}

size_t xfer_mask_count(const xfer_mask* mask) {
    return mask->value.count();
}

void xfer_mask_free(xfer_mask* mask) {
    delete mask;
}

// Matching

xfer_status xfer_match(const xfer_feature_map* target, const xfer_feature_map* reference,
                       const xfer_mask* target_mask, const xfer_mask* ref_mask, double epsilon,
                       uint32_t threads, xfer_corr** out) {
    return guarded([&] {
        require_arg(target, "target");
        require_arg(reference, "reference");
        require_arg(target_mask, "target_mask");
        require_arg(ref_mask, "ref_mask");
        require_arg(out, "out");
        emit(out, xfer::masked_cosine_match(target->value, reference->value, target_mask->value,
                                            ref_mask->value, epsilon,
                                            xfer::MatchOptions{threads}));
    });
}

xfer_status xfer_brute_force_match(const xfer_feature_map* target,
                                   const xfer_feature_map* reference,
                                   const xfer_mask* target_mask, const xfer_mask* ref_mask,
                                   double epsilon, xfer_corr** out) {
    return guarded([&] {
        require_arg(target, "target");
        require_arg(reference, "reference");
        require_arg(target_mask, "target_mask");
        require_arg(ref_mask, "ref_mask");
        require_arg(out, "out");
        emit(out, xfer::brute_force_match(target->value, reference->value, target_mask->value,
                                          ref_mask->value, epsilon));
    });
}

void xfer_corr_shape(const xfer_corr* corr, uint32_t* height, uint32_t* width,
                     uint32_t* ref_height, uint32_t* ref_width) {
    if (height) *height = corr->value.height();
    if (width) *width = corr->value.width();
    if (ref_height) *ref_height = corr->value.ref_height();
    if (ref_width) *ref_width = corr->value.ref_width();
}

const uint32_t* xfer_corr_entries(const xfer_corr* corr) {
    return corr->value.entries().data();
}

xfer_status xfer_corr_save(const xfer_corr* corr, const char* path) {
    return guarded([&] {
        require_arg(corr, "corr");
        require_arg(path, "path");
        xfer::write_tensor(path, xfer::to_tensor(corr->value));
    });
}

xfer_status xfer_corr_load(const char* path, uint32_t ref_height, uint32_t ref_width,
                           xfer_corr** out) {
    return guarded([&] {
        require_arg(path, "path");
        require_arg(out, "out");
        emit(out, xfer::correspondence_from_tensor(xfer::read_tensor(path), ref_height, ref_width));
    });
}

void xfer_corr_free(xfer_corr* corr) {
    delete corr;
}

xfer_status xfer_corr_to_flow(const xfer_corr* corr, xfer_flow** out) {
    return guarded([&] {
        require_arg(corr, "corr");
        require_arg(out, "out");
        emit(out, xfer::correspondence_to_flow(corr->value));
    });
}

void xfer_flow_shape(const xfer_flow* flow, uint32_t* height, uint32_t* width) {
    if (height) *height = flow->value.height();
    if (width) *width = flow->value.width();
}

const float* xfer_flow_displacement(const xfer_flow* flow) {
    return flow->value.displacement().data();
}

const uint8_t* xfer_flow_validity(const xfer_flow* flow) {
    return flow->value.validity().data();
}

xfer_status xfer_flow_save(const xfer_flow* flow, const char* flow_path, const char* validity_path) {
    return guarded([&] {
        require_arg(flow, "flow");
        require_arg(flow_path, "flow_path");
        require_arg(validity_path, "validity_path");
        xfer::write_flow(flow->value, flow_path, validity_path);
    });
}

void xfer_flow_free(xfer_flow* flow) {
    delete flow;
}

// Images

xfer_status xfer_image_load(const char* path, xfer_image** out) {
    return guarded([&] {
        require_arg(path, "path");
        require_arg(out, "out");
        emit(out, xfer::read_image(path));
    });
}

xfer_status xfer_image_save_ppm(const xfer_image* image, const char* path) {
    return guarded([&] {
        require_arg(image, "image");
        require_arg(path, "path");
        xfer::write_ppm(path, image->value);
    });
}

void xfer_image_shape(const xfer_image* image, uint32_t* height, uint32_t* width) {
    if (height) *height = image->value.height;
    if (width) *width = image->value.width;
}

const uint8_t* xfer_image_pixels(const xfer_image* image) {
    return image->value.pixels.data();
}

void xfer_image_free(xfer_image* image) {
    delete image;
}

xfer_status xfer_render_correspondence(const xfer_corr* corr, const xfer_image* ref_colors,
                                       xfer_image** out) {
    return guarded([&] {
        require_arg(corr, "corr");
        require_arg(ref_colors, "ref_colors");
        require_arg(out, "out");
        emit(out, xfer::render_correspondence(corr->value, ref_colors->value));
    });
}

// Configuration

xfer_status xfer_config_default(xfer_config** out) {
    return guarded([&] {
        require_arg(out, "out");
        emit(out, xfer::SessionConfig{});
    });
}

xfer_status xfer_config_parse(const char* text, xfer_config** out) {
    return guarded([&] {
        require_arg(text, "text");
        require_arg(out, "out");
        emit(out, xfer::parse_session_config(text));
    });
}

xfer_status xfer_config_load(const char* path, xfer_config** out) {
    return guarded([&] {
        require_arg(path, "path");
        require_arg(out, "out");
        const auto bytes = xfer::read_file_bytes(path);
        emit(out, xfer::parse_session_config(std::string(bytes.begin(), bytes.end())));
    });
}

double xfer_config_epsilon(const xfer_config* config) {
    return config->value.epsilon;
}

void xfer_config_free(xfer_config* config) {
    delete config;
}

// Transfer

xfer_status xfer_rearrange(const xfer_feature_map* reference, const xfer_corr* corr,
                           xfer_feature_map** out) {
    return guarded([&] {
        require_arg(reference, "reference");
        require_arg(corr, "corr");
        require_arg(out, "out");
        emit(out, xfer::rearrange(reference->value, corr->value));
    });
}

xfer_status xfer_inject(const xfer_feature_map* rearranged, const xfer_feature_map* target,
                        const xfer_mask* target_mask, xfer_feature_map** out) {
    return guarded([&] {
        require_arg(rearranged, "rearranged");
        require_arg(target, "target");
        require_arg(target_mask, "target_mask");
        require_arg(out, "out");
        emit(out, xfer::inject(rearranged->value, target->value, target_mask->value));
    });
}

xfer_status xfer_adain(const xfer_feature_map* content, const xfer_feature_map* style,
                       const xfer_mask* content_mask, const xfer_mask* style_mask, double epsilon,
                       xfer_feature_map** out) {
    return guarded([&] {
        require_arg(content, "content");
        require_arg(style, "style");
        require_arg(content_mask, "content_mask");
        require_arg(style_mask, "style_mask");
        require_arg(out, "out");
        emit(out, xfer::adain_masked(content->value, style->value, content_mask->value,
                                     style_mask->value, epsilon));
    });
}

xfer_status xfer_transfer_step(const xfer_feature_map* target, size_t n_objects,
                               const xfer_feature_map* const* references,
                               const xfer_mask* const* ref_masks,
                               const xfer_mask* const* target_masks, const xfer_config* config,
                               int32_t t, int32_t layer, xfer_feature_map** out) {
    return guarded([&] {
        require_arg(target, "target");
        require_arg(config, "config");
        require_arg(out, "out");
        if (n_objects != 0) {
            require_arg(references, "references");
            require_arg(ref_masks, "ref_masks");
            require_arg(target_masks, "target_masks");
        }
        std::vector<xfer::ObjectPair> objects;
        objects.reserve(n_objects);
        for (size_t i = 0; i < n_objects; ++i) {
            require_arg(references[i], "references[i]");
            require_arg(ref_masks[i], "ref_masks[i]");
            require_arg(target_masks[i], "target_masks[i]");
            objects.push_back({references[i]->value, ref_masks[i]->value, target_masks[i]->value});
        }
        emit(out, xfer::transfer_step(target->value, objects, config->value, t, layer));
    });
}

// Metrics

xfer_status xfer_eval_manifest(const char* kind, const char* manifest_path, const char* report_path,
                               uint32_t threads, double* mean) {
    return guarded([&] {
        require_arg(kind, "kind");
        require_arg(manifest_path, "manifest_path");
        require_arg(report_path, "report_path");
        const auto parsed = xfer::parse_eval_kind(kind);
        if (!parsed) {
            xfer::fail(xfer::ErrorCode::InvalidArgument, std::string("unknown eval kind '") + kind + "'");
        }
        const xfer::EvalReport report =
            xfer::run_eval(*parsed, xfer::read_manifest(manifest_path), threads);
        const std::string text = xfer::format_report(report);
        xfer::write_file_bytes(report_path,
                               {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
        if (mean) {
            *mean = report.mean.value_or(std::numeric_limits<double>::quiet_NaN());
        }
    });
}

xfer_status xfer_keypoint_ap(const double* oks_values, size_t n_values, const double* thresholds,
                             size_t n_thresholds, double* out) {
    return guarded([&] {
        require_arg(out, "out");
        if (n_values != 0) require_arg(oks_values, "oks_values");
        const std::vector<double> defaults = xfer::default_ap_thresholds();
        std::span<const double> taus = defaults;
        if (thresholds != nullptr) {
            taus = std::span<const double>(thresholds, n_thresholds);
        }
        *out = xfer::keypoint_ap(std::span<const double>(oks_values, n_values), taus);
    });
}

// Self-check

xfer_status xfer_selfcheck(uint32_t seeds, uint32_t max_dim, uint64_t base_seed, uint32_t flags,
                           uint32_t* passed, uint32_t* failed, xfer_message_fn on_failure,
                           void* user) {
    return guarded([&] {
        require_arg(passed, "passed");
        require_arg(failed, "failed");
        xfer::SelfcheckOptions options;
        options.seeds = seeds;
        options.max_dim = max_dim;
        options.base_seed = base_seed;
        options.inject_fault = (flags & XFER_SELFCHECK_INJECT_FAULT) != 0;
        const auto report = xfer::run_selfcheck(options);
        if (on_failure) {
            for (const auto& msg : report.failures) on_failure(msg.c_str(), user);
        }
        *passed = report.passed;
        *failed = report.failed;
    });
}

// Service

xfer_status xfer_server_start(const char* host, uint16_t port, uint32_t threads, xfer_server** out) {
    return guarded([&] {
        require_arg(host, "host");
        require_arg(out, "out");
        xfer::ServerOptions options;
        options.host = host;
        options.port = port;
        options.match.threads = threads;
        auto handle = std::make_unique<xfer_server>();
        handle->server = std::make_unique<xfer::Server>(std::move(options));
        *out = handle.release();
    });
}

uint16_t xfer_server_port(const xfer_server* server) {
    return server->server->port();
}

void xfer_server_stop(xfer_server* server) {
    if (server) server->server->stop();
}

void xfer_server_wait(xfer_server* server) {
    if (server) server->server->wait();
}

void xfer_server_free(xfer_server* server) {
    delete server;
}

}  // extern "C"
