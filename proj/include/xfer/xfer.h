/*
 * Copyright 2026 The xfer Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the xfer appearance-transfer engine.
 *
 * Conventions:
 *   - Every fallible call returns xfer_status; XFER_OK is 0. On failure the
 *     out-parameters are untouched and xfer_last_error() holds a message for
 *     the calling thread.
 *   - Objects are opaque handles, immutable once created, and owned by the
 *     caller; release each with its *_free function (NULL is accepted).
 *   - Pixels are linearized row-major (q = y * width + x). Feature data is
 *     (y, x, channel) row-major float32.
 *   - Unmatched correspondence entries are XFER_UNMATCHED.
 */

#ifndef XFER_XFER_H_
#define XFER_XFER_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define XFER_API __declspec(dllexport)
#else
#  define XFER_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define XFER_ABI_VERSION 1u
#define XFER_UNMATCHED 0xFFFFFFFFu

/* Numeric values match the ERROR codes of the wire protocol. */
typedef enum xfer_status {
    XFER_OK = 0,
    XFER_ERR_VERSION_MISMATCH = 1,
    XFER_ERR_BAD_MAGIC = 2,
    XFER_ERR_UNKNOWN_MESSAGE_TYPE = 3,
    XFER_ERR_MALFORMED_FRAME = 4,
    XFER_ERR_UNKNOWN_SESSION = 5,
    XFER_ERR_MISSING_REFERENCE = 6,
    XFER_ERR_NO_READOUT_RECORDED = 7,
    XFER_ERR_INVALID_CONFIG = 8,
    XFER_ERR_CHANNEL_MISMATCH = 9,
    XFER_ERR_NON_FINITE_DATA = 10,
    XFER_ERR_EMPTY_REFERENCE_MASK = 11,
    XFER_ERR_EMPTY_MASK = 12,
    XFER_ERR_DIMENSION_MISMATCH = 13,
    XFER_ERR_INDEX_OUT_OF_RANGE = 14,
    XFER_ERR_LENGTH_MISMATCH = 15,
    XFER_ERR_OVERLAPPING_TARGET_MASKS = 16,
    XFER_ERR_LAYOUT_MISMATCH = 17,
    XFER_ERR_EMPTY_LIST = 18,
    XFER_ERR_EMPTY_UNION = 19,
    XFER_ERR_NO_VISIBLE_KEYPOINTS = 20,
    XFER_ERR_EMPTY_VALIDITY = 21,
    XFER_ERR_TRUNCATED_PAYLOAD = 22,
    XFER_ERR_UNSUPPORTED_DTYPE = 23,
    XFER_ERR_PARSE = 24,
    XFER_ERR_INVARIANT_VIOLATION = 25,
    XFER_ERR_IO = 26,
    XFER_ERR_INVALID_ARGUMENT = 27,
    XFER_ERR_INTERNAL = 28
} xfer_status;

typedef struct xfer_feature_map xfer_feature_map;
typedef struct xfer_mask xfer_mask;
typedef struct xfer_corr xfer_corr;
typedef struct xfer_flow xfer_flow;
typedef struct xfer_image xfer_image;
typedef struct xfer_config xfer_config;
typedef struct xfer_server xfer_server;

XFER_API uint32_t xfer_abi_version(void);
XFER_API const char* xfer_last_error(void);
XFER_API const char* xfer_status_name(int status);

/* Feature maps ----------------------------------------------------------- */

/* Copies h*w*c floats from data. Rejects NaN/Inf. */
XFER_API xfer_status xfer_feature_map_create(uint32_t height, uint32_t width, uint32_t channels,
                                             const float* data, xfer_feature_map** out);
XFER_API xfer_status xfer_feature_map_load(const char* path, xfer_feature_map** out);
XFER_API xfer_status xfer_feature_map_save(const xfer_feature_map* map, const char* path);
XFER_API void xfer_feature_map_shape(const xfer_feature_map* map, uint32_t* height,
                                     uint32_t* width, uint32_t* channels);
XFER_API const float* xfer_feature_map_data(const xfer_feature_map* map);
XFER_API void xfer_feature_map_free(xfer_feature_map* map);

/* Masks ------------------------------------------------------------------ */

/* Any nonzero byte counts as set. */
XFER_API xfer_status xfer_mask_create(uint32_t height, uint32_t width, const uint8_t* bits,
                                      xfer_mask** out);
XFER_API xfer_status xfer_mask_fill(uint32_t height, uint32_t width, int value, xfer_mask** out);
XFER_API xfer_status xfer_mask_load(const char* path, xfer_mask** out);
XFER_API xfer_status xfer_mask_save(const xfer_mask* mask, const char* path);
XFER_API void xfer_mask_shape(const xfer_mask* mask, uint32_t* height, uint32_t* width);
XFER_API const uint8_t* xfer_mask_data(const xfer_mask* mask);
XFER_API size_t xfer_mask_count(const xfer_mask* mask);
XFER_API void xfer_mask_free(xfer_mask* mask);

/* Matching --------------------------------------------------------------- */

/* threads == 0 uses every hardware thread; the result never depends on it. */
XFER_API xfer_status xfer_match(const xfer_feature_map* target, const xfer_feature_map* reference,
                                const xfer_mask* target_mask, const xfer_mask* ref_mask,
                                double epsilon, uint32_t threads, xfer_corr** out);
/* Naive reference implementation of xfer_match, for verification. */
XFER_API xfer_status xfer_brute_force_match(const xfer_feature_map* target,
                                            const xfer_feature_map* reference,
                                            const xfer_mask* target_mask,
                                            const xfer_mask* ref_mask, double epsilon,
                                            xfer_corr** out);
XFER_API void xfer_corr_shape(const xfer_corr* corr, uint32_t* height, uint32_t* width,
                              uint32_t* ref_height, uint32_t* ref_width);
XFER_API const uint32_t* xfer_corr_entries(const xfer_corr* corr);
/* Written as an h x w u32 tensor file. */
XFER_API xfer_status xfer_corr_save(const xfer_corr* corr, const char* path);
/* The file does not record the reference grid; supply it. */
XFER_API xfer_status xfer_corr_load(const char* path, uint32_t ref_height, uint32_t ref_width,
                                    xfer_corr** out);
XFER_API void xfer_corr_free(xfer_corr* corr);

XFER_API xfer_status xfer_corr_to_flow(const xfer_corr* corr, xfer_flow** out);
XFER_API void xfer_flow_shape(const xfer_flow* flow, uint32_t* height, uint32_t* width);
/* Interleaved (dx, dy) per pixel. */
XFER_API const float* xfer_flow_displacement(const xfer_flow* flow);
XFER_API const uint8_t* xfer_flow_validity(const xfer_flow* flow);
XFER_API xfer_status xfer_flow_save(const xfer_flow* flow, const char* flow_path,
                                    const char* validity_path);
XFER_API void xfer_flow_free(xfer_flow* flow);

/* Images and rendering ----------------------------------------------------- */

/* Reads a binary PPM (P6) or an h x w x 3 u8 tensor file. */
XFER_API xfer_status xfer_image_load(const char* path, xfer_image** out);
XFER_API xfer_status xfer_image_save_ppm(const xfer_image* image, const char* path);
XFER_API void xfer_image_shape(const xfer_image* image, uint32_t* height, uint32_t* width);
XFER_API const uint8_t* xfer_image_pixels(const xfer_image* image);
XFER_API void xfer_image_free(xfer_image* image);
/* Colors each matched target pixel with its reference pixel; unmatched is black. */
XFER_API xfer_status xfer_render_correspondence(const xfer_corr* corr, const xfer_image* ref_colors,
                                                xfer_image** out);

/* Session configuration ---------------------------------------------------- */

XFER_API xfer_status xfer_config_default(xfer_config** out);
/* "key=value" lines: total_steps, inject_t_range=lo,hi, inject_layers=a,b,...,
 * adain_t_range=lo,hi, readout_t, readout_layer, epsilon. */
XFER_API xfer_status xfer_config_parse(const char* text, xfer_config** out);
XFER_API xfer_status xfer_config_load(const char* path, xfer_config** out);
XFER_API double xfer_config_epsilon(const xfer_config* config);
XFER_API void xfer_config_free(xfer_config* config);

/* Transfer ----------------------------------------------------------------- */

XFER_API xfer_status xfer_rearrange(const xfer_feature_map* reference, const xfer_corr* corr,
                                    xfer_feature_map** out);
XFER_API xfer_status xfer_inject(const xfer_feature_map* rearranged, const xfer_feature_map* target,
                                 const xfer_mask* target_mask, xfer_feature_map** out);
XFER_API xfer_status xfer_adain(const xfer_feature_map* content, const xfer_feature_map* style,
                                const xfer_mask* content_mask, const xfer_mask* style_mask,
                                double epsilon, xfer_feature_map** out);
/* One denoising step over n_objects (reference, ref mask, target mask) triples. */
XFER_API xfer_status xfer_transfer_step(const xfer_feature_map* target, size_t n_objects,
                                        const xfer_feature_map* const* references,
                                        const xfer_mask* const* ref_masks,
                                        const xfer_mask* const* target_masks,
                                        const xfer_config* config, int32_t t, int32_t layer,
                                        xfer_feature_map** out);

/* Metrics ------------------------------------------------------------------ */

/* kind: "hist", "clip", "depth", "miou", "oks" or "flow". Writes the TSV report.
 * mean receives the dataset mean, or NaN when no sample succeeded. */
XFER_API xfer_status xfer_eval_manifest(const char* kind, const char* manifest_path,
                                        const char* report_path, uint32_t threads, double* mean);
/* thresholds may be NULL to use 0.50, 0.55, ..., 0.95. */
XFER_API xfer_status xfer_keypoint_ap(const double* oks_values, size_t n_values,
                                      const double* thresholds, size_t n_thresholds, double* out);

/* Self-check --------------------------------------------------------------- */

#define XFER_SELFCHECK_INJECT_FAULT 0x1u

typedef void (*xfer_message_fn)(const char* message, void* user);

XFER_API xfer_status xfer_selfcheck(uint32_t seeds, uint32_t max_dim, uint64_t base_seed,
                                    uint32_t flags, uint32_t* passed, uint32_t* failed,
                                    xfer_message_fn on_failure, void* user);

/* Service ------------------------------------------------------------------ */

/* port 0 binds an ephemeral port; read it back with xfer_server_port. */
XFER_API xfer_status xfer_server_start(const char* host, uint16_t port, uint32_t threads,
                                       xfer_server** out);
XFER_API uint16_t xfer_server_port(const xfer_server* server);
XFER_API void xfer_server_stop(xfer_server* server);
/* Blocks until xfer_server_stop is called from another thread. */
XFER_API void xfer_server_wait(xfer_server* server);
XFER_API void xfer_server_free(xfer_server* server);

#ifdef __cplusplus
}
#endif

#endif /* XFER_XFER_H_ */
