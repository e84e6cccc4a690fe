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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xfer/error.hpp"

namespace xfer {

// Dataset-level metric batteries driven by a manifest of "id<TAB>role<TAB>path"
// lines. Relative paths resolve against the manifest's directory.
//
// Roles per battery:
//   hist   gt_image, out_image, gt_mask, [out_mask]     (images: P6 or u8 h x w x 3 tensor)
//   clip   gt_embedding, out_embedding
//   depth  target_depth, output_depth, mask             (min-max normalized per image)
//   miou   gt_mask, out_mask
//   oks    gt_keypoints, pred_keypoints                 (report also carries AP)
//   flow   pred_flow, gt_flow, [pred_valid], [gt_valid]
// Roles a battery does not use are ignored.

enum class EvalKind { Hist, Clip, Depth, Miou, Oks, Flow };

std::optional<EvalKind> parse_eval_kind(const std::string& name);

using Manifest = std::map<std::string, std::map<std::string, std::filesystem::path>>;

/// Throws ParseError on malformed lines or a role given twice for one id.
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
Manifest read_manifest(const std::filesystem::path& path);

struct SampleResult {
    std::string id;
    std::optional<double> value;
    ErrorCode error = ErrorCode::Ok;
    std::string message;
};

struct EvalReport {
    std::vector<SampleResult> samples;  // ordered by id
    std::optional<double> mean;         // over successful samples
    std::optional<double> ap;           // oks only
};

EvalReport run_eval(EvalKind kind, const Manifest& manifest, unsigned threads = 0);

/// "id\tvalue" per sample ("id\tERROR\t<code name>" on failure), then
/// "MEAN\tvalue" ("MEAN\tNA" with no successful samples), then "AP\tvalue"
/// for the oks battery.
std::string format_report(const EvalReport& report);

}  // namespace xfer
