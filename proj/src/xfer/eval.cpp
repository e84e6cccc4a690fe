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

#include "xfer/eval.hpp"

#include <cstdio>
#include <sstream>

#include "xfer/metrics.hpp"
#include "xfer/parallel.hpp"
#include "xfer/tensor_io.hpp"

namespace xfer {

namespace {

using Roles = std::map<std::string, std::filesystem::path>;

const std::filesystem::path& need(const Roles& roles, const char* role) {
    auto it = roles.find(role);
    if (it == roles.end()) {
        fail(ErrorCode::ParseError, std::string("missing role '") + role + "'");
    }
    return it->second;
}

std::optional<std::filesystem::path> maybe(const Roles& roles, const char* role) {
    auto it = roles.find(role);
    if (it == roles.end()) return std::nullopt;
    return it->second;
}

double evaluate_sample(EvalKind kind, const Roles& roles) {
    switch (kind) {
        case EvalKind::Hist: {
            const RgbImage gt = read_image(need(roles, "gt_image"));
            const RgbImage out = read_image(need(roles, "out_image"));
            const ObjectMask gt_mask = read_mask(need(roles, "gt_mask"));
            const auto out_mask_path = maybe(roles, "out_mask");
            const ObjectMask out_mask = out_mask_path ? read_mask(*out_mask_path) : gt_mask;
            return bhattacharyya(color_histogram(gt, gt_mask), color_histogram(out, out_mask));
        }
        case EvalKind::Clip: {
            const EmbeddingVector gt[] = {read_embedding(need(roles, "gt_embedding"))};
            const EmbeddingVector out[] = {read_embedding(need(roles, "out_embedding"))};
            return clip_appearance_score(gt, out);
        }
        case EvalKind::Depth: {
            const DepthMap t = normalize_depth(read_depth(need(roles, "target_depth")));
            const DepthMap o = normalize_depth(read_depth(need(roles, "output_depth")));
            return depth_rmse(t, o, read_mask(need(roles, "mask")));
        }
        case EvalKind::Miou:
            return iou(read_mask(need(roles, "gt_mask")), read_mask(need(roles, "out_mask")));
        case EvalKind::Oks:
            return oks(read_keypoints(need(roles, "pred_keypoints")),
                       read_keypoints(need(roles, "gt_keypoints")));
        case EvalKind::Flow:
            return flow_l1(read_flow(need(roles, "pred_flow"), maybe(roles, "pred_valid")),
                           read_flow(need(roles, "gt_flow"), maybe(roles, "gt_valid")));
    }
    fail(ErrorCode::Internal, "unhandled eval kind");
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace

std::optional<EvalKind> parse_eval_kind(const std::string& name) {
    if (name == "hist") return EvalKind::Hist;
    if (name == "clip") return EvalKind::Clip;
    if (name == "depth") return EvalKind::Depth;
    if (name == "miou") return EvalKind::Miou;
    if (name == "oks") return EvalKind::Oks;
    if (name == "flow") return EvalKind::Flow;
    return std::nullopt;
}

Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
    Manifest manifest;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty()) {
            fail(ErrorCode::ParseError,
                 "manifest line " + std::to_string(line_no) + ": expected id<TAB>role<TAB>path");
        }
        std::filesystem::path path = fields[2];
        if (path.is_relative()) path = base_dir / path;
        auto [it, inserted] = manifest[fields[0]].emplace(fields[1], path);
        if (!inserted) {
            fail(ErrorCode::ParseError, "manifest line " + std::to_string(line_no) + ": role '" +
                                            fields[1] + "' repeated for id '" + fields[0] + "'");
        }
    }
    return manifest;
}

Manifest read_manifest(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return parse_manifest(std::string(bytes.begin(), bytes.end()), path.parent_path());
}

EvalReport run_eval(EvalKind kind, const Manifest& manifest, unsigned threads) {
    std::vector<const Manifest::value_type*> items;
    for (const auto& entry : manifest) items.push_back(&entry);

    EvalReport report;
    report.samples.resize(items.size());
    parallel_for(items.size(), 1, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            SampleResult& r = report.samples[i];
            r.id = items[i]->first;
            try {
                r.value = evaluate_sample(kind, items[i]->second);
            } catch (const Error& e) {
                r.error = e.code();
                r.message = e.what();
            } catch (const std::exception& e) {
                r.error = ErrorCode::Internal;
                r.message = e.what();
            }
        }
    });

    std::vector<double> ok;
    for (const auto& s : report.samples) {
        if (s.value) ok.push_back(*s.value);
    }
    if (!ok.empty()) {
        double sum = 0.0;
        for (double v : ok) sum += v;
        report.mean = sum / static_cast<double>(ok.size());
        if (kind == EvalKind::Oks) {
            report.ap = keypoint_ap(ok, default_ap_thresholds());
        }
    }
    return report;
}

std::string format_report(const EvalReport& report) {
    std::string out;
    for (const auto& s : report.samples) {
        out += s.id;
        if (s.value) {
            out += '\t' + format_value(*s.value) + '\n';
        } else {
            out += "\tERROR\t" + std::string(error_name(s.error)) + '\n';
        }
    }
    out += "MEAN\t" + (report.mean ? format_value(*report.mean) : std::string("NA")) + '\n';
    if (report.ap) {
        out += "AP\t" + format_value(*report.ap) + '\n';
    }
    return out;
}

}  // namespace xfer
