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


#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "xfer/eval.hpp"
#include "xfer/metrics.hpp"
#include "xfer/tensor_io.hpp"

using namespace xfer;
using testing::code_of;
using testing::TempDir;

namespace {

void write_text(const std::string& path, const std::string& text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

RgbImage gradient(std::uint32_t h, std::uint32_t w, int shift) {
    RgbImage img{h, w, {}};
    for (std::uint32_t i = 0; i < h * w * 3; ++i) img.pixels.push_back(std::uint8_t((i * 37 + shift) & 0xFF));
    return img;
}

}  // namespace

TEST_SUITE("manifest") {
    TEST_CASE("parsing") {
        const Manifest m = parse_manifest("# header\n\na\tgt_mask\tx.eft\r\nb\tgt_mask\t/abs/y.eft\n"
                                          "a\tout_mask\tsub/z.eft\n",
                                          "/base");
        REQUIRE(m.size() == 2);
        CHECK(m.at("a").at("gt_mask") == std::filesystem::path("/base/x.eft"));
        CHECK(m.at("a").at("out_mask") == std::filesystem::path("/base/sub/z.eft"));
        CHECK(m.at("b").at("gt_mask") == std::filesystem::path("/abs/y.eft"));
    }

    TEST_CASE("malformed lines") {
        CHECK(code_of([] { parse_manifest("a\tb\n", "."); }) == ErrorCode::ParseError);
        CHECK(code_of([] { parse_manifest("a\tb\tc\td\n", "."); }) == ErrorCode::ParseError);
        CHECK(code_of([] { parse_manifest("a\t\tc\n", "."); }) == ErrorCode::ParseError);
        CHECK(code_of([] { parse_manifest("a\tr\tx\na\tr\ty\n", "."); }) == ErrorCode::ParseError);
    }

    TEST_CASE("kinds") {
        for (const char* k : {"hist", "clip", "depth", "miou", "oks", "flow"}) CHECK(parse_eval_kind(k));
        CHECK_FALSE(parse_eval_kind("fid"));
    }
}

TEST_SUITE("eval batteries") {
    TEST_CASE("miou over files with relative paths") {
        TempDir dir;
        const ObjectMask a(2, 2, {1, 1, 0, 0}), b(2, 2, {1, 0, 1, 0});
        write_tensor(dir.file("a.eft"), to_tensor(a));
        write_tensor(dir.file("b.eft"), to_tensor(b));
        write_text(dir.file("m.tsv"),
                   "s1\tgt_mask\ta.eft\ns1\tout_mask\ta.eft\n"
                   "s2\tgt_mask\ta.eft\ns2\tout_mask\tb.eft\n");
        const EvalReport r = run_eval(EvalKind::Miou, read_manifest(dir.file("m.tsv")), 2);
        REQUIRE(r.samples.size() == 2);
        CHECK(r.samples[0].value == doctest::Approx(1.0));
        CHECK(r.samples[1].value == doctest::Approx(1.0 / 3.0));
        CHECK(*r.mean == doctest::Approx(2.0 / 3.0));
        CHECK_FALSE(r.ap);
        CHECK(format_report(r) == "s1\t1\ns2\t0.3333333333\nMEAN\t0.6666666667\n");
    }

    TEST_CASE("hist identical images give zero") {
        TempDir dir;
        const RgbImage img = gradient(4, 5, 3);
        write_ppm(dir.file("img.ppm"), img);
        write_tensor(dir.file("m.eft"), to_tensor(ObjectMask::filled(4, 5, true)));
        const Manifest m{{"x", {{"gt_image", dir.file("img.ppm")},
                                {"out_image", dir.file("img.ppm")},
                                {"gt_mask", dir.file("m.eft")}}}};
        const EvalReport r = run_eval(EvalKind::Hist, m);
        CHECK(*r.mean < 1e-6);
    }

    TEST_CASE("hist differs for shifted colours and honours out_mask") {
        TempDir dir;
        const RgbImage a = gradient(4, 4, 0), b = gradient(4, 4, 128);
        const ObjectMask ma = ObjectMask::filled(4, 4, true);
        write_ppm(dir.file("a.ppm"), a);
        write_tensor(dir.file("b.eft"), to_tensor(b));
        write_tensor(dir.file("ma.eft"), to_tensor(ma));
        std::vector<std::uint8_t> bits(16, 0);
        bits[3] = bits[7] = 1;
        const ObjectMask half(4, 4, bits);
        write_tensor(dir.file("half.eft"), to_tensor(half));
        const Manifest m{{"x", {{"gt_image", dir.file("a.ppm")},
                                {"out_image", dir.file("b.eft")},
                                {"gt_mask", dir.file("ma.eft")},
                                {"out_mask", dir.file("half.eft")}}}};
        const EvalReport r = run_eval(EvalKind::Hist, m);
        const double expect = bhattacharyya(color_histogram(a, ma), color_histogram(b, half));
        CHECK(r.samples[0].value == expect);
    }

    TEST_CASE("clip") {
        TempDir dir;
        const float g[] = {1, 0, 0}, o[] = {1, 1, 0};
        write_tensor(dir.file("g.eft"), embedding_tensor(g));
        write_tensor(dir.file("o.eft"), embedding_tensor(o));
        const Manifest m{{"x", {{"gt_embedding", dir.file("g.eft")}, {"out_embedding", dir.file("o.eft")}}}};
        CHECK(*run_eval(EvalKind::Clip, m).mean == doctest::Approx(100.0 / std::sqrt(2.0)));
    }

    TEST_CASE("depth is min-max normalized per map") {
        TempDir dir;
        const DepthMap t(1, 3, {10, 20, 30}), o(1, 3, {0, 2, 2});
        write_tensor(dir.file("t.eft"), to_tensor(t));
        write_tensor(dir.file("o.eft"), to_tensor(o));
        write_tensor(dir.file("m.eft"), to_tensor(ObjectMask::filled(1, 3, true)));
        const Manifest m{{"x", {{"target_depth", dir.file("t.eft")},
                                {"output_depth", dir.file("o.eft")},
                                {"mask", dir.file("m.eft")}}}};
        // normalized: {0, .5, 1} vs {0, 1, 1}
        CHECK(*run_eval(EvalKind::Depth, m).mean == doctest::Approx(std::sqrt(0.25 / 3.0)));
    }

    TEST_CASE("oks reports AP") {
        TempDir dir;
        KeypointSet k;
        k.scale = 4;
        k.points = {{1, 2, 2, 0.5}, {3, 4, 1, 0.5}};
        write_text(dir.file("k.txt"), format_keypoints(k));
        const Manifest m{{"x", {{"pred_keypoints", dir.file("k.txt")}, {"gt_keypoints", dir.file("k.txt")}}}};
        const EvalReport r = run_eval(EvalKind::Oks, m);
        CHECK(*r.mean == doctest::Approx(1.0));
        REQUIRE(r.ap);
        CHECK(*r.ap == doctest::Approx(1.0));
        CHECK(format_report(r) == "x\t1\nMEAN\t1\nAP\t1\n");
    }

    TEST_CASE("flow with and without ground-truth validity") {
        TempDir dir;
        const FlowMap gt(1, 2, {0, 0, 0, 0}, {1, 0});
        const FlowMap pred(1, 2, {1, 1, 5, 5}, {1, 0});
        write_flow(gt, dir.file("g.eft"), dir.file("gv.eft"));
        write_flow(pred, dir.file("p.eft"), dir.file("pv.eft"));
        const Manifest with{{"x", {{"pred_flow", dir.file("p.eft")}, {"pred_valid", dir.file("pv.eft")},
                                   {"gt_flow", dir.file("g.eft")}, {"gt_valid", dir.file("gv.eft")}}}};
        CHECK(*run_eval(EvalKind::Flow, with).mean == 2.0);
        const Manifest without{{"x", {{"pred_flow", dir.file("p.eft")}, {"gt_flow", dir.file("g.eft")}}}};
        CHECK(*run_eval(EvalKind::Flow, without).mean == 6.0);
    }

    TEST_CASE("failing samples are reported and excluded from the mean") {
        TempDir dir;
        write_tensor(dir.file("a.eft"), to_tensor(ObjectMask::filled(2, 2, true)));
        write_tensor(dir.file("e.eft"), to_tensor(ObjectMask::filled(3, 3, true)));
        const Manifest m{{"bad", {{"gt_mask", dir.file("a.eft")}, {"out_mask", dir.file("e.eft")}}},
                         {"good", {{"gt_mask", dir.file("a.eft")}, {"out_mask", dir.file("a.eft")}}},
                         {"lost", {{"gt_mask", dir.file("nope.eft")}, {"out_mask", dir.file("a.eft")}}},
                         {"role", {{"gt_mask", dir.file("a.eft")}}}};
        const EvalReport r = run_eval(EvalKind::Miou, m);
        CHECK(r.samples[0].error == ErrorCode::DimensionMismatch);
        CHECK(r.samples[2].error == ErrorCode::IoError);
        CHECK(r.samples[3].error == ErrorCode::ParseError);
        CHECK(*r.mean == 1.0);
        CHECK(format_report(r) ==
              "bad\tERROR\tDimensionMismatch\ngood\t1\nlost\tERROR\tIoError\nrole\tERROR\tParseError\nMEAN\t1\n");
    }

    TEST_CASE("no successful sample") {
        const Manifest m{{"x", {}}};
        const EvalReport r = run_eval(EvalKind::Miou, m);
        CHECK_FALSE(r.mean);
        CHECK(format_report(r) == "x\tERROR\tParseError\nMEAN\tNA\n");
        CHECK(format_report(run_eval(EvalKind::Flow, {})) == "MEAN\tNA\n");
    }
}
