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


// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <thread>

#include "oracles.hpp"
#include "xfer/matching.hpp"
#include "xfer/metrics.hpp"
#include "xfer/random.hpp"
#include "xfer/service.hpp"
#include "xfer/transfer.hpp"

using namespace xfer;

namespace {

constexpr double kEps = 1e-8;
constexpr double kOracleBudgetSeconds = 10.0;
constexpr double kMomentTolerance = 1e-5;
constexpr double kMinStyleStd = 1e-3;
constexpr double kBhattacharyyaTolerance = 1e-4;
constexpr double kDepthTolerance = 1e-5;
constexpr double kIouTolerance = 1e-5;
constexpr double kLatencyBudgetSeconds = 1.0;
constexpr float kScaleMargin = 1e-3f;
constexpr float kPermutationMargin = 1e-6f;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool same_outside(const FeatureMap& out, const FeatureMap& in, const std::vector<const ObjectMask*>& masks) {
    const std::size_t c = in.channels();
    for (std::size_t q = 0; q < in.pixel_count(); ++q) {
        bool inside = false;
        for (const auto* m : masks) inside = inside || m->test(q);
        if (inside) continue;
        if (!oracle::same_bits(out.data().subspan(q * c, c), in.data().subspan(q * c, c))) return false;
    }
    return true;
}

// --- criteria ---------------------------------------------------------------

Outcome oracle_equivalence() {
    constexpr int kInstances = 150;
    const auto start = std::chrono::steady_clock::now();
    int agree = 0;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng(1000 + i);
        const auto h = random_dim(rng, 16), w = random_dim(rng, 16);
        const auto rh = random_dim(rng, 16), rw = random_dim(rng, 16), c = random_dim(rng, 8);
        const FeatureMap t = random_feature_map(rng, h, w, c), r = random_feature_map(rng, rh, rw, c);
        const ObjectMask mt = random_mask(rng, h, w, 0.6, false), mr = random_mask(rng, rh, rw, 0.6);
        const CorrespondenceMap fast = masked_cosine_match(t, r, mt, mr, kEps);
        const CorrespondenceMap brute = brute_force_match(t, r, mt, mr, kEps);
        const auto naive = oracle::match(t, r, mt, mr, kEps);
        const bool same = fast == brute && std::equal(naive.begin(), naive.end(), fast.entries().begin());
        agree += same ? 1 : 0;
    }
    const double elapsed = seconds_since(start);
    return {agree == kInstances && elapsed < kOracleBudgetSeconds,
            fmt("%d/%d instances identical in %.2f s", agree, kInstances, elapsed)};
}

Outcome mask_law() {
    constexpr int kInstances = 120;
    int ok = 0;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng(2000 + i);
        const auto h = random_dim(rng, 12), w = random_dim(rng, 12), c = random_dim(rng, 8);
        const auto rh = random_dim(rng, 12), rw = random_dim(rng, 12);
        const FeatureMap t = random_feature_map(rng, h, w, c);

        const ObjectMask m = random_mask(rng, h, w, 0.5, false);
        const FeatureMap injected = inject(random_feature_map(rng, h, w, c), t, m);

        const std::uint32_t objects = 1 + static_cast<std::uint32_t>(rng() % 3);
        std::vector<std::uint8_t> labels(std::size_t{h} * w);
        for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % (objects + 1));
        std::vector<ObjectPair> pairs;
        for (std::uint32_t o = 0; o < objects; ++o) {
            std::vector<std::uint8_t> bits(labels.size());
            for (std::size_t q = 0; q < bits.size(); ++q) bits[q] = labels[q] == o + 1;
            pairs.push_back({random_feature_map(rng, rh, rw, c), random_mask(rng, rh, rw, 0.5),
                             ObjectMask(h, w, std::move(bits))});
        }
        const FeatureMap stepped = transfer_step(t, pairs, {}, 60, 2);
        std::vector<const ObjectMask*> masks;
        for (const auto& p : pairs) masks.push_back(&p.m_target);
        ok += same_outside(injected, t, {&m}) && same_outside(stepped, t, masks) ? 1 : 0;
    }
    return {ok == kInstances, fmt("%d/%d inject+transfer_step pairs preserve the background", ok, kInstances)};
}

Outcome identity_law() {
    constexpr int kInstances = 40;
    int ok = 0;
    for (int i = 0; i < kInstances; ++i) {
        Rng rng(3000 + i);
        const auto h = random_dim(rng, 16), w = random_dim(rng, 16), c = 1 + random_dim(rng, 8);
        const FeatureMap f = oracle::distinct_map(rng, h, w, c);
        const ObjectMask full = ObjectMask::filled(h, w, true);
        const CorrespondenceMap corr = masked_cosine_match(f, f, full, full, kEps);
        bool identity = true;
        for (std::size_t q = 0; q < corr.pixel_count(); ++q) identity = identity && corr[q] == q;
        const std::vector<ObjectPair> pairs{{f, full, full}};
        const FeatureMap out = transfer_step(f, pairs, {}, 60, 2);
        ok += identity && oracle::same_bits(out.data(), f.data()) ? 1 : 0;
    }
    return {ok == kInstances, fmt("%d/%d identity instances", ok, kInstances)};
}

Outcome invariance() {
    constexpr int kPerKind = 60;
    int scaled_ok = 0, scaled_n = 0, perm_ok = 0, perm_n = 0;
    Rng rng(4000);
    for (int attempt = 0; attempt < 2000 && (scaled_n < kPerKind || perm_n < kPerKind); ++attempt) {
        const auto h = random_dim(rng, 10), w = random_dim(rng, 10), c = 2 + random_dim(rng, 6);
        const FeatureMap t = oracle::distinct_map(rng, h, w, c), r = oracle::distinct_map(rng, h, w, c);
        const ObjectMask mt = random_mask(rng, h, w, 0.6), mr = random_mask(rng, h, w, 0.6);
        const bool scaling_turn = scaled_n < kPerKind && (attempt % 2 == 0 || perm_n >= kPerKind);
        const float margin = scaling_turn ? kScaleMargin : kPermutationMargin;
        if (!oracle::unique_maxima(t, r, mt, mr, kEps, margin)) continue;
        const auto base = masked_cosine_match(t, r, mt, mr, kEps);

        if (scaling_turn) {
            // Rescale every target and reference pixel by its own positive factor.
            std::uniform_real_distribution<float> factor(0.05f, 20.0f);
            auto rescale = [&](const FeatureMap& f) {
                std::vector<float> d(f.data().begin(), f.data().end());
                for (std::size_t p = 0; p < f.pixel_count(); ++p) {
                    const float s = factor(rng);
                    for (std::size_t k = 0; k < c; ++k) d[p * c + k] *= s;
                }
                return FeatureMap(f.height(), f.width(), c, std::move(d));
            };
            ++scaled_n;
            scaled_ok += masked_cosine_match(rescale(t), rescale(r), mt, mr, kEps) == base ? 1 : 0;
        } else {
            std::vector<std::uint32_t> perm(r.pixel_count());
            std::iota(perm.begin(), perm.end(), 0u);
            std::shuffle(perm.begin(), perm.end(), rng);
            std::vector<float> pr(r.data().size());
            std::vector<std::uint8_t> pm(r.pixel_count());
            for (std::size_t p = 0; p < r.pixel_count(); ++p) {
                std::copy_n(r.pixel(p).data(), c, pr.data() + std::size_t{perm[p]} * c);
                pm[perm[p]] = mr.bits()[p];
            }
            const auto moved = masked_cosine_match(t, FeatureMap(h, w, c, pr), mt, ObjectMask(h, w, pm), kEps);
            bool ok = true;
            for (std::size_t q = 0; q < base.pixel_count(); ++q) {
                ok = ok && moved[q] == (base[q] == oracle::kNone ? oracle::kNone : perm[base[q]]);
            }
            ++perm_n;
            perm_ok += ok ? 1 : 0;
        }
    }
    return {scaled_n == kPerKind && perm_n == kPerKind && scaled_ok == kPerKind && perm_ok == kPerKind,
            fmt("scaling %d/%d, permutation %d/%d unique-maximum instances", scaled_ok, scaled_n, perm_ok,
                perm_n)};
}

Outcome adain_moments() {
    constexpr int kInstances = 60;
    int ok = 0, n = 0;
    double worst = 0;
    Rng rng(5000);
    while (n < kInstances) {
        const auto h = random_dim(rng, 12), w = random_dim(rng, 12), c = random_dim(rng, 8);
        const auto sh = random_dim(rng, 12), sw = random_dim(rng, 12);
        const FeatureMap content = random_feature_map(rng, h, w, c);
        const FeatureMap style = random_feature_map(rng, sh, sw, c, -3.0f, 5.0f);
        const ObjectMask mc = random_mask(rng, h, w, 0.7), ms = random_mask(rng, sh, sw, 0.7);
        bool usable = true;
        for (std::size_t k = 0; k < c; ++k) usable = usable && oracle::masked_stats(style, ms, k).stddev >= kMinStyleStd;
        if (!usable) continue;
        ++n;
        const FeatureMap out = adain_masked(content, style, mc, ms, kEps);
        double err = 0;
        for (std::size_t k = 0; k < c; ++k) {
            const auto got = oracle::masked_stats(out, mc, k), want = oracle::masked_stats(style, ms, k);
            err = std::max({err, std::abs(got.mean - want.mean), std::abs(got.stddev - want.stddev)});
        }
        worst = std::max(worst, err);
        ok += err <= kMomentTolerance ? 1 : 0;
    }
    return {ok == kInstances, fmt("%d/%d instances, worst deviation %.3g", ok, kInstances, worst)};
}

Outcome metric_closed_forms() {
    Histogram a{{0.5, 0.5}, 2, "rgb"}, b{{1.0, 0.0}, 2, "rgb"};
    const double bc = bhattacharyya(a, b);
    const double ap = keypoint_ap(std::vector<double>{0.7}, default_ap_thresholds());
    const double depth = depth_rmse(DepthMap(1, 2, {0, 1}), DepthMap(1, 2, {1, 1}), ObjectMask::filled(1, 2, true));
    const double flow = flow_l1(FlowMap(2, 2, std::vector<float>(8, 1.0f), {1, 1, 1, 1}),
                                FlowMap(2, 2, std::vector<float>(8, 0.0f), {1, 1, 1, 1}));
    const double third = iou(ObjectMask(1, 3, {1, 1, 0}), ObjectMask(1, 3, {0, 1, 1}));
    const bool pass = std::abs(bc - 0.54120) <= kBhattacharyyaTolerance && ap == 0.5 &&
                      std::abs(depth - 0.70711) <= kDepthTolerance && flow == 2.0 &&
                      std::abs(third - 0.33333) <= kIouTolerance;
    return {pass, fmt("bhattacharyya %.6f, ap %.6f, depth %.6f, flow %.6f, iou %.6f", bc, ap, depth, flow, third)};
}

// Replays a fixed transcript over TCP and compares every reply byte for byte
// with a frame built from direct library calls.
Outcome service_equivalence() {
    using namespace wire;
    ServerOptions options;
    options.port = 0;
    Server server(options);
    Client client("127.0.0.1", server.port());

    Rng rng(6000);
    const FeatureMap t = random_feature_map(rng, 9, 8, 6);
    const FeatureMap r0 = random_feature_map(rng, 7, 7, 6), r1 = random_feature_map(rng, 8, 6, 6);
    const FeatureMap r2 = random_feature_map(rng, 7, 7, 6);
    const ObjectMask mr0 = random_mask(rng, 7, 7, 0.6), mr1 = random_mask(rng, 8, 6, 0.6);
    std::vector<std::uint8_t> b0(72), b1(72);
    for (std::size_t q = 0; q < 72; ++q) {
        const auto v = rng() % 3;
        b0[q] = v == 1;
        b1[q] = v == 2;
    }
    const ObjectMask mt0(9, 8, b0), mt1(9, 8, b1);
    const FeatureMap style = random_feature_map(rng, 5, 5, 6, -2.0f, 3.0f);
    const ObjectMask ms = random_mask(rng, 5, 5, 0.8);
    SessionConfig cfg2;
    cfg2.inject_layers = {3};

    int matched = 0, total = 0;
    auto expect_bytes = [&](const Frame& request, const Frame& expected) {
        ++total;
        const Frame reply = client.call(request);
        matched += encode_frame(reply) == encode_frame(expected) ? 1 : 0;
        return reply;
    };
    auto expect_error = [&](const Frame& request, ErrorCode code) {
        ++total;
        const Frame reply = client.call(request);
        matched += reply.type() == MsgType::Error && reply.header.session_id == request.header.session_id &&
                           decode_error(reply.payload).code == static_cast<std::uint32_t>(code)
                       ? 1
                       : 0;
    };
    auto tensor = [](std::uint64_t sid, const FeatureMap& f) {
        return make_frame(MsgType::TensorResult, sid, encode_feature_result(f));
    };
    auto ok = [](std::uint64_t sid) { return make_frame(MsgType::Ok, sid); };

    const std::uint64_t s1 = 1, s2 = 2;
    const std::vector<ObjectPair> two{{r0, mr0, mt0}, {r1, mr1, mt1}};
    const std::vector<ObjectPair> one{{r0, mr0, mt0}};
    const std::vector<ObjectPair> layer3{{r2, mr0, mt0}};

    expect_bytes(make_frame(MsgType::InitSession, 0, encode_config({})), ok(s1));
    expect_bytes(make_frame(MsgType::PutReference, s1, encode_put_reference({0, 60, 2, r0, mr0})), ok(s1));
    expect_bytes(make_frame(MsgType::PutReference, s1, encode_put_reference({1, 60, 2, r1, mr1})), ok(s1));
    expect_bytes(make_frame(MsgType::Rearrange, s1, encode_rearrange({60, 2, t, {mt0, mt1}})),
                 tensor(s1, transfer_step(t, two, {}, 60, 2)));
    expect_bytes(make_frame(MsgType::Rearrange, s1, encode_rearrange({10, 2, t, {mt0, mt1}})), tensor(s1, t));
    expect_bytes(make_frame(MsgType::Adain, s1, encode_adain({90, t, style, mt0, ms})),
                 tensor(s1, adain_masked(t, style, mt0, ms, kEps)));
    expect_bytes(make_frame(MsgType::Adain, s1, encode_adain({50, t, style, mt0, ms})), tensor(s1, t));
    expect_bytes(make_frame(MsgType::PutReference, s1, encode_put_reference({0, 92, 2, r0, mr0})), ok(s1));
    expect_bytes(make_frame(MsgType::Rearrange, s1, encode_rearrange({92, 2, t, {mt0}})),
                 tensor(s1, transfer_step(t, one, {}, 92, 2)));
    expect_bytes(make_frame(MsgType::ReadoutFlow, s1),
                 make_frame(MsgType::TensorResult, s1,
                            encode_flow_result(correspondence_to_flow(masked_cosine_match(t, r0, mt0, mr0, kEps)))));
    expect_bytes(make_frame(MsgType::PutReference, s1, encode_put_reference({0, 60, 3, r2, mr0})), ok(s1));
    expect_bytes(make_frame(MsgType::Rearrange, s1, encode_rearrange({60, 3, t, {mt0}})),
                 tensor(s1, transfer_step(t, layer3, {}, 60, 3)));
    expect_error(make_frame(MsgType::Rearrange, s1, encode_rearrange({70, 2, t, {mt0}})),
                 ErrorCode::MissingReference);
    expect_bytes(make_frame(MsgType::InitSession, 0, encode_config(cfg2)), ok(s2));
    expect_bytes(make_frame(MsgType::Rearrange, s2, encode_rearrange({60, 2, t, {mt0}})), tensor(s2, t));
    expect_error(make_frame(MsgType::ReadoutFlow, s2), ErrorCode::NoReadoutRecorded);
    expect_bytes(make_frame(MsgType::PutReference, s2, encode_put_reference({0, 60, 3, r2, mr0})), ok(s2));
    expect_bytes(make_frame(MsgType::Rearrange, s2, encode_rearrange({60, 3, t, {mt0}})),
                 tensor(s2, transfer_step(t, layer3, cfg2, 60, 3)));
    expect_bytes(make_frame(MsgType::CloseSession, s2), ok(s2));
    expect_bytes(make_frame(MsgType::CloseSession, s1), ok(s1));
    const int transcript = total;
    const bool transcript_ok = matched == total;

    // Malformed requests on the same connection, then a valid one.
    int malformed_ok = 0;
    auto error_code = [](const Frame& f) {
        return f.type() == MsgType::Error ? decode_error(f.payload).code : 0xFFFFFFFFu;
    };
    malformed_ok += error_code(client.call(make_frame(static_cast<MsgType>(9), 0))) ==
                    std::uint32_t(ErrorCode::UnknownMessageType);
    malformed_ok += error_code(client.call(make_frame(MsgType::InitSession, 0, {1, 2, 3}))) ==
                    std::uint32_t(ErrorCode::TruncatedPayload);
    Frame wrong_version = make_frame(MsgType::InitSession, 0, encode_config({}));
    wrong_version.header.version = 2;
    malformed_ok += error_code(client.call(wrong_version)) == std::uint32_t(ErrorCode::VersionMismatch);
    malformed_ok += encode_frame(client.call(make_frame(MsgType::InitSession, 0, encode_config({})))) ==
                    encode_frame(ok(3));

    // Bad magic on a second connection: ERROR, then closed; the first stays healthy.
    Client rogue("127.0.0.1", server.port());
    rogue.send_bytes(std::vector<std::uint8_t>(kHeaderSize, 0x42));
    malformed_ok += error_code(rogue.receive()) == std::uint32_t(ErrorCode::BadMagic) && rogue.peer_closed();
    malformed_ok += encode_frame(client.call(make_frame(MsgType::CloseSession, 3))) == encode_frame(ok(3));

    return {transcript == 20 && transcript_ok && malformed_ok == 6,
            fmt("%d/%d transcript replies bit-identical, %d/6 malformed-frame checks", matched, transcript,
                malformed_ok)};
}

Outcome performance() {
    constexpr std::uint32_t kSide = 64, kChannels = 640;
    constexpr int kRuns = 5;
    Rng rng(7000);
    const FeatureMap t = random_feature_map(rng, kSide, kSide, kChannels);
    const FeatureMap r = random_feature_map(rng, kSide, kSide, kChannels);
    const ObjectMask full = ObjectMask::filled(kSide, kSide, true);
    masked_cosine_match(t, r, full, full, kEps);  // warm up
    std::vector<double> ms;
    for (int i = 0; i < kRuns; ++i) {
        const auto start = std::chrono::steady_clock::now();
        masked_cosine_match(t, r, full, full, kEps);
        ms.push_back(seconds_since(start) * 1000.0);
    }
    std::sort(ms.begin(), ms.end());
    const double median = ms[kRuns / 2];
    return {median <= kLatencyBudgetSeconds * 1000.0,
            fmt("64x64x640 full masks: median %.1f ms, min %.1f ms, max %.1f ms over %d calls, %u hardware threads",
                median, ms.front(), ms.back(), kRuns, std::thread::hardware_concurrency())};
}

std::string bench_checksum(const std::string& threads) {
    const std::string cmd = std::string("'") + XFER_CLI_PATH + "' bench --iters 1 --threads " + threads;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) return "popen failed";
    std::string out;
    char buf[512];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
    const int status = ::pclose(pipe);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return "exit " + std::to_string(status);
    const auto at = out.find("checksum ");
    if (at == std::string::npos) return "no checksum";
    return out.substr(at + 9, 16);
}

Outcome determinism() {
    std::set<std::string> seen;
    std::string listing;
    for (const char* threads : {"1", "2", "4", "0", "1", "0"}) {
        const std::string sum = bench_checksum(threads);
        seen.insert(sum);
        listing += std::string(listing.empty() ? "" : ", ") + "t=" + threads + ":" + sum;
    }
    return {seen.size() == 1 && seen.begin()->size() == 16, listing};
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"oracle-equivalence", oracle_equivalence},
        {"mask-law", mask_law},
        {"identity-law", identity_law},
        {"invariance", invariance},
        {"adain-moments", adain_moments},
        {"metric-closed-forms", metric_closed_forms},
        {"service-library-equivalence", service_equivalence},
        {"performance", performance},
        {"determinism", determinism},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
