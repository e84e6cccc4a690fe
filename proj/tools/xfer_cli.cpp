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

// Command-line front end. Talks to the engine only through the C API.
// Exit codes: 0 success, 1 a check failed, 2 usage or I/O error.

#include <csignal>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xfer/xfer.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

template <typename T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using FeatureMapPtr = std::unique_ptr<xfer_feature_map, Deleter<xfer_feature_map, xfer_feature_map_free>>;
using MaskPtr = std::unique_ptr<xfer_mask, Deleter<xfer_mask, xfer_mask_free>>;
using CorrPtr = std::unique_ptr<xfer_corr, Deleter<xfer_corr, xfer_corr_free>>;
using ImagePtr = std::unique_ptr<xfer_image, Deleter<xfer_image, xfer_image_free>>;
using ConfigPtr = std::unique_ptr<xfer_config, Deleter<xfer_config, xfer_config_free>>;
using ServerPtr = std::unique_ptr<xfer_server, Deleter<xfer_server, xfer_server_free>>;

// Thrown to unwind out of a command with a diagnostic already chosen.
struct CommandError {
    int exit_code;
    std::string message;
};

void check(xfer_status status, const std::string& what) {
    if (status != XFER_OK) {
        throw CommandError{kExitUsage, what + ": " + xfer_status_name(status) + ": " +
                                           xfer_last_error()};
    }
}

FeatureMapPtr load_features(const std::string& path) {
    xfer_feature_map* raw = nullptr;
    check(xfer_feature_map_load(path.c_str(), &raw), path);
    return FeatureMapPtr(raw);
}

MaskPtr load_mask(const std::string& path) {
    xfer_mask* raw = nullptr;
    check(xfer_mask_load(path.c_str(), &raw), path);
    return MaskPtr(raw);
}

// Mask from a file, or all-set over the feature map's grid when no path is given.
MaskPtr mask_or_full(const std::string& path, const xfer_feature_map* grid) {
    if (!path.empty()) return load_mask(path);
    uint32_t h = 0, w = 0, c = 0;
    xfer_feature_map_shape(grid, &h, &w, &c);
    xfer_mask* raw = nullptr;
    check(xfer_mask_fill(h, w, 1, &raw), "full mask");
    return MaskPtr(raw);
}

// --- match ------------------------------------------------------------------

struct MatchArgs {
    std::string target, reference, target_mask, ref_mask, out;
    double epsilon = 1e-8;
    uint32_t threads = 0;
};

int run_match(const MatchArgs& a) {
    const auto target = load_features(a.target);
    const auto reference = load_features(a.reference);
    const auto m_target = mask_or_full(a.target_mask, target.get());
    const auto m_ref = mask_or_full(a.ref_mask, reference.get());
    xfer_corr* raw = nullptr;
    check(xfer_match(target.get(), reference.get(), m_target.get(), m_ref.get(), a.epsilon,
                     a.threads, &raw),
          "match");
    const CorrPtr corr(raw);
    check(xfer_corr_save(corr.get(), a.out.c_str()), a.out);
    return kExitOk;
}

// --- transfer ---------------------------------------------------------------

struct TransferArgs {
    std::string target, config, out;
    std::vector<std::vector<std::string>> refs;
    int32_t t = 0;
    int32_t layer = 0;
};

int run_transfer(const TransferArgs& a) {
    const auto target = load_features(a.target);
    ConfigPtr config;
    {
        xfer_config* raw = nullptr;
        if (a.config.empty()) {
            check(xfer_config_default(&raw), "config");
        } else {
            check(xfer_config_load(a.config.c_str(), &raw), a.config);
        }
        config.reset(raw);
    }
    std::vector<FeatureMapPtr> refs;
    std::vector<MaskPtr> ref_masks, target_masks;
    for (const auto& triple : a.refs) {
        refs.push_back(load_features(triple.at(0)));
        ref_masks.push_back(load_mask(triple.at(1)));
        target_masks.push_back(load_mask(triple.at(2)));
    }
    std::vector<const xfer_feature_map*> ref_ptrs;
    std::vector<const xfer_mask*> ref_mask_ptrs, target_mask_ptrs;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        ref_ptrs.push_back(refs[i].get());
        ref_mask_ptrs.push_back(ref_masks[i].get());
        target_mask_ptrs.push_back(target_masks[i].get());
    }
    xfer_feature_map* raw = nullptr;
    check(xfer_transfer_step(target.get(), refs.size(), ref_ptrs.data(), ref_mask_ptrs.data(),
                             target_mask_ptrs.data(), config.get(), a.t, a.layer, &raw),
          "transfer");
    const FeatureMapPtr out(raw);
    check(xfer_feature_map_save(out.get(), a.out.c_str()), a.out);
    return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string kind, manifest, report;
    uint32_t threads = 0;
};

int run_eval(const EvalArgs& a) {
    double mean = NAN;
    check(xfer_eval_manifest(a.kind.c_str(), a.manifest.c_str(), a.report.c_str(), a.threads,
                             &mean),
          "eval " + a.kind);
    if (std::isnan(mean)) {
        std::printf("MEAN\tNA\n");
    } else {
        std::printf("MEAN\t%.10g\n", mean);
    }
    return kExitOk;
}

// --- render-flow ------------------------------------------------------------

struct RenderArgs {
    std::string corr, ref_image, out;
};

int run_render(const RenderArgs& a) {
    xfer_image* raw_image = nullptr;
    check(xfer_image_load(a.ref_image.c_str(), &raw_image), a.ref_image);
    const ImagePtr ref(raw_image);
    uint32_t rh = 0, rw = 0;
    xfer_image_shape(ref.get(), &rh, &rw);

    xfer_corr* raw_corr = nullptr;
    check(xfer_corr_load(a.corr.c_str(), rh, rw, &raw_corr), a.corr);
    const CorrPtr corr(raw_corr);

    xfer_image* raw_out = nullptr;
    check(xfer_render_correspondence(corr.get(), ref.get(), &raw_out), "render");
    const ImagePtr out(raw_out);
    check(xfer_image_save_ppm(out.get(), a.out.c_str()), a.out);
    return kExitOk;
}

// --- selfcheck --------------------------------------------------------------

struct SelfcheckArgs {
    uint32_t seeds = 100;
    uint32_t max_dim = 16;
    uint64_t seed = 0x5eed;
};

int run_selfcheck(const SelfcheckArgs& a) {
    if (a.seeds == 0 || a.max_dim == 0) {
        throw CommandError{kExitUsage, "selfcheck: --seeds and --max-dim must be >= 1"};
    }
    uint32_t flags = 0;
#ifdef XFER_CLI_INJECT_FAULT
    flags |= XFER_SELFCHECK_INJECT_FAULT;
#endif
    uint32_t passed = 0, failed = 0;
    auto report = [](const char* message, void*) { std::fprintf(stderr, "FAIL %s\n", message); };
    check(xfer_selfcheck(a.seeds, a.max_dim, a.seed, flags, &passed, &failed, report, nullptr),
          "selfcheck");
    std::printf("passed %u\nfailed %u\n", passed, failed);
    return failed == 0 ? kExitOk : kExitCheckFailed;
}

// --- bench ------------------------------------------------------------------

struct BenchArgs {
    uint32_t h = 64, w = 64, c = 640;
    double mask_fill = 1.0;
    uint32_t iters = 10;
    uint64_t seed = 1;
    uint32_t threads = 0;
};

FeatureMapPtr random_features(std::mt19937_64& rng, uint32_t h, uint32_t w, uint32_t c) {
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    std::vector<float> data(std::size_t{h} * w * c);
    for (float& v : data) v = dist(rng);
    xfer_feature_map* raw = nullptr;
    check(xfer_feature_map_create(h, w, c, data.data(), &raw), "bench features");
    return FeatureMapPtr(raw);
}

MaskPtr random_mask(std::mt19937_64& rng, uint32_t h, uint32_t w, double fill) {
    std::bernoulli_distribution coin(fill);
    std::vector<uint8_t> bits(std::size_t{h} * w);
    for (auto& b : bits) b = coin(rng) ? 1 : 0;
    bits[0] = 1;  // the reference side may not be empty
    xfer_mask* raw = nullptr;
    check(xfer_mask_create(h, w, bits.data(), &raw), "bench mask");
    return MaskPtr(raw);
}

uint64_t fnv1a(const uint32_t* entries, std::size_t n) {
    uint64_t hash = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        for (int b = 0; b < 4; ++b) {
            hash ^= (entries[i] >> (8 * b)) & 0xffu;
            hash *= 0x100000001b3ull;
        }
    }
    return hash;
}

int run_bench(const BenchArgs& a) {
    if (a.h == 0 || a.w == 0 || a.c == 0 || a.iters == 0) {
        throw CommandError{kExitUsage, "bench: --h, --w, --c and --iters must be >= 1"};
    }
    if (!(a.mask_fill >= 0.0 && a.mask_fill <= 1.0)) {
        throw CommandError{kExitUsage, "bench: --mask-fill must be in [0, 1]"};
    }
    std::mt19937_64 rng(a.seed);
    const auto target = random_features(rng, a.h, a.w, a.c);
    const auto reference = random_features(rng, a.h, a.w, a.c);
    const auto m_target = random_mask(rng, a.h, a.w, a.mask_fill);
    const auto m_ref = random_mask(rng, a.h, a.w, a.mask_fill);

    CorrPtr last;
    double total_ms = 0.0;
    for (uint32_t i = 0; i < a.iters; ++i) {
        xfer_corr* raw = nullptr;
        const auto start = std::chrono::steady_clock::now();
        check(xfer_match(target.get(), reference.get(), m_target.get(), m_ref.get(), 1e-8,
                         a.threads, &raw),
              "bench match");
        const auto stop = std::chrono::steady_clock::now();
        last.reset(raw);
        const double ms = std::chrono::duration<double, std::milli>(stop - start).count();
        total_ms += ms;
        std::printf("iter %u latency_ms %.3f\n", i, ms);
    }
    const double mean_ms = total_ms / a.iters;
    const double pixels = static_cast<double>(a.h) * a.w;
    std::printf("mean_latency_ms %.3f\n", mean_ms);
    std::printf("matches_per_sec %.1f\n", pixels / (mean_ms / 1000.0));
    std::printf("checksum %016llx\n", static_cast<unsigned long long>(
                                           fnv1a(xfer_corr_entries(last.get()), a.h * std::size_t{a.w})));
    return kExitOk;
}

// --- serve ------------------------------------------------------------------

struct ServeArgs {
    std::string host = "127.0.0.1";
    uint16_t port = 7878;
    uint32_t threads = 0;
};

int run_serve(const ServeArgs& a) {
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    // Block before any server thread exists so only sigwait sees them.
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    xfer_server* raw = nullptr;
    check(xfer_server_start(a.host.c_str(), a.port, a.threads, &raw), "serve");
    const ServerPtr server(raw);
    std::printf("listening on %s:%u\n", a.host.c_str(), xfer_server_port(server.get()));
    std::fflush(stdout);

    int sig = 0;
    sigwait(&stop_signals, &sig);
    xfer_server_stop(server.get());
    xfer_server_wait(server.get());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"xfer: masked correspondence, feature transfer and evaluation"};
    app.require_subcommand(1);
    int exit_code = kExitOk;
    auto guard = [&exit_code](auto&& fn) {
        return [&exit_code, fn] {
            try {
                exit_code = fn();
            } catch (const CommandError& e) {
                std::fprintf(stderr, "error: %s\n", e.message.c_str());
                exit_code = e.exit_code;
            }
        };
    };

    MatchArgs match;
    auto* m = app.add_subcommand("match", "Dense masked correspondence between two feature maps");
    m->add_option("--target", match.target, "Target feature map")->required();
    m->add_option("--reference", match.reference, "Reference feature map")->required();
    m->add_option("--target-mask", match.target_mask, "Target object mask (default: all pixels)");
    m->add_option("--ref-mask", match.ref_mask, "Reference object mask (default: all pixels)");
    m->add_option("--out", match.out, "Output correspondence tensor file")->required();
    m->add_option("--epsilon", match.epsilon, "Norm guard")->capture_default_str();
    m->add_option("--threads", match.threads, "Worker threads, 0 = all")->capture_default_str();
    m->callback(guard([&] { return run_match(match); }));

    TransferArgs transfer;
    auto* t = app.add_subcommand("transfer", "One transfer step over tensor files");
    t->add_option("--target", transfer.target, "Target feature map")->required();
    t->add_option("--refs", transfer.refs,
                  "REFERENCE REF_MASK TARGET_MASK for one object; repeat per object")
        ->expected(3)
        ->required();
    t->add_option("--config", transfer.config, "Session config file (default settings if omitted)");
    t->add_option("--t", transfer.t, "Denoising timestep")->required();
    t->add_option("--layer", transfer.layer, "Decoder layer")->required();
    t->add_option("--out", transfer.out, "Output feature map")->required();
    t->callback(guard([&] { return run_transfer(transfer); }));

    EvalArgs eval;
    auto* e = app.add_subcommand("eval", "Evaluation battery over a manifest");
    e->add_option("kind", eval.kind, "hist | clip | depth | miou | oks | flow")
        ->required()
        ->check(CLI::IsMember({"hist", "clip", "depth", "miou", "oks", "flow"}));
    e->add_option("--manifest", eval.manifest, "id<TAB>role<TAB>path lines")->required();
    e->add_option("--report", eval.report, "TSV report to write")->required();
    e->add_option("--threads", eval.threads, "Worker threads, 0 = all")->capture_default_str();
    e->callback(guard([&] { return run_eval(eval); }));

    RenderArgs render;
    auto* r = app.add_subcommand("render-flow", "Color target pixels by their matched reference");
    r->add_option("--corr", render.corr, "Correspondence tensor file")->required();
    r->add_option("--ref-image", render.ref_image, "Reference image (PPM)")->required();
    r->add_option("--out", render.out, "Output PPM")->required();
    r->callback(guard([&] { return run_render(render); }));

    SelfcheckArgs selfcheck;
    auto* s = app.add_subcommand("selfcheck", "Randomized oracle battery");
    s->add_option("--seeds", selfcheck.seeds, "Random instances")->capture_default_str();
    s->add_option("--max-dim", selfcheck.max_dim, "Largest grid side")->capture_default_str();
    s->add_option("--seed", selfcheck.seed, "First seed")->capture_default_str();
    s->callback(guard([&] { return run_selfcheck(selfcheck); }));

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Matcher microbenchmark");
    b->set_help_flag("--help", "Print this help message and exit");  // frees --h
    b->add_option("--h", bench.h, "Height")->capture_default_str();
    b->add_option("--w", bench.w, "Width")->capture_default_str();
    b->add_option("--c", bench.c, "Channels")->capture_default_str();
    b->add_option("--mask-fill", bench.mask_fill, "Fraction of pixels in each mask")
        ->capture_default_str();
    b->add_option("--iters", bench.iters, "Timed calls")->capture_default_str();
    b->add_option("--seed", bench.seed, "Input seed")->capture_default_str();
    b->add_option("--threads", bench.threads, "Worker threads, 0 = all")->capture_default_str();
    b->callback(guard([&] { return run_bench(bench); }));

    ServeArgs serve;
    auto* v = app.add_subcommand("serve", "Run the transfer service");
    v->add_option("--host", serve.host, "Bind address")->envname("XFER_HOST")->capture_default_str();
    v->add_option("--port", serve.port, "TCP port, 0 = ephemeral")
        ->envname("XFER_PORT")
        ->capture_default_str();
    v->add_option("--threads", serve.threads, "Matcher threads, 0 = all")->capture_default_str();
    v->callback(guard([&] { return run_serve(serve); }));

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& ok) {
        return app.exit(ok);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return kExitUsage;
    }
    return exit_code;
}
