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

#include "xfer/selfcheck.hpp"

#include <cmath>
#include <cstring>

#include "xfer/error.hpp"
#include "xfer/matching.hpp"
#include "xfer/random.hpp"
#include "xfer/transfer.hpp"

namespace xfer {

namespace {

constexpr std::size_t kMaxRecordedFailures = 16;
constexpr double kMomentTolerance = 1e-5;
constexpr double kMinContentStd = 1e-3;

class Tally {
public:
    explicit Tally(SelfcheckReport& report) : report_(report) {}

    void check(bool ok, std::uint64_t seed, const char* what) {
        if (ok) {
            ++report_.passed;
            return;
        }
        ++report_.failed;
        if (report_.failures.size() < kMaxRecordedFailures) {
            report_.failures.push_back("seed " + std::to_string(seed) + ": " + what);
        }
    }

private:
    SelfcheckReport& report_;
};

bool same_bits(std::span<const float> a, std::span<const float> b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
}

// Pixels where every mask is clear must be bit-identical to the target.
bool background_preserved(const FeatureMap& out, const FeatureMap& target,
                          std::span<const ObjectMask* const> masks) {
    for (std::size_t q = 0; q < target.pixel_count(); ++q) {
        bool covered = false;
        for (const ObjectMask* m : masks) covered = covered || m->test(q);
        if (!covered && !same_bits(out.pixel(q), target.pixel(q))) {
            return false;
        }
    }
    return true;
}

bool moments_match(const FeatureMap& out, const ObjectMask& m_out, const FeatureMap& content,
                   const FeatureMap& style, const ObjectMask& m_style) {
    const std::size_t c = out.channels();
    auto stats = [](const FeatureMap& f, const ObjectMask& m, std::size_t k) {
        double sum = 0, sq = 0;
        for (std::size_t q = 0; q < f.pixel_count(); ++q) {
            if (m.test(q)) sum += f.pixel(q)[k];
        }
        const double n = static_cast<double>(m.count());
        const double mean = sum / n;
        for (std::size_t q = 0; q < f.pixel_count(); ++q) {
            if (m.test(q)) {
                const double d = f.pixel(q)[k] - mean;
                sq += d * d;
            }
        }
        return std::pair{mean, std::sqrt(sq / n)};
    };
    for (std::size_t k = 0; k < c; ++k) {
        if (stats(content, m_out, k).second < kMinContentStd) {
            continue;
        }
        const auto [mo, so] = stats(out, m_out, k);
        const auto [ms, ss] = stats(style, m_style, k);
        if (std::abs(mo - ms) > kMomentTolerance || std::abs(so - ss) > kMomentTolerance) {
            return false;
        }
    }
    return true;
}

}  // namespace

SelfcheckReport run_selfcheck(const SelfcheckOptions& options) {
    if (options.seeds == 0 || options.max_dim == 0 || options.max_channels == 0) {
        fail(ErrorCode::InvalidArgument, "selfcheck needs seeds, max_dim and max_channels >= 1");
    }
    SelfcheckReport report;
    Tally tally(report);
    const double eps = SessionConfig{}.epsilon;

    for (std::uint32_t i = 0; i < options.seeds; ++i) {
        const std::uint64_t seed = options.base_seed + i;
        Rng rng(seed);
        const std::uint32_t h = random_dim(rng, options.max_dim);
        const std::uint32_t w = random_dim(rng, options.max_dim);
        const std::uint32_t rh = random_dim(rng, options.max_dim);
        const std::uint32_t rw = random_dim(rng, options.max_dim);
        const std::uint32_t c = random_dim(rng, options.max_channels);
        const FeatureMap target = random_feature_map(rng, h, w, c);
        const FeatureMap reference = random_feature_map(rng, rh, rw, c);
        const ObjectMask m_target = random_mask(rng, h, w, 0.6, false);
        const ObjectMask m_ref = random_mask(rng, rh, rw, 0.6, true);

        // Matcher against the brute-force oracle.
        CorrespondenceMap fast = masked_cosine_match(target, reference, m_target, m_ref, eps);
        if (options.inject_fault) {
            std::vector<std::uint32_t> bad(fast.entries().begin(), fast.entries().end());
            bad[0] = bad[0] == CorrespondenceMap::kUnmatched ? 0 : CorrespondenceMap::kUnmatched;
            fast = CorrespondenceMap(fast.height(), fast.width(), fast.ref_height(),
                                     fast.ref_width(), std::move(bad));
        }
        const CorrespondenceMap oracle = brute_force_match(target, reference, m_target, m_ref, eps);
        tally.check(fast == oracle, seed, "matcher differs from brute-force oracle");

        // Injection background law.
        const FeatureMap rearranged = rearrange(reference, oracle);
        const FeatureMap injected = inject(rearranged, target, m_target);
        const ObjectMask* single[] = {&m_target};
        tally.check(background_preserved(injected, target, single), seed,
                    "inject changed pixels outside the target mask");

        // Multi-object transfer_step background law with disjoint masks.
        const std::uint32_t objects = 1 + static_cast<std::uint32_t>(rng() % 3);
        std::vector<std::uint8_t> labels(std::size_t{h} * w);
        for (auto& l : labels) l = static_cast<std::uint8_t>(rng() % (objects + 1));
        std::vector<ObjectPair> pairs;
        for (std::uint32_t o = 0; o < objects; ++o) {
            std::vector<std::uint8_t> bits(labels.size());
            for (std::size_t q = 0; q < bits.size(); ++q) bits[q] = labels[q] == o + 1;
            pairs.push_back({random_feature_map(rng, rh, rw, c), random_mask(rng, rh, rw, 0.5, true),
                             ObjectMask(h, w, std::move(bits))});
        }
        const SessionConfig config;
        const FeatureMap stepped = transfer_step(target, pairs, config, config.readout_t,
                                                 config.readout_layer);
        std::vector<const ObjectMask*> masks;
        for (const auto& p : pairs) masks.push_back(&p.m_target);
        tally.check(background_preserved(stepped, target, masks), seed,
                    "transfer_step changed pixels outside every target mask");

        // AdaIN moment law.
        const ObjectMask m_content = random_mask(rng, h, w, 0.7, true);
        const FeatureMap style = random_feature_map(rng, rh, rw, c, -3.0f, 5.0f);
        const FeatureMap adapted = adain_masked(target, style, m_content, m_ref, eps);
        tally.check(moments_match(adapted, m_content, target, style, m_ref), seed,
                    "adain output moments differ from style moments");
        const ObjectMask* content_only[] = {&m_content};
        tally.check(background_preserved(adapted, target, content_only), seed,
                    "adain changed pixels outside the content mask");
    }
    return report;
}

}  // namespace xfer
