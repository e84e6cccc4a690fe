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

#include <cstdint>
#include <string>
#include <vector>

namespace xfer {

struct SelfcheckOptions {
    std::uint32_t seeds = 100;
    std::uint32_t max_dim = 16;
    std::uint32_t max_channels = 8;
    std::uint64_t base_seed = 0x5eed;
    /// Corrupts one matcher result per instance. Only for proving that the
    /// battery can fail.
    bool inject_fault = false;
};

struct SelfcheckReport {
    std::uint32_t passed = 0;
    std::uint32_t failed = 0;
    std::vector<std::string> failures;  // first few, human readable
};

/// Per random instance: blocked matcher vs brute-force oracle, the injection
/// background law for inject and transfer_step, and the masked AdaIN moment
/// law (1e-5). Throws InvalidArgument when seeds or max_dim is zero.
SelfcheckReport run_selfcheck(const SelfcheckOptions& options);

}  // namespace xfer
