// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace radarseg::cli {

/// Entry point behind the binary: subcommands generate / train / eval /
/// segment / compare-loss. Returns 0 on success, 1 on usage errors, 2 on
/// data/parse/io errors, 3 on numerical failure (non-finite loss).
int run(int argc, const char* const* argv);

}  // namespace radarseg::cli
