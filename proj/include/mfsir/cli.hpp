// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "mfsir/config_io.hpp"

namespace mfsir {

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitVerdict = 2, kExitUsage = 64 };

/// The d = 1 reference setup: gaussian kernel (1, 1), saturating drift
/// (0.5, 1), sigma 0.5 in every state, gamma 0.5, p = (0.9, 0.1, 0), T = 2.
RunConfig default_run_config();

/// `args` excludes the program name, e.g. {"lln", "--config", "c.json"}.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace mfsir
