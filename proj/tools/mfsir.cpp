// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#include "mfsir/cli.hpp"

int main(int argc, char** argv) { return mfsir::run_command(argc, argv); }
