// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "promptforge/cli/cli.hpp"

int main(int argc, char** argv) { return promptforge::cli::run(argc, argv, std::cout, std::cerr); }
