// Copyright 2026 The PromptForge Authors
// SPDX-License-Identifier: Apache-2.0

// Writes the seeded tiny reference model to a weights directory.
//
//   make_tiny_model --seed 0 --out models/tiny-reference-seed0

#include <cstdint>
#include <iostream>

#include <CLI11.hpp>

#include "promptforge/core/error.hpp"
#include "promptforge/models/backend.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate tiny reference model weights"};
  std::uint64_t seed = 0;
  std::string out;
  app.add_option("--seed", seed, "Initialization seed");
  app.add_option("--out", out, "Output directory")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    const auto model = promptforge::models::tiny_reference_model(seed);
    promptforge::models::save_tiny_model(model, seed, out);
  } catch (const promptforge::Error& e) {
    std::cerr << "make_tiny_model: " << e.what() << '\n';
    return 1;
  }
  std::cout << "wrote " << out << '\n';
  return 0;
}
