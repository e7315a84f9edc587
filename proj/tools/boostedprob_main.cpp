// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The boostedprob Authors

#include <iostream>
#include <string>
#include <vector>

#include "boostedprob/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return boostedprob::cli::run(args, std::cout, std::cerr);
}
