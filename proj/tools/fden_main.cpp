// SPDX-License-Identifier: Apache-2.0
#include "fden/cli/run.hpp"
#include "fden/core/runtime.hpp"

int main(int argc, char** argv) {
  fden::configure_allocator();
  return fden::cli::run(argc, argv);
}
