// SPDX-License-Identifier: Apache-2.0
#include "radarseg/cli.hpp"

int main(int argc, char** argv) { return radarseg::cli::run(argc, argv); }
