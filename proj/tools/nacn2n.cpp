// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "nacn2n/cli.hpp"

int main(int argc, char** argv) { return nacn2n::run_cli(argc, argv, std::cout, std::cerr); }
