// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "skewgrad/cli.hpp"

int main(int argc, char** argv) { return skewgrad::run_cli(argc, argv, std::cout, std::cerr); }
