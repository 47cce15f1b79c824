// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "selenc/commands.hpp"

int main(int argc, char** argv) { return selenc::cli::run(argc, argv, std::cout, std::cerr); }
