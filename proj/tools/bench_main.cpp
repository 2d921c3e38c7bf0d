// Copyright 2026 The Quokka Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "quokka/bench/bench.hpp"

int main(int argc, char** argv) { return qk::bench::run_cli(argc, argv, std::cout, std::cerr); }
