// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "cli.h"

int main(int argc, char** argv) { return primvol::cli::run(argc, argv, std::cout, std::cerr); }
