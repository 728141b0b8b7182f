// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>

namespace primvol::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

/// Runs the primvol command line. Reports go to `out` (JSON, one object per command),
/// diagnostics and provenance to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace primvol::cli
