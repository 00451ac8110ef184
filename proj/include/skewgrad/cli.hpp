// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// skewgrad gen-data|train|sweep|pilot|diagnose|report [--config path] [--key value ...]

#pragma once

#include <iosfwd>

namespace skewgrad {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace skewgrad
