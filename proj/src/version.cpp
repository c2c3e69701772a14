// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "metacomm/eval.hpp"

#ifndef METACOMM_VERSION
#define METACOMM_VERSION "unknown"
#endif

namespace metacomm {

const char* version_string() { return METACOMM_VERSION; }

}  // namespace metacomm
