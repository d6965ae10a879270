// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace nacn2n {

/// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nacn2n
