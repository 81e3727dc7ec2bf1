// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace apsim {

/// Entry point behind the apsim binary; exposed for in-process testing.
/// Exit codes: 0 success, 2 config/usage error, 3 scene error, 4 endpoint
/// unavailable, 5 corrupt episode log.
int cli_main(int argc, const char* const* argv);

}  // namespace apsim
