#pragma once

namespace unicam::cli {

// Exit codes: 0 success, 1 internal error, 2 input-contract violation.
int run(int argc, const char* const* argv);

}  // namespace unicam::cli
