#pragma once

#include <iosfwd>

namespace faceq::cli {

// Exit status: 0 success, 1 usage, 2 data error, 3 numeric failure. Errors
// are reported on `err` as one line starting with the error code token.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace faceq::cli
