#pragma once

#include <iosfwd>

namespace veinseg {

// Exit codes: 0 success, 1 usage error, 2 runtime error. Results go to `out`,
// diagnostics to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace veinseg
