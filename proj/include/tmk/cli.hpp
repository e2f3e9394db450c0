#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tmk {

/// Entry point behind the `tm` binary, callable from tests.
/// argv excludes the program name. Exit codes: 0 success, 1 validation or
/// conformance failure (and `fmt --check` on non-canonical input), 2 usage
/// or I/O errors.
int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err);

}  // namespace tmk
