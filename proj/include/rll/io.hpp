#pragma once

#include <string>

namespace rll {

// Writes content to path via a temp file plus rename, so readers never see
// a half-written file and reruns produce byte-identical outputs.
void atomic_write(const std::string& path, const std::string& content);

// Shortest decimal text that parses back to the same double (%.17g).
std::string fmt_double(double x);

}  // namespace rll
