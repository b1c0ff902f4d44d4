#pragma once

#include <stdexcept>
#include <string>

namespace rll {

// Contract violations, bad input files and numerical failures all surface
// as rll::Error. The CLI catches it at the top level and exits nonzero.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rll
