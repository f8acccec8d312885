#pragma once

#include <stdexcept>
#include <string>

namespace tlsdeform {

/// Raised for every contract violation or runtime failure in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tlsdeform
