#pragma once

#include <stdexcept>
#include <string>

namespace ppu {

// Malformed or schema-violating input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable, corrupt, or incompatible model checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ppu
