#pragma once

#include <stdexcept>
#include <string>

namespace fleet {

// Thrown when a caller breaks an operation's contract (argument out of range,
// inconsistent model state). The CLI maps this to exit code 4.
struct contract_error : std::logic_error {
  using std::logic_error::logic_error;
};

// Thrown for unreadable or malformed files and configs. CLI exit code 2.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] void fail_contract(const std::string& msg);
[[noreturn]] void fail_io(const std::string& msg);

}  // namespace fleet

#define FLEET_REQUIRE(cond, msg)                  \
  do {                                            \
    if (!(cond)) ::fleet::fail_contract((msg));   \
  } while (0)
