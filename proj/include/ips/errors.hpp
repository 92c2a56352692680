#pragma once

#include <stdexcept>
#include <string>

namespace ips {

// Error categories aligned with the CLI exit codes:
//   config_error -> 1 (usage / configuration)
//   budget_error -> 2 (numerical budget exhausted)
//   io_error     -> 3 (filesystem)
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct budget_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ips
