#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace unionrec::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kNumericalError = 2;
inline constexpr int kSelftestFailed = 3;

/// Runs one subcommand; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct SelftestCheck {
  std::string module;
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Invariant checks of every module at reduced sizes. Reads UNIONREC_ETA0
/// (overrides eta0) and UNIONREC_SEED.
std::vector<SelftestCheck> selftest();

}  // namespace unionrec::cli
