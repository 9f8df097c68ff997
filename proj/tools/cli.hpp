#ifndef UNMIX_CLI_HPP
#define UNMIX_CLI_HPP

#include <iosfwd>

namespace unmix_cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitTuningFailed = 4;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace unmix_cli

#endif  // UNMIX_CLI_HPP
