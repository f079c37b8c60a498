#pragma once

namespace pnfc {

// Exit codes shared by every subcommand; a stable contract for CI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitCertification = 3;
inline constexpr int kExitInconclusive = 4;

int cli_main(int argc, const char* const* argv);

}  // namespace pnfc
