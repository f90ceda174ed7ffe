#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fovnoise::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

/// Subcommands: foveate, enhance, analyze, sequence, bench, impulses. Errors
/// are reported as one JSON line {"error": ..., "kind": ...} on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// FNV-1a 64 of a file's bytes, hex.
std::string file_hash(const std::string& path);

}  // namespace fovnoise::cli
