#pragma once

#include "georay/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace georay {

enum ExitCode { exit_ok = 0, exit_failure = 1, exit_usage = 2 };

struct CommandContext {
    RunConfig cfg;
    std::string out_dir;
    std::vector<std::string> overridden;  // keys set from the environment
};

int cmd_forward(const CommandContext& ctx, std::ostream& log);
int cmd_reconstruct(const CommandContext& ctx, std::ostream& log);
int cmd_symbol_scan(const CommandContext& ctx, std::ostream& log);
int cmd_layerstrip(const CommandContext& ctx, std::ostream& log);
int cmd_selftest(const CommandContext& ctx, std::ostream& log, const std::vector<int>& only = {});

std::string sha256_file(const std::string& path);
// Writes manifest.txt into dir: resolved config, version, SIMD path and the
// SHA-256 of each listed file (names relative to dir).
void write_manifest(const std::string& dir, const CommandContext& ctx, const std::string& command,
                    const std::vector<std::string>& files);

// Full command-line entry point; returns the process exit status.
int run_cli(int argc, char** argv);

}  // namespace georay
