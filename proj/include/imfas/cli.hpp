#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace imfas::cli {

// Exit codes shared by every subcommand: 0 success, 2 user/config error,
// 3 numeric/runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 2;
inline constexpr int kExitRuntimeError = 3;

// All commands throw imfas errors; run() maps them to exit codes and prints
// a one-line summary per step on stdout.
void cmd_generate(const std::string& config_path, const std::string& out_dir, bool force);
void cmd_train(const std::string& data_dir, const std::string& config_path,
               const std::string& out_dir, bool force);
void cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
              const std::vector<double>& fractions, const std::string& out_dir, bool force);
void cmd_baseline(const std::string& data_dir, int eta, const std::string& out_dir,
                  bool force);
void cmd_experiment(const std::string& data_dir, const std::string& synth_config_path,
                    const std::string& config_path, const std::vector<std::uint64_t>& seeds,
                    const std::vector<double>& fractions, int eta, const std::string& out_dir,
                    bool force);

std::vector<double> parse_fractions(const std::string& text);
std::vector<std::uint64_t> parse_seeds(const std::string& text);

int run(int argc, char** argv);

}  // namespace imfas::cli
