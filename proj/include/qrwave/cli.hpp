#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qrwave/experiments.hpp"

namespace qrwave::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kAssumptionViolation = 3,
    kVerificationFailure = 4,
    kIoError = 5,
};

struct VerifySettings {
    std::size_t samples = 1000;
    std::vector<double> gammas;  // defaults to {e^4, e^8, 1e3}
    std::size_t n_modes = 64;
    double sigma = 1.0;
    double alpha = 1.0;
    double oracle_gamma = 0.0;  // defaults to e^4
    std::size_t oracle_modes = 16;
    double dt = 1e-4;
    std::size_t picard_iterations = 200;
    std::size_t picard_substeps = 128;
    double oracle_tolerance = 1e-6;
    std::size_t energy_samples = 20;
};

struct DemoSettings {
    std::size_t mode = 3;
    double eps = 1e-3;
    double gamma = 0.0;  // defaults to e^4
};

struct RunConfig {
    double L = 3.141592653589793;
    std::size_t n_modes = 16;
    double T = 0.5;
    std::size_t time_count = 201;

    TruthSpec truth;

    double noise_eps = 1e-4;
    NoiseMode noise_mode = NoiseMode::h1l2;
    bool noise_enabled = true;

    double C0 = 2.0;
    double C1 = 1.0;
    double K = 1.0;
    bool explicit_gamma = false;  // reg.schedule = explicit
    double gamma = 1.0;

    std::vector<double> eps_grid{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    std::vector<double> times_of_interest{0.0, 0.25, 0.45};
    SweepKind sweep_kind = SweepKind::holder;

    std::uint64_t seed = 1;
    unsigned threads = 1;

    VerifySettings verify;
    DemoSettings demo;

    RunConfig();
};

/// Parses flat `key = value` text; '#' starts a comment. All problems are
/// collected and thrown together as one ConfigError.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
/// Reads and parses a file; IoError if unreadable.
RunConfig load_config(const std::filesystem::path& path);
/// Every violated precondition, one message each.
std::vector<std::string> config_violations(const RunConfig& cfg);
/// Throws ConfigError listing every violated precondition.
void validate_config(const RunConfig& cfg);

/// Accepts plain decimals, `pi`, `<x>pi` and `exp(<x>)`.
double parse_number(const std::string& text);

/// Regularization state for single-run commands (forward/invert).
RegConfig make_reg_config(const RunConfig& cfg);
SweepConfig make_sweep_config(const RunConfig& cfg);

std::string format_double(double x);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
void write_errors_csv(const std::filesystem::path& path, const ErrorReport& report);
void write_sweep_csv(const std::filesystem::path& path, const SweepReport& report);

struct CommandContext {
    std::filesystem::path out_dir = ".";
    bool quiet = false;
    std::ostream* log = nullptr;  // progress messages, silenced by quiet
    std::ostream* err = nullptr;  // failure diagnostics, always written
};

int cmd_forward(const RunConfig& cfg, const CommandContext& ctx);
int cmd_invert(const RunConfig& cfg, const CommandContext& ctx);
int cmd_sweep(const RunConfig& cfg, const CommandContext& ctx);
int cmd_verify(const RunConfig& cfg, const CommandContext& ctx);
int cmd_demo_illposed(const RunConfig& cfg, const CommandContext& ctx);

/// Full entry point: argument parsing, dispatch, exception-to-exit-code mapping.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace qrwave::cli
