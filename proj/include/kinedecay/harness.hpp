/**
 * Experiment configuration and the command implementations behind the CLI.
 *
 * Commands return a process exit code and write their reports (JSON and CSV,
 * floating point at full round-trip precision) under config.out_dir.  With a
 * fixed seed and config, reruns produce byte-identical files.
 */
#pragma once

#include "kinedecay/decay.hpp"
#include "kinedecay/lyapunov.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kinedecay {

/// Log-spaced grid description; count points from min to max inclusive.
struct GridSpec {
    double min = 0.0;
    double max = 0.0;
    int count = 0;
};

std::vector<double> log_grid(const GridSpec& spec);

struct ExperimentConfig {
    std::string model = "vmb1";
    int degree_cap = 6;
    std::string collision_kind = "const";  // const | variable | external
    double nu0 = 1.0;
    std::string collision_file;            // used by "external"
    GridSpec radial_grid{1e-3, 30.0, 400};
    GridSpec spectrum_grid{1e-3, 1e3, 400};
    GridSpec tune_grid{1e-2, 1e2, 24};
    GridSpec time_grid{1.0, 1e5, 64};
    double window_lo = 1e2;
    double window_hi = 1e5;
    double rate_tol = 0.05;
    TuneTargets targets;
    std::string out_dir = ".";
    std::uint64_t seed = 8853042;
    int threads = 0;  // 0 = automatic
};

/// Parse a JSON config file; unknown keys are rejected, all keys optional.
ExperimentConfig load_config(const std::string& path);

/// Merge a JSON object (text) into an existing config; shared by the file
/// loader and tests.
void merge_config_json(ExperimentConfig& config, const std::string& json_text);

void validate_config(const ExperimentConfig& config);

/// Worker count: KINEDECAY_THREADS env var wins, then config.threads,
/// then hardware concurrency.
int resolve_threads(const ExperimentConfig& config);

/// Collision operator named by the config (kind, nu0, file).
CollisionOperator make_collision(const ExperimentConfig& config,
                                 const VelocityBasis& basis);

/// Coefficients handed to cmd_verify: from a tune report file, explicit
/// values, or (neither) a fresh internal tune.
struct CoefficientSource {
    bool explicit_values = false;
    FunctionalCoefficients coeffs;
    std::string report_file;
};

int cmd_tune(const ExperimentConfig& config);
int cmd_verify(const ExperimentConfig& config, const CoefficientSource& source,
               const std::vector<double>& k_list = {});
int cmd_spectrum(const ExperimentConfig& config);
int cmd_decay(const ExperimentConfig& config);
int cmd_compare(const ExperimentConfig& config);
int cmd_moments(const ExperimentConfig& config, double k_norm);

}  // namespace kinedecay
