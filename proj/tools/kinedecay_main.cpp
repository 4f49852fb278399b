// Command-line front end: tune | verify | spectrum | decay | compare | moments.
// Flags override the JSON config; every failure exits nonzero with a
// machine-readable error object on stderr.

#include "kinedecay/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace {

int fail_with(const std::string& type, const std::string& message) {
    nlohmann::json err{{"error", {{"type", type}, {"message", message}}}};
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
}

kinedecay::GridSpec parse_grid(const std::string& text, const std::string& flag) {
    kinedecay::GridSpec g;
    if (std::sscanf(text.c_str(), "%lf:%lf:%d", &g.min, &g.max, &g.count) != 3)
        throw std::invalid_argument(flag + " expects min:max:count");
    return g;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        out.push_back(std::stod(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace kinedecay;

    CLI::App app{"dissipative structure of linearized kinetic models, "
                 "one Fourier mode at a time"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path, out_dir, model, collision_kind, collision_file;
    std::string radial_s, spectrum_s, tune_s, time_s, window_s;
    int degree_cap = 0, threads = 0;
    double nu0 = 0.0, rate_tol = 0.0;
    std::uint64_t seed = 0;

    auto* o_config = app.add_option("--config", config_path, "JSON config file");
    auto* o_out = app.add_option("--out", out_dir, "output directory");
    auto* o_model = app.add_option("--model", model, "be | vpb1 | vmb1 | vmb2-rate");
    auto* o_cap = app.add_option("--degree-cap", degree_cap, "basis degree cap");
    auto* o_kind =
        app.add_option("--collision", collision_kind, "const | variable | external");
    auto* o_nu0 = app.add_option("--nu0", nu0, "constant collision frequency");
    auto* o_cfile =
        app.add_option("--collision-file", collision_file, "external matrix file");
    auto* o_threads = app.add_option("--threads", threads, "worker count");
    auto* o_seed = app.add_option("--seed", seed, "sampler seed");
    auto* o_radial =
        app.add_option("--radial-grid", radial_s, "decay grid min:max:count");
    auto* o_spectrum =
        app.add_option("--spectrum-grid", spectrum_s, "spectrum grid min:max:count");
    auto* o_tune = app.add_option("--tune-grid", tune_s, "tune grid min:max:count");
    auto* o_time = app.add_option("--time-grid", time_s, "time grid min:max:count");
    auto* o_window = app.add_option("--window", window_s, "fit window lo:hi");
    auto* o_tol = app.add_option("--rate-tol", rate_tol, "rate pass tolerance");

    CLI::App* c_tune = app.add_subcommand("tune", "tune Lyapunov coefficients");
    CLI::App* c_verify =
        app.add_subcommand("verify", "verify the Lyapunov inequality per k");
    CLI::App* c_spectrum =
        app.add_subcommand("spectrum", "spectral-gap kernel survey");
    CLI::App* c_decay = app.add_subcommand("decay", "decay fit for one model");
    CLI::App* c_compare =
        app.add_subcommand("compare", "decay fits for the model table");
    CLI::App* c_moments =
        app.add_subcommand("moments", "exact-identity diagnostics at one k");
    for (CLI::App* sub : {c_tune, c_verify, c_spectrum, c_decay, c_compare, c_moments})
        sub->fallthrough();

    std::string coeffs_file, k_list_s;
    double kappa1 = 0.0, kappa2 = 0.0, kappa3 = 0.0, kappa4 = 0.0;
    auto* o_coeffs =
        c_verify->add_option("--coeffs", coeffs_file, "tune report to verify");
    auto* o_k1 = c_verify->add_option("--kappa1", kappa1, "explicit kappa1");
    auto* o_k2 = c_verify->add_option("--kappa2", kappa2, "explicit kappa2");
    auto* o_k3 = c_verify->add_option("--kappa3", kappa3, "explicit kappa3");
    auto* o_k4 = c_verify->add_option("--kappa4", kappa4, "explicit kappa4");
    auto* o_klist =
        c_verify->add_option("--k-list", k_list_s, "comma-separated |k| values");

    double moments_k = 1.0;
    c_moments->add_option("--k", moments_k, "wavenumber magnitude");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        return fail_with("cli_parse", e.what());
    }

    try {
        ExperimentConfig config;
        if (o_config->count()) config = load_config(config_path);
        if (o_out->count()) config.out_dir = out_dir;
        if (o_model->count()) config.model = model;
        if (o_cap->count()) config.degree_cap = degree_cap;
        if (o_kind->count()) config.collision_kind = collision_kind;
        if (o_nu0->count()) config.nu0 = nu0;
        if (o_cfile->count()) config.collision_file = collision_file;
        if (o_threads->count()) config.threads = threads;
        if (o_seed->count()) config.seed = seed;
        if (o_radial->count()) config.radial_grid = parse_grid(radial_s, "--radial-grid");
        if (o_spectrum->count())
            config.spectrum_grid = parse_grid(spectrum_s, "--spectrum-grid");
        if (o_tune->count()) config.tune_grid = parse_grid(tune_s, "--tune-grid");
        if (o_time->count()) config.time_grid = parse_grid(time_s, "--time-grid");
        if (o_window->count()) {
            if (std::sscanf(window_s.c_str(), "%lf:%lf", &config.window_lo,
                            &config.window_hi) != 2)
                throw std::invalid_argument("--window expects lo:hi");
        }
        if (o_tol->count()) config.rate_tol = rate_tol;

        if (app.got_subcommand(c_tune)) return cmd_tune(config);
        if (app.got_subcommand(c_verify)) {
            CoefficientSource source;
            if (o_coeffs->count()) source.report_file = coeffs_file;
            if (o_k1->count() || o_k2->count() || o_k3->count() || o_k4->count()) {
                source.explicit_values = true;
                if (o_k1->count()) source.coeffs.kappa1 = kappa1;
                if (o_k2->count()) source.coeffs.kappa2 = kappa2;
                if (o_k3->count()) source.coeffs.kappa3 = kappa3;
                if (o_k4->count()) source.coeffs.kappa4 = kappa4;
            }
            std::vector<double> k_list;
            if (o_klist->count()) k_list = parse_list(k_list_s);
            return cmd_verify(config, source, k_list);
        }
        if (app.got_subcommand(c_spectrum)) return cmd_spectrum(config);
        if (app.got_subcommand(c_decay)) return cmd_decay(config);
        if (app.got_subcommand(c_compare)) return cmd_compare(config);
        if (app.got_subcommand(c_moments)) return cmd_moments(config, moments_k);
        return fail_with("cli_parse", "no subcommand selected");
    } catch (const std::invalid_argument& e) {
        return fail_with("invalid_argument", e.what());
    } catch (const std::domain_error& e) {
        return fail_with("domain_error", e.what());
    } catch (const std::runtime_error& e) {
        return fail_with("runtime_error", e.what());
    } catch (const std::exception& e) {
        return fail_with("error", e.what());
    }
}
