#include <doctest.h>

#include "kinedecay/harness.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace kinedecay;
using nlohmann::json;

namespace {

struct EnvGuard {
    std::string name;
    std::string saved;
    bool had = false;

    explicit EnvGuard(const char* n) : name(n) {
        if (const char* v = std::getenv(n)) {
            saved = v;
            had = true;
        }
        unsetenv(n);
    }
    ~EnvGuard() {
        if (had)
            setenv(name.c_str(), saved.c_str(), 1);
        else
            unsetenv(name.c_str());
    }
};

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("log grids hit their endpoints exactly") {
    const std::vector<double> g = log_grid({1e-2, 1e2, 9});
    REQUIRE(g.size() == 9);
    CHECK(g.front() == 1e-2);
    CHECK(g.back() == 1e2);
    CHECK(g[4] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i + 1 < g.size(); ++i)
        CHECK(g[i + 1] / g[i] == doctest::Approx(std::pow(10.0, 0.5)).epsilon(1e-12));

    CHECK_THROWS_AS(log_grid({0.0, 1.0, 4}), std::invalid_argument);
    CHECK_THROWS_AS(log_grid({2.0, 1.0, 4}), std::invalid_argument);
    CHECK_THROWS_AS(log_grid({1.0, 2.0, 1}), std::invalid_argument);
}

TEST_CASE("config JSON merges every key") {
    ExperimentConfig c;
    merge_config_json(c, R"({
        "model": "vpb1",
        "degree_cap": 4,
        "collision": {"kind": "external", "nu0": 2.5, "file": "L.txt"},
        "radial_grid": {"min": 1e-2, "max": 20.0, "count": 50},
        "spectrum_grid": {"min": 1e-4, "max": 1e4, "count": 60},
        "tune_grid": {"min": 0.1, "max": 10.0, "count": 7},
        "time_grid": {"min": 2.0, "max": 2e4, "count": 32},
        "fit_window": [50.0, 5000.0],
        "rate_tol": 0.1,
        "targets": {"equiv_lo": 0.5, "equiv_hi": 3.0,
                    "lambda_floor": 1e-7, "max_iterations": 12},
        "out_dir": "/tmp/somewhere",
        "seed": 42,
        "threads": 5
    })");

    CHECK(c.model == "vpb1");
    CHECK(c.degree_cap == 4);
    CHECK(c.collision_kind == "external");
    CHECK(c.nu0 == 2.5);
    CHECK(c.collision_file == "L.txt");
    CHECK(c.radial_grid.min == 1e-2);
    CHECK(c.radial_grid.max == 20.0);
    CHECK(c.radial_grid.count == 50);
    CHECK(c.spectrum_grid.count == 60);
    CHECK(c.tune_grid.count == 7);
    CHECK(c.time_grid.min == 2.0);
    CHECK(c.window_lo == 50.0);
    CHECK(c.window_hi == 5000.0);
    CHECK(c.rate_tol == 0.1);
    CHECK(c.targets.equiv_lo_floor == 0.5);
    CHECK(c.targets.equiv_hi_cap == 3.0);
    CHECK(c.targets.lambda_floor == 1e-7);
    CHECK(c.targets.max_iterations == 12);
    CHECK(c.out_dir == "/tmp/somewhere");
    CHECK(c.seed == 42);
    CHECK(c.threads == 5);

    // a partial merge keeps the untouched defaults
    ExperimentConfig d;
    merge_config_json(d, R"({"model": "be"})");
    CHECK(d.model == "be");
    CHECK(d.degree_cap == 6);
    CHECK(d.radial_grid.count == 400);
    CHECK(d.seed == 8853042);
}

TEST_CASE("config JSON rejects unknown keys at every level") {
    ExperimentConfig c;
    CHECK_THROWS_AS(merge_config_json(c, R"({"modle": "be"})"), std::invalid_argument);
    CHECK_THROWS_AS(merge_config_json(c, R"({"collision": {"mu0": 1.0}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(merge_config_json(c, R"({"radial_grid": {"points": 10}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(merge_config_json(c, R"({"targets": {"floor": 0.1}})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(merge_config_json(c, R"({"fit_window": [1.0, 2.0, 3.0]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(merge_config_json(c, R"({"fit_window": 10.0})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(merge_config_json(c, R"([1, 2, 3])"), std::invalid_argument);
    CHECK_THROWS(merge_config_json(c, R"({"model": )"));  // malformed JSON
}

TEST_CASE("config files load through the same merge") {
    TempDir dir("kinedecay_harness_cfg");
    const std::string path = dir.file("config.json");
    {
        std::ofstream out(path);
        out << R"({"model": "vmb2-rate", "degree_cap": 3, "threads": 2})";
    }
    const ExperimentConfig c = load_config(path);
    CHECK(c.model == "vmb2-rate");
    CHECK(c.degree_cap == 3);
    CHECK(c.threads == 2);

    CHECK_THROWS_AS(load_config(dir.file("missing.json")), std::runtime_error);
}

TEST_CASE("config validation catches each bad field") {
    const ExperimentConfig good;
    CHECK_NOTHROW(validate_config(good));

    auto broken = [&](auto&& tweak) {
        ExperimentConfig c;
        tweak(c);
        return c;
    };

    CHECK_THROWS_AS(validate_config(broken([](auto& c) { c.model = "landau"; })),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate_config(broken([](auto& c) { c.degree_cap = 1; })),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        validate_config(broken([](auto& c) { c.collision_kind = "bgk"; })),
        std::invalid_argument);
    CHECK_THROWS_AS(validate_config(broken([](auto& c) { c.nu0 = 0.0; })),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate_config(broken([](auto& c) {
                        c.collision_kind = "external";
                        c.collision_file.clear();
                    })),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate_config(broken([](auto& c) {
                        c.window_lo = 10.0;
                        c.window_hi = 1.0;
                    })),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate_config(broken([](auto& c) { c.rate_tol = 0.0; })),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate_config(broken([](auto& c) { c.threads = -1; })),
                    std::invalid_argument);
}

TEST_CASE("worker count: environment beats config beats autodetect") {
    EnvGuard guard("KINEDECAY_THREADS");
    ExperimentConfig c;

    c.threads = 2;
    CHECK(resolve_threads(c) == 2);

    c.threads = 0;
    CHECK(resolve_threads(c) >= 1);

    setenv("KINEDECAY_THREADS", "3", 1);
    c.threads = 7;
    CHECK(resolve_threads(c) == 3);

    setenv("KINEDECAY_THREADS", "abc", 1);
    CHECK_THROWS_AS(resolve_threads(c), std::invalid_argument);
    setenv("KINEDECAY_THREADS", "0", 1);
    CHECK_THROWS_AS(resolve_threads(c), std::invalid_argument);
    setenv("KINEDECAY_THREADS", "2x", 1);
    CHECK_THROWS_AS(resolve_threads(c), std::invalid_argument);
}

TEST_CASE("collision factory dispatches on the configured kind") {
    VelocityBasis basis(2);
    ExperimentConfig c;
    c.degree_cap = 2;

    c.collision_kind = "const";
    c.nu0 = 2.5;
    const CollisionOperator cn = make_collision(c, basis);
    CHECK(cn.kind() == CollisionKind::RelaxationConstNu);
    CHECK(cn.nu0() == 2.5);

    c.collision_kind = "variable";
    CHECK(make_collision(c, basis).kind() == CollisionKind::RelaxationVariableNu);

    TempDir dir("kinedecay_harness_coll");
    const Mat L = CollisionOperator::relaxation_variable_nu(basis).matrix();
    {
        std::ofstream out(dir.file("L.txt"));
        out << "dim=" << L.rows() << "\n";
        out.precision(17);
        for (int i = 0; i < L.rows(); ++i) {
            for (int j = 0; j < L.cols(); ++j) out << L(i, j) << " ";
            out << "\n";
        }
    }
    c.collision_kind = "external";
    c.collision_file = dir.file("L.txt");
    const CollisionOperator ext = make_collision(c, basis);
    CHECK(ext.kind() == CollisionKind::ExternalMatrix);
    CHECK((ext.matrix() - L).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("moments command writes a clean, reproducible report") {
    TempDir dir1("kinedecay_harness_mom1");
    TempDir dir2("kinedecay_harness_mom2");

    ExperimentConfig c;
    c.model = "vmb1";
    c.degree_cap = 3;
    c.seed = 7;
    c.out_dir = dir1.path.string();

    CHECK_THROWS_AS(cmd_moments(c, 0.0), std::invalid_argument);
    REQUIRE(cmd_moments(c, 1.0) == 0);

    const json report = json::parse(slurp(dir1.file("moments.json")));
    CHECK(report.at("model") == "vmb1");
    CHECK(report.at("degree_cap") == 3);
    CHECK(report.at("k") == 1.0);
    CHECK(report.at("spectral_abscissa").get<double>() < -0.05);
    CHECK(report.at("gauss_residual_max").get<double>() <= 1e-10);
    CHECK(report.at("moment_residual_max").get<double>() <= 1e-10);
    CHECK(report.at("semigroup_deviation_max").get<double>() <= 1e-10);
    CHECK(report.at("energy_balance_rel").get<double>() <= 1e-8);

    // same seed, same config: byte-identical output
    c.out_dir = dir2.path.string();
    REQUIRE(cmd_moments(c, 1.0) == 0);
    CHECK(slurp(dir1.file("moments.json")) == slurp(dir2.file("moments.json")));
}

TEST_CASE("tune command reports coefficients and per-mode certificates") {
    TempDir dir("kinedecay_harness_tune");

    ExperimentConfig c;
    c.model = "be";
    c.degree_cap = 3;
    c.tune_grid = {0.5, 2.0, 3};
    c.out_dir = dir.path.string();

    REQUIRE(cmd_tune(c) == 0);
    const json report = json::parse(slurp(dir.file("tune.json")));
    CHECK(report.at("model") == "be");
    CHECK(report.at("lambda_min").get<double>() > 0.0);
    CHECK(report.at("equiv_lo").get<double>() >= 0.25);
    CHECK(report.at("equiv_hi").get<double>() <= 4.0);
    CHECK(report.at("source_constant").get<double>() > 0.0);
    const json& coeffs = report.at("coefficients");
    for (const char* key : {"kappa1", "kappa2", "kappa3", "kappa4"})
        CHECK(coeffs.at(key).get<double>() > 0.0);
    const json& per_k = report.at("per_k");
    REQUIRE(per_k.size() == 3);
    for (const json& row : per_k) {
        CHECK(row.at("lambda").get<double>() > 0.0);
        CHECK(row.at("equiv_lo").get<double>() <= row.at("equiv_hi").get<double>());
    }
}
