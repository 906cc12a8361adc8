#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "alphasde/config.hpp"
#include "alphasde/errors.hpp"

using namespace alphasde;

namespace {

// Returns the ConfigError raised by parsing `text`; fails the test if none.
ConfigError rejection(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("config was accepted: " << text);
    return ConfigError("", 0);
}

bool mentions(const ConfigError& e, const std::string& needle) {
    return std::string(e.what()).find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("minimal configs get defaults") {
    const RunConfig cfg = parse_config(R"({"schema_version": 1, "experiment": "wdw"})");
    CHECK(cfg.experiment == Experiment::wdw);
    CHECK(cfg.alpha.value() == 1.0);
    CHECK(cfg.scheme == Scheme::ito_form);
    CHECK(cfg.model.preset == "linear-noise");
    CHECK(cfg.sim.n_paths == 10000);
    CHECK(cfg.grid.empty());
}

TEST_CASE("full simulate config round-trips into fields") {
    const RunConfig cfg = parse_config(R"({
  "schema_version": 1,
  "experiment": "simulate",
  "alpha": 0.5,
  "scheme": "alpha_point",
  "picard_iters": 3,
  "threads": 2,
  "model": {"preset": "tanh-diffusion", "params": {"c": 0.4}},
  "grid": {"axes": [{"lower": -3, "upper": 3, "points": 40}]},
  "sim": {"n_paths": 123, "dt": 0.01, "t_end": 0.5, "seed": 9, "x0": 0.25, "keep_paths": true},
  "output": {"dir": "somewhere", "format": "csv"}
})");
    CHECK(cfg.alpha.value() == 0.5);
    CHECK(cfg.scheme == Scheme::alpha_point);
    CHECK(cfg.picard_iters == 3);
    CHECK(cfg.threads == 2);
    CHECK(cfg.model.params.at("c") == 0.4);
    REQUIRE(cfg.grid.size() == 1);
    CHECK(cfg.grid[0].points == 40);
    CHECK(cfg.sim.n_paths == 123);
    CHECK(cfg.sim.seed == 9);
    REQUIRE(cfg.sim.x0.size() == 1);
    CHECK(cfg.sim.x0[0] == 0.25);
    CHECK(cfg.sim.keep_paths);
    CHECK(cfg.output_dir == "somewhere");
}

TEST_CASE("unknown keys are rejected with their line") {
    const ConfigError e = rejection("{\n  \"schema_version\": 1,\n  \"experiment\": \"wdw\",\n  \"sim\": {\n    \"n_path\": 5\n  }\n}");
    CHECK(e.line() == 5);
    CHECK(mentions(e, "config line 5"));
    CHECK(mentions(e, "/sim/n_path"));
    CHECK(mentions(e, "unknown key"));

    CHECK(rejection(R"({"schema_version": 1, "experiment": "wdw", "extra": 1})").line() == 1);
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "steady", "model": {"preset": "ou", "parms": {}},
        "grid": {"axes": [{"lower": -1, "upper": 1, "points": 16}]}})"), "parms"));
}

TEST_CASE("alpha outside [0, 1] cites the constraint") {
    const ConfigError e = rejection("{\n\"schema_version\": 1,\n\"experiment\": \"wdw\",\n\"alpha\": 1.5\n}");
    CHECK(e.line() == 4);
    CHECK(mentions(e, "/alpha"));
    CHECK(mentions(e, "0 <= alpha <= 1"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "wdw", "alpha": -0.1})"), "0 <= alpha <= 1"));
}

TEST_CASE("schema_version and experiment are required") {
    CHECK(mentions(rejection(R"({"experiment": "wdw"})"), "schema_version"));
    CHECK(mentions(rejection(R"({"schema_version": 2, "experiment": "wdw"})"), "schema_version"));
    CHECK(mentions(rejection(R"({"schema_version": 1})"), "experiment"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "dance"})"), "dance"));
}

TEST_CASE("grid-based experiments need a grid matching the model dimension") {
    for (const char* exp : {"fpe-evolve", "operators", "steady"})
        CHECK(mentions(rejection(std::string(R"({"schema_version": 1, "experiment": ")") + exp + "\"}"), "needs a grid"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "steady", "model": {"preset": "planar"},
        "grid": {"axes": [{"lower": -1, "upper": 1, "points": 16}]}})"), "dimension"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "steady",
        "grid": {"axes": [{"lower": 1, "upper": 1, "points": 16}]}})"), "upper must exceed lower"));
}

TEST_CASE("malformed JSON reports a line") {
    const ConfigError e = rejection("{\n\"schema_version\": 1,\n\"experiment\": \"wdw\",,\n}");
    CHECK(e.line() == 3);
    CHECK(mentions(e, "malformed JSON"));
}

TEST_CASE("value checks") {
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "wdw", "sim": {"n_paths": 0}})"), "n_paths"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "simulate", "sim": {"dt": -1}})"), "positive"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "simulate", "sim": {"dt": 2, "t_end": 1}})"),
                   "dt must not exceed t_end"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "report-all", "report": {"checks": [13]}})"),
                   "1 to 12"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "wdw", "output": {"format": "parquet"}})"),
                   "parquet"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "wdw", "scheme": "midpoint"})"), "/scheme"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "wdw", "model": {"preset": "nope"}})"), "/model"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "reversal", "model": {"preset": "planar"}})"),
                   "1-D"));
    CHECK(mentions(rejection(R"({"schema_version": 1, "experiment": "wdw", "alpha": "one"})"), "number"));
}

TEST_CASE("config errors are parameter errors") {
    CHECK_THROWS_AS(parse_config("[]"), ParameterError);
}

TEST_CASE("load_config reads files and rejects missing ones") {
    const std::string path = "test_config_sample.json";
    {
        std::ofstream os(path);
        os << R"({"schema_version": 1, "experiment": "wdw", "alpha": 0})";
    }
    CHECK(load_config(path).alpha.value() == 0.0);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_config("does/not/exist.json"), ConfigError);
}
