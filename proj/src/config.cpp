#include "alphasde/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "alphasde/format.hpp"

namespace alphasde {

using nlohmann::json;

std::string_view to_string(Experiment e) noexcept {
    switch (e) {
    case Experiment::simulate: return "simulate";
    case Experiment::wdw: return "wdw";
    case Experiment::fpe_evolve: return "fpe-evolve";
    case Experiment::operators: return "operators";
    case Experiment::steady: return "steady";
    case Experiment::reversal: return "reversal";
    case Experiment::report_all: return "report-all";
    }
    return "?";
}

namespace {

std::string pointer_token(std::string_view key) {
    std::string out;
    for (char c : key) {
        if (c == '~') out += "~0";
        else if (c == '/') out += "~1";
        else out += c;
    }
    return out;
}

// Line of every value (and object key) in the source text, by JSON pointer.
class SourceLines {
public:
    explicit SourceLines(std::string_view text) {
        struct Frame {
            bool object;
            std::string base;
            std::size_t index = 0;
            bool expect_key = true;
            std::string key;
        };
        std::vector<Frame> stack;
        int line = 1;
        auto here = [&]() -> std::string {
            if (stack.empty()) return "";
            const Frame& f = stack.back();
            return f.base + "/" + (f.object ? pointer_token(f.key) : std::to_string(f.index));
        };
        auto mark = [&] { lines_.emplace(here(), line); };
        for (std::size_t i = 0; i < text.size(); ++i) {
            const char c = text[i];
            if (c == '\n') {
                ++line;
            } else if (c == '"') {
                std::string s;
                for (++i; i < text.size() && text[i] != '"'; ++i) {
                    if (text[i] == '\\' && i + 1 < text.size()) ++i;
                    if (text[i] == '\n') ++line;
                    s += text[i];
                }
                if (!stack.empty() && stack.back().object && stack.back().expect_key) {
                    stack.back().key = std::move(s);
                    stack.back().expect_key = false;
                }
                mark();
            } else if (c == '{' || c == '[') {
                mark();
                stack.push_back(Frame{c == '{', here()});
            } else if (c == '}' || c == ']') {
                if (!stack.empty()) stack.pop_back();
            } else if (c == ',') {
                if (!stack.empty()) {
                    if (stack.back().object) stack.back().expect_key = true;
                    else ++stack.back().index;
                }
            } else if (c != ':' && c != ' ' && c != '\t' && c != '\r') {
                mark();
                while (i + 1 < text.size() && std::string_view(",]}\n \t\r").find(text[i + 1]) == std::string_view::npos) ++i;
            }
        }
    }

    // Falls back to the nearest enclosing value that was seen.
    int line_of(std::string pointer) const {
        for (;;) {
            const auto it = lines_.find(pointer);
            if (it != lines_.end()) return it->second;
            const auto cut = pointer.rfind('/');
            if (cut == std::string::npos) return 0;
            pointer.resize(cut);
        }
    }

private:
    std::map<std::string, int> lines_;
};

class Reader {
public:
    explicit Reader(const SourceLines& lines) : lines_(lines) {}

    [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
        const int line = lines_.line_of(pointer);
        std::string where = line > 0 ? "config line " + std::to_string(line) : "config";
        throw ConfigError(where + ": " + (pointer.empty() ? "/" : pointer) + ": " + message, line);
    }

    void allow(const json& obj, const std::string& at, std::initializer_list<std::string_view> keys) const {
        for (const auto& [key, value] : obj.items()) {
            bool known = false;
            for (auto k : keys) known |= key == k;
            if (!known) fail(at + "/" + pointer_token(key), "unknown key '" + key + "'");
        }
    }

    const json* section(const json& parent, const std::string& at, const char* key) const {
        const auto it = parent.find(key);
        if (it == parent.end()) return nullptr;
        if (!it->is_object()) fail(at + "/" + key, "expected an object");
        return &*it;
    }

    double number(const json& parent, const std::string& at, const char* key, double fallback) const {
        const auto it = parent.find(key);
        if (it == parent.end()) return fallback;
        if (!it->is_number()) fail(at + "/" + key, "expected a number");
        const double v = it->get<double>();
        if (!std::isfinite(v)) fail(at + "/" + key, "expected a finite number");
        return v;
    }

    double positive(const json& parent, const std::string& at, const char* key, double fallback) const {
        const double v = number(parent, at, key, fallback);
        if (!(v > 0.0)) fail(at + "/" + key, std::string(key) + " must be positive, got " + format_double(v));
        return v;
    }

    std::uint64_t count(const json& parent, const std::string& at, const char* key, std::uint64_t fallback,
                        std::uint64_t minimum) const {
        const auto it = parent.find(key);
        if (it == parent.end()) return fallback;
        if (!it->is_number_integer() || (it->is_number_integer() && !it->is_number_unsigned() && it->get<std::int64_t>() < 0)) {
            fail(at + "/" + key, "expected a non-negative integer");
        }
        const auto v = it->get<std::uint64_t>();
        if (v < minimum) fail(at + "/" + key, std::string(key) + " must be at least " + std::to_string(minimum));
        return v;
    }

    std::string text(const json& parent, const std::string& at, const char* key, std::string fallback) const {
        const auto it = parent.find(key);
        if (it == parent.end()) return fallback;
        if (!it->is_string()) fail(at + "/" + key, "expected a string");
        return it->get<std::string>();
    }

    bool flag(const json& parent, const std::string& at, const char* key, bool fallback) const {
        const auto it = parent.find(key);
        if (it == parent.end()) return fallback;
        if (!it->is_boolean()) fail(at + "/" + key, "expected true or false");
        return it->get<bool>();
    }

    std::vector<double> numbers(const json& parent, const std::string& at, const char* key) const {
        const auto it = parent.find(key);
        if (it == parent.end()) return {};
        const std::string here = at + "/" + key;
        if (it->is_number()) return {number(parent, at, key, 0.0)};
        if (!it->is_array()) fail(here, "expected a number or an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < it->size(); ++i) {
            const json& v = (*it)[i];
            if (!v.is_number() || !std::isfinite(v.get<double>())) fail(here + "/" + std::to_string(i), "expected a finite number");
            out.push_back(v.get<double>());
        }
        return out;
    }

private:
    const SourceLines& lines_;
};

Experiment parse_experiment(const Reader& r, const std::string& name) {
    static const std::pair<const char*, Experiment> table[] = {
        {"simulate", Experiment::simulate},   {"wdw", Experiment::wdw},
        {"fpe-evolve", Experiment::fpe_evolve}, {"operators", Experiment::operators},
        {"steady", Experiment::steady},       {"reversal", Experiment::reversal},
        {"report-all", Experiment::report_all},
    };
    for (const auto& [key, e] : table)
        if (name == key) return e;
    r.fail("/experiment", "unknown experiment '" + name +
                              "' (expected simulate, wdw, fpe-evolve, operators, steady, reversal or report-all)");
}

bool needs_grid(Experiment e) {
    return e == Experiment::fpe_evolve || e == Experiment::operators || e == Experiment::steady;
}

} // namespace

RunConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        int line = 1;
        for (std::size_t i = 0; i < std::min(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw ConfigError("config line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")", line);
    }
    const SourceLines lines(text);
    const Reader r(lines);
    if (!doc.is_object()) r.fail("", "expected a JSON object at the top level");
    r.allow(doc, "", {"schema_version", "experiment", "alpha", "scheme", "picard_iters", "threads", "model", "grid",
                      "sim", "fpe", "steady", "reversal", "report", "output"});

    RunConfig cfg;
    cfg.source = doc;
    if (!doc.contains("schema_version")) r.fail("", "missing schema_version");
    if (r.count(doc, "", "schema_version", 0, 0) != kSchemaVersion) {
        r.fail("/schema_version", "unsupported schema_version (this build reads " + std::to_string(kSchemaVersion) + ")");
    }
    if (!doc.contains("experiment")) r.fail("", "missing experiment");
    cfg.experiment = parse_experiment(r, r.text(doc, "", "experiment", ""));

    try {
        cfg.alpha = Alpha(r.number(doc, "", "alpha", 1.0));
    } catch (const ConfigError&) {
        throw;
    } catch (const ParameterError& e) {
        r.fail("/alpha", e.what());
    }
    try {
        cfg.scheme = parse_scheme(r.text(doc, "", "scheme", "ito_form"));
    } catch (const ConfigError&) {
        throw;
    } catch (const ParameterError& e) {
        r.fail("/scheme", e.what());
    }
    cfg.picard_iters = static_cast<int>(r.count(doc, "", "picard_iters", kDefaultPicardIterations, 1));
    cfg.threads = static_cast<unsigned>(r.count(doc, "", "threads", 0, 0));

    if (const json* m = r.section(doc, "", "model")) {
        r.allow(*m, "/model", {"preset", "params"});
        cfg.model.preset = r.text(*m, "/model", "preset", cfg.model.preset);
        if (const json* p = r.section(*m, "/model", "params")) {
            for (const auto& [key, value] : p->items()) cfg.model.params[key] = r.number(*p, "/model/params", key.c_str(), 0.0);
        }
    }
    int model_dim = 0;
    try {
        model_dim = make_preset(cfg.model.preset, cfg.model.params).state_dim();
    } catch (const ParameterError& e) {
        r.fail("/model", e.what());
    }

    if (const json* g = r.section(doc, "", "grid")) {
        r.allow(*g, "/grid", {"axes"});
        const auto it = g->find("axes");
        if (it == g->end() || !it->is_array() || it->empty() || it->size() > 2) {
            r.fail("/grid/axes", "expected an array of one or two axes");
        }
        for (std::size_t k = 0; k < it->size(); ++k) {
            const std::string at = "/grid/axes/" + std::to_string(k);
            const json& a = (*it)[k];
            if (!a.is_object()) r.fail(at, "expected an object with lower, upper and points");
            r.allow(a, at, {"lower", "upper", "points"});
            for (const char* key : {"lower", "upper", "points"})
                if (!a.contains(key)) r.fail(at, std::string("missing ") + key);
            Axis axis{r.number(a, at, "lower", 0.0), r.number(a, at, "upper", 1.0),
                      r.count(a, at, "points", 0, Grid::kMinPoints)};
            if (!(axis.upper > axis.lower)) r.fail(at, "upper must exceed lower");
            cfg.grid.push_back(axis);
        }
        if (static_cast<int>(cfg.grid.size()) != model_dim) {
            r.fail("/grid/axes", "grid has " + std::to_string(cfg.grid.size()) + " axes but the model has dimension " +
                                     std::to_string(model_dim));
        }
    } else if (needs_grid(cfg.experiment)) {
        r.fail("", "experiment '" + std::string(to_string(cfg.experiment)) + "' needs a grid");
    }

    if (const json* s = r.section(doc, "", "sim")) {
        const std::string at = "/sim";
        r.allow(*s, at, {"n_paths", "dt", "t_end", "seed", "x0", "steps", "keep_paths"});
        cfg.sim.n_paths = r.count(*s, at, "n_paths", cfg.sim.n_paths, 1);
        cfg.sim.dt = r.positive(*s, at, "dt", cfg.sim.dt);
        cfg.sim.t_end = r.positive(*s, at, "t_end", cfg.sim.t_end);
        cfg.sim.seed = r.count(*s, at, "seed", cfg.sim.seed, 0);
        cfg.sim.x0 = r.numbers(*s, at, "x0");
        cfg.sim.steps = r.count(*s, at, "steps", cfg.sim.steps, 100);
        cfg.sim.keep_paths = r.flag(*s, at, "keep_paths", false);
        if (!cfg.sim.x0.empty() && static_cast<int>(cfg.sim.x0.size()) != model_dim) {
            r.fail(at + "/x0", "x0 needs " + std::to_string(model_dim) + " component(s)");
        }
        if (cfg.experiment != Experiment::wdw && cfg.sim.dt > cfg.sim.t_end) r.fail(at + "/dt", "dt must not exceed t_end");
    }

    if (const json* f = r.section(doc, "", "fpe")) {
        const std::string at = "/fpe";
        r.allow(*f, at, {"t_end", "dt", "snapshots", "initial", "boundary"});
        cfg.fpe.t_end = r.positive(*f, at, "t_end", cfg.fpe.t_end);
        cfg.fpe.dt = r.number(*f, at, "dt", 0.0);
        if (cfg.fpe.dt < 0.0) r.fail(at + "/dt", "dt must be positive (or 0 for the default step)");
        cfg.fpe.snapshots = r.numbers(*f, at, "snapshots");
        for (std::size_t i = 0; i < cfg.fpe.snapshots.size(); ++i) {
            const double t = cfg.fpe.snapshots[i];
            if (!(t > 0.0 && t <= cfg.fpe.t_end)) r.fail(at + "/snapshots/" + std::to_string(i), "snapshot time outside (0, t_end]");
        }
        if (const json* init = r.section(*f, at, "initial")) {
            r.allow(*init, at + "/initial", {"mean", "std"});
            cfg.fpe.initial_mean = r.numbers(*init, at + "/initial", "mean");
            cfg.fpe.initial_std = r.positive(*init, at + "/initial", "std", cfg.fpe.initial_std);
            if (!cfg.fpe.initial_mean.empty() && static_cast<int>(cfg.fpe.initial_mean.size()) != model_dim) {
                r.fail(at + "/initial/mean", "mean needs " + std::to_string(model_dim) + " component(s)");
            }
        }
        try {
            cfg.fpe.boundary = parse_boundary(r.text(*f, at, "boundary", "no_flux"));
        } catch (const ConfigError&) {
            throw;
        } catch (const ParameterError& e) {
            r.fail(at + "/boundary", e.what());
        }
    }

    if (const json* s = r.section(doc, "", "steady")) {
        r.allow(*s, "/steady", {"epsilon", "method"});
        cfg.steady.epsilon = r.positive(*s, "/steady", "epsilon", cfg.steady.epsilon);
        const std::string method = r.text(*s, "/steady", "method", "nullspace");
        if (method == "nullspace") cfg.steady.method = SteadyMethod::nullspace;
        else if (method == "quadrature") cfg.steady.method = SteadyMethod::quadrature;
        else r.fail("/steady/method", "unknown method '" + method + "' (expected nullspace or quadrature)");
        if (cfg.steady.method == SteadyMethod::quadrature && model_dim != 1) {
            r.fail("/steady/method", "quadrature steady states are 1-D only");
        }
    }

    if (const json* v = r.section(doc, "", "reversal")) {
        const std::string at = "/reversal";
        r.allow(*v, at, {"x", "y", "t", "delta", "expect_symmetric", "threshold"});
        cfg.reversal.x = r.number(*v, at, "x", cfg.reversal.x);
        cfg.reversal.y = r.number(*v, at, "y", cfg.reversal.y);
        cfg.reversal.t = r.positive(*v, at, "t", cfg.reversal.t);
        cfg.reversal.delta = r.positive(*v, at, "delta", cfg.reversal.delta);
        if (v->contains("expect_symmetric")) cfg.reversal.expect_symmetric = r.flag(*v, at, "expect_symmetric", true);
        if (v->contains("threshold")) cfg.reversal.threshold = r.positive(*v, at, "threshold", 4.0);
    }

    if (const json* rep = r.section(doc, "", "report")) {
        r.allow(*rep, "/report", {"checks"});
        for (double id : r.numbers(*rep, "/report", "checks")) {
            if (id != std::floor(id) || id < 1 || id > 12) r.fail("/report/checks", "check ids run from 1 to 12");
            cfg.report.checks.push_back(static_cast<int>(id));
        }
    }

    if (const json* out = r.section(doc, "", "output")) {
        r.allow(*out, "/output", {"dir", "format"});
        cfg.output_dir = r.text(*out, "/output", "dir", "");
        const std::string format = r.text(*out, "/output", "format", "csv");
        if (format != "csv") r.fail("/output/format", "unsupported format '" + format + "' (only csv)");
    }

    if ((cfg.experiment == Experiment::reversal) && model_dim != 1) r.fail("/model", "reversal needs a 1-D model");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string(), 0);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

} // namespace alphasde
