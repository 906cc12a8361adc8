#include "alphasde/presets.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace alphasde {

namespace {

using Span = std::span<const double>;
using Out = std::span<double>;

const std::vector<PresetInfo> kRegistry = {
    {"linear-noise", 1, "b(x) = sigma*x, a(x) = -k*x",
     {{"sigma", 1.0, "noise slope"}, {"k", 0.0, "linear restoring rate"}}},
    {"ou", 1, "a(x) = -k*x, D = d (constant)",
     {{"k", 1.0, "restoring rate"}, {"d", 2.0, "constant diffusion D"}}},
    {"tanh-diffusion", 1, "b(x) = s*(1 + c*tanh x), D = b^2, a(x) = -k*x",
     {{"c", 0.9, "tanh amplitude, |c| < 1"}, {"s", 1.0, "noise scale"}, {"k", 0.0, "restoring rate"}}},
    {"sine-diffusion", 1, "D(x) = d0*(1 + c*sin x), b = sqrt(D), a(x) = -k*x",
     {{"c", 0.5, "sine amplitude, |c| < 1"}, {"d0", 1.0, "mean diffusion"}, {"k", 0.0, "restoring rate"}}},
    {"quadratic-diffusion", 1, "D(x) = d0*(1 + c*x^2), b = sqrt(D), a(x) = -k*x",
     {{"c", 1.0, "curvature, c >= 0"}, {"d0", 1.0, "diffusion at origin"}, {"k", 0.0, "restoring rate"}}},
    {"double-well", 1, "a(x) = x - x^3, D(x) = eps*(1 + x^2/2), b = sqrt(D)",
     {{"eps", 0.05, "noise strength"}}},
    {"polynomial", 1, "a(x) = sum d_i x^i, b(x) = sum b_i x^i (i = 0..3)",
     {{"d0", 0.0, ""}, {"d1", 0.0, ""}, {"d2", 0.0, ""}, {"d3", 0.0, ""},
      {"b0", 1.0, ""}, {"b1", 0.0, ""}, {"b2", 0.0, ""}, {"b3", 0.0, ""}}},
    {"planar", 2, "a = (-k1*x1, -k2*x2), b = diag(1 + c1*tanh x1, 1 + c2*tanh x2)",
     {{"k1", 1.0, ""}, {"k2", 1.0, ""}, {"c1", 0.5, "|c1| < 1"}, {"c2", 0.5, "|c2| < 1"}}},
    {"rotated", 2,
     "b = R(theta) * diag(1 + c*tanh x1, 1 + c*tanh x2) (non-symmetric), a = -k*x",
     {{"theta", 0.5, "rotation angle"}, {"c", 0.5, "|c| < 1"}, {"k", 0.0, "restoring rate"}}},
};

double param(const PresetParams& p, const PresetInfo& info, std::string_view key) {
    if (auto it = p.find(key); it != p.end()) return it->second;
    for (const auto& d : info.params)
        if (d.name == key) return d.default_value;
    throw ParameterError("preset '" + info.name + "' has no parameter '" + std::string(key) + "'");
}

FieldFn linear_drift(double k) {
    return [k](Span x, Out out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = -k * x[i];
    };
}

// b = sqrt(d0 * g(x)) for a scalar shape g with derivative g'.
template <class G, class Gp>
SDEModel sqrt_diffusion(std::string name, double k, double d0, G g, Gp gp) {
    FieldFn noise = [=](Span x, Out out) { out[0] = std::sqrt(d0 * g(x[0])); };
    FieldFn jac = [=](Span x, Out out) {
        const double b = std::sqrt(d0 * g(x[0]));
        out[0] = d0 * gp(x[0]) / (2.0 * b);
    };
    return SDEModel(std::move(name), 1, 1, linear_drift(k), std::move(noise), std::move(jac));
}

double tanh_prime(double x) {
    const double c = std::cosh(x);
    return 1.0 / (c * c);
}

} // namespace

const std::vector<PresetInfo>& preset_registry() { return kRegistry; }

const PresetInfo& preset_info(std::string_view name) {
    auto it = std::find_if(kRegistry.begin(), kRegistry.end(),
                           [&](const PresetInfo& p) { return p.name == name; });
    if (it == kRegistry.end()) throw ParameterError("unknown preset '" + std::string(name) + "'");
    return *it;
}

SDEModel make_preset(std::string_view name, const PresetParams& params) {
    const PresetInfo& info = preset_info(name);
    for (const auto& [key, value] : params) {
        const bool known = std::any_of(info.params.begin(), info.params.end(),
                                       [&](const PresetParam& p) { return p.name == key; });
        if (!known) throw ParameterError("preset '" + info.name + "' has no parameter '" + key + "'");
        if (!std::isfinite(value)) throw ParameterError("parameter '" + key + "' must be finite");
    }
    auto get = [&](std::string_view key) { return param(params, info, key); };

    if (name == "linear-noise") {
        const double sigma = get("sigma");
        return SDEModel(info.name, 1, 1, linear_drift(get("k")),
                        [sigma](Span x, Out out) { out[0] = sigma * x[0]; },
                        [sigma](Span, Out out) { out[0] = sigma; });
    }
    if (name == "ou") {
        const double d = get("d");
        if (!(d > 0.0)) throw ParameterError("ou: d must be positive");
        const double b = std::sqrt(d);
        return SDEModel(info.name, 1, 1, linear_drift(get("k")),
                        [b](Span, Out out) { out[0] = b; }, [](Span, Out out) { out[0] = 0.0; });
    }
    if (name == "tanh-diffusion") {
        const double c = get("c");
        const double s = get("s");
        if (!(std::abs(c) < 1.0)) throw ParameterError("tanh-diffusion: |c| must be < 1");
        return SDEModel(info.name, 1, 1, linear_drift(get("k")),
                        [c, s](Span x, Out out) { out[0] = s * (1.0 + c * std::tanh(x[0])); },
                        [c, s](Span x, Out out) { out[0] = s * c * tanh_prime(x[0]); });
    }
    if (name == "sine-diffusion") {
        const double c = get("c");
        if (!(std::abs(c) < 1.0)) throw ParameterError("sine-diffusion: |c| must be < 1");
        return sqrt_diffusion(
            info.name, get("k"), get("d0"), [c](double x) { return 1.0 + c * std::sin(x); },
            [c](double x) { return c * std::cos(x); });
    }
    if (name == "quadratic-diffusion") {
        const double c = get("c");
        if (c < 0.0) throw ParameterError("quadratic-diffusion: c must be >= 0");
        return sqrt_diffusion(
            info.name, get("k"), get("d0"), [c](double x) { return 1.0 + c * x * x; },
            [c](double x) { return 2.0 * c * x; });
    }
    if (name == "double-well") {
        const double eps = get("eps");
        if (!(eps > 0.0)) throw ParameterError("double-well: eps must be positive");
        FieldFn drift = [](Span x, Out out) { out[0] = x[0] - x[0] * x[0] * x[0]; };
        return SDEModel(info.name, 1, 1, std::move(drift),
                        [eps](Span x, Out out) { out[0] = std::sqrt(eps * (1.0 + 0.5 * x[0] * x[0])); },
                        [eps](Span x, Out out) {
                            out[0] = eps * x[0] / (2.0 * std::sqrt(eps * (1.0 + 0.5 * x[0] * x[0])));
                        });
    }
    if (name == "polynomial") {
        const std::array<double, 4> d = {get("d0"), get("d1"), get("d2"), get("d3")};
        const std::array<double, 4> b = {get("b0"), get("b1"), get("b2"), get("b3")};
        auto horner = [](const std::array<double, 4>& c, double x) {
            return ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
        };
        return SDEModel(
            info.name, 1, 1, [d, horner](Span x, Out out) { out[0] = horner(d, x[0]); },
            [b, horner](Span x, Out out) { out[0] = horner(b, x[0]); },
            [b](Span x, Out out) { out[0] = (3.0 * b[3] * x[0] + 2.0 * b[2]) * x[0] + b[1]; });
    }
    if (name == "planar") {
        const double k1 = get("k1"), k2 = get("k2"), c1 = get("c1"), c2 = get("c2");
        if (!(std::abs(c1) < 1.0 && std::abs(c2) < 1.0)) throw ParameterError("planar: |c| must be < 1");
        return SDEModel(
            info.name, 2, 2,
            [k1, k2](Span x, Out out) {
                out[0] = -k1 * x[0];
                out[1] = -k2 * x[1];
            },
            [c1, c2](Span x, Out out) {
                out[0] = 1.0 + c1 * std::tanh(x[0]);
                out[1] = 0.0;
                out[2] = 0.0;
                out[3] = 1.0 + c2 * std::tanh(x[1]);
            },
            [c1, c2](Span x, Out out) {
                std::fill(out.begin(), out.end(), 0.0);
                out[(0 * 2 + 0) * 2 + 0] = c1 * tanh_prime(x[0]);
                out[(1 * 2 + 1) * 2 + 1] = c2 * tanh_prime(x[1]);
            });
    }
    if (name == "rotated") {
        const double theta = get("theta"), c = get("c"), k = get("k");
        if (!(std::abs(c) < 1.0)) throw ParameterError("rotated: |c| must be < 1");
        const double cs = std::cos(theta), sn = std::sin(theta);
        // b^{ik} = R_{ik} s_k(x_k), R = [[cs, -sn], [sn, cs]]
        return SDEModel(
            info.name, 2, 2, linear_drift(k),
            [=](Span x, Out out) {
                const double s0 = 1.0 + c * std::tanh(x[0]);
                const double s1 = 1.0 + c * std::tanh(x[1]);
                out[0] = cs * s0;
                out[1] = -sn * s1;
                out[2] = sn * s0;
                out[3] = cs * s1;
            },
            [=](Span x, Out out) {
                std::fill(out.begin(), out.end(), 0.0);
                const double d0 = c * tanh_prime(x[0]);
                const double d1 = c * tanh_prime(x[1]);
                out[(0 * 2 + 0) * 2 + 0] = cs * d0;
                out[(0 * 2 + 1) * 2 + 1] = -sn * d1;
                out[(1 * 2 + 0) * 2 + 0] = sn * d0;
                out[(1 * 2 + 1) * 2 + 1] = cs * d1;
            });
    }
    throw ParameterError("unknown preset '" + std::string(name) + "'");
}

} // namespace alphasde
