#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "alphasde/model.hpp"

namespace alphasde {

using PresetParams = std::map<std::string, double, std::less<>>;

struct PresetParam {
    std::string name;
    double default_value;
    std::string meaning;
};

struct PresetInfo {
    std::string name;
    int state_dim;
    std::string description;
    std::vector<PresetParam> params;
};

/// All registered presets, in listing order.
const std::vector<PresetInfo>& preset_registry();
const PresetInfo& preset_info(std::string_view name);

/// Builds a preset; parameters not given take their defaults. Unknown
/// preset or parameter names throw ParameterError.
SDEModel make_preset(std::string_view name, const PresetParams& params = {});

} // namespace alphasde
