#pragma once

#include <string>
#include <vector>

#include "propspan/cli/config.hpp"

namespace propspan::cli {

struct PresetInfo {
  std::string name;
  Task task;
  std::string description;
};

/// Registered presets in documentation order.
const std::vector<PresetInfo>& preset_registry();

/// Default run configuration of a preset. Throws ValidationError for unknown names.
RunConfig preset_config(const std::string& name);

}  // namespace propspan::cli
