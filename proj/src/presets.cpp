#include <json.hpp>

#include "prsim/error.hpp"
#include "prsim/scenario.hpp"

namespace prsim {

namespace {

struct RawPreset {
  const char* name;
  const char* json;
};

constexpr RawPreset kRawPresets[] = {
#include "prsim_presets.inc"
};

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    std::vector<Preset> out;
    for (const auto& raw : kRawPresets) {
      const auto j = nlohmann::json::parse(raw.json);
      out.push_back({raw.name, j.value("description", std::string{}), raw.json});
    }
    return out;
  }();
  return all;
}

const Preset& find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  std::string known;
  for (const auto& p : presets()) known += (known.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

}  // namespace prsim
