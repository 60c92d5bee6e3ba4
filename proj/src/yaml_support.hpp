#pragma once

#include <yaml-cpp/yaml.h>

#include <string>

#include "ehwrt/device_model.hpp"
#include "ehwrt/duration.hpp"
#include "ehwrt/parse_error.hpp"

namespace ehwrt::detail {

/// Carries the file name so node-level errors can report "file:line".
struct YamlContext {
  std::string origin;

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const;

  const YAML::Node require(const YAML::Node& map, const char* key) const;
  void expect_map(const YAML::Node& node, const char* what) const;
  void expect_keys(const YAML::Node& map,
                   std::initializer_list<const char*> allowed) const;

  std::string str(const YAML::Node& node) const;
  double real(const YAML::Node& node) const;
  std::int64_t integer(const YAML::Node& node) const;
  bool boolean(const YAML::Node& node) const;
  Nanos duration(const YAML::Node& node, std::string_view default_unit) const;

  DeviceProfile profile(const YAML::Node& node) const;
};

YAML::Node load_yaml_file(const std::string& path);
YAML::Node load_yaml_text(const std::string& text, const std::string& origin);

}  // namespace ehwrt::detail
