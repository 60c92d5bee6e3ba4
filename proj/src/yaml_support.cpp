#include "yaml_support.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ehwrt::detail {

void YamlContext::fail(const YAML::Node& node, const std::string& msg) const {
  const int line = node.IsDefined() && node.Mark().line >= 0
                       ? node.Mark().line + 1
                       : 0;
  throw ParseError(origin, line, msg);
}

const YAML::Node YamlContext::require(const YAML::Node& map,
                                      const char* key) const {
  const YAML::Node v = map[key];
  if (!v) fail(map, std::string("missing required key '") + key + "'");
  return v;
}

void YamlContext::expect_map(const YAML::Node& node, const char* what) const {
  if (!node.IsMap()) fail(node, std::string(what) + " must be a mapping");
}

void YamlContext::expect_keys(
    const YAML::Node& map, std::initializer_list<const char*> allowed) const {
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(kv.first, "unknown key '" + key + "'");
  }
}

std::string YamlContext::str(const YAML::Node& node) const {
  if (!node.IsScalar()) fail(node, "expected a scalar value");
  return node.Scalar();
}

double YamlContext::real(const YAML::Node& node) const {
  const std::string s = str(node);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail(node, "expected a number, got '" + s + "'");
  return v;
}

std::int64_t YamlContext::integer(const YAML::Node& node) const {
  const std::string s = str(node);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail(node, "expected an integer, got '" + s + "'");
  return v;
}

bool YamlContext::boolean(const YAML::Node& node) const {
  const std::string s = str(node);
  if (s == "true" || s == "yes") return true;
  if (s == "false" || s == "no") return false;
  fail(node, "expected true/false, got '" + s + "'");
}

Nanos YamlContext::duration(const YAML::Node& node,
                            std::string_view default_unit) const {
  try {
    return parse_duration(str(node), default_unit);
  } catch (const std::invalid_argument& e) {
    fail(node, e.what());
  }
}

DeviceProfile YamlContext::profile(const YAML::Node& node) const {
  expect_map(node, "device profile");
  expect_keys(node, {"name", "kind", "size", "t_program_ms", "transfer", "notes"});
  DeviceProfile p;
  p.name = str(require(node, "name"));
  try {
    p.kind = parse_device_kind(str(require(node, "kind")));
  } catch (const DeviceError& e) {
    fail(node["kind"], e.what());
  }
  p.size = static_cast<int>(integer(require(node, "size")));
  p.t_program = duration(require(node, "t_program_ms"), "ms");
  if (const auto t = node["transfer"]) {
    expect_map(t, "transfer");
    expect_keys(t, {"bus_width", "clock_hz", "bitstream_bytes"});
    TransferGeometry g;
    g.bus_width_bits = static_cast<int>(integer(require(t, "bus_width")));
    g.clock_hz = static_cast<std::int64_t>(real(require(t, "clock_hz")));
    g.bitstream_bytes = integer(require(t, "bitstream_bytes"));
    p.transfer = g;
  }
  if (const auto n = node["notes"]) p.notes = str(n);
  try {
    p.validate();
  } catch (const DeviceError& e) {
    fail(node, e.what());
  }
  return p;
}

YAML::Node load_yaml_text(const std::string& text, const std::string& origin) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(origin, e.mark.line + 1, e.msg);
  }
}

YAML::Node load_yaml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_yaml_text(ss.str(), path);
}

}  // namespace ehwrt::detail
