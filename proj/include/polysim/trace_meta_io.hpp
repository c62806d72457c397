// Copyright 2026 The polysim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>

#include "json.hpp"
#include "polysim/trace.hpp"

namespace polysim {

// Metadata sidecar: JSON with algorithm id, fixed key (hex), and one
// plaintext (hex) per trace, in trace order.
inline std::string trace_meta_to_json(const TraceMeta& meta) {
  nlohmann::json j;
  j["algorithm"] = meta.algorithm;
  j["key"] = to_hex(meta.key);
  auto& pts = j["plaintexts"] = nlohmann::json::array();
  for (const auto& pt : meta.plaintexts) pts.push_back(to_hex(pt));
  return j.dump(1) + "\n";
}

inline TraceMeta trace_meta_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  TraceMeta meta;
  meta.algorithm = j.at("algorithm").get<std::string>();
  meta.key = parse_hex(j.at("key").get<std::string>());
  for (const auto& pt : j.at("plaintexts")) meta.plaintexts.push_back(parse_hex(pt.get<std::string>()));
  return meta;
}

inline void save_trace_meta(const TraceMeta& meta, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ToolError("cannot write " + path);
  os << trace_meta_to_json(meta);
}

inline TraceMeta load_trace_meta(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ToolError("cannot read " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return trace_meta_from_json(text);
}

}  // namespace polysim
