// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include "json_config.hpp"

#include <charconv>

namespace cfgu::cli {

namespace {

void flatten(const nlohmann::json& node, std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
  for (const auto& [key, value] : node.items()) {
    if (value.is_object()) {
      parents.push_back(key);
      flatten(value, parents, items);
      parents.pop_back();
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    const auto scalar = [](const nlohmann::json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
      return v.dump();
    };
    if (value.is_array()) {
      for (const auto& v : value) item.inputs.push_back(scalar(v));
    } else {
      item.inputs.push_back(scalar(value));
    }
    items.push_back(std::move(item));
  }
}

nlohmann::ordered_json typed(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  double number = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), number);
  if (!text.empty() && ec == std::errc() && ptr == text.data() + text.size()) {
    std::int64_t integer = 0;
    const auto [iptr, iec] = std::from_chars(text.data(), text.data() + text.size(), integer);
    if (iec == std::errc() && iptr == text.data() + text.size()) return integer;
    return number;
  }
  return text;
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool, bool, std::string) const {
  return resolved_options(*app).dump(2) + "\n";
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  nlohmann::json doc;
  try {
    input >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw CLI::ConversionError("config file is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
  std::vector<CLI::ConfigItem> items;
  std::vector<std::string> parents;
  flatten(doc, parents, items);
  return items;
}

nlohmann::ordered_json resolved_options(const CLI::App& app) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->get_expected_max() == 0) {
      out[name] = opt->count() > 0 && opt->as<bool>();
    } else if (opt->count() > 0) {
      const std::vector<std::string>& results = opt->results();
      if (results.size() == 1 && opt->get_expected_max() <= 1) {
        out[name] = typed(results.front());
      } else {
        nlohmann::ordered_json values = nlohmann::ordered_json::array();
        for (const auto& r : results) values.push_back(typed(r));
        out[name] = std::move(values);
      }
    } else {
      out[name] = typed(opt->get_default_str());
    }
  }
  return out;
}

}  // namespace cfgu::cli
