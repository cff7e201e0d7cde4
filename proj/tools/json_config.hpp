// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace cfgu::cli {

// JSON config files for CLI11. Nested objects address subcommands:
//   {"workers": 2, "generate": {"gamma": 3}, "eval": {"pii": {"gamma": 2}}}
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

// Resolved option values of `app` (flags, config file or defaults), keyed by
// long option name. Numbers and booleans keep their JSON type.
nlohmann::ordered_json resolved_options(const CLI::App& app);

}  // namespace cfgu::cli
