// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0
//
// Plain-text conversation template shared by the dataset builder and the
// decoder:
//
//   System: <text>
//   User: <text>
//   Assistant: <text>
//
// Each turn starts on a line with a role header. Lines without a header are
// continuation lines of the previous turn.

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfgu {

enum class Role { kSystem, kUser, kAssistant };

std::string_view to_string(Role role);
Role parse_role(std::string_view name);  // "system" / "user" / "assistant"

struct Turn {
  Role role;
  std::string text;

  bool operator==(const Turn&) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<Turn> turns;
};

// Header for a role including the trailing space, e.g. "Assistant: ".
std::string role_header(Role role);

std::string render(std::span<const Turn> turns);
// Throws ParseError when the text does not start with a role header.
std::vector<Turn> parse_conversation(std::string_view text);

// Throws ParseError unless the first turn is system and the remaining turns
// alternate user/assistant starting with user.
void validate_turns(std::span<const Turn> turns);

// Appends `suffix` to the system turn with one separating space and
// re-renders. An empty suffix returns the text unchanged.
std::string with_system_suffix(std::string_view conversation, std::string_view suffix);

}  // namespace cfgu
