// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgu/conversation.hpp"

#include <array>
#include <optional>
#include <utility>

#include "cfgu/error.hpp"

namespace cfgu {

namespace {

constexpr std::array<std::pair<Role, std::string_view>, 3> kHeaders = {{
    {Role::kSystem, "System:"},
    {Role::kUser, "User:"},
    {Role::kAssistant, "Assistant:"},
}};

// Recognizes "Role:" optionally followed by one space at the start of a line.
std::optional<std::pair<Role, std::string_view>> split_header(std::string_view line) {
  for (const auto& [role, header] : kHeaders) {
    if (line.starts_with(header)) {
      std::string_view rest = line.substr(header.size());
      if (rest.empty()) return std::make_pair(role, rest);
      if (rest.front() == ' ') return std::make_pair(role, rest.substr(1));
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "?";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::kSystem;
  if (name == "user") return Role::kUser;
  if (name == "assistant") return Role::kAssistant;
  throw ParseError("unknown role '" + std::string(name) + "'");
}

std::string role_header(Role role) {
  for (const auto& [r, header] : kHeaders) {
    if (r == role) return std::string(header) + " ";
  }
  return {};
}

std::string render(std::span<const Turn> turns) {
  std::string out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (i) out += '\n';
    out += role_header(turns[i].role);
    out += turns[i].text;
  }
  return out;
}

std::vector<Turn> parse_conversation(std::string_view text) {
  std::vector<Turn> turns;
  std::size_t pos = 0;
  while (true) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (auto header = split_header(line)) {
      turns.push_back({header->first, std::string(header->second)});
    } else if (turns.empty()) {
      throw ParseError("conversation: text must start with a role header (System:/User:/Assistant:)");
    } else {
      turns.back().text += '\n';
      turns.back().text += line;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return turns;
}

void validate_turns(std::span<const Turn> turns) {
  if (turns.empty() || turns.front().role != Role::kSystem) {
    throw ParseError("conversation: first turn must be system");
  }
  for (std::size_t i = 1; i < turns.size(); ++i) {
    const Role expected = (i % 2 == 1) ? Role::kUser : Role::kAssistant;
    if (turns[i].role != expected) {
      throw ParseError("conversation: turn " + std::to_string(i) + " is " + std::string(to_string(turns[i].role)) +
                       ", expected " + std::string(to_string(expected)));
    }
  }
}

std::string with_system_suffix(std::string_view conversation, std::string_view suffix) {
  if (suffix.empty()) return std::string(conversation);
  std::vector<Turn> turns = parse_conversation(conversation);
  if (turns.front().role != Role::kSystem) throw ParseError("conversation: no system turn to extend");
  std::string& system = turns.front().text;
  if (!system.empty()) system += ' ';
  system += suffix;
  return render(turns);
}

}  // namespace cfgu
