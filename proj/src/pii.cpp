// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgu/pii.hpp"

#include <algorithm>
#include <fstream>
#include <regex>

#include "cfgu/error.hpp"

namespace cfgu {

namespace {

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'A' && u <= 'Z') || (u >= 'a' && u <= 'z') || u == '_' || u >= 0x80;
}

bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }

std::string_view first_word(std::string_view s) {
  std::size_t n = 0;
  while (n < s.size() && is_word_byte(s[n])) ++n;
  return s.substr(0, n);
}

struct Rule {
  std::string label;
  std::regex pattern;
};

const std::vector<Rule>& regex_rules() {
  static const std::vector<Rule> rules = [] {
    const auto flags = std::regex::ECMAScript | std::regex::icase | std::regex::optimize;
    const std::string month =
        "(?:jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|"
        "sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)";
    std::vector<Rule> r;
    r.push_back({"URL", std::regex(R"([a-z][a-z0-9+.\-]*://[^\s/?#@]+@[^\s]+)", flags)});
    r.push_back({"EMAIL", std::regex(R"([a-z0-9._%+\-]+@[a-z0-9.\-]+\.[a-z]{2,})", flags)});
    r.push_back({"PHONE", std::regex(R"((?:\+\d{1,3}[ .\-]?)?(?:\(\d{3}\)|\b\d{3})[ .\-]?\d{3}[ .\-]?\d{4}\b)", flags)});
    r.push_back({"DATE", std::regex("\\b" + month + "\\.? \\d{1,2}(?:st|nd|rd|th)?(?:, \\d{4})?\\b", flags)});
    r.push_back({"DATE", std::regex("\\b\\d{1,2}(?:st|nd|rd|th)? (?:of )?" + month + "(?: \\d{4})?\\b", flags)});
    r.push_back({"DATE", std::regex(R"(\b\d{4}-\d{2}-\d{2}\b)", flags)});
    r.push_back({"TIME", std::regex(R"(\b\d{1,2}:\d{2}(?: ?[ap]\.?m\.?)?)", flags)});
    r.push_back({"MONEY", std::regex(R"(\$\d+(?:,\d{3})*(?:\.\d+)?)", flags)});
    r.push_back({"PERCENT", std::regex(R"(\b\d+(?:\.\d+)?(?:%| percent\b))", flags)});
    r.push_back({"ORDINAL", std::regex(R"(\b\d+(?:st|nd|rd|th)\b)", flags)});
    r.push_back({"ORDINAL", std::regex(R"(\b(?:first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth)\b)", flags)});
    r.push_back({"CARDINAL", std::regex(R"(\b\d+(?:[.,]\d+)*\b)", flags)});
    return r;
  }();
  return rules;
}

struct Candidate {
  std::size_t start;
  std::size_t end;
  int priority;
  std::string label;
};

}  // namespace

const std::set<std::string>& recognized_labels() {
  static const std::set<std::string> labels = {
      "PERSON", "NORP",    "FAC",     "ORG",      "GPE",     "LOC",   "PRODUCT", "EVENT",
      "WORK_OF_ART", "LAW", "LANGUAGE", "DATE",   "TIME",    "PERCENT", "MONEY", "QUANTITY",
      "ORDINAL", "CARDINAL", "EMAIL",  "PHONE",   "URL"};
  return labels;
}

LabelPolicy LabelPolicy::from_list(std::string_view csv) {
  LabelPolicy policy;
  policy.excluded.clear();
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    std::string_view item = csv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      std::string label(item);
      if (!recognized_labels().contains(label)) throw ConfigError("unknown entity label '" + label + "'");
      policy.excluded.insert(std::move(label));
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return policy;
}

void Gazetteers::add(const std::string& label, const std::string& term) {
  if (!recognized_labels().contains(label)) throw ConfigError("gazetteer: unknown label '" + label + "'");
  if (term.empty() || !is_word_byte(term.front())) {
    throw ConfigError("gazetteer: term '" + term + "' must start with a letter or digit");
  }
  terms_[label].insert(term);
}

void Gazetteers::load_file(const std::string& label, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("gazetteer: cannot open " + file.string());
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    std::string term = line.substr(first, last - first + 1);
    if (label == "FIRST_NAME") {
      add_first_name(term);
    } else if (label == "LAST_NAME") {
      add_last_name(term);
    } else {
      add(label, term);
    }
  }
}

Gazetteers Gazetteers::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("gazetteer directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Gazetteers g;
  for (const auto& file : files) {
    const std::string label = file.stem().string();
    if (label != "FIRST_NAME" && label != "LAST_NAME" && !recognized_labels().contains(label)) {
      throw ConfigError("gazetteer: file " + file.string() + " does not name a known label");
    }
    g.load_file(label, file);
  }
  return g;
}

PiiDetector::PiiDetector(Gazetteers gazetteers) : gazetteers_(std::move(gazetteers)) {
  for (const auto& [label, terms] : gazetteers_.terms()) {
    for (const std::string& term : terms) {
      by_first_word_[std::string(first_word(term))].push_back({term, label});
    }
  }
  for (auto& [_, entries] : by_first_word_) {
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.term.size() != b.term.size()) return a.term.size() > b.term.size();
      return a.label != b.label ? a.label < b.label : a.term < b.term;
    });
  }
}

std::vector<PiiSpan> PiiDetector::detect(std::string_view text, const LabelPolicy& policy) const {
  std::vector<Candidate> candidates;

  // Word starts, for gazetteer and bigram matching.
  std::vector<std::pair<std::size_t, std::size_t>> words;
  for (std::size_t i = 0; i < text.size();) {
    if (!is_word_byte(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_word_byte(text[j])) ++j;
    words.emplace_back(i, j);
    i = j;
  }

  for (std::size_t w = 0; w < words.size(); ++w) {
    const auto [start, word_end] = words[w];
    const std::string word(text.substr(start, word_end - start));

    if (auto it = by_first_word_.find(word); it != by_first_word_.end()) {
      for (const Entry& e : it->second) {
        const std::size_t end = start + e.term.size();
        if (end > text.size() || text.compare(start, e.term.size(), e.term) != 0) continue;
        if (end < text.size() && is_word_byte(text[end]) && is_word_byte(e.term.back())) continue;
        candidates.push_back({start, end, 1, e.label});
      }
    }

    if (w + 1 < words.size() && is_upper(text[start]) && gazetteers_.first_names().contains(word)) {
      const auto [next_start, next_end] = words[w + 1];
      const std::string next(text.substr(next_start, next_end - next_start));
      if (next_start == word_end + 1 && text[word_end] == ' ' && is_upper(text[next_start]) &&
          gazetteers_.last_names().contains(next)) {
        candidates.push_back({start, next_end, 0, "PERSON"});
      }
    }
  }

  const std::string owned(text);
  for (const Rule& rule : regex_rules()) {
    for (auto it = std::sregex_iterator(owned.begin(), owned.end(), rule.pattern); it != std::sregex_iterator(); ++it) {
      if (it->length() == 0) continue;
      const auto start = static_cast<std::size_t>(it->position());
      candidates.push_back({start, start + static_cast<std::size_t>(it->length()), 2, rule.label});
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end > b.end;
    if (a.priority != b.priority) return a.priority < b.priority;
    return a.label < b.label;
  });

  std::vector<PiiSpan> spans;
  std::size_t covered = 0;
  for (const Candidate& c : candidates) {
    if (c.start < covered) continue;
    covered = c.end;
    if (policy.counts(c.label)) {
      spans.push_back({c.start, c.end, c.label, std::string(text.substr(c.start, c.end - c.start))});
    }
  }
  return spans;
}

}  // namespace cfgu
