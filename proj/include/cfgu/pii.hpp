// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic PII detector: gazetteer lookup, a first-name/last-name bigram
// rule and regular expressions, all emitting OntoNotes-style entity labels.
// Any label outside the policy's exclusion set counts as PII.

#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cfgu {

// Byte offsets into UTF-8 text, half open.
struct PiiSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;
  std::string surface;

  bool operator==(const PiiSpan&) const = default;
};

// The 18 OntoNotes labels plus EMAIL, PHONE and URL.
const std::set<std::string>& recognized_labels();

struct LabelPolicy {
  std::set<std::string> excluded = {"CARDINAL", "DATE", "PRODUCT", "ORDINAL"};

  // Comma-separated label list; an empty string excludes nothing.
  // Throws ConfigError on labels outside recognized_labels().
  static LabelPolicy from_list(std::string_view csv);
  bool counts(const std::string& label) const { return !excluded.contains(label); }
};

// Term lists per label. FIRST_NAME / LAST_NAME feed the bigram rule.
class Gazetteers {
 public:
  // Reads <LABEL>.txt, FIRST_NAME.txt and LAST_NAME.txt from `dir`: one term
  // per line, '#' starts a comment line. Throws ConfigError when the
  // directory is missing or holds a .txt file for an unknown label.
  static Gazetteers load_dir(const std::filesystem::path& dir);
  // Throws ConfigError when the file cannot be opened.
  void load_file(const std::string& label, const std::filesystem::path& file);

  void add(const std::string& label, const std::string& term);
  void add_first_name(const std::string& name) { first_names_.insert(name); }
  void add_last_name(const std::string& name) { last_names_.insert(name); }

  const std::map<std::string, std::set<std::string>>& terms() const { return terms_; }
  const std::unordered_set<std::string>& first_names() const { return first_names_; }
  const std::unordered_set<std::string>& last_names() const { return last_names_; }

 private:
  std::map<std::string, std::set<std::string>> terms_;
  std::unordered_set<std::string> first_names_;
  std::unordered_set<std::string> last_names_;
};

class PiiDetector {
 public:
  explicit PiiDetector(Gazetteers gazetteers);

  // Non-overlapping spans sorted by start. Overlaps resolve leftmost-longest
  // before excluded labels are dropped.
  std::vector<PiiSpan> detect(std::string_view text, const LabelPolicy& policy) const;
  std::size_t count(std::string_view text, const LabelPolicy& policy) const {
    return detect(text, policy).size();
  }

  const Gazetteers& gazetteers() const { return gazetteers_; }

 private:
  struct Entry {
    std::string term;
    std::string label;
  };

  Gazetteers gazetteers_;
  // First word of each term -> entries, longest term first.
  std::unordered_map<std::string, std::vector<Entry>> by_first_word_;
};

}  // namespace cfgu
