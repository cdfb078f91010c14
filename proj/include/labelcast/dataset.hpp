#pragma once

#include <map>
#include <string>
#include <vector>

#include "labelcast/core.hpp"

namespace labelcast {

// Baseline (or produced) labels: email id -> label name -> value.
struct LabelTable {
  std::map<std::string, std::map<std::string, int>> rows;

  bool has(const std::string& email_id, const std::string& label) const;
  int get(const std::string& email_id, const std::string& label) const;  // throws MissingBaselineLabel
  void set(const std::string& email_id, const std::string& label, int value);
  std::size_t size() const { return rows.size(); }
};

// One email object per line: {id, subject, body, metadata{...}}.
std::vector<Email> load_emails_jsonl(const std::string& path);
void save_emails_jsonl(const std::vector<Email>& emails, const std::string& path);

// Columns: id, subject, body, plus arbitrary metadata columns. RFC-4180 quoting.
std::vector<Email> load_emails_csv(const std::string& path);
void save_emails_csv(const std::vector<Email>& emails, const std::string& path);

// Label files: one {email_id, label_name, value} object per line.
LabelTable load_labels_jsonl(const std::string& path);
void save_labels_jsonl(const LabelTable& table, const std::string& path);

/// Throws ConfigError on duplicate email ids; fixes up token estimates when absent.
void validate_dataset(std::vector<Email>& emails);

}  // namespace labelcast
