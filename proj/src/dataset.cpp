#include "labelcast/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace labelcast {

using nlohmann::json;

bool LabelTable::has(const std::string& email_id, const std::string& label) const {
  auto it = rows.find(email_id);
  if (it == rows.end()) return false;
  return it->second.count(label) > 0;
}

int LabelTable::get(const std::string& email_id, const std::string& label) const {
  auto it = rows.find(email_id);
  if (it != rows.end()) {
    auto jt = it->second.find(label);
    if (jt != it->second.end()) return jt->second;
  }
  throw MissingBaselineLabel("no label '" + label + "' for email '" + email_id + "'");
}

void LabelTable::set(const std::string& email_id, const std::string& label, int value) {
  rows[email_id][label] = value;
}

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write file: " + path);
  return out;
}

}  // namespace

std::vector<Email> load_emails_jsonl(const std::string& path) {
  auto in = open_in(path);
  std::vector<Email> emails;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    Email e;
    e.id = j.at("id").get<std::string>();
    e.subject = j.value("subject", std::string());
    if (!j.contains("body")) throw ConfigError(path + ": email missing body: " + e.id);
    e.body = j.at("body").get<std::string>();
    if (j.contains("metadata"))
      for (auto& [k, v] : j.at("metadata").items()) e.metadata[k] = v.get<std::string>();
    e.token_count_estimate =
        j.value("token_count_estimate", estimate_tokens(e.subject, e.body));
    emails.push_back(std::move(e));
  }
  validate_dataset(emails);
  return emails;
}

void save_emails_jsonl(const std::vector<Email>& emails, const std::string& path) {
  auto out = open_out(path);
  for (const auto& e : emails) {
    json j;
    j["id"] = e.id;
    j["subject"] = e.subject;
    j["body"] = e.body;
    j["metadata"] = e.metadata;
    j["token_count_estimate"] = e.token_count_estimate;
    out << j.dump() << '\n';
  }
}

namespace {

std::vector<std::string> parse_csv_record(std::istream& in, bool& ok) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\r') {
      // swallow; \n terminates
    } else if (ch == '\n') {
      fields.push_back(std::move(field));
      ok = true;
      return fields;
    } else {
      field.push_back(ch);
    }
  }
  if (any) fields.push_back(std::move(field));
  ok = any;
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

std::vector<Email> load_emails_csv(const std::string& path) {
  auto in = open_in(path);
  bool ok = false;
  auto header = parse_csv_record(in, ok);
  if (!ok) throw ConfigError("empty csv: " + path);
  int id_col = -1, subject_col = -1, body_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "id") id_col = static_cast<int>(i);
    else if (header[i] == "subject") subject_col = static_cast<int>(i);
    else if (header[i] == "body") body_col = static_cast<int>(i);
  }
  if (id_col < 0 || body_col < 0)
    throw ConfigError("csv missing required id/body columns: " + path);

  std::vector<Email> emails;
  for (;;) {
    bool got = false;
    auto rec = parse_csv_record(in, got);
    if (!got) break;
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() != header.size())
      throw ConfigError("csv row with wrong field count in " + path);
    Email e;
    e.id = rec[static_cast<std::size_t>(id_col)];
    if (subject_col >= 0) e.subject = rec[static_cast<std::size_t>(subject_col)];
    e.body = rec[static_cast<std::size_t>(body_col)];
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (static_cast<int>(i) == id_col || static_cast<int>(i) == subject_col ||
          static_cast<int>(i) == body_col)
        continue;
      e.metadata[header[i]] = rec[i];
    }
    e.token_count_estimate = estimate_tokens(e.subject, e.body);
    emails.push_back(std::move(e));
  }
  validate_dataset(emails);
  return emails;
}

void save_emails_csv(const std::vector<Email>& emails, const std::string& path) {
  auto out = open_out(path);
  std::set<std::string> meta_cols;
  for (const auto& e : emails)
    for (const auto& [k, v] : e.metadata) meta_cols.insert(k);
  out << "id,subject,body";
  for (const auto& k : meta_cols) out << ',' << csv_escape(k);
  out << '\n';
  for (const auto& e : emails) {
    out << csv_escape(e.id) << ',' << csv_escape(e.subject) << ',' << csv_escape(e.body);
    for (const auto& k : meta_cols) {
      auto it = e.metadata.find(k);
      out << ',' << csv_escape(it == e.metadata.end() ? std::string() : it->second);
    }
    out << '\n';
  }
}

LabelTable load_labels_jsonl(const std::string& path) {
  auto in = open_in(path);
  LabelTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    t.set(j.at("email_id").get<std::string>(), j.at("label_name").get<std::string>(),
          j.at("value").get<int>());
  }
  return t;
}

void save_labels_jsonl(const LabelTable& table, const std::string& path) {
  auto out = open_out(path);
  for (const auto& [email_id, labels] : table.rows) {
    for (const auto& [label, value] : labels) {
      json j;
      j["email_id"] = email_id;
      j["label_name"] = label;
      j["value"] = value;
      out << j.dump() << '\n';
    }
  }
}

void validate_dataset(std::vector<Email>& emails) {
  std::set<std::string> seen;
  for (auto& e : emails) {
    if (e.id.empty()) throw ConfigError("email with empty id");
    if (!seen.insert(e.id).second) throw ConfigError("duplicate email id: " + e.id);
    bool nonempty = !e.subject.empty() || !e.body.empty();
    if (e.token_count_estimate < 0 || (nonempty && e.token_count_estimate == 0))
      e.token_count_estimate = std::max<std::int64_t>(nonempty ? 1 : 0,
                                                      estimate_tokens(e.subject, e.body));
  }
}

}  // namespace labelcast
