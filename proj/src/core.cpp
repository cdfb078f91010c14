#include "labelcast/core.hpp"

namespace labelcast {

std::int64_t estimate_tokens(const std::string& subject, const std::string& body) {
  std::int64_t chars = static_cast<std::int64_t>(subject.size() + body.size());
  if (chars == 0) return 0;
  return (chars + 3) / 4;
}

const LabelDef* LabelSchema::find(const std::string& name) const {
  for (const auto& l : labels)
    if (l.name == name) return &l;
  return nullptr;
}

int LabelSchema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> LabelSchema::binary_label_names() const {
  std::vector<std::string> out;
  for (const auto& l : labels)
    if (l.is_binary()) out.push_back(l.name);
  return out;
}

void LabelSchema::validate() const {
  if (labels.empty()) throw ConfigError("schema has no labels");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    if (l.name.empty()) throw ConfigError("label with empty name");
    for (std::size_t j = i + 1; j < labels.size(); ++j)
      if (labels[j].name == l.name) throw ConfigError("duplicate label name: " + l.name);
    if (l.classes.size() < 2) throw ConfigError("label needs at least two classes: " + l.name);
    if (!l.is_binary() && l.classes.size() < 3)
      throw ConfigError("multiclass label needs at least three classes: " + l.name);
    for (std::size_t a = 0; a < l.classes.size(); ++a)
      for (std::size_t b = a + 1; b < l.classes.size(); ++b)
        if (l.classes[a] == l.classes[b])
          throw ConfigError("duplicate class value in label: " + l.name);
  }
}

LabelSchema LabelSchema::default_schema() {
  LabelSchema s;
  s.labels.push_back(LabelDef::multiclass("Priority", {1, 2, 3, 4, 5}));
  s.labels.push_back(LabelDef::binary("NeedsReply"));
  s.labels.push_back(LabelDef::binary("IsUrgent"));
  s.labels.push_back(LabelDef::binary("NeedsAction"));
  s.labels.push_back(LabelDef::binary("NeedsScheduling"));
  return s;
}

Micros request_cost(const ModelSpec& spec, const TokenUsage& usage) {
  return spec.price_in * usage.input_tokens + spec.price_out * usage.output_tokens;
}

double blended_price(const ModelSpec& spec) {
  return (3.0 * static_cast<double>(spec.price_in) + static_cast<double>(spec.price_out)) / 4.0;
}

}  // namespace labelcast
