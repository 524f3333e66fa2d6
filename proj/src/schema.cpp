#include "sggan/schema.hpp"

#include <charconv>
#include <set>

#include "sggan/errors.hpp"

namespace sggan {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

AttributeSchema::AttributeSchema(std::vector<Attribute> attributes) : attributes_(std::move(attributes)) {
  if (attributes_.empty()) throw ConfigError("attribute schema needs at least one attribute");
  std::set<std::string> seen;
  for (const auto& a : attributes_) {
    if (a.name.empty()) throw ConfigError("attribute name must not be empty");
    if (a.cardinality < 2)
      throw ConfigError("attribute '" + a.name + "' needs cardinality >= 2, got " + std::to_string(a.cardinality));
    if (!seen.insert(a.name).second) throw ConfigError("duplicate attribute name '" + a.name + "'");
  }
}

AttributeSchema AttributeSchema::parse(std::string_view text) {
  std::vector<Attribute> attrs;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) throw ConfigError("empty attribute entry in schema");
    const auto colon = item.find(':');
    Attribute a{std::string(trim(item.substr(0, colon))), 2};
    if (colon != std::string_view::npos) {
      const auto num = trim(item.substr(colon + 1));
      const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), a.cardinality);
      if (ec != std::errc{} || ptr != num.data() + num.size())
        throw ConfigError("bad cardinality '" + std::string(num) + "' for attribute '" + a.name + "'");
    }
    attrs.push_back(std::move(a));
  }
  return AttributeSchema(std::move(attrs));
}

std::size_t AttributeSchema::total_heads() const {
  std::size_t total = 0;
  for (const auto& a : attributes_) total += static_cast<std::size_t>(a.cardinality);
  return total;
}

std::size_t AttributeSchema::head_offset(std::size_t j) const {
  std::size_t offset = 0;
  for (std::size_t k = 0; k < j; ++k) offset += static_cast<std::size_t>(attributes_.at(k).cardinality);
  return offset;
}

std::optional<std::size_t> AttributeSchema::index_of(std::string_view name) const {
  for (std::size_t j = 0; j < attributes_.size(); ++j)
    if (attributes_[j].name == name) return j;
  return std::nullopt;
}

std::size_t AttributeSchema::require(std::string_view name) const {
  if (auto j = index_of(name)) return *j;
  throw ConfigError("unknown attribute '" + std::string(name) + "' (schema: " + to_string() + ")");
}

std::string AttributeSchema::to_string() const {
  std::string out;
  for (const auto& a : attributes_) {
    if (!out.empty()) out += ',';
    out += a.name + ':' + std::to_string(a.cardinality);
  }
  return out;
}

std::string describe_schema_mismatch(const AttributeSchema& expected, const AttributeSchema& actual) {
  const std::size_t n = std::max(expected.size(), actual.size());
  for (std::size_t j = 0; j < n; ++j) {
    if (j >= expected.size()) return "unexpected attribute '" + actual[j].name + "' at position " + std::to_string(j);
    if (j >= actual.size()) return "missing attribute '" + expected[j].name + "' at position " + std::to_string(j);
    if (!(expected[j] == actual[j]))
      return "attribute " + std::to_string(j) + ": expected '" + expected[j].name + ":" +
             std::to_string(expected[j].cardinality) + "', found '" + actual[j].name + ":" +
             std::to_string(actual[j].cardinality) + "'";
  }
  return {};
}

}  // namespace sggan
