#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sggan {

struct Attribute {
  std::string name;
  int cardinality = 2;

  bool operator==(const Attribute&) const = default;
};

/// Ordered list of manipulable attributes. Every model, loss and evaluation
/// component is parameterized by one of these.
///
/// Generator heads are laid out attribute-major: head (j, v) has flat index
/// head_offset(j) + v.
class AttributeSchema {
 public:
  AttributeSchema() = default;
  explicit AttributeSchema(std::vector<Attribute> attributes);

  /// Parses "name:m,name:m"; a bare name means m = 2.
  static AttributeSchema parse(std::string_view text);

  std::size_t size() const { return attributes_.size(); }
  bool empty() const { return attributes_.empty(); }
  const Attribute& operator[](std::size_t j) const { return attributes_.at(j); }
  int cardinality(std::size_t j) const { return attributes_.at(j).cardinality; }

  std::size_t total_heads() const;
  std::size_t head_offset(std::size_t j) const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  /// Throws ConfigError for an unknown name.
  std::size_t require(std::string_view name) const;

  std::string to_string() const;

  auto begin() const { return attributes_.begin(); }
  auto end() const { return attributes_.end(); }

  bool operator==(const AttributeSchema&) const = default;

 private:
  std::vector<Attribute> attributes_;
};

/// Group value of one attribute, or nullopt when the example is unlabelled
/// for that attribute.
using Label = std::optional<int>;
using Labels = std::vector<Label>;

/// Describes the first attribute on which two schemas differ, or returns an
/// empty string when they are equal.
std::string describe_schema_mismatch(const AttributeSchema& expected, const AttributeSchema& actual);

}  // namespace sggan
