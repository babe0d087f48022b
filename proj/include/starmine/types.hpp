#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace starmine {

using AttrId = std::uint32_t;
using VertexId = std::uint32_t;
using CoreId = std::uint32_t;
using LeafId = std::uint32_t;

using PositionList = std::vector<VertexId>;

// Malformed or unreadable user input. Maps to CLI exit code 2.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// An internal consistency check failed. Maps to CLI exit code 3.
class InvariantViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// Sorted, duplicate-free set of attribute values. The tag keeps coresets and
// leafsets from being mixed up at call sites.
template <class Tag> class AttrSet {
public:
  AttrSet() = default;
  explicit AttrSet(std::vector<AttrId> values) : values_(std::move(values)) {
    std::sort(values_.begin(), values_.end());
    values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
  }
  AttrSet(std::initializer_list<AttrId> values)
      : AttrSet(std::vector<AttrId>(values)) {}

  std::span<const AttrId> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  bool contains(AttrId a) const {
    return std::binary_search(values_.begin(), values_.end(), a);
  }

  AttrSet united(const AttrSet &other) const {
    std::vector<AttrId> out;
    out.reserve(values_.size() + other.values_.size());
    std::set_union(values_.begin(), values_.end(), other.values_.begin(),
                   other.values_.end(), std::back_inserter(out));
    AttrSet s;
    s.values_ = std::move(out);
    return s;
  }

  // Lexicographic on the interned id sequence.
  friend auto operator<=>(const AttrSet &, const AttrSet &) = default;
  friend bool operator==(const AttrSet &, const AttrSet &) = default;

private:
  std::vector<AttrId> values_;
};

struct CoreTag {};
struct LeafTag {};
using Coreset = AttrSet<CoreTag>;
using Leafset = AttrSet<LeafTag>;

inline PositionList intersect(std::span<const VertexId> a,
                              std::span<const VertexId> b) {
  PositionList out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

inline std::size_t intersection_size(std::span<const VertexId> a,
                                     std::span<const VertexId> b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

} // namespace starmine
