#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "drl/field.hpp"

namespace drl {

/// Exact, deduplicated, lexicographically sorted set of coordinate tuples
/// over a field context. Row order is the canonical element order, so two
/// equal sets are bit-identical.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::uint32_t arity) : arity_(arity) {}

  static PointSet from_rows(std::uint32_t arity, std::vector<ElemCode> data);
  /// The one-point set of arity zero.
  static PointSet unit();

  std::uint32_t arity() const { return arity_; }
  std::uint64_t size() const { return nrows_; }
  bool empty() const { return nrows_ == 0; }

  std::span<const ElemCode> row(std::uint64_t i) const {
    return {data_.data() + i * arity_, arity_};
  }
  const std::vector<ElemCode>& data() const { return data_; }

  void append_row(std::span<const ElemCode> r);
  /// Sorts rows and removes duplicates; call after unordered appends.
  void finish();

  bool contains(std::span<const ElemCode> r) const;
  /// Index of a row, or -1.
  std::int64_t index_of(std::span<const ElemCode> r) const;

  /// Rows whose first prefix_len coordinates equal the given prefix, as a
  /// contiguous [begin, end) row range. Requires sorted rows.
  std::pair<std::uint64_t, std::uint64_t> prefix_range(
      std::span<const ElemCode> prefix) const;

  /// New set with the given coordinate positions, deduplicated.
  PointSet project(const std::vector<int>& positions) const;

  bool operator==(const PointSet& o) const {
    return arity_ == o.arity_ && nrows_ == o.nrows_ && data_ == o.data_;
  }

 private:
  std::uint32_t arity_ = 0;
  std::uint64_t nrows_ = 0;
  std::vector<ElemCode> data_;
};

/// Coordinate layout: variable ids in storage order.
struct Layout {
  std::vector<int> coords;

  int pos(int var) const {
    for (std::size_t i = 0; i < coords.size(); ++i)
      if (coords[i] == var) return static_cast<int>(i);
    return -1;
  }
  std::uint32_t arity() const { return static_cast<std::uint32_t>(coords.size()); }

  /// Positions of o's coordinates inside this layout (all must exist).
  std::vector<int> positions_of(const Layout& o) const;
};

/// Sort-merge style join: all combined tuples over target whose shared
/// coordinates agree. Output rows are sorted. Throws GUARD when the result
/// would exceed max_rows.
PointSet join(const PointSet& a, const Layout& la, const PointSet& b,
              const Layout& lb, const Layout& target,
              std::uint64_t max_rows);

}  // namespace drl
