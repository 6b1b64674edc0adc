#include "drl/pointset.hpp"

#include <algorithm>
#include <map>

namespace drl {

namespace {

struct RowLess {
  std::uint32_t arity;
  const std::vector<ElemCode>& data;
  bool operator()(std::uint64_t i, std::uint64_t j) const {
    const ElemCode* a = data.data() + i * arity;
    const ElemCode* b = data.data() + j * arity;
    return std::lexicographical_compare(a, a + arity, b, b + arity);
  }
};

}  // namespace

PointSet PointSet::from_rows(std::uint32_t arity, std::vector<ElemCode> data) {
  PointSet ps(arity);
  ps.data_ = std::move(data);
  ps.nrows_ = arity ? ps.data_.size() / arity : (ps.data_.empty() ? 0 : 1);
  ps.finish();
  return ps;
}

PointSet PointSet::unit() {
  PointSet ps(0);
  ps.nrows_ = 1;
  return ps;
}

void PointSet::append_row(std::span<const ElemCode> r) {
  data_.insert(data_.end(), r.begin(), r.end());
  ++nrows_;
}

void PointSet::finish() {
  if (arity_ == 0) {
    nrows_ = nrows_ ? 1 : 0;
    return;
  }
  nrows_ = data_.size() / arity_;
  std::vector<std::uint64_t> idx(nrows_);
  for (std::uint64_t i = 0; i < nrows_; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), RowLess{arity_, data_});
  std::vector<ElemCode> out;
  out.reserve(data_.size());
  for (std::uint64_t k = 0; k < nrows_; ++k) {
    const ElemCode* r = data_.data() + idx[k] * arity_;
    if (!out.empty() &&
        std::equal(r, r + arity_, out.data() + out.size() - arity_))
      continue;
    out.insert(out.end(), r, r + arity_);
  }
  data_ = std::move(out);
  nrows_ = data_.size() / arity_;
}

bool PointSet::contains(std::span<const ElemCode> r) const {
  return index_of(r) >= 0;
}

std::int64_t PointSet::index_of(std::span<const ElemCode> r) const {
  if (arity_ == 0) return nrows_ ? 0 : -1;
  std::uint64_t lo = 0, hi = nrows_;
  while (lo < hi) {
    std::uint64_t mid = (lo + hi) / 2;
    const ElemCode* m = data_.data() + mid * arity_;
    int cmp = 0;
    for (std::uint32_t i = 0; i < arity_; ++i) {
      if (m[i] < r[i]) {
        cmp = -1;
        break;
      }
      if (m[i] > r[i]) {
        cmp = 1;
        break;
      }
    }
    if (cmp < 0)
      lo = mid + 1;
    else if (cmp > 0)
      hi = mid;
    else
      return static_cast<std::int64_t>(mid);
  }
  return -1;
}

std::pair<std::uint64_t, std::uint64_t> PointSet::prefix_range(
    std::span<const ElemCode> prefix) const {
  std::uint32_t k = static_cast<std::uint32_t>(prefix.size());
  auto cmp_prefix = [&](std::uint64_t row) {
    const ElemCode* m = data_.data() + row * arity_;
    for (std::uint32_t i = 0; i < k; ++i) {
      if (m[i] < prefix[i]) return -1;
      if (m[i] > prefix[i]) return 1;
    }
    return 0;
  };
  std::uint64_t lo = 0, hi = nrows_;
  while (lo < hi) {
    std::uint64_t mid = (lo + hi) / 2;
    if (cmp_prefix(mid) < 0)
      lo = mid + 1;
    else
      hi = mid;
  }
  std::uint64_t begin = lo;
  hi = nrows_;
  while (lo < hi) {
    std::uint64_t mid = (lo + hi) / 2;
    if (cmp_prefix(mid) <= 0)
      lo = mid + 1;
    else
      hi = mid;
  }
  return {begin, lo};
}

PointSet PointSet::project(const std::vector<int>& positions) const {
  PointSet out(static_cast<std::uint32_t>(positions.size()));
  std::vector<ElemCode> buf(positions.size());
  for (std::uint64_t i = 0; i < nrows_; ++i) {
    auto r = row(i);
    for (std::size_t j = 0; j < positions.size(); ++j)
      buf[j] = r[positions[j]];
    out.append_row(buf);
  }
  if (arity_ == 0 || positions.empty()) {
    out.nrows_ = nrows_ ? 1 : 0;
    out.data_.clear();
    return out;
  }
  out.finish();
  return out;
}

std::vector<int> Layout::positions_of(const Layout& o) const {
  std::vector<int> out;
  out.reserve(o.coords.size());
  for (int v : o.coords) {
    int p = pos(v);
    if (p < 0) throw Error("LAYOUT", "coordinate missing from layout");
    out.push_back(p);
  }
  return out;
}

PointSet join(const PointSet& a, const Layout& la, const PointSet& b,
              const Layout& lb, const Layout& target,
              std::uint64_t max_rows) {
  // Shared coordinates.
  std::vector<int> shared_a, shared_b;
  for (std::size_t i = 0; i < lb.coords.size(); ++i) {
    int pa = la.pos(lb.coords[i]);
    if (pa >= 0) {
      shared_a.push_back(pa);
      shared_b.push_back(static_cast<int>(i));
    }
  }
  // b-only coordinates, and where every target coordinate comes from.
  std::vector<std::pair<bool, int>> source;  // (from_a, position)
  for (int v : target.coords) {
    int pa = la.pos(v);
    if (pa >= 0) {
      source.push_back({true, pa});
    } else {
      int pb = lb.pos(v);
      if (pb < 0) throw Error("LAYOUT", "target coordinate not in join inputs");
      source.push_back({false, pb});
    }
  }

  // Group b rows by key.
  std::vector<std::uint64_t> border(b.size());
  for (std::uint64_t i = 0; i < b.size(); ++i) border[i] = i;
  auto bkey_less = [&](std::uint64_t i, std::uint64_t j) {
    auto ri = b.row(i), rj = b.row(j);
    for (int p : shared_b) {
      if (ri[p] < rj[p]) return true;
      if (ri[p] > rj[p]) return false;
    }
    return false;
  };
  std::sort(border.begin(), border.end(), bkey_less);

  auto bkey_cmp_row = [&](std::uint64_t bi, const std::vector<ElemCode>& key) {
    auto r = b.row(bi);
    for (std::size_t k = 0; k < shared_b.size(); ++k) {
      if (r[shared_b[k]] < key[k]) return -1;
      if (r[shared_b[k]] > key[k]) return 1;
    }
    return 0;
  };

  PointSet out(target.arity());
  std::vector<ElemCode> key(shared_a.size());
  std::vector<ElemCode> buf(target.arity());
  for (std::uint64_t i = 0; i < a.size(); ++i) {
    auto ra = a.row(i);
    for (std::size_t k = 0; k < shared_a.size(); ++k) key[k] = ra[shared_a[k]];
    // Binary search the b group.
    std::uint64_t lo = 0, hi = border.size();
    while (lo < hi) {
      std::uint64_t mid = (lo + hi) / 2;
      if (bkey_cmp_row(border[mid], key) < 0)
        lo = mid + 1;
      else
        hi = mid;
    }
    for (std::uint64_t j = lo;
         j < border.size() && bkey_cmp_row(border[j], key) == 0; ++j) {
      auto rb = b.row(border[j]);
      for (std::size_t t = 0; t < source.size(); ++t)
        buf[t] = source[t].first ? ra[source[t].second] : rb[source[t].second];
      out.append_row(buf);
      if (out.size() > max_rows)
        throw Error("GUARD", "fibre product exceeds the point guard");
    }
  }
  out.finish();
  return out;
}

}  // namespace drl
