#include "minmarkov/statespace.hpp"

#include <algorithm>
#include <cassert>
#include <unordered_set>

#include "minmarkov/errors.hpp"

namespace minmarkov {

StateSpace::StateSpace(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw InputError("state space needs at least 2 states, got " +
                     std::to_string(labels_.size()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) {
      throw InputError("duplicate state label '" + l + "'");
    }
  }
}

StateSpace StateSpace::integer_range(int count) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(count > 0 ? count : 0));
  for (int i = 0; i < count; ++i) labels.push_back(std::to_string(i));
  return StateSpace(std::move(labels));
}

namespace {

// Iterative Kosaraju: one strongly connected component iff a forward and a
// backward sweep from vertex 0 each reach every vertex.
bool one_component(int n, const std::vector<std::size_t>& row_ptr,
                   const std::vector<int>& col) {
  if (n == 0) return false;
  std::vector<std::size_t> rev_ptr(n + 1, 0);
  std::vector<int> rev_col(col.size());
  std::vector<int> rev_src(col.size());
  for (int x = 0; x < n; ++x) {
    for (std::size_t e = row_ptr[x]; e < row_ptr[x + 1]; ++e) {
      ++rev_ptr[col[e] + 1];
    }
  }
  for (int v = 0; v < n; ++v) rev_ptr[v + 1] += rev_ptr[v];
  {
    std::vector<std::size_t> fill(rev_ptr.begin(), rev_ptr.end() - 1);
    for (int x = 0; x < n; ++x) {
      for (std::size_t e = row_ptr[x]; e < row_ptr[x + 1]; ++e) {
        rev_col[fill[col[e]]++] = x;
      }
    }
  }
  (void)rev_src;

  auto reaches_all = [n](const std::vector<std::size_t>& ptr,
                         const std::vector<int>& adj) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (std::size_t e = ptr[v]; e < ptr[v + 1]; ++e) {
        int u = adj[e];
        if (!seen[u]) {
          seen[u] = 1;
          ++count;
          stack.push_back(u);
        }
      }
    }
    return count == n;
  };

  return reaches_all(row_ptr, col) && reaches_all(rev_ptr, rev_col);
}

}  // namespace

Digraph::Digraph(int vertex_count, std::vector<std::pair<int, int>> edges)
    : vertex_count_(vertex_count) {
  if (vertex_count < 1) {
    throw InputError("digraph needs at least one vertex");
  }
  for (auto [x, y] : edges) {
    if (x < 0 || x >= vertex_count || y < 0 || y >= vertex_count) {
      throw InputError("edge (" + std::to_string(x) + "," + std::to_string(y) +
                       ") out of range for " + std::to_string(vertex_count) +
                       " vertices");
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (edges.empty()) {
    throw InputError("digraph needs at least one edge");
  }

  row_ptr_.assign(vertex_count + 1, 0);
  col_.reserve(edges.size());
  for (auto [x, y] : edges) {
    ++row_ptr_[x + 1];
    col_.push_back(y);
  }
  for (int v = 0; v < vertex_count; ++v) row_ptr_[v + 1] += row_ptr_[v];

  strongly_connected_ = one_component(vertex_count_, row_ptr_, col_);
}

Digraph::Digraph(TrustedTag, int vertex_count, std::vector<std::size_t> row_ptr,
                 std::vector<int> col)
    : vertex_count_(vertex_count),
      row_ptr_(std::move(row_ptr)),
      col_(std::move(col)),
      strongly_connected_(true) {
  assert(one_component(vertex_count_, row_ptr_, col_));
}

Digraph Digraph::complete(int vertex_count) {
  if (vertex_count < 1) {
    throw InputError("digraph needs at least one vertex");
  }
  std::vector<std::size_t> row_ptr(vertex_count + 1);
  std::vector<int> col(static_cast<std::size_t>(vertex_count) * vertex_count);
  for (int x = 0; x < vertex_count; ++x) {
    row_ptr[x + 1] = static_cast<std::size_t>(x + 1) * vertex_count;
    for (int y = 0; y < vertex_count; ++y) {
      col[static_cast<std::size_t>(x) * vertex_count + y] = y;
    }
  }
  return Digraph(TrustedTag{}, vertex_count, std::move(row_ptr),
                 std::move(col));
}

int Digraph::source(std::size_t edge) const {
  auto it = std::upper_bound(row_ptr_.begin(), row_ptr_.end(), edge);
  return static_cast<int>(it - row_ptr_.begin()) - 1;
}

std::optional<std::size_t> Digraph::edge_index(int x, int y) const {
  auto begin = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[x]);
  auto end = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[x + 1]);
  auto it = std::lower_bound(begin, end, y);
  if (it == end || *it != y) return std::nullopt;
  return static_cast<std::size_t>(it - col_.begin());
}

bool is_strongly_connected(const Digraph& g) { return g.strongly_connected(); }

LiftedSpace::LiftedSpace(StateSpace base, int order, std::uint64_t state_cap)
    : base_(std::move(base)), order_(order) {
  if (order < 1) {
    throw InputError("lift order must be >= 1, got " + std::to_string(order));
  }
  const auto m = static_cast<std::uint64_t>(base_.size());
  std::uint64_t count = 1;
  for (int i = 0; i < order; ++i) {
    if (count > state_cap / m) {
      throw ResourceError("lifted space " + std::to_string(base_.size()) + "^" +
                          std::to_string(order) + " exceeds the state cap of " +
                          std::to_string(state_cap));
    }
    count *= m;
  }
  if (count > state_cap) {
    throw ResourceError("lifted space " + std::to_string(base_.size()) + "^" +
                        std::to_string(order) + " exceeds the state cap of " +
                        std::to_string(state_cap));
  }
  state_count_ = static_cast<int>(count);
  tail_weight_ = static_cast<long>(count / m);

  // Columns follow directly from the overlap rule; no edge set is built.
  const int n = state_count_;
  std::vector<std::size_t> row_ptr(n + 1);
  std::vector<int> col(static_cast<std::size_t>(n) * base_.size());
  for (int u = 0; u < n; ++u) {
    row_ptr[u + 1] = static_cast<std::size_t>(u + 1) * base_.size();
    const long head = (u % tail_weight_) * base_.size();
    for (int y = 0; y < base_.size(); ++y) {
      col[static_cast<std::size_t>(u) * base_.size() + y] =
          static_cast<int>(head + y);
    }
  }
  // make_shared cannot reach the private constructor, so allocate directly.
  graph_.reset(new Digraph(Digraph::TrustedTag{}, n, std::move(row_ptr),
                           std::move(col)));
}

int LiftedSpace::encode(std::span<const int> tuple) const {
  if (static_cast<int>(tuple.size()) != order_) {
    throw InputError("tuple length " + std::to_string(tuple.size()) +
                     " does not match lift order " + std::to_string(order_));
  }
  long code = 0;
  for (int v : tuple) {
    if (v < 0 || v >= base_.size()) {
      throw InputError("tuple entry " + std::to_string(v) +
                       " out of range 0.." + std::to_string(base_.size() - 1));
    }
    code = code * base_.size() + v;
  }
  return static_cast<int>(code);
}

std::vector<int> LiftedSpace::decode(int state) const {
  if (state < 0 || state >= state_count_) {
    throw InputError("lifted state " + std::to_string(state) +
                     " out of range 0.." + std::to_string(state_count_ - 1));
  }
  std::vector<int> tuple(order_);
  long rest = state;
  for (int i = order_ - 1; i >= 0; --i) {
    tuple[i] = static_cast<int>(rest % base_.size());
    rest /= base_.size();
  }
  return tuple;
}

LiftedSpace lift(const StateSpace& base, int order, std::uint64_t state_cap) {
  return LiftedSpace(base, order, state_cap);
}

}  // namespace minmarkov
