#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace minmarkov {

/// Hard default on the number of lifted states m^d a construction may use.
inline constexpr std::uint64_t kDefaultStateCap = 1'000'000;

/// A finite set of labeled states.  Index order is the canonical encoding
/// used everywhere: kernels, stationary vectors and file formats all follow
/// it, so two runs on the same space are bit-comparable.
class StateSpace {
 public:
  /// Labels must be distinct and there must be at least two of them.
  explicit StateSpace(std::vector<std::string> labels);

  /// States labeled "0", "1", ..., "count-1".
  static StateSpace integer_range(int count);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int index) const { return labels_.at(index); }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
};

/// Directed graph in row-compressed form.  Edges are stored sorted by
/// (source, target); the position of an edge in that order is its canonical
/// edge index, which every per-edge array in the library is keyed to.
///
/// Strong connectivity is computed once at construction and cached; a graph
/// that fails the check can still be built and inspected, but solvers that
/// require irreducibility reject it.
class Digraph {
 public:
  Digraph(int vertex_count, std::vector<std::pair<int, int>> edges);

  /// Complete digraph on `vertex_count` vertices (all self-loops included).
  static Digraph complete(int vertex_count);

  int vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return col_.size(); }

  /// Canonical edge indices of vertex v's out-edges are [row_begin, row_end).
  std::size_t row_begin(int v) const { return row_ptr_[v]; }
  std::size_t row_end(int v) const { return row_ptr_[v + 1]; }
  int out_degree(int v) const {
    return static_cast<int>(row_ptr_[v + 1] - row_ptr_[v]);
  }

  int target(std::size_t edge) const { return col_[edge]; }
  int source(std::size_t edge) const;

  /// Canonical index of edge (x, y), or nullopt if the edge is absent.
  std::optional<std::size_t> edge_index(int x, int y) const;

  bool strongly_connected() const { return strongly_connected_; }

  /// True when both graphs have identical vertex and edge structure, i.e.
  /// per-edge arrays are interchangeable between them.
  bool same_structure(const Digraph& other) const {
    return vertex_count_ == other.vertex_count_ && row_ptr_ == other.row_ptr_ &&
           col_ == other.col_;
  }

 private:
  friend class LiftedSpace;
  struct TrustedTag {};
  // Used by LiftedSpace, whose graphs are strongly connected by construction.
  Digraph(TrustedTag, int vertex_count, std::vector<std::size_t> row_ptr,
          std::vector<int> col);

  int vertex_count_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<int> col_;
  bool strongly_connected_ = false;
};

/// True iff every ordered vertex pair is joined by a directed path.
bool is_strongly_connected(const Digraph& g);

/// The order-d lift of a state space: vertices are all d-tuples of base
/// states in lexicographic order, and (u, v) is an edge iff the trailing
/// d-1 symbols of u equal the leading d-1 symbols of v.  Every vertex has
/// exactly m out-edges and m in-edges and the graph is strongly connected.
/// For d = 1 the lift is the complete digraph on the base space.
class LiftedSpace {
 public:
  LiftedSpace(StateSpace base, int order,
              std::uint64_t state_cap = kDefaultStateCap);

  const StateSpace& base() const { return base_; }
  int order() const { return order_; }
  int state_count() const { return state_count_; }

  /// The lifted support graph; edge u*m+y runs from u to successor(u, y).
  std::shared_ptr<const Digraph> graph() const { return graph_; }

  /// Lexicographic rank of a d-tuple of base indices.
  int encode(std::span<const int> tuple) const;
  /// Inverse of encode.
  std::vector<int> decode(int state) const;

  /// State reached from u after emitting base symbol y: (u_2..u_d, y).
  int successor(int state, int symbol) const {
    return static_cast<int>((state % tail_weight_) * base_.size() + symbol);
  }
  /// First (oldest) symbol of the tuple.
  int first_symbol(int state) const {
    return static_cast<int>(state / tail_weight_);
  }
  /// Last (newest) symbol of the tuple.
  int last_symbol(int state) const { return state % base_.size(); }

 private:
  StateSpace base_;
  int order_;
  int state_count_;
  long tail_weight_;  // m^(d-1)
  std::shared_ptr<const Digraph> graph_;
};

/// Builds the order-d lift, rejecting spaces whose m^d exceeds `state_cap`.
LiftedSpace lift(const StateSpace& base, int order,
                 std::uint64_t state_cap = kDefaultStateCap);

}  // namespace minmarkov
