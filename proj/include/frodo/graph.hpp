#pragma once

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

#include "frodo/vec.hpp"

namespace frodo {

// Directed communication topology. An edge (j, i) means agent i receives
// agent j's state: j is an in-neighbor of i. Agents are indexed from 0.
class DirectedGraph {
 public:
  DirectedGraph(int num_agents, const std::vector<std::pair<int, int>>& edges)
      : in_(static_cast<std::size_t>(std::max(num_agents, 0))),
        out_(in_.size()) {
    if (num_agents < 1) {
      throw std::invalid_argument("graph needs at least one agent");
    }
    for (const auto& [from, to] : edges) {
      if (from < 0 || from >= num_agents || to < 0 || to >= num_agents) {
        throw std::invalid_argument("edge endpoint out of range");
      }
      in_[static_cast<std::size_t>(to)].push_back(from);
      out_[static_cast<std::size_t>(from)].push_back(to);
    }
    for (auto& nbrs : in_) dedup(nbrs);
    for (auto& nbrs : out_) dedup(nbrs);
  }

  static DirectedGraph fully_connected(int n, bool include_self = true) {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        if (i != j || include_self) edges.emplace_back(j, i);
      }
    }
    return DirectedGraph(n, edges);
  }

  int num_agents() const { return static_cast<int>(in_.size()); }

  std::size_t num_edges() const {
    std::size_t total = 0;
    for (const auto& nbrs : in_) total += nbrs.size();
    return total;
  }

  const std::vector<int>& in_neighbors(int i) const {
    return in_.at(static_cast<std::size_t>(i));
  }
  const std::vector<int>& out_neighbors(int i) const {
    return out_.at(static_cast<std::size_t>(i));
  }

  // True iff a directed path exists between every ordered pair of agents:
  // node 0 must reach everyone along out-edges and be reached by everyone
  // (reachability along in-edges).
  bool is_strongly_connected() const {
    return reaches_all(out_) && reaches_all(in_);
  }

 private:
  static void dedup(std::vector<int>& nbrs) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }

  static bool reaches_all(const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(adj.size(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : adj[static_cast<std::size_t>(v)]) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          ++count;
          stack.push_back(w);
        }
      }
    }
    return count == adj.size();
  }

  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> out_;
};

// One alignment round: each agent's new state is the uniform average of its
// in-neighbors' states. The input is not mutated.
inline std::vector<Vec> consensus_step(const DirectedGraph& g,
                                       const std::vector<Vec>& states) {
  const int n_agents = g.num_agents();
  if (states.size() != static_cast<std::size_t>(n_agents)) {
    throw std::invalid_argument("state count does not match agent count");
  }
  const std::size_t dim = states.empty() ? 0 : states[0].size();
  for (const Vec& s : states) {
    if (s.size() != dim) {
      throw std::invalid_argument("state vectors have mismatched dimensions");
    }
  }
  std::vector<Vec> next(states.size());
  for (int i = 0; i < n_agents; ++i) {
    const auto& nbrs = g.in_neighbors(i);
    if (nbrs.empty()) {
      throw std::invalid_argument("agent has no in-neighbors to average over");
    }
    Vec avg = zeros(dim);
    for (int j : nbrs) add_in_place(avg, states[static_cast<std::size_t>(j)]);
    scale_in_place(avg, 1.0 / static_cast<double>(nbrs.size()));
    next[static_cast<std::size_t>(i)] = std::move(avg);
  }
  return next;
}

}  // namespace frodo
