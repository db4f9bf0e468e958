#pragma once

#include <algorithm>
#include <map>
#include <queue>
#include <vector>

#include "baladin/netio/network.hpp"

namespace baladin::partition {

/// Weighted undirected graph in adjacency-list form. Parallel edges are merged
/// and their weights summed.
struct Graph {
  std::vector<int> vertex_weight;
  std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, edge weight), sorted by neighbor

  int size() const { return static_cast<int>(adj.size()); }
  int total_weight() const {
    int w = 0;
    for (int v : vertex_weight) w += v;
    return w;
  }
};

inline Graph graph_from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::map<int, int>> acc(n);
  for (auto [a, b] : edges) {
    if (a == b) continue;
    acc[a][b] += 1;
    acc[b][a] += 1;
  }
  Graph g;
  g.vertex_weight.assign(n, 1);
  g.adj.resize(n);
  for (int v = 0; v < n; ++v)
    for (auto [u, w] : acc[v]) g.adj[v].emplace_back(u, w);
  return g;
}

/// Bus graph with vertices at bus positions of `net.buses`.
inline Graph bus_graph(const netio::PowerNetwork& net) {
  const auto idx = net.bus_index();
  std::vector<std::pair<int, int>> edges;
  edges.reserve(net.branches.size());
  for (const auto& br : net.branches) edges.emplace_back(idx.at(br.from), idx.at(br.to));
  return graph_from_edges(static_cast<int>(net.buses.size()), edges);
}

/// Connected components; returns component label per vertex and the count.
inline int components(const Graph& g, std::vector<int>& label) {
  label.assign(g.size(), -1);
  int c = 0;
  for (int s = 0; s < g.size(); ++s) {
    if (label[s] >= 0) continue;
    std::queue<int> q;
    q.push(s);
    label[s] = c;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (auto [u, w] : g.adj[v])
        if (label[u] < 0) {
          label[u] = c;
          q.push(u);
        }
    }
    ++c;
  }
  return c;
}

inline bool is_connected(const Graph& g) {
  std::vector<int> label;
  return g.size() == 0 || components(g, label) == 1;
}

/// Sum of weights of edges whose endpoints lie in different parts.
inline int cut_weight(const Graph& g, const std::vector<int>& part) {
  int cut = 0;
  for (int v = 0; v < g.size(); ++v)
    for (auto [u, w] : g.adj[v])
      if (u > v && part[u] != part[v]) cut += w;
  return cut;
}

}  // namespace baladin::partition
