#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "baladin/netio/network.hpp"
#include "baladin/partition/graph.hpp"

namespace baladin::partition {

/// Region index per bus position (order of `PowerNetwork::buses`).
struct RegionAssignment {
  std::vector<int> region_of;
  int n_regions = 1;

  bool operator==(const RegionAssignment&) const = default;
};

class PartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest admissible region weight ⌈(1 + imbalance)·W/k⌉.
inline int balance_cap(int total_weight, int k, double imbalance) {
  double v = (1.0 + imbalance) * static_cast<double>(total_weight) / static_cast<double>(k);
  // guard against 14.9999999 style rounding on exact quotients
  double r = std::round(v);
  if (std::abs(v - r) < 1e-9) return static_cast<int>(r);
  return static_cast<int>(std::ceil(v));
}

namespace detail {

inline void shuffle(std::vector<int>& v, std::mt19937& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    int j = static_cast<int>(rng() % static_cast<std::uint32_t>(i + 1));
    std::swap(v[i], v[j]);
  }
}

inline std::vector<int> region_weights(const Graph& g, const std::vector<int>& part, int k) {
  std::vector<int> w(k, 0);
  for (int v = 0; v < g.size(); ++v) w[part[v]] += g.vertex_weight[v];
  return w;
}

/// True when region `r` minus the vertices in `drop` (all currently in r) stays connected.
inline bool stays_connected(const Graph& g, const std::vector<int>& part, int r,
                            const std::vector<int>& drop) {
  std::vector<char> removed(g.size(), 0);
  for (int v : drop) removed[v] = 1;
  int start = -1, total = 0;
  for (int v = 0; v < g.size(); ++v)
    if (part[v] == r && !removed[v]) {
      if (start < 0) start = v;
      ++total;
    }
  if (total == 0) return false;  // region would become empty
  std::vector<char> seen(g.size(), 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  int count = 0;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    ++count;
    for (auto [u, w] : g.adj[v])
      if (!seen[u] && part[u] == r && !removed[u]) {
        seen[u] = 1;
        stack.push_back(u);
      }
  }
  return count == total;
}

inline std::vector<int> connection(const Graph& g, const std::vector<int>& part, int v, int k) {
  std::vector<int> c(k, 0);
  for (auto [u, w] : g.adj[v]) c[part[u]] += w;
  return c;
}

/// Greedy BFS-style region growing. Each region grows from a seed by repeatedly
/// absorbing the frontier vertex with the most edge weight into the region.
inline std::vector<int> grow(const Graph& g, int k, std::mt19937& rng) {
  const int n = g.size();
  std::vector<int> part(n, -1);
  const int total = g.total_weight();
  int assigned_weight = 0;
  for (int r = 0; r < k; ++r) {
    if (r == k - 1) {
      for (int v = 0; v < n; ++v)
        if (part[v] < 0) part[v] = r;
      break;
    }
    const int target = (total - assigned_weight) / (k - r);
    int weight = 0;
    std::vector<int> gain(n, 0);
    auto pick_seed = [&]() {
      int best = -1, best_conn = -1;
      for (int v = 0; v < n; ++v) {
        if (part[v] >= 0) continue;
        int conn = 0;
        for (auto [u, w] : g.adj[v])
          if (part[u] >= 0) conn += w;
        if (conn > best_conn) {
          best_conn = conn;
          best = v;
        }
      }
      if (r == 0 || best_conn <= 0) {
        std::vector<int> free;
        for (int v = 0; v < n; ++v)
          if (part[v] < 0) free.push_back(v);
        if (free.empty()) return -1;
        // the first seed is random; later ones prefer peripheral free vertices
        if (r == 0) return free[rng() % free.size()];
      }
      return best;
    };
    int seed = pick_seed();
    if (seed < 0) break;
    std::vector<int> frontier;
    auto absorb = [&](int v) {
      part[v] = r;
      weight += g.vertex_weight[v];
      for (auto [u, w] : g.adj[v])
        if (part[u] < 0) {
          if (gain[u] == 0) frontier.push_back(u);
          gain[u] += w;
        }
    };
    absorb(seed);
    while (weight < target) {
      int best = -1;
      for (int v : frontier) {
        if (part[v] >= 0) continue;
        if (weight + g.vertex_weight[v] > target + (g.vertex_weight[v] - 1)) continue;
        if (best < 0 || gain[v] > gain[best] || (gain[v] == gain[best] && v < best)) best = v;
      }
      if (best < 0) {
        int s = pick_seed();
        if (s < 0) break;
        best = s;
      }
      absorb(best);
    }
    assigned_weight += weight;
  }
  return part;
}

/// Moves every stranded component of a region into the adjacent region it
/// shares most edge weight with.
inline void repair_connectivity(const Graph& g, std::vector<int>& part, int k, int cap) {
  const int n = g.size();
  bool changed = true;
  while (changed) {
    changed = false;
    auto weights = region_weights(g, part, k);
    std::vector<int> comp(n, -1);
    for (int r = 0; r < k && !changed; ++r) {
      // label components of region r
      std::vector<std::vector<int>> comps;
      for (int s = 0; s < n; ++s) {
        if (part[s] != r || comp[s] >= 0) continue;
        comps.emplace_back();
        std::vector<int> stack{s};
        comp[s] = static_cast<int>(comps.size()) - 1;
        while (!stack.empty()) {
          int v = stack.back();
          stack.pop_back();
          comps.back().push_back(v);
          for (auto [u, w] : g.adj[v])
            if (part[u] == r && comp[u] < 0) {
              comp[u] = comp[s];
              stack.push_back(u);
            }
        }
      }
      if (comps.size() <= 1) continue;
      std::size_t keep = 0;
      auto cw = [&](const std::vector<int>& c) {
        int w = 0;
        for (int v : c) w += g.vertex_weight[v];
        return w;
      };
      for (std::size_t c = 1; c < comps.size(); ++c)
        if (cw(comps[c]) > cw(comps[keep])) keep = c;
      for (std::size_t c = 0; c < comps.size(); ++c) {
        if (c == keep) continue;
        std::vector<int> conn(k, 0);
        for (int v : comps[c])
          for (auto [u, w] : g.adj[v])
            if (part[u] != r) conn[part[u]] += w;
        const int wc = cw(comps[c]);
        int best = -1, best_any = -1;
        for (int t = 0; t < k; ++t) {
          if (conn[t] == 0) continue;
          if (best_any < 0 || conn[t] > conn[best_any]) best_any = t;
          if (weights[t] + wc <= cap && (best < 0 || conn[t] > conn[best])) best = t;
        }
        int target = best >= 0 ? best : best_any;
        if (target < 0) continue;  // isolated from all other regions; cannot happen on connected graphs
        for (int v : comps[c]) part[v] = target;
        weights[target] += wc;
        weights[r] -= wc;
        changed = true;
      }
    }
  }
}

/// Moves boundary vertices out of overweight regions, cheapest cut increase first.
inline void rebalance(const Graph& g, std::vector<int>& part, int k, int cap) {
  auto weights = region_weights(g, part, k);
  for (int guard = 0; guard < 4 * g.size(); ++guard) {
    int over = -1;
    for (int r = 0; r < k; ++r)
      if (weights[r] > cap && (over < 0 || weights[r] > weights[over])) over = r;
    if (over < 0) return;
    int best_v = -1, best_t = -1, best_gain = 0;
    for (int v = 0; v < g.size(); ++v) {
      if (part[v] != over) continue;
      auto conn = connection(g, part, v, k);
      for (int t = 0; t < k; ++t) {
        if (t == over || conn[t] == 0) continue;
        if (weights[t] + g.vertex_weight[v] > cap) continue;
        int gain = conn[t] - conn[over];
        if (best_v >= 0 && gain <= best_gain) continue;
        if (!stays_connected(g, part, over, {v})) continue;
        best_v = v;
        best_t = t;
        best_gain = gain;
      }
    }
    if (best_v < 0) return;
    part[best_v] = best_t;
    weights[over] -= g.vertex_weight[best_v];
    weights[best_t] += g.vertex_weight[best_v];
  }
}

/// Chain rebalancing for unit vertex weights. An overweight region hands one
/// boundary vertex to a neighbor, that neighbor hands one on, and so on until a
/// region with spare room is reached; every donor stays connected. Empty regions
/// are seeded from the boundary of the heaviest adjacent region first.
inline void rebalance_chains(const Graph& g, std::vector<int>& part, int k, int cap) {
  const int n = g.size();
  for (int w : g.vertex_weight)
    if (w != 1) return;
  auto weights = region_weights(g, part, k);
  // donate a vertex of region a that touches region b (or an empty region)
  auto donate = [&](int a, int b) {
    int pick = -1, pick_gain = 0;
    for (int v = 0; v < n; ++v) {
      if (part[v] != a) continue;
      auto conn = connection(g, part, v, k);
      if (weights[b] > 0 && conn[b] == 0) continue;
      const int gain = conn[b] - conn[a];
      if (pick >= 0 && gain <= pick_gain) continue;
      if (!stays_connected(g, part, a, {v})) continue;
      pick = v;
      pick_gain = gain;
    }
    if (pick < 0) return false;
    part[pick] = b;
    --weights[a];
    ++weights[b];
    return true;
  };
  for (int r = 0; r < k; ++r) {
    if (weights[r] > 0) continue;
    int donor = -1;
    for (int t = 0; t < k; ++t)
      if (weights[t] > 1 && (donor < 0 || weights[t] > weights[donor])) donor = t;
    if (donor >= 0) donate(donor, r);
  }
  for (int guard = 0; guard < 4 * n; ++guard) {
    int over = -1;
    for (int r = 0; r < k; ++r)
      if (weights[r] > cap && (over < 0 || weights[r] > weights[over])) over = r;
    if (over < 0) return;
    // region adjacency
    std::vector<std::vector<char>> adjr(k, std::vector<char>(k, 0));
    for (int v = 0; v < n; ++v)
      for (auto [u, w] : g.adj[v])
        if (part[u] != part[v]) adjr[part[v]][part[u]] = 1;
    std::vector<std::vector<char>> blocked(k, std::vector<char>(k, 0));
    bool done = false;
    while (!done) {
      std::vector<int> prev(k, -2);
      std::vector<int> queue{over};
      prev[over] = -1;
      int target = -1;
      for (std::size_t q = 0; q < queue.size() && target < 0; ++q) {
        const int a = queue[q];
        for (int b = 0; b < k; ++b) {
          if (!adjr[a][b] || blocked[a][b] || prev[b] != -2) continue;
          prev[b] = a;
          if (weights[b] < cap) {
            target = b;
            break;
          }
          queue.push_back(b);
        }
      }
      if (target < 0) return;
      std::vector<int> path{target};
      while (prev[path.back()] >= 0) path.push_back(prev[path.back()]);
      // path = target, ..., over; move from the room end backwards
      bool ok = true;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (!donate(path[i + 1], path[i])) {
          blocked[path[i + 1]][path[i]] = 1;
          ok = false;
          break;
        }
      }
      done = ok;
    }
  }
}

/// Boundary refinement: single-vertex moves and pairwise swaps, each accepted only
/// when it strictly lowers the cut, keeps the balance bound and keeps both
/// regions connected. The cut never increases.
inline void refine(const Graph& g, std::vector<int>& part, int k, int cap, std::mt19937& rng,
                   int max_passes = 50) {
  const int n = g.size();
  auto weights = region_weights(g, part, k);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    shuffle(order, rng);
    for (int v : order) {
      const int a = part[v];
      auto conn = connection(g, part, v, k);
      int best_t = -1, best_gain = 0;
      for (int t = 0; t < k; ++t) {
        if (t == a || conn[t] == 0) continue;
        int gain = conn[t] - conn[a];
        if (gain <= best_gain) continue;
        if (weights[t] + g.vertex_weight[v] > cap) continue;
        best_t = t;
        best_gain = gain;
      }
      if (best_t < 0) continue;
      if (!stays_connected(g, part, a, {v})) continue;
      part[v] = best_t;
      weights[a] -= g.vertex_weight[v];
      weights[best_t] += g.vertex_weight[v];
      moved = true;
    }
    // swaps between boundary vertices of adjacent regions
    for (int v : order) {
      const int a = part[v];
      auto cv = connection(g, part, v, k);
      bool swapped = false;
      for (int t = 0; t < k && !swapped; ++t) {
        if (t == a || cv[t] == 0) continue;
        for (int u = 0; u < n && !swapped; ++u) {
          if (part[u] != t) continue;
          auto cu = connection(g, part, u, k);
          if (cu[a] == 0) continue;
          if (weights[a] - g.vertex_weight[v] + g.vertex_weight[u] > cap) continue;
          if (weights[t] - g.vertex_weight[u] + g.vertex_weight[v] > cap) continue;
          int wuv = 0;
          for (auto [x, w] : g.adj[v])
            if (x == u) wuv = w;
          int gain = (cv[t] - cv[a]) + (cu[a] - cu[t]) - 2 * wuv;
          if (gain <= 0) continue;
          std::vector<int> trial = part;
          trial[v] = t;
          trial[u] = a;
          if (!stays_connected(g, trial, a, {}) || !stays_connected(g, trial, t, {})) continue;
          part = std::move(trial);
          weights[a] += g.vertex_weight[u] - g.vertex_weight[v];
          weights[t] += g.vertex_weight[v] - g.vertex_weight[u];
          swapped = true;
          moved = true;
        }
      }
    }
    if (!moved) break;
  }
}

struct Level {
  Graph graph;
  std::vector<int> fine_to_coarse;  // maps vertices of the finer level
};

/// Heavy-edge matching: each unmatched vertex pairs with its heaviest unmatched neighbor.
inline Level coarsen(const Graph& g, int max_vertex_weight, std::mt19937& rng) {
  const int n = g.size();
  std::vector<int> match(n, -1), order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  for (int v : order) {
    if (match[v] >= 0) continue;
    int best = -1, best_w = 0;
    for (auto [u, w] : g.adj[v]) {
      if (match[u] >= 0 || u == v) continue;
      if (g.vertex_weight[u] + g.vertex_weight[v] > max_vertex_weight) continue;
      if (w > best_w || (w == best_w && best >= 0 && u < best)) {
        best = u;
        best_w = w;
      }
    }
    match[v] = best >= 0 ? best : v;
    if (best >= 0) match[best] = v;
  }
  Level lvl;
  lvl.fine_to_coarse.assign(n, -1);
  int nc = 0;
  for (int v = 0; v < n; ++v) {
    if (lvl.fine_to_coarse[v] >= 0) continue;
    lvl.fine_to_coarse[v] = nc;
    lvl.fine_to_coarse[match[v]] = nc;
    ++nc;
  }
  std::vector<std::pair<int, int>> none;
  lvl.graph.vertex_weight.assign(nc, 0);
  lvl.graph.adj.assign(nc, {});
  std::vector<std::map<int, int>> acc(nc);
  for (int v = 0; v < n; ++v) {
    const int cv = lvl.fine_to_coarse[v];
    if (match[v] == v || v < match[v]) {
      lvl.graph.vertex_weight[cv] = g.vertex_weight[v] + (match[v] != v ? g.vertex_weight[match[v]] : 0);
    }
    for (auto [u, w] : g.adj[v]) {
      const int cu = lvl.fine_to_coarse[u];
      if (cu != cv) acc[cv][cu] += w;
    }
  }
  // each fine edge was visited from both endpoints
  for (int c = 0; c < nc; ++c)
    for (auto [u, w] : acc[c]) lvl.graph.adj[c].emplace_back(u, w);
  return lvl;
}

inline bool balanced(const Graph& g, const std::vector<int>& part, int k, int cap) {
  auto w = region_weights(g, part, k);
  for (int x : w)
    if (x > cap || x == 0) return false;
  return true;
}

inline bool regions_connected(const Graph& g, const std::vector<int>& part, int k) {
  for (int r = 0; r < k; ++r)
    if (!stays_connected(g, part, r, {})) return false;
  return true;
}

inline void check_inputs(const Graph& g, int k, double imbalance) {
  if (k < 1) throw PartitionError("region count must be at least 1");
  if (k > g.size()) throw PartitionError("region count exceeds bus count");
  if (!(imbalance >= 0.0 && imbalance < 1.0)) throw PartitionError("imbalance must lie in [0, 1)");
  if (!is_connected(g)) throw PartitionError("bus graph is disconnected");
}

inline std::vector<int> greedy_partition(const Graph& g, int k, int cap, std::mt19937& rng) {
  auto part = grow(g, k, rng);
  repair_connectivity(g, part, k, cap);
  rebalance(g, part, k, cap);
  rebalance_chains(g, part, k, cap);
  return part;
}

inline std::vector<int> multilevel_partition(const Graph& g, int k, int cap, std::mt19937& rng) {
  std::vector<Level> levels;
  const Graph* cur = &g;
  const int stop = std::max(8 * k, 16);
  const int max_vw = std::max(1, cap / 3);
  while (cur->size() > stop) {
    Level lvl = coarsen(*cur, max_vw, rng);
    if (lvl.graph.size() > 0.95 * cur->size()) break;
    levels.push_back(std::move(lvl));
    cur = &levels.back().graph;
  }
  auto part = grow(*cur, k, rng);
  for (int li = static_cast<int>(levels.size()); li >= 0; --li) {
    const Graph& lg = li == 0 ? g : levels[li - 1].graph;
    if (li < static_cast<int>(levels.size())) {
      // project from level li+1 to level li
      const auto& map = levels[li].fine_to_coarse;
      std::vector<int> fine(lg.size());
      for (int v = 0; v < lg.size(); ++v) fine[v] = part[map[v]];
      part = std::move(fine);
    }
    repair_connectivity(lg, part, k, cap);
    rebalance(lg, part, k, cap);
    if (li == 0) rebalance_chains(lg, part, k, cap);
    refine(lg, part, k, cap, rng);
  }
  return part;
}

}  // namespace detail

/// Unrefined greedy growth partition (after connectivity repair and rebalancing).
inline RegionAssignment greedy_baseline(const netio::PowerNetwork& net, int k, double imbalance,
                                        unsigned seed) {
  Graph g = bus_graph(net);
  detail::check_inputs(g, k, imbalance);
  std::mt19937 rng(seed);
  const int cap = balance_cap(g.total_weight(), k, imbalance);
  return {detail::greedy_partition(g, k, cap, rng), k};
}

/**
 * Balanced k-way partition of the bus graph with small cut.
 *
 * Multilevel heavy-edge coarsening, greedy growth on the coarsest graph,
 * boundary refinement on every level and region-connectivity repair. The
 * greedy baseline refined at the finest level is kept as a fallback candidate
 * and the candidate with the smaller cut wins.
 */
inline RegionAssignment partition_graph(const netio::PowerNetwork& net, int k, double imbalance,
                                        unsigned seed = 1) {
  Graph g = bus_graph(net);
  detail::check_inputs(g, k, imbalance);
  if (k == 1) return {std::vector<int>(g.size(), 0), 1};
  const int cap = balance_cap(g.total_weight(), k, imbalance);

  std::vector<int> best;
  int best_cut = -1;
  for (unsigned attempt = 0; attempt < 16 && best_cut < 0; ++attempt) {
    std::mt19937 rng(seed + 7919u * attempt);
    auto base = detail::greedy_partition(g, k, cap, rng);
    auto refined = base;
    detail::refine(g, refined, k, cap, rng);
    auto ml = detail::multilevel_partition(g, k, cap, rng);
    for (auto* cand : {&ml, &refined}) {
      if (!detail::balanced(g, *cand, k, cap) || !detail::regions_connected(g, *cand, k)) continue;
      int c = cut_weight(g, *cand);
      if (best_cut < 0 || c < best_cut) {
        best_cut = c;
        best = *cand;
      }
    }
  }
  if (best_cut < 0) throw PartitionError("no balanced connected partition found");
  return {best, k};
}

}  // namespace baladin::partition
