#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "traveltime/errors.hpp"
#include "traveltime/format.hpp"
#include "traveltime/rng.hpp"

namespace traveltime {

using EdgeIndex = std::uint32_t;

struct EdgeRecord {
  std::string edge_id;
  double length_m = 0;
  std::vector<std::string> successor_ids;
};

/// Directed transportation graph in edge-graph form: edges are the vertices,
/// adjacency lists the edges that can immediately follow. Immutable once
/// built, so instances are safely shared across threads.
class TransportNetwork {
 public:
  static TransportNetwork build(const std::vector<EdgeRecord>& records) {
    TransportNetwork net;
    net.ids_.reserve(records.size());
    for (const auto& r : records) {
      if (net.index_.count(r.edge_id))
        fail(Errc::DuplicateEdge, "edge '" + r.edge_id + "' appears more than once");
      if (!(r.length_m > 0))
        fail(Errc::NonPositiveLength,
             "edge '" + r.edge_id + "' has length " + format_double(r.length_m));
      net.index_.emplace(r.edge_id, static_cast<EdgeIndex>(net.ids_.size()));
      net.ids_.push_back(r.edge_id);
      net.lengths_.push_back(r.length_m);
    }
    net.succ_.resize(records.size());
    for (std::size_t e = 0; e < records.size(); ++e) {
      net.succ_[e].reserve(records[e].successor_ids.size());
      for (const auto& sid : records[e].successor_ids) {
        auto it = net.index_.find(sid);
        if (it == net.index_.end())
          fail(Errc::DanglingSuccessor,
               "edge '" + records[e].edge_id + "' lists unknown successor '" + sid + "'");
        net.succ_[e].push_back(it->second);
      }
    }
    net.check_connected();
    return net;
  }

  std::size_t edge_count() const { return ids_.size(); }
  const std::string& edge_id(EdgeIndex e) const { return ids_[e]; }
  double length(EdgeIndex e) const { return lengths_[e]; }
  const std::vector<EdgeIndex>& successors(EdgeIndex e) const { return succ_[e]; }

  bool has_edge(const std::string& id) const { return index_.count(id) != 0; }

  EdgeIndex edge_index(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) fail(Errc::BadFormat, "unknown edge id '" + id + "'");
    return it->second;
  }

  bool adjacent(EdgeIndex from, EdgeIndex to) const {
    for (EdgeIndex s : succ_[from])
      if (s == to) return true;
    return false;
  }

  /// Shortest successor-hop path between edges, endpoints excluded. Used to
  /// recover unobserved intermediate edges in ingested trips. Ties are broken
  /// by successor list order.
  std::vector<EdgeIndex> shortest_edge_path(EdgeIndex from, EdgeIndex to) const {
    if (adjacent(from, to)) return {};
    std::vector<EdgeIndex> prev(edge_count(), kNone);
    std::deque<EdgeIndex> queue;
    prev[from] = from;
    queue.push_back(from);
    while (!queue.empty()) {
      EdgeIndex cur = queue.front();
      queue.pop_front();
      if (cur == to) break;
      for (EdgeIndex s : succ_[cur]) {
        if (prev[s] == kNone) {
          prev[s] = cur;
          queue.push_back(s);
        }
      }
    }
    if (prev[to] == kNone)
      fail(Errc::NonAdjacentJump,
           "no route from edge '" + ids_[from] + "' to edge '" + ids_[to] + "'");
    std::vector<EdgeIndex> path;
    for (EdgeIndex cur = prev[to]; cur != from; cur = prev[cur]) path.push_back(cur);
    std::reverse(path.begin(), path.end());
    return path;
  }

 private:
  static constexpr EdgeIndex kNone = static_cast<EdgeIndex>(-1);

  // Edge-graph connectivity: every edge must reach every other edge.
  // Forward reachability from edge 0 plus reverse reachability to edge 0
  // together give strong connectivity.
  void check_connected() const {
    if (ids_.empty()) fail(Errc::Disconnected, "network has no edges");
    std::vector<std::vector<EdgeIndex>> rev(edge_count());
    for (EdgeIndex e = 0; e < edge_count(); ++e)
      for (EdgeIndex s : succ_[e]) rev[s].push_back(e);
    auto bfs = [&](const std::vector<std::vector<EdgeIndex>>& adj) {
      std::vector<char> seen(edge_count(), 0);
      std::deque<EdgeIndex> queue{0};
      seen[0] = 1;
      std::size_t count = 1;
      while (!queue.empty()) {
        EdgeIndex cur = queue.front();
        queue.pop_front();
        for (EdgeIndex s : adj[cur])
          if (!seen[s]) {
            seen[s] = 1;
            ++count;
            queue.push_back(s);
          }
      }
      return count;
    };
    if (bfs(succ_) != edge_count() || bfs(rev) != edge_count())
      fail(Errc::Disconnected, "edge-graph is not strongly connected");
  }

  std::vector<std::string> ids_;
  std::vector<double> lengths_;
  std::vector<std::vector<EdgeIndex>> succ_;
  std::unordered_map<std::string, EdgeIndex> index_;
};

/// Ordered edge sequence; consecutive edges are network-adjacent.
struct Route {
  std::vector<EdgeIndex> edges;

  std::size_t size() const { return edges.size(); }
};

inline void validate_route(const TransportNetwork& net, const Route& route) {
  if (route.edges.empty()) fail(Errc::EmptyInput, "route has no edges");
  for (std::size_t k = 0; k + 1 < route.edges.size(); ++k)
    if (!net.adjacent(route.edges[k], route.edges[k + 1]))
      fail(Errc::NonAdjacentJump, "route edges " + net.edge_id(route.edges[k]) + " -> " +
                                      net.edge_id(route.edges[k + 1]) + " are not adjacent");
}

struct StationaryDistribution {
  std::vector<double> pi;  // indexed by EdgeIndex, sums to 1
};

/// Uniform-successor random walk of exactly n edges starting at `start`.
/// Fully determined by the seed.
inline Route random_walk(const TransportNetwork& net, EdgeIndex start, std::size_t n,
                         std::uint64_t seed) {
  if (n < 1) fail(Errc::EmptyInput, "random_walk needs n >= 1");
  Route route;
  route.edges.reserve(n);
  route.edges.push_back(start);
  Rng rng(seed);
  for (std::size_t k = 1; k < n; ++k) {
    const auto& succ = net.successors(route.edges.back());
    if (succ.empty())
      fail(Errc::NoSuccessor, "edge '" + net.edge_id(route.edges.back()) + "' is a dead end");
    route.edges.push_back(succ[rng.below(succ.size())]);
  }
  return route;
}

/// Stationary distribution of the uniform-successor walk: left eigenvector of
/// the transition matrix by power iteration (L1 tolerance 1e-12, cap 1e5).
inline StationaryDistribution stationary_distribution(const TransportNetwork& net) {
  std::size_t m = net.edge_count();
  std::vector<double> pi(m, 1.0 / static_cast<double>(m)), next(m);
  for (int iter = 0; iter < 100000; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (EdgeIndex e = 0; e < m; ++e) {
      const auto& succ = net.successors(e);
      if (succ.empty()) fail(Errc::NoSuccessor, "edge '" + net.edge_id(e) + "' is a dead end");
      double w = pi[e] / static_cast<double>(succ.size());
      for (EdgeIndex s : succ) next[s] += w;
    }
    double delta = 0;
    for (std::size_t i = 0; i < m; ++i) delta += std::fabs(next[i] - pi[i]);
    pi.swap(next);
    if (delta < 1e-12) {
      double total = 0;
      for (double p : pi) total += p;
      for (double& p : pi) p /= total;
      return StationaryDistribution{std::move(pi)};
    }
  }
  fail(Errc::NonConvergent, "stationary distribution power iteration exceeded 1e5 iterations");
}

/// Edge file loader: CSV `edge_id,length_m,successors` with successors as a
/// `|`-separated id list.
inline TransportNetwork load_network_csv(const std::string& path) {
  CsvFile csv = read_csv(path);
  require_header(csv, {"edge_id", "length_m", "successors"}, path);
  std::vector<EdgeRecord> records;
  records.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    EdgeRecord rec;
    rec.edge_id = row[0];
    rec.length_m = parse_double(row[1], path);
    if (!row[2].empty())
      for (auto sv : split(row[2], '|')) rec.successor_ids.emplace_back(sv);
    records.push_back(std::move(rec));
  }
  return TransportNetwork::build(records);
}

inline std::string network_to_csv(const std::vector<EdgeRecord>& records) {
  std::string out = "edge_id,length_m,successors\n";
  for (const auto& r : records) {
    out += r.edge_id + "," + format_double(r.length_m) + ",";
    for (std::size_t i = 0; i < r.successor_ids.size(); ++i)
      out += (i ? "|" : "") + r.successor_ids[i];
    out += "\n";
  }
  return out;
}

}  // namespace traveltime
