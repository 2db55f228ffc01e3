#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <deque>
#include <vector>

#include "traveltime/network.hpp"

using namespace traveltime;

namespace {

std::vector<EdgeRecord> three_cycle() {
  return {{"a", 100, {"b"}}, {"b", 100, {"c"}}, {"c", 100, {"a"}}};
}

// Edge-graph used for stationary/walk oracles: a 6-edge ring where every
// edge also skips ahead by two, plus one asymmetric link to break symmetry.
std::vector<EdgeRecord> six_edge_graph() {
  return {{"e0", 100, {"e1", "e2"}}, {"e1", 150, {"e2", "e3"}}, {"e2", 250, {"e3", "e4"}},
          {"e3", 120, {"e4", "e5"}}, {"e4", 200, {"e5", "e0"}}, {"e5", 80, {"e0"}}};
}

// Independent reachability oracle: plain BFS over the successor lists.
bool bfs_reaches_all(const std::vector<EdgeRecord>& records, std::size_t from) {
  std::vector<std::size_t> idx(records.size());
  std::vector<char> seen(records.size(), 0);
  std::deque<std::size_t> q{from};
  seen[from] = 1;
  std::size_t count = 1;
  auto find = [&](const std::string& id) {
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].edge_id == id) return i;
    return records.size();
  };
  while (!q.empty()) {
    auto cur = q.front();
    q.pop_front();
    for (const auto& sid : records[cur].successor_ids) {
      std::size_t s = find(sid);
      if (!seen[s]) {
        seen[s] = 1;
        ++count;
        q.push_back(s);
      }
    }
  }
  return count == records.size();
}

// Dense stationary oracle: solve pi P = pi, sum pi = 1 by Gaussian
// elimination on the explicit transition matrix.
std::vector<double> dense_stationary(const std::vector<EdgeRecord>& records) {
  std::size_t m = records.size();
  auto find = [&](const std::string& id) {
    for (std::size_t i = 0; i < m; ++i)
      if (records[i].edge_id == id) return i;
    return m;
  };
  // rows: (P^T - I) pi = 0 with the last row replaced by sum = 1
  std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
  for (std::size_t e = 0; e < m; ++e) {
    double w = 1.0 / static_cast<double>(records[e].successor_ids.size());
    for (const auto& sid : records[e].successor_ids) a[find(sid)][e] += w;
  }
  for (std::size_t i = 0; i < m; ++i) a[i][i] -= 1.0;
  for (std::size_t j = 0; j < m; ++j) a[m - 1][j] = 1.0;
  a[m - 1][m] = 1.0;
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col; r < m; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col || a[r][col] == 0.0) continue;
      double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> pi(m);
  for (std::size_t i = 0; i < m; ++i) pi[i] = a[i][m] / a[i][i];
  return pi;
}

}  // namespace

TEST_CASE("build accepts the smallest cycle") {
  TransportNetwork net = TransportNetwork::build(three_cycle());
  CHECK(net.edge_count() == 3);
  CHECK(net.length(net.edge_index("a")) == 100);
  CHECK(net.adjacent(net.edge_index("a"), net.edge_index("b")));
  CHECK_FALSE(net.adjacent(net.edge_index("a"), net.edge_index("c")));
}

TEST_CASE("build rejects malformed edge sets") {
  auto recs = three_cycle();
  SECTION("zero length") {
    recs[1].length_m = 0;
    try {
      TransportNetwork::build(recs);
      FAIL("expected NonPositiveLength");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NonPositiveLength);
    }
  }
  SECTION("duplicate id") {
    recs.push_back({"a", 50, {"b"}});
    try {
      TransportNetwork::build(recs);
      FAIL("expected DuplicateEdge");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::DuplicateEdge);
    }
  }
  SECTION("dangling successor") {
    recs[0].successor_ids.push_back("zz");
    try {
      TransportNetwork::build(recs);
      FAIL("expected DanglingSuccessor");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::DanglingSuccessor);
    }
  }
  SECTION("two disjoint cycles") {
    std::vector<EdgeRecord> two = {{"a", 10, {"b"}}, {"b", 10, {"a"}},
                                   {"x", 10, {"y"}}, {"y", 10, {"x"}}};
    REQUIRE_FALSE(bfs_reaches_all(two, 0));  // oracle agrees it is disconnected
    try {
      TransportNetwork::build(two);
      FAIL("expected Disconnected");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::Disconnected);
    }
  }
}

TEST_CASE("random walk basics") {
  TransportNetwork net = TransportNetwork::build(three_cycle());
  SECTION("length-1 walk is the start edge") {
    Route r = random_walk(net, net.edge_index("b"), 1, 5);
    REQUIRE(r.size() == 1);
    CHECK(net.edge_id(r.edges[0]) == "b");
  }
  SECTION("out-degree one forces the unrolled cycle") {
    Route r = random_walk(net, net.edge_index("a"), 7, 99);
    const char* expect[] = {"a", "b", "c", "a", "b", "c", "a"};
    for (std::size_t k = 0; k < 7; ++k) CHECK(net.edge_id(r.edges[k]) == expect[k]);
  }
  SECTION("same seed, same walk; adjacency always holds") {
    TransportNetwork big = TransportNetwork::build(six_edge_graph());
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      Route r1 = random_walk(big, 0, 64, seed);
      Route r2 = random_walk(big, 0, 64, seed);
      CHECK(r1.edges == r2.edges);
      for (std::size_t k = 0; k + 1 < r1.size(); ++k)
        REQUIRE(big.adjacent(r1.edges[k], r1.edges[k + 1]));
    }
  }
}

TEST_CASE("walk visit frequencies converge to the stationary distribution") {
  auto recs = six_edge_graph();
  TransportNetwork net = TransportNetwork::build(recs);
  std::vector<double> oracle = dense_stationary(recs);
  Route walk = random_walk(net, 2, 1000000, 20240321);
  std::vector<double> freq(net.edge_count(), 0.0);
  for (EdgeIndex e : walk.edges) freq[e] += 1.0;
  for (auto& f : freq) f /= static_cast<double>(walk.size());
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    CHECK(std::fabs(freq[e] - oracle[e]) < 0.005);
}

TEST_CASE("stationary distribution") {
  SECTION("three-edge cycle is uniform") {
    TransportNetwork net = TransportNetwork::build(three_cycle());
    StationaryDistribution pi = stationary_distribution(net);
    for (double p : pi.pi) CHECK(p == Catch::Approx(1.0 / 3.0).epsilon(1e-10));
  }
  SECTION("matches the dense eigen oracle and sums to one") {
    auto recs = six_edge_graph();
    TransportNetwork net = TransportNetwork::build(recs);
    StationaryDistribution pi = stationary_distribution(net);
    std::vector<double> oracle = dense_stationary(recs);
    double total = 0;
    for (std::size_t e = 0; e < recs.size(); ++e) {
      CHECK(pi.pi[e] == Catch::Approx(oracle[e]).margin(1e-10));
      total += pi.pi[e];
    }
    CHECK(std::fabs(total - 1.0) < 1e-12);
  }
  SECTION("invariant to edge enumeration order") {
    auto recs = six_edge_graph();
    TransportNetwork net1 = TransportNetwork::build(recs);
    std::rotate(recs.begin(), recs.begin() + 3, recs.end());
    TransportNetwork net2 = TransportNetwork::build(recs);
    StationaryDistribution p1 = stationary_distribution(net1);
    StationaryDistribution p2 = stationary_distribution(net2);
    for (const auto& r : recs) {
      double a = p1.pi[net1.edge_index(r.edge_id)];
      double b = p2.pi[net2.edge_index(r.edge_id)];
      CHECK(a == Catch::Approx(b).margin(1e-12));
    }
  }
}

TEST_CASE("edge csv round trip") {
  auto recs = six_edge_graph();
  std::string csv = network_to_csv(recs);
  std::string path = std::string(TT_TEST_DATA_DIR) + "/.tmp_network.csv";
  write_file(path, csv);
  TransportNetwork net = load_network_csv(path);
  CHECK(net.edge_count() == recs.size());
  for (const auto& r : recs) {
    EdgeIndex e = net.edge_index(r.edge_id);
    CHECK(net.length(e) == r.length_m);
    CHECK(net.successors(e).size() == r.successor_ids.size());
  }
  std::remove(path.c_str());
}

TEST_CASE("shortest edge path recovers intermediates") {
  // line: a -> b -> c -> d, plus return link d -> a for connectivity
  std::vector<EdgeRecord> line = {
      {"a", 10, {"b"}}, {"b", 10, {"c"}}, {"c", 10, {"d"}}, {"d", 10, {"a"}}};
  TransportNetwork net = TransportNetwork::build(line);
  auto path = net.shortest_edge_path(net.edge_index("a"), net.edge_index("d"));
  REQUIRE(path.size() == 2);
  CHECK(net.edge_id(path[0]) == "b");
  CHECK(net.edge_id(path[1]) == "c");
  CHECK(net.shortest_edge_path(net.edge_index("a"), net.edge_index("b")).empty());
}
