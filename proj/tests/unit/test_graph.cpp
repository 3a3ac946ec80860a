#include <doctest.h>

#include <set>
#include <sstream>

#include "mdagar/graph.hpp"
#include "oracles.hpp"

using namespace mdagar;

namespace {

GraphErrorKind parse_error_kind(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_adjacency(in);
  } catch (const GraphError& e) {
    return e.kind();
  }
  FAIL("expected a GraphError");
  return GraphErrorKind::kMalformed;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("parses a path and keeps declaration order") {
    std::istringstream in("# three regions\nregions: A,B,C\nA,B\nB,C\n");
    const ArealGraph g = parse_adjacency(in);
    CHECK(g.size() == 3);
    CHECK(g.num_edges() == 2);
    CHECK(g.labels() == std::vector<std::string>{"A", "B", "C"});
    CHECK(g.adjacent(0, 1));
    CHECK_FALSE(g.adjacent(0, 2));
  }

  TEST_CASE("distinct errors for malformed adjacency files") {
    CHECK(parse_error_kind("regions: A,B\nA,A\n") == GraphErrorKind::kSelfLoop);
    CHECK(parse_error_kind("regions: A,B\nA,B\nB,A\n") == GraphErrorKind::kDuplicateEdge);
    CHECK(parse_error_kind("regions: A,B\nA,C\n") == GraphErrorKind::kUnknownLabel);
    CHECK(parse_error_kind("regions:\n") == GraphErrorKind::kEmptyGraph);
    CHECK(parse_error_kind("regions: A,A\n") == GraphErrorKind::kDuplicateLabel);
  }

  TEST_CASE("error reports the offending line") {
    std::istringstream in("regions: A,B,C\nA,B\n\nB,B\n");
    try {
      parse_adjacency(in);
      FAIL("no error");
    } catch (const GraphError& e) {
      CHECK(e.line() == 4);
    }
  }

  TEST_CASE("directed neighbor sets") {
    const auto path = oracle::path_graph(3);
    const auto& ns = path->directed();
    CHECK(ns.count(0) == 0);
    CHECK(ns.count(1) == 1);
    CHECK(ns.count(2) == 1);
    CHECK(ns.of(2)[0] == 1);

    const auto cycle = oracle::graph_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
    const auto n4 = cycle->directed().of(3);
    CHECK(std::set<std::size_t>(n4.begin(), n4.end()) == std::set<std::size_t>{0, 2});
    CHECK(cycle->directed().count(3) == 2);

    const auto single = oracle::graph_from_edges(1, {});
    CHECK(single->directed().count(0) == 0);
  }

  TEST_CASE("grid graphs") {
    CHECK(grid_graph(2, 2).num_edges() == 4);
    CHECK(grid_graph(7, 7).size() == 49);
    CHECK(grid_graph(7, 7).num_edges() == 84);
    const ArealGraph row = grid_graph(1, 3);
    CHECK(row.num_edges() == 2);
    CHECK(row.adjacent(0, 1));
    CHECK(row.adjacent(1, 2));
    CHECK_THROWS_AS(grid_graph(0, 3), GraphError);
  }

  TEST_CASE("directed sets plus transpose rebuild the adjacency") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
      const auto g = oracle::random_graph(rng, 3 + rep, 0.3);
      const Eigen::MatrixXd m = oracle::adjacency(*g);
      Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(m.rows(), m.cols());
      const auto& ns = g->directed();
      for (std::size_t j = 0; j < g->size(); ++j)
        for (std::size_t jp : ns.of(j)) rebuilt(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(jp)) = 1.0;
      rebuilt += Eigen::MatrixXd(rebuilt.transpose());
      CHECK(rebuilt == m);
      CHECK(Eigen::MatrixXd(adjacency_matrix(*g)) == m);
    }
  }

  TEST_CASE("permuting regions keeps the undirected edge set") {
    std::mt19937_64 rng(9);
    const auto g = oracle::random_graph(rng, 12, 0.3);
    std::vector<std::size_t> order(12);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const ArealGraph p = g->permuted(order);
    CHECK(p.num_edges() == g->num_edges());
    for (const auto& e : p.edges()) CHECK(g->adjacent(order[e.first], order[e.second]));
  }

  TEST_CASE("round trip through the file format") {
    const ArealGraph g = grid_graph(3, 4);
    std::ostringstream out;
    write_adjacency(out, g);
    std::istringstream in(out.str());
    const ArealGraph back = parse_adjacency(in);
    CHECK(back.labels() == g.labels());
    CHECK(back.edges() == g.edges());
  }

  TEST_CASE("disconnected graphs are accepted") {
    const auto g = oracle::graph_from_edges(4, {{0, 1}});
    CHECK(g->num_components() == 3);
  }
}
