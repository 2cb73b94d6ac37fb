#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gelato/graph.hpp"
#include "support.hpp"

using namespace gelato;

namespace {

std::filesystem::path scratch_file(const std::string& name, const std::string& text) {
  auto dir = std::filesystem::temp_directory_path() / "gelato_test_graph";
  std::filesystem::create_directories(dir);
  auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kUndefined;
}

}  // namespace

TEST_CASE("from_edges builds a symmetric CSR with degrees") {
  auto g = AttributedGraph::from_edges(4, {{0, 1, 1.0}, {2, 1, 2.0}, {3, 2, 0.5}});
  CHECK(g.num_nodes() == 4);
  CHECK(g.num_edges() == 3);
  CHECK(g.weight(1, 2) == 2.0);
  CHECK(g.weight(2, 1) == 2.0);
  CHECK(g.weight(0, 3) == 0.0);
  CHECK(g.degrees().d == std::vector<double>{1.0, 3.0, 2.5, 0.5});
  CHECK(g.degrees().vol == doctest::Approx(7.0));
  auto edges = g.edges();
  REQUIRE(edges.size() == 3);
  CHECK(edges[1].u == 1);
  CHECK(edges[1].v == 2);
}

TEST_CASE("both orientations with equal weight count once") {
  auto g = AttributedGraph::from_edges(3, {{0, 1, 1.0}, {1, 0, 1.0}});
  CHECK(g.num_edges() == 1);
}

TEST_CASE("invalid edge lists are rejected with codes") {
  CHECK(code_of([] { AttributedGraph::from_edges(3, {{0, 1}, {0, 1}}); }) ==
        ErrorCode::kConflict);
  CHECK(code_of([] { AttributedGraph::from_edges(3, {{0, 1, 1.0}, {1, 0, 2.0}}); }) ==
        ErrorCode::kConflict);
  CHECK(code_of([] { AttributedGraph::from_edges(3, {{0, 3}}); }) == ErrorCode::kRange);
  CHECK(code_of([] { AttributedGraph::from_edges(3, {{1, 1}}); }) ==
        ErrorCode::kParameter);
  CHECK(code_of([] { AttributedGraph::from_edges(3, {{0, 1, -1.0}}); }) ==
        ErrorCode::kParameter);
  CHECK(code_of([] { AttributedGraph::from_edges(2, {{0, 1}}, {1.0, 2.0, 3.0}, 2); }) ==
        ErrorCode::kDimension);
}

TEST_CASE("edge file parsing") {
  auto ok = scratch_file("ok.tsv", "# comment\n0\t1\n\n1 2 0.5\r\n");
  auto g = load_graph(ok);
  CHECK(g.num_nodes() == 3);
  CHECK(g.weight(1, 2) == 0.5);

  CHECK(code_of([&] { load_graph(scratch_file("bad1.tsv", "0 1 2 3\n")); }) ==
        ErrorCode::kParse);
  CHECK(code_of([&] { load_graph(scratch_file("bad2.tsv", "0 x\n")); }) ==
        ErrorCode::kParse);
  CHECK(code_of([&] { load_graph(scratch_file("bad3.tsv", "0 0\n")); }) ==
        ErrorCode::kParse);
  CHECK(code_of([&] { load_graph(scratch_file("bad4.tsv", "0 1 0\n")); }) ==
        ErrorCode::kParse);
  CHECK(code_of([&] { load_graph("/nonexistent/edges.tsv"); }) == ErrorCode::kIo);

  try {
    load_graph(scratch_file("bad5.tsv", "0 1\n1 2\n2 3 abc\n"));
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("attribute file parsing") {
  auto edges = scratch_file("e.tsv", "0 1\n");
  auto attrs = scratch_file("a.tsv", "3 2\n1 0\n0 1\n0.5 0.5\n");
  auto g = load_graph(edges, attrs);
  CHECK(g.num_nodes() == 3);
  CHECK(g.attr_dim() == 2);
  CHECK(g.attributes(2)[1] == 0.5);

  CHECK(code_of([&] { load_graph(edges, scratch_file("a1.tsv", "2 2\n1 0\n")); }) ==
        ErrorCode::kParse);
  CHECK(code_of([&] { load_graph(edges, scratch_file("a2.tsv", "2 2\n1 0\n0 1 2\n")); }) ==
        ErrorCode::kParse);
  CHECK(code_of([&] {
          load_graph(scratch_file("e2.tsv", "0 5\n"), scratch_file("a3.tsv", "2 1\n1\n2\n"));
        }) == ErrorCode::kRange);
}

TEST_CASE("remapped loading keeps original tokens") {
  auto path = scratch_file("named.tsv", "alice bob\nbob carol 2\n");
  auto r = load_graph_remapped(path);
  CHECK(r.graph.num_nodes() == 3);
  CHECK(r.original_ids == std::vector<std::string>{"alice", "bob", "carol"});
  CHECK(r.graph.weight(1, 2) == 2.0);
}

TEST_CASE("save and load round trip is exact") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = testing::random_graph(rng, 40, 0.1, 3, true);
    auto dir = std::filesystem::temp_directory_path() / "gelato_test_graph";
    save_edges(g, dir / "rt_e.tsv");
    save_attributes(g, dir / "rt_a.tsv");
    auto h = load_graph(dir / "rt_e.tsv", dir / "rt_a.tsv");
    CHECK(h.num_nodes() == g.num_nodes());
    CHECK(h.adjacency().col == g.adjacency().col);
    CHECK(h.adjacency().val == g.adjacency().val);
    CHECK(h.attribute_matrix() == g.attribute_matrix());
  }
}

TEST_CASE("format_real round trips") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    double x = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    CHECK(parse_real(format_real(x)) == x);
  }
}

TEST_CASE("cosine similarity") {
  std::vector<double> a{1, 0}, b{0, 2}, c{3, 0}, z{0, 0};
  CHECK(cosine_similarity(a, b) == 0.0);
  CHECK(cosine_similarity(a, c) == doctest::Approx(1.0));
  CHECK(cosine_similarity(a, z) == 0.0);
}

TEST_CASE("make_pair rejects self pairs") {
  CHECK(code_of([] { make_pair(3, 3); }) == ErrorCode::kParameter);
  CHECK(make_pair(5, 2) == NodePair{2, 5});
}
