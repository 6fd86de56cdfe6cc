#include "nf4nls/bitrees.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

using namespace nf4nls;

namespace {

// Definition check written from scratch: roots agree, each expanded node
// carries n = n1 - n2 + n3 and neither n1 nor n3 equals n (equivalently
// n2 differs from n1 and n3).
bool valid(const OrderedBiTree &tree, const IndexFunction &nf) {
  if (nf[0] != nf[1]) {
    return false;
  }
  for (int k = 1; k <= tree.generations(); ++k) {
    const int a = tree.chronicle()[k - 1];
    const int c = 3 * k - 1;
    const Freq n = nf[a], n1 = nf[c], n2 = nf[c + 1], n3 = nf[c + 2];
    if (n != n1 - n2 + n3 || n1 == n || n3 == n || n2 == n1 || n2 == n3) {
      return false;
    }
  }
  return true;
}

// Odometer over [-bound(a), bound(a)] for every node except the roots.
template <class Bound>
std::uint64_t brute_force(const OrderedBiTree &tree, Freq root, Bound bound) {
  const std::size_t nodes = tree.nodes().size();
  IndexFunction nf(nodes);
  nf[0] = nf[1] = root;
  for (std::size_t i = 2; i < nodes; ++i) {
    nf[i] = -bound(static_cast<int>(i));
  }
  std::uint64_t count = 0;
  while (true) {
    count += valid(tree, nf);
    std::size_t i = 2;
    while (i < nodes && nf[i] == bound(static_cast<int>(i))) {
      nf[i] = -bound(static_cast<int>(i));
      ++i;
    }
    if (i == nodes) {
      return count;
    }
    ++nf[i];
  }
}

std::string read_file(const std::string &path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

TEST_CASE("chronicle counts") {
  const std::uint64_t expected[] = {1, 4, 24, 192, 1920, 23040};
  for (int J = 1; J <= 6; ++J) {
    CHECK(count_ordered_bitrees(J) == expected[J - 1]);
    const auto trees = enumerate_ordered_bitrees(J);
    CHECK(trees.size() == expected[J - 1]);
    if (J <= 4) {
      std::set<std::vector<int>> distinct;
      for (const auto &t : trees) {
        distinct.insert(t.chronicle());
      }
      CHECK(distinct.size() == trees.size());
    }
  }
  CHECK(count_ordered_bitrees(7) == 322560);
  CHECK_THROWS_AS(enumerate_ordered_bitrees(8), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_ordered_bitrees(0), std::invalid_argument);
}

TEST_CASE("tree structure") {
  for (const OrderedBiTree &tree : enumerate_ordered_bitrees(4)) {
    const int J = tree.generations();
    CHECK(tree.non_terminals().size() == static_cast<std::size_t>(J));
    CHECK(tree.terminals().size() == static_cast<std::size_t>(2 * J + 2));
    CHECK(tree.expanded(1) == 0);
    CHECK_FALSE(tree.is_terminal(0));
    // each generation expands a terminal of the previous tree
    for (int k = 2; k <= J; ++k) {
      const OrderedBiTree prev = tree.project_generation(k - 1);
      CHECK(prev.is_terminal(tree.expanded(k)));
      CHECK(prev.non_terminals().size() == static_cast<std::size_t>(k - 1));
    }
    CHECK(tree.project_generation(J) == tree);
    // parity: r2 conjugated, slot 2 flips, slots 1 and 3 copy
    const auto &nodes = tree.nodes();
    CHECK(nodes[0].parity == 1);
    CHECK(nodes[1].parity == -1);
    for (std::size_t i = 2; i < nodes.size(); ++i) {
      const int p = nodes[nodes[i].parent].parity;
      CHECK(nodes[i].parity == (nodes[i].slot == 2 ? -p : p));
    }
    // projections partition the nodes
    std::vector<int> all = tree.project(1);
    const std::vector<int> second = tree.project(2);
    all.insert(all.end(), second.begin(), second.end());
    std::sort(all.begin(), all.end());
    CHECK(all.size() == nodes.size());
    CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
  }
  const OrderedBiTree one({0});
  CHECK(one.project(2) == std::vector<int>{1});
  CHECK(one.children(0) == std::array<int, 3>{2, 3, 4});
  CHECK_FALSE(one.children(1).has_value());
  CHECK_THROWS_AS(OrderedBiTree({1}), std::invalid_argument);
  CHECK_THROWS_AS(OrderedBiTree({0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(OrderedBiTree({0, 5}), std::invalid_argument);
}

TEST_CASE("dumps match the golden files") {
  for (int J = 1; J <= 3; ++J) {
    std::ostringstream out;
    dump_all_bitrees(out, J);
    CHECK(out.str() ==
          read_file(std::string(NF4NLS_GOLDEN_DIR) + "/bitrees_J" + std::to_string(J) + ".txt"));
  }
}

TEST_CASE("the smallest index function set") {
  IndexQuery q;
  q.N = 1;
  q.root = 0;
  const auto fns = enumerate_index_functions(OrderedBiTree({0}), q);
  std::set<std::array<Freq, 3>> got;
  for (const auto &nf : fns) {
    got.insert({nf[2], nf[3], nf[4]});
  }
  CHECK(got == std::set<std::array<Freq, 3>>{{1, 0, -1}, {-1, 0, 1}});
  // (n1, n2, n3, n) = (1, 1, 0, 0) violates the exclusion
  CHECK_FALSE(is_valid_index_function(OrderedBiTree({0}), {0, 0, 1, 1, 0}));
  CHECK_FALSE(valid(OrderedBiTree({0}), {0, 0, 1, 1, 0}));
}

TEST_CASE("index functions against brute force") {
  for (int J = 1; J <= 2; ++J) {
    for (const OrderedBiTree &tree : enumerate_ordered_bitrees(J)) {
      for (Freq N = 1; N <= 3; ++N) {
        for (Freq root = -3; root <= 3; ++root) {
          IndexQuery q;
          q.mode = IndexMode::AllNodes;
          q.N = N;
          q.root = root;
          const std::uint64_t expect =
              std::abs(root) > N ? 0 : brute_force(tree, root, [&](int) { return N; });
          REQUIRE(count_index_functions(tree, q) == expect);
          for (const IndexFunction &nf : enumerate_index_functions(tree, q)) {
            REQUIRE(valid(tree, nf));
            REQUIRE(is_valid_index_function(tree, nf));
          }
        }
      }
    }
  }
}

TEST_CASE("index function modes") {
  for (const OrderedBiTree &tree : enumerate_ordered_bitrees(2)) {
    IndexQuery q;
    q.N = 1;
    q.box = 3;
    q.root = 1;
    q.mode = IndexMode::NonTerminal;
    CHECK(count_index_functions(tree, q) ==
          brute_force(tree, 1, [&](int id) { return tree.is_terminal(id) ? 3 : 1; }));
    q.mode = IndexMode::Unrestricted;
    q.root = 2;
    CHECK(count_index_functions(tree, q) == brute_force(tree, 2, [](int) { return 3; }));
  }
  // without a fixed root the roots range over the bound
  IndexQuery q;
  q.N = 2;
  std::uint64_t total = 0;
  for (Freq r = -2; r <= 2; ++r) {
    IndexQuery fixed = q;
    fixed.root = r;
    total += count_index_functions(OrderedBiTree({0, 2}), fixed);
  }
  CHECK(count_index_functions(OrderedBiTree({0, 2}), q) == total);
}

TEST_CASE("budget guard") {
  IndexQuery q;
  q.N = 6;
  CHECK_THROWS_AS(count_index_functions(OrderedBiTree({0, 1, 2}), q, 1000), BudgetExceeded);
  CHECK_NOTHROW(count_index_functions(OrderedBiTree({0}), q, 1000000));
  CHECK(enumeration_budget() > 0);
}

TEST_CASE("generation and cumulative phases") {
  // r1 -> (2, 1, 0), root 1, then slot 2 (conjugated) -> (3, 2, 0)
  const OrderedBiTree tree({0, 3});
  const IndexFunction nf{1, 1, 2, 1, 0, 3, 2, 0};
  REQUIRE(valid(tree, nf));
  CHECK(generation_phase(tree, nf, 1) == 14);
  CHECK(generation_phase(tree, nf, 1) == phase_phi(PhaseTuple(2, 1, 0, 1)));
  // phi(3, 2, 0, 1) = 81 - 16 + 0 - 1 = 64, flipped by the parity of node 3
  CHECK(generation_phase(tree, nf, 2) == -64);
  CHECK(cumulative_phase(tree, nf, 1) == 14);
  CHECK(cumulative_phase(tree, nf, 2) == 14 - 64);
  CHECK(cumulative_phase(tree, nf, 2) - cumulative_phase(tree, nf, 1) ==
        generation_phase(tree, nf, 2));
  // the cumulative phase is sum_b eps_b n_b^4 over the terminals
  PhaseInt terminal_sum = 0;
  for (int b : tree.terminals()) {
    const PhaseInt n = nf[b];
    terminal_sum += tree.nodes()[b].parity * n * n * n * n;
  }
  CHECK(terminal_sum == cumulative_phase(tree, nf, 2));
  CHECK(std::abs(static_cast<long long>(cumulative_phase(tree, nf, 2))) <= 216);
  CHECK(cutoff_Cj(tree, nf, 1));
}

TEST_CASE("cutoff thresholds") {
  CHECK(cutoff_threshold(1) == 216);
  CHECK(cutoff_threshold(2) == 512);
  CHECK(cutoff_threshold(3) == 1000);
  // |phi~_2| = 217 is outside C_1: n = 0 -> (2, 1, -1) has phi 16 - 1 + 1 = 16;
  // searching a second generation that lands exactly on 217 would be fiddly,
  // so the comparison is checked through the threshold directly.
  const PhaseInt t = cutoff_threshold(1);
  CHECK_FALSE(PhaseInt(217) <= t);
  CHECK(PhaseInt(216) <= t);
}

TEST_CASE("generation phases never vanish") {
  for (const OrderedBiTree &tree : enumerate_ordered_bitrees(2)) {
    IndexQuery q;
    q.N = 4;
    for_each_index_function(tree, q, [&](const IndexFunction &nf) {
      for (int j = 1; j <= 2; ++j) {
        REQUIRE(generation_phase(tree, nf, j) != 0);
      }
    });
  }
  for (Freq n1 = -20; n1 <= 20; ++n1) {
    for (Freq n3 = -20; n3 <= 20; ++n3) {
      for (Freq n = -20; n <= 20; ++n) {
        const Freq n2 = n1 + n3 - n;
        if (n1 == n || n3 == n || n2 < -20 || n2 > 20) {
          continue;
        }
        const OrderedBiTree t({0});
        REQUIRE(generation_phase(t, {n, n, n1, n2, n3}, 1) != 0);
      }
    }
  }
}

TEST_CASE("descendant bound with C0 = 3") {
  double worst = 1.0;
  for (int J = 1; J <= 3; ++J) {
    const Freq N = J == 3 ? 2 : 3;
    for (const OrderedBiTree &tree : enumerate_ordered_bitrees(J)) {
      IndexQuery q;
      q.N = N;
      for_each_index_function(tree, q, [&](const IndexFunction &nf) {
        const double c = descendant_constant(tree, nf);
        worst = std::max(worst, c);
        // literal form of the bound: two terminals b with |n_r| <= 3^J |n_b|
        int witnesses = 0;
        for (int b : tree.terminals()) {
          witnesses += std::abs(nf[0]) <= std::pow(3.0, J) * std::abs(nf[b]);
        }
        REQUIRE(witnesses >= 2);
      });
    }
  }
  MESSAGE("largest measured descendant constant " << worst);
  CHECK(worst <= 3.0);
}

TEST_CASE("walk visits the same states as tree-by-tree enumeration") {
  for (int J = 1; J <= 3; ++J) {
    WalkOptions opts;
    opts.generations = J;
    opts.N = 2;
    opts.cutoff_complement = false;
    std::uint64_t walked = 0;
    walk_chronicles(opts, [&](const WalkState &) { ++walked; });
    std::uint64_t enumerated = 0;
    for (const OrderedBiTree &tree : enumerate_ordered_bitrees(J)) {
      IndexQuery q;
      q.N = 2;
      enumerated += count_index_functions(tree, q);
    }
    CHECK(walked == enumerated);

    // with the cutoff complement, every visited state avoids C_1..C_{J-1}
    opts.cutoff_complement = true;
    walk_chronicles(opts, [&](const WalkState &s) {
      for (int k = 1; k < J; ++k) {
        const PhaseInt c = s.cumulative[k + 1];
        REQUIRE((c < 0 ? -c : c) > cutoff_threshold(k));
      }
    });
  }
}
