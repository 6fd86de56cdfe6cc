#include "nf4nls/bitrees.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <string>

namespace nf4nls {

std::uint64_t enumeration_budget() {
  if (const char *env = std::getenv("NF4NLS_BUDGET")) {
    try {
      const double value = std::stod(env);
      if (value >= 1.0) {
        return static_cast<std::uint64_t>(value);
      }
    } catch (const std::exception &) {
    }
    throw std::invalid_argument(std::string("NF4NLS_BUDGET is not a positive number: ") +
                                env);
  }
  return 100'000'000ULL;
}

OrderedBiTree::OrderedBiTree(std::vector<int> expansions)
    : expansions_(std::move(expansions)) {
  if (expansions_.empty() || expansions_.front() != 0) {
    throw std::invalid_argument("OrderedBiTree: generation 1 must expand r1");
  }
  if (static_cast<int>(expansions_.size()) > WalkState::kMaxNodes / 3) {
    throw std::invalid_argument("OrderedBiTree: chronicle too long");
  }
  nodes_.push_back({0, -1, 0, +1, 0});
  nodes_.push_back({1, -1, 0, -1, 0});
  std::vector<bool> expanded(2, false);
  int gen = 0;
  for (int a : expansions_) {
    ++gen;
    if (a < 0 || a >= static_cast<int>(nodes_.size()) || expanded[a]) {
      throw std::invalid_argument("OrderedBiTree: generation " +
                                  std::to_string(gen) +
                                  " does not expand a terminal");
    }
    expanded[a] = true;
    const int eps = nodes_[a].parity;
    const int base = static_cast<int>(nodes_.size());
    nodes_.push_back({base, a, 1, eps, gen});
    nodes_.push_back({base + 1, a, 2, -eps, gen});
    nodes_.push_back({base + 2, a, 3, eps, gen});
    expanded.resize(nodes_.size(), false);
  }
}

std::optional<std::array<int, 3>> OrderedBiTree::children(int id) const {
  const auto it = std::find(expansions_.begin(), expansions_.end(), id);
  if (it == expansions_.end()) {
    return std::nullopt;
  }
  const int k = static_cast<int>(it - expansions_.begin()) + 1;
  return std::array<int, 3>{3 * k - 1, 3 * k, 3 * k + 1};
}

std::vector<int> OrderedBiTree::terminals() const {
  std::vector<int> out;
  for (const auto &node : nodes_) {
    if (is_terminal(node.id)) {
      out.push_back(node.id);
    }
  }
  return out;
}

std::vector<int> OrderedBiTree::non_terminals() const {
  std::vector<int> out(expansions_);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> OrderedBiTree::project(int which) const {
  if (which != 1 && which != 2) {
    throw std::invalid_argument("project: root must be 1 or 2");
  }
  std::vector<int> out;
  std::vector<int> stack{which - 1};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    out.push_back(id);
    if (auto kids = children(id)) {
      stack.insert(stack.end(), kids->rbegin(), kids->rend());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

OrderedBiTree OrderedBiTree::project_generation(int j) const {
  if (j < 1 || j > generations()) {
    throw std::invalid_argument("project_generation: j out of range");
  }
  return OrderedBiTree(std::vector<int>(expansions_.begin(), expansions_.begin() + j));
}

void OrderedBiTree::dump(std::ostream &out) const {
  for (const auto &node : nodes_) {
    out << node.id << ", " << node.parent << ", " << node.slot << ", "
        << node.parity << ", " << node.gen << '\n';
  }
}

std::uint64_t count_ordered_bitrees(int J) {
  if (J < 1) {
    throw std::invalid_argument("count_ordered_bitrees: J must be >= 1");
  }
  std::uint64_t count = 1;
  for (int k = 2; k <= J; ++k) {
    count *= static_cast<std::uint64_t>(2 * k);
  }
  return count;
}

std::vector<OrderedBiTree> enumerate_ordered_bitrees(int J, int cap) {
  if (J < 1) {
    throw std::invalid_argument("enumerate_ordered_bitrees: J must be >= 1");
  }
  if (J > cap || J > kMaxChronicleLength) {
    throw std::invalid_argument("enumerate_ordered_bitrees: J = " + std::to_string(J) +
                                " exceeds the cap of " +
                                std::to_string(std::min(cap, kMaxChronicleLength)));
  }
  std::vector<OrderedBiTree> out;
  out.reserve(count_ordered_bitrees(J));
  std::vector<int> chronicle{0};
  std::vector<bool> expanded{true, false, false, false, false};

  auto recurse = [&](auto &self) -> void {
    if (static_cast<int>(chronicle.size()) == J) {
      out.emplace_back(chronicle);
      return;
    }
    const int count = static_cast<int>(expanded.size());
    for (int a = 0; a < count; ++a) {
      if (expanded[a]) {
        continue;
      }
      expanded[a] = true;
      chronicle.push_back(a);
      expanded.resize(count + 3, false);
      self(self);
      expanded.resize(count);
      chronicle.pop_back();
      expanded[a] = false;
    }
  };
  recurse(recurse);
  return out;
}

Freq IndexQuery::nonterminal_bound() const {
  return mode == IndexMode::Unrestricted ? box : N;
}

Freq IndexQuery::terminal_bound() const {
  return mode == IndexMode::AllNodes ? N : box;
}

bool is_valid_index_function(const OrderedBiTree &tree, const IndexFunction &nf) {
  const auto &nodes = tree.nodes();
  if (nf.size() != nodes.size() || nf[0] != nf[1]) {
    return false;
  }
  // Group children by parent straight from the node records.
  for (const auto &node : nodes) {
    Freq kid[4] = {0, 0, 0, 0};
    int seen = 0;
    for (const auto &c : nodes) {
      if (c.parent == node.id) {
        kid[c.slot] = nf[c.id];
        ++seen;
      }
    }
    if (seen == 0) {
      continue;
    }
    if (seen != 3) {
      return false;
    }
    const Freq na = nf[node.id];
    if (na != kid[1] - kid[2] + kid[3]) {
      return false;
    }
    if (na == kid[1] || na == kid[3] || kid[2] == kid[1] || kid[2] == kid[3]) {
      return false;
    }
  }
  return true;
}

std::vector<IndexFunction> enumerate_index_functions(const OrderedBiTree &tree,
                                                     const IndexQuery &query,
                                                     std::uint64_t budget) {
  std::vector<IndexFunction> out;
  for_each_index_function(
      tree, query, [&](const IndexFunction &nf) { out.push_back(nf); }, budget);
  return out;
}

std::uint64_t count_index_functions(const OrderedBiTree &tree,
                                    const IndexQuery &query,
                                    std::uint64_t budget) {
  std::uint64_t count = 0;
  for_each_index_function(
      tree, query, [&](const IndexFunction &) { ++count; }, budget);
  return count;
}

PhaseTuple generation_tuple(const OrderedBiTree &tree, const IndexFunction &nf,
                            int j) {
  if (j < 1 || j > tree.generations()) {
    throw std::invalid_argument("generation_tuple: j out of range");
  }
  const int a = tree.expanded(j);
  const auto kids = *tree.children(a);
  return PhaseTuple(nf.at(kids[0]), nf.at(kids[1]), nf.at(kids[2]), nf.at(a));
}

PhaseInt generation_phase(const OrderedBiTree &tree, const IndexFunction &nf,
                          int j) {
  const PhaseInt phi = phase_phi(generation_tuple(tree, nf, j));
  return tree.nodes()[tree.expanded(j)].parity > 0 ? phi : -phi;
}

PhaseInt cumulative_phase(const OrderedBiTree &tree, const IndexFunction &nf,
                          int j) {
  PhaseInt sum = 0;
  for (int k = 1; k <= j; ++k) {
    sum += generation_phase(tree, nf, k);
  }
  return sum;
}

PhaseInt cutoff_threshold(int j) {
  const PhaseInt b = 2 * j + 4;
  return b * b * b;
}

bool cutoff_Cj(const OrderedBiTree &tree, const IndexFunction &nf, int j) {
  if (j < 1 || j + 1 > tree.generations()) {
    throw std::invalid_argument("cutoff_Cj: generation j + 1 is not assigned");
  }
  PhaseInt phase = cumulative_phase(tree, nf, j + 1);
  if (phase < 0) {
    phase = -phase;
  }
  return phase <= cutoff_threshold(j);
}

double descendant_constant(const OrderedBiTree &tree, const IndexFunction &nf) {
  const double root = std::abs(static_cast<double>(nf.at(0)));
  if (root == 0.0) {
    return 1.0;
  }
  std::vector<double> mags;
  for (int b : tree.terminals()) {
    mags.push_back(std::abs(static_cast<double>(nf.at(b))));
  }
  std::sort(mags.rbegin(), mags.rend());
  const double second = mags.at(1);
  if (second == 0.0) {
    return INFINITY;
  }
  return std::max(1.0, std::pow(root / second, 1.0 / tree.generations()));
}

void dump_all_bitrees(std::ostream &out, int J) {
  const auto trees = enumerate_ordered_bitrees(J);
  for (std::size_t k = 0; k < trees.size(); ++k) {
    out << "# tree " << k << " chronicle=";
    const auto &ch = trees[k].chronicle();
    for (std::size_t g = 0; g < ch.size(); ++g) {
      out << (g ? "," : "") << ch[g];
    }
    out << '\n';
    trees[k].dump(out);
  }
}

} // namespace nf4nls
