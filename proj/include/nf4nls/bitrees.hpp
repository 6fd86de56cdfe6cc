#ifndef NF4NLS_BITREES_HPP
#define NF4NLS_BITREES_HPP

#include "nf4nls/spectral_core.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace nf4nls {

class BudgetExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Enumeration budget: NF4NLS_BUDGET if set, else 1e8.
std::uint64_t enumeration_budget();

/// Largest J accepted by enumerate_ordered_bitrees.
inline constexpr int kMaxChronicleLength = 7;

struct TreeNode {
  int id;
  int parent; ///< -1 for the two roots
  int slot;   ///< 1..3 left to right; 0 for roots
  int parity; ///< +1 or -1; +1 means v, -1 means conj(v)
  int gen;    ///< generation that created the node; 0 for roots
};

/**
 * A chronicle T_1 < ... < T_J. Node ids follow creation order: r1 = 0,
 * r2 = 1, and the children of the node expanded at generation k get ids
 * 3k - 1, 3k, 3k + 1.
 */
class OrderedBiTree {
public:
  /// expansions[k-1] is the node expanded at generation k; expansions[0]
  /// must be r1 and every later entry a terminal of the tree before it.
  explicit OrderedBiTree(std::vector<int> expansions);

  int generations() const { return static_cast<int>(expansions_.size()); }
  const std::vector<TreeNode> &nodes() const { return nodes_; }
  const std::vector<int> &chronicle() const { return expansions_; }

  /// Node expanded at generation k (1-based).
  int expanded(int k) const { return expansions_.at(k - 1); }
  /// Children of node id in slot order, or nullopt for terminals.
  std::optional<std::array<int, 3>> children(int id) const;
  bool is_terminal(int id) const { return !children(id).has_value(); }

  std::vector<int> terminals() const;
  std::vector<int> non_terminals() const;

  /// Pi_which: ids of the subtree under r_which (1 or 2).
  std::vector<int> project(int which) const;
  /// pi_j: the chronicle prefix of length j.
  OrderedBiTree project_generation(int j) const;

  /// One line per node: "id, parent, slot, parity, gen".
  void dump(std::ostream &out) const;

  bool operator==(const OrderedBiTree &other) const {
    return expansions_ == other.expansions_;
  }

private:
  std::vector<int> expansions_;
  std::vector<TreeNode> nodes_;
};

/// 2^{J-1} J!, the number of chronicles of length J.
std::uint64_t count_ordered_bitrees(int J);

/// All chronicles of length J in lexicographic order of terminal choices.
std::vector<OrderedBiTree> enumerate_ordered_bitrees(int J,
                                                     int cap = kMaxChronicleLength);

/// Frequencies by node id.
using IndexFunction = std::vector<Freq>;

enum class IndexMode {
  AllNodes,    ///< |n_a| <= N everywhere
  NonTerminal, ///< |n_a| <= N on non-terminals, terminals within the box
  Unrestricted ///< fixed root, everything within the box
};

struct IndexQuery {
  IndexMode mode = IndexMode::AllNodes;
  Freq N = 2;
  /// Bound applied where the mode leaves a node unconstrained.
  Freq box = 0;
  std::optional<Freq> root;

  Freq nonterminal_bound() const;
  Freq terminal_bound() const;
};

/// Independent check of root agreement, the sum rule and non-resonance.
bool is_valid_index_function(const OrderedBiTree &tree, const IndexFunction &nf);

/**
 * Calls visit(nf) for every index function of the tree allowed by the query.
 * Throws BudgetExceeded once more than budget partial assignments are
 * visited.
 */
template <class Visit>
void for_each_index_function(const OrderedBiTree &tree, const IndexQuery &query,
                             Visit &&visit,
                             std::uint64_t budget = enumeration_budget());

std::vector<IndexFunction> enumerate_index_functions(
    const OrderedBiTree &tree, const IndexQuery &query,
    std::uint64_t budget = enumeration_budget());

std::uint64_t count_index_functions(const OrderedBiTree &tree,
                                    const IndexQuery &query,
                                    std::uint64_t budget = enumeration_budget());

PhaseTuple generation_tuple(const OrderedBiTree &tree, const IndexFunction &nf,
                            int j);
/// eps_{a_j} phi(n^(j)) for the node a_j expanded at generation j.
PhaseInt generation_phase(const OrderedBiTree &tree, const IndexFunction &nf,
                          int j);
/// Sum of the generation phases 1..j.
PhaseInt cumulative_phase(const OrderedBiTree &tree, const IndexFunction &nf,
                          int j);

/// (2j + 4)^3.
PhaseInt cutoff_threshold(int j);
/// |phi~_{j+1}| <= (2j+4)^3; needs j + 1 generations.
bool cutoff_Cj(const OrderedBiTree &tree, const IndexFunction &nf, int j);

/// Smallest C with |n_r| <= C^J |n_b| for two distinct terminals b.
double descendant_constant(const OrderedBiTree &tree, const IndexFunction &nf);

/// Every chronicle of length J, each preceded by a "# tree <k> chronicle=..." line.
void dump_all_bitrees(std::ostream &out, int J);

// ---------------------------------------------------------------------------
// Joint walk over chronicles and index functions. This is the hot path of the
// energy code: no trees are materialized.

enum class ParityRule {
  Signed, ///< slot-2 children and r2 flip parity
  Broken  ///< slot-2 children keep the parent's parity (mutation testing)
};

struct WalkState {
  static constexpr int kMaxNodes = 2 + 3 * (kMaxChronicleLength + 1);

  int generations = 0;
  int node_count = 0;
  std::array<Freq, kMaxNodes> value{};
  std::array<int, kMaxNodes> parity{};
  std::array<bool, kMaxNodes> expanded{};
  /// phi~_k for k = 1..generations; cumulative[0] = 0.
  std::array<PhaseInt, kMaxChronicleLength + 2> cumulative{};
  /// Node expanded at generation k.
  std::array<int, kMaxChronicleLength + 2> expansion{};

  Freq root() const { return value[0]; }
};

struct WalkOptions {
  int generations = 1;
  Freq N = 2;
  ParityRule parity = ParityRule::Signed;
  /// Keep only states in C_1^c ∩ ... ∩ C_{J-1}^c.
  bool cutoff_complement = true;
  std::uint64_t budget = enumeration_budget();
};

/**
 * Visits every (T_J, n) with all frequencies in [-N, N]. Terminal choices at
 * each generation run in id order, then n1 and n3 in increasing order, so the
 * visiting order is deterministic.
 */
template <class Visit>
void walk_chronicles(const WalkOptions &opts, Visit &&visit);

} // namespace nf4nls

#include "nf4nls/bitrees_impl.hpp"

#endif // NF4NLS_BITREES_HPP
