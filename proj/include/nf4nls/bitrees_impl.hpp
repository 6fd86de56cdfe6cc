// Template definitions for bitrees.hpp.
#ifndef NF4NLS_BITREES_IMPL_HPP
#define NF4NLS_BITREES_IMPL_HPP

#include <string>

namespace nf4nls {

namespace detail {

inline void charge(std::uint64_t &used, std::uint64_t budget) {
  if (++used > budget) {
    throw BudgetExceeded("enumeration exceeded the budget of " +
                         std::to_string(budget) +
                         " assignments; lower N or J, or raise NF4NLS_BUDGET");
  }
}

inline Freq abs_freq(Freq n) { return n < 0 ? -n : n; }

} // namespace detail

template <class Visit>
void for_each_index_function(const OrderedBiTree &tree, const IndexQuery &query,
                             Visit &&visit, std::uint64_t budget) {
  const int J = tree.generations();
  const Freq bn = query.nonterminal_bound();
  const Freq bt = query.terminal_bound();
  auto bound = [&](int id) { return tree.is_terminal(id) ? bt : bn; };

  IndexFunction nf(tree.nodes().size(), 0);
  std::uint64_t used = 0;

  auto recurse = [&](auto &self, int k) -> void {
    if (k > J) {
      visit(static_cast<const IndexFunction &>(nf));
      return;
    }
    const int a = tree.expanded(k);
    const auto kids = *tree.children(a);
    const Freq na = nf[a];
    const Freq b1 = bound(kids[0]), b2 = bound(kids[1]), b3 = bound(kids[2]);
    for (Freq n1 = -b1; n1 <= b1; ++n1) {
      if (n1 == na) {
        continue;
      }
      for (Freq n3 = -b3; n3 <= b3; ++n3) {
        const Freq n2 = n1 + n3 - na;
        if (n3 == na || detail::abs_freq(n2) > b2) {
          continue;
        }
        detail::charge(used, budget);
        nf[kids[0]] = n1;
        nf[kids[1]] = n2;
        nf[kids[2]] = n3;
        self(self, k + 1);
      }
    }
  };

  Freq lo, hi;
  if (query.root) {
    // a fixed root still has to respect the bound, except in Unrestricted mode
    if (query.mode != IndexMode::Unrestricted &&
        detail::abs_freq(*query.root) > std::min(bound(0), bound(1))) {
      return;
    }
    lo = hi = *query.root;
  } else {
    const Freq br = std::min(bound(0), bound(1));
    lo = -br;
    hi = br;
  }
  for (Freq n = lo; n <= hi; ++n) {
    nf[0] = nf[1] = n;
    recurse(recurse, 1);
  }
}

template <class Visit>
void walk_chronicles(const WalkOptions &opts, Visit &&visit) {
  const int J = opts.generations;
  if (J < 1 || J > kMaxChronicleLength) {
    throw std::invalid_argument("walk_chronicles: generations out of range");
  }
  const Freq N = opts.N;
  WalkState st;
  std::uint64_t used = 0;

  auto recurse = [&](auto &self, int g) -> void {
    // Generation g expands a terminal; generation 1 always expands r1.
    for (int a = 0; a < st.node_count; ++a) {
      if (st.expanded[a] || (g == 1 && a != 0)) {
        continue;
      }
      const int c = st.node_count;
      const int eps = st.parity[a];
      const Freq na = st.value[a];
      st.expanded[a] = true;
      st.expansion[g] = a;
      st.parity[c] = eps;
      st.parity[c + 1] = opts.parity == ParityRule::Signed ? -eps : eps;
      st.parity[c + 2] = eps;
      st.node_count = c + 3;
      st.generations = g;
      for (Freq n1 = -N; n1 <= N; ++n1) {
        if (n1 == na) {
          continue;
        }
        for (Freq n3 = -N; n3 <= N; ++n3) {
          const Freq n2 = n1 + n3 - na;
          if (n3 == na || detail::abs_freq(n2) > N) {
            continue;
          }
          const PhaseInt phi = phase_phi(PhaseTuple(n1, n2, n3, na));
          const PhaseInt cum = st.cumulative[g - 1] + (eps > 0 ? phi : -phi);
          if (opts.cutoff_complement && g >= 2) {
            const PhaseInt mag = cum < 0 ? -cum : cum;
            if (mag <= cutoff_threshold(g - 1)) {
              continue;
            }
          }
          detail::charge(used, opts.budget);
          st.value[c] = n1;
          st.value[c + 1] = n2;
          st.value[c + 2] = n3;
          st.cumulative[g] = cum;
          if (g == J) {
            visit(static_cast<const WalkState &>(st));
          } else {
            self(self, g + 1);
          }
        }
      }
      st.node_count = c;
      st.generations = g - 1;
      st.expanded[a] = false;
      if (g == 1) {
        break;
      }
    }
  };

  st.parity[0] = 1;
  st.parity[1] = -1;
  st.node_count = 2;
  st.cumulative[0] = 0;
  for (Freq n = -N; n <= N; ++n) {
    st.value[0] = st.value[1] = n;
    recurse(recurse, 1);
  }
}

} // namespace nf4nls

#endif // NF4NLS_BITREES_IMPL_HPP
