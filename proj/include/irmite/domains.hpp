#pragma once

// Artificial domains for invariant risk minimization, fabricated from a single
// dataset by assigning every row a domain index.

#include <functional>
#include <string>
#include <vector>

#include "irmite/datagen.hpp"
#include "irmite/error.hpp"
#include "irmite/numerics.hpp"

namespace irmite {

/// Zero-based domain index per row: index[i] is in [0, n_e).
struct DomainAssignment {
  std::vector<std::size_t> index;
  std::size_t n_e = 1;

  std::size_t size() const { return index.size(); }

  static DomainAssignment single(std::size_t n) { return {std::vector<std::size_t>(n, 0), 1}; }
};

enum class Group { Control, Treatment, Both };

/// Every row's domain is uniform over [0, n_e), independently.
inline DomainAssignment split_random(Rng& rng, std::size_t n, std::size_t n_e) {
  require(n_e >= 1, ErrorCode::InvalidArg, "split_random needs n_e >= 1");
  require(n >= n_e, ErrorCode::InvalidArg,
          "split_random needs n >= n_e (n=" + std::to_string(n) + ", n_e=" + std::to_string(n_e) + ")");
  DomainAssignment a;
  a.n_e = n_e;
  a.index.resize(n);
  for (auto& e : a.index) e = rng.below(n_e);
  return a;
}

/// Alternative splitting schemes plug in here.
using Splitter = std::function<DomainAssignment(Rng&, std::size_t n, std::size_t n_e)>;

inline Splitter random_splitter() { return split_random; }

inline bool group_matches(Group g, int t) {
  switch (g) {
    case Group::Control: return t == 0;
    case Group::Treatment: return t == 1;
    case Group::Both: return true;
  }
  return false;
}

/// Per-domain datasets restricted to one treatment group (or both). Rows keep
/// their original order. Throws EmptyDomainGroup when any cell is empty.
inline std::vector<Dataset> partition(const Dataset& ds, const DomainAssignment& assign, Group group) {
  require(assign.size() == ds.size(), ErrorCode::DimensionMismatch,
          "domain assignment length does not match dataset size");
  std::vector<std::vector<std::size_t>> rows(assign.n_e);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t e = assign.index[i];
    require(e < assign.n_e, ErrorCode::InvalidArg, "domain index out of range");
    if (group_matches(group, ds.t[i])) rows[e].push_back(i);
  }
  std::vector<Dataset> out;
  out.reserve(assign.n_e);
  for (std::size_t e = 0; e < assign.n_e; ++e) {
    if (rows[e].empty())
      throw Error(ErrorCode::EmptyDomainGroup, "domain " + std::to_string(e) + " has no rows in the requested group");
    out.push_back(ds.subset(rows[e]));
  }
  return out;
}

/// True when every (domain, group) cell the learners need is populated.
inline bool cells_populated(const Dataset& ds, const DomainAssignment& assign) {
  std::vector<std::size_t> control(assign.n_e, 0), treated(assign.n_e, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) (ds.t[i] == 1 ? treated : control)[assign.index[i]]++;
  for (std::size_t e = 0; e < assign.n_e; ++e)
    if (control[e] == 0 || treated[e] == 0) return false;
  return true;
}

/// Draws splits from successive child seeds until every cell is populated.
inline DomainAssignment split_populated(const Rng& parent, const Dataset& ds, std::size_t n_e,
                                        const Splitter& splitter = random_splitter(),
                                        int max_retries = 100) {
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    Rng rng = parent.split("domain-split", static_cast<std::uint64_t>(attempt));
    DomainAssignment a = splitter(rng, ds.size(), n_e);
    if (cells_populated(ds, a)) return a;
  }
  throw Error(ErrorCode::EmptyDomainGroup, "no populated domain split within the retry budget");
}

}  // namespace irmite
