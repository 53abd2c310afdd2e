#pragma once

// Torus weights of monomials. The diagonal torus of SU(n,m) acts on z^alpha by
// a character determined by the row sums and column sums of alpha.

#include "bergman/domain.hpp"

#include <map>

namespace bergman {

struct Weight {
  std::vector<int> rows;
  std::vector<int> cols;

  auto operator<=>(const Weight&) const = default;

  int degree() const { return std::accumulate(rows.begin(), rows.end(), 0); }

  std::string describe() const {
    auto vec = [](const std::vector<int>& v) {
      std::string s = "(";
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
      return s + ")";
    };
    return "rows" + vec(rows) + " cols" + vec(cols);
  }
};

inline Weight weight_of(const MultiIndex& a) {
  Weight w{std::vector<int>(static_cast<std::size_t>(a.rows), 0), std::vector<int>(static_cast<std::size_t>(a.cols), 0)};
  for (int j = 0; j < a.rows; ++j)
    for (int k = 0; k < a.cols; ++k) {
      w.rows[static_cast<std::size_t>(j)] += a.at(j, k);
      w.cols[static_cast<std::size_t>(k)] += a.at(j, k);
    }
  return w;
}

/// Class id per index; ids are assigned in order of first appearance.
inline std::vector<int> weight_classes(const std::vector<MultiIndex>& indices) {
  std::map<Weight, int> ids;
  std::vector<int> out;
  out.reserve(indices.size());
  for (const auto& a : indices) {
    auto [it, inserted] = ids.try_emplace(weight_of(a), static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

/// Positions grouped by class id.
inline std::vector<std::vector<int>> class_members(const std::vector<int>& classes) {
  int count = 0;
  for (int c : classes) count = std::max(count, c + 1);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < classes.size(); ++i) out[static_cast<std::size_t>(classes[i])].push_back(static_cast<int>(i));
  return out;
}

}  // namespace bergman
