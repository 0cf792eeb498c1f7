#pragma once

// Positions in term trees, shared by both calculi.
//
// A position is a path of child indices starting at the root:
//   0   = the body of an abstraction, or the function of an application
//   k>0 = the k-th argument of an application (plain lambda terms only use 1)
//
// The natural vector ordering (lexicographic, prefix-first) is exactly the
// leftmost-outermost order on occurrences.

#include <string>
#include <vector>

namespace ldist {

using Position = std::vector<int>;

inline std::string position_to_string(const Position& p) {
  if (p.empty()) return "e";
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(p[i]);
  }
  return out;
}

// Parses "e" (root) or dotted indices like "0.1".  Returns false on junk.
inline bool position_from_string(const std::string& s, Position& out) {
  out.clear();
  if (s == "e" || s.empty()) return true;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!isdigit(static_cast<unsigned char>(s[i]))) return false;
    int v = 0;
    while (i < s.size() && isdigit(static_cast<unsigned char>(s[i]))) {
      v = v * 10 + (s[i] - '0');
      ++i;
    }
    out.push_back(v);
    if (i < s.size()) {
      if (s[i] != '.') return false;
      ++i;
      if (i == s.size()) return false;
    }
  }
  return true;
}

inline bool is_position_prefix(const Position& p, const Position& q) {
  if (p.size() > q.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] != q[i]) return false;
  return true;
}

inline bool positions_disjoint(const Position& p, const Position& q) {
  return !is_position_prefix(p, q) && !is_position_prefix(q, p);
}

inline Position position_concat(Position p, const Position& q) {
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

inline Position position_child(Position p, int i) {
  p.push_back(i);
  return p;
}

}  // namespace ldist
