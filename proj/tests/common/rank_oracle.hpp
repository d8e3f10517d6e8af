#pragma once

// Brute-force reimplementations of ranking and summary metrics, written
// independently of the library (plain loops, explicit cosines, sorting by a
// different route) for cross-checking.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace oracle {

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

struct Vocab {
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> vectors;

  const std::vector<double>& at(const std::string& t) const {
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (tokens[i] == t) return vectors[i];
    throw std::out_of_range(t);
  }
};

inline std::size_t corrected_rank(const Vocab& voc, const std::vector<double>& composed,
                                  const std::string& phrase) {
  const auto& target = voc.at(phrase);
  const double own = cosine(target, composed);
  std::size_t rank = 1;
  for (std::size_t i = 0; i < voc.tokens.size(); ++i)
    if (voc.tokens[i] != phrase && cosine(target, voc.vectors[i]) > own) ++rank;
  return rank;
}

inline std::size_t original_rank(const Vocab& voc, const std::vector<double>& composed,
                                 const std::string& phrase) {
  const double own = cosine(composed, voc.at(phrase));
  std::size_t rank = 1;
  for (std::size_t i = 0; i < voc.tokens.size(); ++i)
    if (voc.tokens[i] != phrase && cosine(composed, voc.vectors[i]) > own) ++rank;
  return rank;
}

// Median of a sorted list by explicit index arithmetic.
inline double median(const std::vector<double>& s) {
  if (s.empty()) return 0.0;
  const std::size_t n = s.size();
  return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

struct Q {
  double q1, q2, q3;
};

inline Q quartiles(std::vector<std::size_t> ranks) {
  std::vector<double> s(ranks.begin(), ranks.end());
  std::stable_sort(s.begin(), s.end());
  if (s.size() == 1) return {s[0], s[0], s[0]};
  std::vector<double> lower, upper;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (n % 2 == 1 && i == n / 2) continue;
    (i < n / 2 ? lower : upper).push_back(s[i]);
  }
  return {median(lower), median(s), median(upper)};
}

}  // namespace oracle
