#pragma once

#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "steeple/inference.hpp"
#include "steeple/interpreter.hpp"
#include "steeple/prelude.hpp"
#include "steeple/runner.hpp"
#include "steeple/value.hpp"

namespace steeple::testing {

inline const Interpreter& interp() {
  static const Interpreter instance;
  return instance;
}

inline Value run(std::string_view source, std::uint64_t seed = 0) { return interp().run(source, seed); }
inline std::string show(std::string_view source, std::uint64_t seed = 0) { return print_value(run(source, seed)); }

using Histogram = std::map<std::string, double>;

inline Histogram frequencies(const std::vector<Value>& values) {
  Histogram h;
  for (const auto& v : values) h[print_value(v)] += 1.0;
  for (auto& [k, c] : h) c /= static_cast<double>(values.size());
  return h;
}

inline Histogram distribution(const EnumerationResult& r) {
  Histogram h;
  for (const auto& [v, p] : r.mass) h[print_value(v)] += p;
  return h;
}

inline double total_variation(const Histogram& a, const Histogram& b) {
  std::map<std::string, double> diff;
  for (const auto& [k, p] : a) diff[k] += p;
  for (const auto& [k, p] : b) diff[k] -= p;
  double tv = 0.0;
  for (const auto& [k, d] : diff) tv += std::abs(d);
  return tv / 2.0;
}

/// Goodness of fit of observed counts to cell probabilities.
inline double chi_square_p(const std::vector<double>& observed, const std::vector<double>& probs) {
  double n = 0.0;
  for (double o : observed) n += o;
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double e = n * probs[i];
    stat += (observed[i] - e) * (observed[i] - e) / e;
  }
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Homogeneity of two count vectors over the same cells.
inline double chi_square_two_sample_p(const std::vector<double>& a, const std::vector<double>& b) {
  double na = 0.0, nb = 0.0;
  for (double x : a) na += x;
  for (double x : b) nb += x;
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double total = a[i] + b[i];
    if (total == 0.0) continue;
    ++cells;
    double ea = total * na / (na + nb);
    double eb = total * nb / (na + nb);
    stat += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
  }
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Counts of each key of `b`'s union with `a`, aligned.
inline void aligned_counts(const std::map<std::string, double>& a, const std::map<std::string, double>& b,
                           std::vector<double>& out_a, std::vector<double>& out_b) {
  std::map<std::string, std::pair<double, double>> cells;
  for (const auto& [k, c] : a) cells[k].first += c;
  for (const auto& [k, c] : b) cells[k].second += c;
  for (const auto& [k, c] : cells) {
    out_a.push_back(c.first);
    out_b.push_back(c.second);
  }
}

/// P(rain 'day2 | grass-is-wet 'day2) by summing the joint over every
/// assignment of the five flips of the sprinkler model.
inline double sprinkler_oracle(double rain_str, double rain_prior, double sprinkler_str, double sprinkler_prior,
                               double baserate) {
  double wet_and_rain = 0.0, wet = 0.0;
  for (int bits = 0; bits < 32; ++bits) {
    bool rain = bits & 1, sprinkler = bits & 2, a = bits & 4, b = bits & 8, c = bits & 16;
    double p = (rain ? rain_prior : 1 - rain_prior) * (sprinkler ? sprinkler_prior : 1 - sprinkler_prior) *
               (a ? rain_str : 1 - rain_str) * (b ? sprinkler_str : 1 - sprinkler_str) * (c ? baserate : 1 - baserate);
    bool grass = (a && rain) || (b && sprinkler) || c;
    if (!grass) continue;
    wet += p;
    if (rain) wet_and_rain += p;
  }
  return wet_and_rain / wet;
}

/// Canonical label of the set partition induced by a sequence of values:
/// each position gets the index of the first position with an equal value.
inline std::string partition_label(const std::vector<Value>& draws) {
  std::string label;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    std::size_t first = i;
    for (std::size_t j = 0; j < i; ++j) {
      if (values_equal(draws[j], draws[i])) {
        first = j;
        break;
      }
    }
    label += static_cast<char>('0' + first);
  }
  return label;
}

}  // namespace steeple::testing
