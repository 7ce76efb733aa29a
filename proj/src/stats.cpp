#include "causalft/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "causalft/error.hpp"

namespace causalft {

namespace {

constexpr std::size_t kExactLimit = 100;

// Midranks of the pooled sample, doubled so that ties stay integral.
std::vector<long> doubled_ranks(const std::vector<double>& pooled, double* tie_term) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
  std::vector<long> ranks(n);
  double ties = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t k = i;
    while (k + 1 < n && pooled[order[k + 1]] == pooled[order[i]]) ++k;
    // ranks i+1..k+1 share (i + k + 2) / 2; doubled that is i + k + 2
    for (std::size_t t = i; t <= k; ++t) ranks[order[t]] = static_cast<long>(i + k + 2);
    const double t = static_cast<double>(k - i + 1);
    ties += t * t * t - t;
    i = k + 1;
  }
  if (tie_term) *tie_term = ties;
  return ranks;
}

double exact_p(const std::vector<long>& ranks, std::size_t n1, long observed) {
  // count subsets of size n1 by doubled rank sum
  const long total = std::accumulate(ranks.begin(), ranks.end(), 0L);
  std::vector<std::vector<long double>> ways(n1 + 1, std::vector<long double>(static_cast<std::size_t>(total) + 1, 0));
  ways[0][0] = 1;
  for (long r : ranks) {
    for (std::size_t k = n1; k >= 1; --k) {
      for (long s = total; s >= r; --s) {
        ways[k][static_cast<std::size_t>(s)] += ways[k - 1][static_cast<std::size_t>(s - r)];
      }
    }
  }
  const std::size_t n = ranks.size();
  // mean doubled rank sum: n1 * (n + 1)
  const long double mean = static_cast<long double>(n1) * static_cast<long double>(n + 1);
  const long double dev = std::fabs(static_cast<long double>(observed) - mean);
  long double hit = 0, all = 0;
  for (long s = 0; s <= total; ++s) {
    const long double w = ways[n1][static_cast<std::size_t>(s)];
    if (w == 0) continue;
    all += w;
    // small slack absorbs rounding of the half-integer mean
    if (std::fabs(static_cast<long double>(s) - mean) >= dev - 1e-9L) hit += w;
  }
  return static_cast<double>(std::min<long double>(1, hit / all));
}

}  // namespace

double mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "Mann-Whitney U needs at least two values per sample");
  }
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  double tie_term = 0;
  const auto ranks = doubled_ranks(pooled, &tie_term);
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
  const long r1 = std::accumulate(ranks.begin(), ranks.begin() + static_cast<long>(n1), 0L);

  if (n1 * n2 <= kExactLimit) return exact_p(ranks, n1, r1);

  const double u = r1 / 2.0 - static_cast<double>(n1 * (n1 + 1)) / 2.0;
  const double mu = static_cast<double>(n1 * n2) / 2.0;
  const double nn = static_cast<double>(n);
  const double var =
      static_cast<double>(n1 * n2) / 12.0 * ((nn + 1) - tie_term / (nn * (nn - 1)));
  if (var <= 0) return 1.0;
  const double z = std::max(0.0, std::abs(u - mu) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

double vargha_delaney_a12(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySample, "A12 needs two non-empty samples");
  double wins = 0;
  for (double x : a) {
    for (double y : b) {
      if (x > y) wins += 1;
      else if (x == y) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Better: return "better";
    case Direction::Worse: return "worse";
    case Direction::None: return "none";
  }
  return "none";
}

ComparisonResult judge(double p_value, double a12) {
  ComparisonResult r;
  r.p_value = p_value;
  r.a12 = a12;
  r.significant = p_value < 0.05 && (a12 >= 0.56 || a12 <= 0.44);
  if (r.significant) r.direction = a12 >= 0.56 ? Direction::Better : Direction::Worse;
  return r;
}

ComparisonResult compare(std::span<const double> a, std::span<const double> b) {
  return judge(mann_whitney_u(a, b), vargha_delaney_a12(a, b));
}

nlohmann::json to_json(const ComparisonResult& result) {
  return {{"p_value", result.p_value},
          {"a12", result.a12},
          {"significant", result.significant},
          {"direction", std::string(to_string(result.direction))}};
}

}  // namespace causalft
