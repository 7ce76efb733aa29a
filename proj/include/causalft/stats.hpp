#pragma once

#include <span>
#include <string_view>

#include <json.hpp>

namespace causalft {

// Two-sided Mann-Whitney U p-value. Exact permutation distribution of the
// rank sum when |a|*|b| <= 100, otherwise the tie-corrected normal
// approximation with continuity correction.
double mann_whitney_u(std::span<const double> a, std::span<const double> b);

// Probability that a value from `a` exceeds one from `b`, ties counted half.
double vargha_delaney_a12(std::span<const double> a, std::span<const double> b);

enum class Direction { Better, Worse, None };
std::string_view to_string(Direction d);

struct ComparisonResult {
  double p_value = 1;
  double a12 = 0.5;
  bool significant = false;
  // Better means `a` tends to be larger.
  Direction direction = Direction::None;
};

// p < 0.05 together with a12 >= 0.56 or a12 <= 0.44.
ComparisonResult judge(double p_value, double a12);
ComparisonResult compare(std::span<const double> a, std::span<const double> b);

nlohmann::json to_json(const ComparisonResult& result);

}  // namespace causalft
