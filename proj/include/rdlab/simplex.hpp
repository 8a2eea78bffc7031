#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace rdlab::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit };

std::string to_string(Status s);

struct Solution {
  Status status = Status::infeasible;
  double objective = 0.0;
  std::vector<double> x;

  bool ok() const { return status == Status::optimal; }
};

inline constexpr double infinity() { return std::numeric_limits<double>::infinity(); }

/// Dense two-phase tableau simplex with Bland's rule for
///   min c.x  s.t.  A x = b,  x >= 0.
Solution solve_standard_form(std::vector<std::vector<double>> a, std::vector<double> b,
                             std::vector<double> c, long max_pivots = -1);

/// Small modeling layer over the standard-form core: boxed or free variables
/// and <=, >=, = rows. Variables default to x >= 0.
class Problem {
 public:
  int add_variable(double lo = 0.0, double hi = infinity());
  int variable_count() const { return static_cast<int>(lo_.size()); }

  void add_le(std::span<const int> idx, std::span<const double> coef, double rhs);
  void add_ge(std::span<const int> idx, std::span<const double> coef, double rhs);
  void add_eq(std::span<const int> idx, std::span<const double> coef, double rhs);

  /// Minimizes objective.x; `objective` has one entry per variable.
  Solution minimize(std::span<const double> objective) const;

 private:
  struct Row {
    std::vector<int> idx;
    std::vector<double> coef;
    int rel = 0;  // -1: <=, 0: =, +1: >=
    double rhs = 0.0;
  };
  void add_row(std::span<const int> idx, std::span<const double> coef, int rel, double rhs);

  std::vector<double> lo_, hi_;
  std::vector<Row> rows_;
};

}  // namespace rdlab::lp
