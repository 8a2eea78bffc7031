#include "rdlab/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdlab::lp {

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

constexpr double kEps = 1e-9;

struct Tableau {
  int m = 0;  // rows
  int n = 0;  // structural + slack columns (excludes artificials)
  std::vector<std::vector<double>> t;  // m rows of n_total coefficients
  std::vector<double> rhs;
  std::vector<int> basis;  // basic column per row

  int n_total() const { return static_cast<int>(t.front().size()); }

  void pivot(int row, int col) {
    const double p = t[row][col];
    const double inv = 1.0 / p;
    for (double& v : t[row]) v *= inv;
    rhs[row] *= inv;
    t[row][col] = 1.0;  // kill residual round-off on the pivot itself
    for (int r = 0; r < m; ++r) {
      if (r == row) continue;
      const double f = t[r][col];
      if (f == 0.0) continue;
      for (int c = 0; c < n_total(); ++c) t[r][c] -= f * t[row][c];
      rhs[r] -= f * rhs[row];
      t[r][col] = 0.0;
    }
    basis[row] = col;
  }
};

// Bland's rule: entering = lowest-index column with negative reduced cost,
// leaving = min-ratio row with the lowest basic column index on ties.
Status run_simplex(Tableau& tab, std::vector<double>& cost, double& objective,
                   long& pivots_left, int col_limit) {
  const int m = tab.m;
  while (true) {
    int enter = -1;
    for (int c = 0; c < col_limit; ++c) {
      if (cost[c] < -kEps) {
        enter = c;
        break;
      }
    }
    if (enter < 0) return Status::optimal;

    int leave = -1;
    double best_ratio = 0.0;
    for (int r = 0; r < m; ++r) {
      const double a = tab.t[r][enter];
      if (a > kEps) {
        const double ratio = tab.rhs[r] / a;
        if (leave < 0 || ratio < best_ratio - 1e-15 ||
            (std::abs(ratio - best_ratio) <= 1e-15 && tab.basis[r] < tab.basis[leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) return Status::unbounded;
    if (pivots_left-- <= 0) return Status::iteration_limit;

    tab.pivot(leave, enter);
    const double f = cost[enter];
    for (int c = 0; c < tab.n_total(); ++c) cost[c] -= f * tab.t[leave][c];
    cost[enter] = 0.0;
    objective += f * tab.rhs[leave];
  }
}

}  // namespace

Solution solve_standard_form(std::vector<std::vector<double>> a, std::vector<double> b,
                             std::vector<double> c, long max_pivots) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(c.size());
  for (const auto& row : a) {
    if (static_cast<int>(row.size()) != n) {
      throw std::invalid_argument("simplex: ragged constraint matrix");
    }
  }
  if (static_cast<int>(b.size()) != m) {
    throw std::invalid_argument("simplex: rhs size mismatch");
  }
  if (max_pivots < 0) max_pivots = 200L * (m + n) + 2000L;

  Solution sol;
  if (m == 0) {
    // Only x >= 0 remains: bounded iff no negative cost.
    sol.x.assign(static_cast<std::size_t>(n), 0.0);
    for (double ci : c) {
      if (ci < -kEps) {
        sol.status = Status::unbounded;
        return sol;
      }
    }
    sol.status = Status::optimal;
    sol.objective = 0.0;
    return sol;
  }

  Tableau tab;
  tab.m = m;
  tab.n = n;
  tab.rhs = std::move(b);
  tab.t.assign(static_cast<std::size_t>(m),
               std::vector<double>(static_cast<std::size_t>(n + m), 0.0));
  tab.basis.resize(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) {
    const double sign = tab.rhs[r] < 0.0 ? -1.0 : 1.0;
    for (int cidx = 0; cidx < n; ++cidx) tab.t[r][cidx] = sign * a[r][cidx];
    tab.rhs[r] *= sign;
    tab.t[r][n + r] = 1.0;  // artificial
    tab.basis[r] = n + r;
  }

  // Phase 1: minimize the artificial sum.
  std::vector<double> cost1(static_cast<std::size_t>(n + m), 0.0);
  for (int r = 0; r < m; ++r) cost1[static_cast<std::size_t>(n + r)] = 1.0;
  double obj1 = 0.0;
  for (int r = 0; r < m; ++r) {
    for (int cidx = 0; cidx < n + m; ++cidx) cost1[cidx] -= tab.t[r][cidx];
    obj1 += tab.rhs[r];
  }
  long pivots_left = max_pivots;
  Status st = run_simplex(tab, cost1, obj1, pivots_left, n + m);
  if (st == Status::iteration_limit) {
    sol.status = st;
    return sol;
  }
  double scale = 1.0;
  for (double v : tab.rhs) scale = std::max(scale, std::abs(v));
  if (obj1 > kEps * scale) {
    sol.status = Status::infeasible;
    return sol;
  }

  // Drive leftover artificials out of the basis (or drop redundant rows).
  for (int r = 0; r < m; ++r) {
    if (tab.basis[r] < n) continue;
    int col = -1;
    for (int cidx = 0; cidx < n; ++cidx) {
      if (std::abs(tab.t[r][cidx]) > kEps) {
        col = cidx;
        break;
      }
    }
    if (col >= 0) {
      tab.pivot(r, col);
    } else {
      tab.t[r].assign(tab.t[r].size(), 0.0);
      tab.rhs[r] = 0.0;
    }
  }

  // Phase 2 over the structural columns only.
  std::vector<double> cost2(static_cast<std::size_t>(n + m), 0.0);
  for (int cidx = 0; cidx < n; ++cidx) cost2[cidx] = c[cidx];
  double obj2 = 0.0;
  for (int r = 0; r < m; ++r) {
    const int bcol = tab.basis[r];
    if (bcol >= n) continue;
    const double f = cost2[bcol];
    if (f == 0.0) continue;
    for (int cidx = 0; cidx < n + m; ++cidx) cost2[cidx] -= f * tab.t[r][cidx];
    cost2[bcol] = 0.0;
    obj2 += f * tab.rhs[r];
  }
  st = run_simplex(tab, cost2, obj2, pivots_left, n);
  if (st != Status::optimal) {
    sol.status = st;
    return sol;
  }

  sol.status = Status::optimal;
  sol.x.assign(static_cast<std::size_t>(n), 0.0);
  for (int r = 0; r < m; ++r) {
    if (tab.basis[r] < n) sol.x[static_cast<std::size_t>(tab.basis[r])] = tab.rhs[r];
  }
  sol.objective = 0.0;
  for (int cidx = 0; cidx < n; ++cidx) sol.objective += c[cidx] * sol.x[cidx];
  return sol;
}

int Problem::add_variable(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("variable bounds must satisfy lo < hi");
  lo_.push_back(lo);
  hi_.push_back(hi);
  return static_cast<int>(lo_.size()) - 1;
}

void Problem::add_row(std::span<const int> idx, std::span<const double> coef, int rel,
                      double rhs) {
  if (idx.size() != coef.size()) throw std::invalid_argument("row index/coef mismatch");
  Row row;
  row.idx.assign(idx.begin(), idx.end());
  row.coef.assign(coef.begin(), coef.end());
  row.rel = rel;
  row.rhs = rhs;
  for (int i : row.idx) {
    if (i < 0 || i >= variable_count()) throw std::out_of_range("row references unknown variable");
  }
  rows_.push_back(std::move(row));
}

void Problem::add_le(std::span<const int> idx, std::span<const double> coef, double rhs) {
  add_row(idx, coef, -1, rhs);
}
void Problem::add_ge(std::span<const int> idx, std::span<const double> coef, double rhs) {
  add_row(idx, coef, +1, rhs);
}
void Problem::add_eq(std::span<const int> idx, std::span<const double> coef, double rhs) {
  add_row(idx, coef, 0, rhs);
}

Solution Problem::minimize(std::span<const double> objective) const {
  const int nv = variable_count();
  if (static_cast<int>(objective.size()) != nv) {
    throw std::invalid_argument("objective size mismatch");
  }

  // Column layout: shifted variables first (free ones split into p - q),
  // then one slack per inequality row, then one per finite upper bound.
  std::vector<int> col_of(static_cast<std::size_t>(nv), -1);
  std::vector<bool> split(static_cast<std::size_t>(nv), false);
  int ncols = 0;
  for (int v = 0; v < nv; ++v) {
    col_of[v] = ncols;
    if (std::isinf(lo_[v])) {
      split[v] = true;
      ncols += 2;
    } else {
      ncols += 1;
    }
  }
  int nrows = static_cast<int>(rows_.size());
  int nslack = 0;
  for (const Row& r : rows_) nslack += (r.rel != 0) ? 1 : 0;
  std::vector<int> ub_vars;
  for (int v = 0; v < nv; ++v) {
    if (!std::isinf(hi_[v])) ub_vars.push_back(v);
  }
  const int total_rows = nrows + static_cast<int>(ub_vars.size());
  const int total_cols = ncols + nslack + static_cast<int>(ub_vars.size());

  std::vector<std::vector<double>> a(static_cast<std::size_t>(total_rows),
                                     std::vector<double>(static_cast<std::size_t>(total_cols), 0.0));
  std::vector<double> b(static_cast<std::size_t>(total_rows), 0.0);
  std::vector<double> c(static_cast<std::size_t>(total_cols), 0.0);

  auto put = [&](int row, int var, double coef) {
    a[row][col_of[var]] += coef;
    if (split[var]) a[row][col_of[var] + 1] -= coef;
  };

  int slack = ncols;
  for (int r = 0; r < nrows; ++r) {
    const Row& row = rows_[static_cast<std::size_t>(r)];
    double rhs = row.rhs;
    for (std::size_t k = 0; k < row.idx.size(); ++k) {
      const int v = row.idx[k];
      put(r, v, row.coef[k]);
      if (!std::isinf(lo_[v])) rhs -= row.coef[k] * lo_[v];  // shift x = lo + x'
    }
    if (row.rel == -1) a[r][slack++] = 1.0;
    if (row.rel == +1) a[r][slack++] = -1.0;
    b[static_cast<std::size_t>(r)] = rhs;
  }
  for (std::size_t k = 0; k < ub_vars.size(); ++k) {
    const int v = ub_vars[k];
    const int r = nrows + static_cast<int>(k);
    put(r, v, 1.0);
    a[r][slack++] = 1.0;
    b[static_cast<std::size_t>(r)] = hi_[v] - (std::isinf(lo_[v]) ? 0.0 : lo_[v]);
  }

  double shift_obj = 0.0;
  for (int v = 0; v < nv; ++v) {
    c[col_of[v]] += objective[v];
    if (split[v]) c[col_of[v] + 1] -= objective[v];
    if (!std::isinf(lo_[v])) shift_obj += objective[v] * lo_[v];
  }

  Solution inner = solve_standard_form(std::move(a), std::move(b), std::move(c));
  Solution sol;
  sol.status = inner.status;
  if (!inner.ok()) return sol;
  sol.x.assign(static_cast<std::size_t>(nv), 0.0);
  for (int v = 0; v < nv; ++v) {
    double val = inner.x[static_cast<std::size_t>(col_of[v])];
    if (split[v]) val -= inner.x[static_cast<std::size_t>(col_of[v] + 1)];
    if (!std::isinf(lo_[v])) val += lo_[v];
    sol.x[static_cast<std::size_t>(v)] = val;
  }
  sol.objective = inner.objective + shift_obj;
  return sol;
}

}  // namespace rdlab::lp
