#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace fleetflow {

/// One piece of a concave piecewise-linear column objective.
struct LpSegment {
  double length = 0.0;
  double slope = 0.0;
};

/// Sparse linear program with concave piecewise-linear column objectives:
/// maximize sum_j f_j(x_j) subject to row constraints, where f_j(0) = 0 and
/// x_j ranges over [0, total segment length].
///
/// A plain column with cost c and bound u is a single segment. Splitting a
/// concave column into many bounded variables is equivalent but slower, so
/// the solver keeps breakpoints inside the column and walks across them.
class LinearProgram {
 public:
  enum class Sense { LessEqual, Equal, GreaterEqual };

  std::size_t add_column(double objective, double upper = std::numeric_limits<double>::infinity(),
                         std::string name = {});
  /// Slopes must be non-increasing; only the last segment may be unbounded.
  std::size_t add_pwl_column(const std::vector<LpSegment>& segments, std::string name = {});
  std::size_t add_row(Sense sense, double rhs, std::string name = {});
  /// Adds `value` to the coefficient at (row, col).
  void add(std::size_t row, std::size_t col, double value);

  std::size_t rows() const { return rhs_.size(); }
  std::size_t cols() const { return cols_.size(); }

  struct Entry {
    std::size_t row;
    double value;
  };
  struct Column {
    std::vector<Entry> entries;
    std::vector<double> breaks;  ///< 0 = b_0 < b_1 < ... < b_K
    std::vector<double> slopes;  ///< K slopes, non-increasing
    std::string name;
  };
  const Column& column(std::size_t j) const { return cols_[j]; }
  Sense sense(std::size_t i) const { return sense_[i]; }
  double rhs(std::size_t i) const { return rhs_[i]; }
  const std::string& row_name(std::size_t i) const { return row_names_[i]; }
  double upper(std::size_t j) const { return cols_[j].breaks.back(); }

  /// Largest row or bound violation of x.
  double max_violation(const std::vector<double>& x) const;
  double evaluate(const std::vector<double>& x) const;
  /// Row activity a_i'x.
  std::vector<double> activity(const std::vector<double>& x) const;

 private:
  std::vector<Column> cols_;
  std::vector<Sense> sense_;
  std::vector<double> rhs_;
  std::vector<std::string> row_names_;
};

struct SimplexOptions {
  std::size_t max_pivots = 100000;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-9;
  /// Recompute basic values from scratch this often.
  std::size_t refresh_every = 50;
  /// Degenerate pivots in a row before switching to Bland's rule.
  std::size_t stall_limit = 50;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

std::string to_string(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::IterationLimit;
  std::vector<double> x;
  /// Row multipliers y = c_B B^{-1}. For a maximization a <= row gets y >= 0
  /// and a >= row y <= 0.
  std::vector<double> duals;
  double objective = 0.0;
  std::size_t pivots = 0;
  std::size_t breakpoint_steps = 0;
  double infeasibility = 0.0;
};

/// Two-phase primal simplex over bounded piecewise-linear columns, with a
/// dense explicit basis inverse. Dantzig pricing, falling back to Bland's
/// rule after a run of degenerate pivots.
LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

}  // namespace fleetflow
