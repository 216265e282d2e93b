#include "fleetflow/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fleetflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Pwl {
  std::vector<double> breaks;
  std::vector<double> slopes;
  bool fixed = false;  // never enters the basis
};

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {}

  LpResult run();

 private:
  enum class Outcome { Optimal, Unbounded, Limit };

  void setup();
  Outcome iterate();
  void compute_duals();
  void refresh_basic_values();
  bool refactor();
  void pivot(std::size_t r, const std::vector<double>& col);
  void column_times_inverse(std::size_t j, std::vector<double>& col) const;
  double row_dot(const std::vector<double>& y, std::size_t j) const;
  void enter_phase_two();
  void drive_out_artificials();
  std::size_t segment_of(const Pwl& f, double x) const;
  double total_objective() const;

  const LinearProgram& lp_;
  SimplexOptions opt_;

  std::size_t m_ = 0;
  std::size_t n_ = 0;  // structural columns
  std::vector<std::vector<LinearProgram::Entry>> a_;  // all columns, rows sign-normalized
  std::vector<Pwl> phase2_;
  std::vector<Pwl> cur_;
  std::vector<bool> artificial_;
  std::vector<double> b_;
  std::vector<double> row_sign_;

  std::vector<std::size_t> basis_;
  std::vector<std::ptrdiff_t> pos_;
  std::vector<std::size_t> seg_;  // breakpoint index if nonbasic, segment if basic
  std::vector<double> x_;
  std::vector<double> binv_;  // row-major m x m
  std::vector<double> y_;

  std::size_t pivots_ = 0;
  std::size_t steps_ = 0;
  std::size_t since_refresh_ = 0;
  std::size_t stall_ = 0;
  bool bland_ = false;
};

void Simplex::setup() {
  m_ = lp_.rows();
  n_ = lp_.cols();
  row_sign_.assign(m_, 1.0);
  b_.resize(m_);
  for (std::size_t i = 0; i < m_; ++i) {
    if (lp_.rhs(i) < 0.0) row_sign_[i] = -1.0;
    b_[i] = row_sign_[i] * lp_.rhs(i);
  }

  for (std::size_t j = 0; j < n_; ++j) {
    const auto& c = lp_.column(j);
    auto entries = c.entries;
    for (auto& e : entries) e.value *= row_sign_[e.row];
    a_.push_back(std::move(entries));
    phase2_.push_back({c.breaks, c.slopes, false});
    artificial_.push_back(false);
  }

  basis_.assign(m_, 0);
  std::vector<bool> covered(m_, false);
  for (std::size_t i = 0; i < m_; ++i) {
    const auto sense = lp_.sense(i);
    if (sense == LinearProgram::Sense::Equal) continue;
    const double coef = (sense == LinearProgram::Sense::LessEqual ? 1.0 : -1.0) * row_sign_[i];
    a_.push_back({{i, coef}});
    phase2_.push_back({{0.0, kInf}, {0.0}, false});
    artificial_.push_back(false);
    if (coef > 0.0) {
      basis_[i] = a_.size() - 1;
      covered[i] = true;
    }
  }
  for (std::size_t i = 0; i < m_; ++i) {
    if (covered[i]) continue;
    a_.push_back({{i, 1.0}});
    phase2_.push_back({{0.0, 0.0}, {0.0}, true});
    artificial_.push_back(true);
    basis_[i] = a_.size() - 1;
  }

  const std::size_t total = a_.size();
  pos_.assign(total, -1);
  seg_.assign(total, 0);
  x_.assign(total, 0.0);
  for (std::size_t i = 0; i < m_; ++i) {
    pos_[basis_[i]] = static_cast<std::ptrdiff_t>(i);
    x_[basis_[i]] = b_[i];
  }
  binv_.assign(m_ * m_, 0.0);
  for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;

  // Phase one: minimize the artificial mass; structural objectives vanish
  // and only the outer bounds matter.
  cur_.resize(total);
  for (std::size_t j = 0; j < total; ++j) {
    if (artificial_[j]) {
      cur_[j] = {{0.0, kInf}, {-1.0}, false};
    } else {
      cur_[j] = {{0.0, phase2_[j].breaks.back()}, {0.0}, false};
    }
  }
  y_.assign(m_, 0.0);
}

double Simplex::row_dot(const std::vector<double>& y, std::size_t j) const {
  double s = 0.0;
  for (const auto& e : a_[j]) s += y[e.row] * e.value;
  return s;
}

void Simplex::column_times_inverse(std::size_t j, std::vector<double>& col) const {
  col.assign(m_, 0.0);
  for (const auto& e : a_[j]) {
    const double v = e.value;
    const double* src = &binv_[e.row];
    for (std::size_t i = 0; i < m_; ++i) col[i] += src[i * m_] * v;
  }
}

void Simplex::compute_duals() {
  std::fill(y_.begin(), y_.end(), 0.0);
  for (std::size_t i = 0; i < m_; ++i) {
    const std::size_t j = basis_[i];
    const double c = cur_[j].slopes[seg_[j]];
    if (c == 0.0) continue;
    const double* row = &binv_[i * m_];
    for (std::size_t k = 0; k < m_; ++k) y_[k] += c * row[k];
  }
}

void Simplex::refresh_basic_values() {
  std::vector<double> rhs = b_;
  for (std::size_t j = 0; j < a_.size(); ++j) {
    if (pos_[j] >= 0 || x_[j] == 0.0) continue;
    for (const auto& e : a_[j]) rhs[e.row] -= e.value * x_[j];
  }
  for (std::size_t i = 0; i < m_; ++i) {
    const double* row = &binv_[i * m_];
    double s = 0.0;
    for (std::size_t k = 0; k < m_; ++k) s += row[k] * rhs[k];
    x_[basis_[i]] = s;
  }
  since_refresh_ = 0;
}

bool Simplex::refactor() {
  // Gauss-Jordan on [B | I] with partial pivoting.
  std::vector<double> bmat(m_ * m_, 0.0);
  for (std::size_t i = 0; i < m_; ++i) {
    for (const auto& e : a_[basis_[i]]) bmat[e.row * m_ + i] = e.value;
  }
  std::vector<double> inv(m_ * m_, 0.0);
  for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
  for (std::size_t c = 0; c < m_; ++c) {
    std::size_t p = c;
    double best = std::abs(bmat[c * m_ + c]);
    for (std::size_t r = c + 1; r < m_; ++r) {
      const double v = std::abs(bmat[r * m_ + c]);
      if (v > best) {
        best = v;
        p = r;
      }
    }
    if (best < 1e-12) return false;
    if (p != c) {
      for (std::size_t k = 0; k < m_; ++k) {
        std::swap(bmat[p * m_ + k], bmat[c * m_ + k]);
        std::swap(inv[p * m_ + k], inv[c * m_ + k]);
      }
    }
    const double d = bmat[c * m_ + c];
    for (std::size_t k = 0; k < m_; ++k) {
      bmat[c * m_ + k] /= d;
      inv[c * m_ + k] /= d;
    }
    for (std::size_t r = 0; r < m_; ++r) {
      if (r == c) continue;
      const double f = bmat[r * m_ + c];
      if (f == 0.0) continue;
      for (std::size_t k = 0; k < m_; ++k) {
        bmat[r * m_ + k] -= f * bmat[c * m_ + k];
        inv[r * m_ + k] -= f * inv[c * m_ + k];
      }
    }
  }
  // Row i of the inverse of B (columns ordered by basis position) is what we
  // store; after elimination `inv` is exactly that.
  binv_ = std::move(inv);
  return true;
}

void Simplex::pivot(std::size_t r, const std::vector<double>& col) {
  const double p = col[r];
  double* prow = &binv_[r * m_];
  for (std::size_t k = 0; k < m_; ++k) prow[k] /= p;
  for (std::size_t i = 0; i < m_; ++i) {
    if (i == r || col[i] == 0.0) continue;
    const double f = col[i];
    double* row = &binv_[i * m_];
    for (std::size_t k = 0; k < m_; ++k) row[k] -= f * prow[k];
  }
  ++pivots_;
  ++since_refresh_;
}

std::size_t Simplex::segment_of(const Pwl& f, double x) const {
  const std::size_t K = f.slopes.size();
  for (std::size_t k = 0; k < K; ++k) {
    if (x <= f.breaks[k + 1]) return k;
  }
  return K - 1;
}

Simplex::Outcome Simplex::iterate() {
  compute_duals();
  std::vector<double> col;
  const double otol = opt_.optimality_tol;
  while (true) {
    if (pivots_ >= opt_.max_pivots) return Outcome::Limit;
    if (since_refresh_ >= opt_.refresh_every) refresh_basic_values();

    // Pricing.
    std::ptrdiff_t enter = -1;
    int dir = 0;
    double best = 0.0;
    for (std::size_t j = 0; j < a_.size(); ++j) {
      if (pos_[j] >= 0 || cur_[j].fixed) continue;
      const Pwl& f = cur_[j];
      const std::size_t k = seg_[j];
      const double ya = row_dot(y_, j);
      double score = 0.0;
      int d = 0;
      if (k < f.slopes.size()) {
        const double up = f.slopes[k] - ya;
        if (up > otol) {
          score = up;
          d = 1;
        }
      }
      if (d == 0 && k > 0) {
        const double down = f.slopes[k - 1] - ya;
        if (down < -otol) {
          score = -down;
          d = -1;
        }
      }
      if (d == 0) continue;
      if (bland_) {
        enter = static_cast<std::ptrdiff_t>(j);
        dir = d;
        break;
      }
      if (score > best) {
        best = score;
        enter = static_cast<std::ptrdiff_t>(j);
        dir = d;
      }
    }
    if (enter < 0) return Outcome::Optimal;

    const auto q = static_cast<std::size_t>(enter);
    column_times_inverse(q, col);
    const double ya_q = row_dot(y_, q);

    // Walk across the entering column's breakpoints while it keeps paying.
    while (true) {
      const Pwl& f = cur_[q];
      const std::size_t k = seg_[q];
      double t_best = dir > 0 ? f.breaks[k + 1] - f.breaks[k] : f.breaks[k] - f.breaks[k - 1];
      std::ptrdiff_t leave = -1;
      double leave_mag = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double delta = dir * col[i];
        if (std::abs(delta) <= opt_.pivot_tol) continue;
        const std::size_t j = basis_[i];
        const Pwl& g = cur_[j];
        const double lo = g.breaks[seg_[j]];
        const double hi = g.breaks[seg_[j] + 1];
        double t = delta > 0.0 ? (x_[j] - lo) / delta : (hi - x_[j]) / (-delta);
        if (std::isinf(t)) continue;
        t = std::max(t, 0.0);
        bool take = false;
        if (t < t_best - 1e-15) {
          take = true;
        } else if (t <= t_best + 1e-15 && leave >= 0) {
          take = bland_ ? j < basis_[static_cast<std::size_t>(leave)] : std::abs(delta) > leave_mag;
        } else if (t <= t_best && leave < 0) {
          take = true;
        }
        if (take) {
          t_best = t;
          leave = static_cast<std::ptrdiff_t>(i);
          leave_mag = std::abs(delta);
        }
      }
      if (std::isinf(t_best)) return Outcome::Unbounded;

      for (std::size_t i = 0; i < m_; ++i) {
        if (col[i] != 0.0) x_[basis_[i]] -= t_best * dir * col[i];
      }
      x_[q] += dir * t_best;

      if (leave < 0) {
        // Entering column reached its next breakpoint; basis unchanged.
        seg_[q] = dir > 0 ? k + 1 : k - 1;
        x_[q] = f.breaks[seg_[q]];
        ++steps_;
        stall_ = 0;
        const std::size_t nk = seg_[q];
        double d = 0.0;
        if (dir > 0 && nk < f.slopes.size()) d = f.slopes[nk] - ya_q;
        if (dir < 0 && nk > 0) d = -(f.slopes[nk - 1] - ya_q);
        if (d > otol) continue;
        break;
      }

      const auto r = static_cast<std::size_t>(leave);
      const std::size_t l = basis_[r];
      const double delta = dir * col[r];
      seg_[l] = delta > 0.0 ? seg_[l] : seg_[l] + 1;
      x_[l] = cur_[l].breaks[seg_[l]];
      pos_[l] = -1;

      seg_[q] = dir > 0 ? k : k - 1;
      pivot(r, col);
      basis_[r] = q;
      pos_[q] = static_cast<std::ptrdiff_t>(r);

      if (t_best <= 1e-12) {
        if (++stall_ > opt_.stall_limit) bland_ = true;
      } else {
        stall_ = 0;
        bland_ = false;
      }
      compute_duals();
      break;
    }
  }
}

void Simplex::drive_out_artificials() {
  std::vector<double> col;
  for (std::size_t r = 0; r < m_; ++r) {
    const std::size_t a = basis_[r];
    if (!artificial_[a]) continue;
    const double* row = &binv_[r * m_];
    std::ptrdiff_t pick = -1;
    double mag = 1e-7;
    for (std::size_t j = 0; j < a_.size(); ++j) {
      if (pos_[j] >= 0 || artificial_[j]) continue;
      double alpha = 0.0;
      for (const auto& e : a_[j]) alpha += row[e.row] * e.value;
      if (std::abs(alpha) > mag) {
        mag = std::abs(alpha);
        pick = static_cast<std::ptrdiff_t>(j);
      }
    }
    if (pick < 0) continue;  // redundant row; the artificial stays, pinned at 0
    const auto q = static_cast<std::size_t>(pick);
    column_times_inverse(q, col);
    pivot(r, col);
    // Degenerate swap: the entering column keeps its value.
    x_[a] = 0.0;
    pos_[a] = -1;
    seg_[a] = 0;
    basis_[r] = q;
    pos_[q] = static_cast<std::ptrdiff_t>(r);
  }
  refresh_basic_values();
}

void Simplex::enter_phase_two() {
  for (std::size_t j = 0; j < a_.size(); ++j) {
    const Pwl& f = phase2_[j];
    if (artificial_[j]) {
      x_[j] = pos_[j] >= 0 ? x_[j] : 0.0;
      seg_[j] = 0;
      continue;
    }
    if (pos_[j] >= 0) {
      seg_[j] = segment_of(f, x_[j]);
    } else {
      // Nonbasic columns sit at 0 or at their outer bound.
      seg_[j] = x_[j] > 0.0 ? f.slopes.size() : 0;
      x_[j] = f.breaks[seg_[j]];
    }
  }
  cur_ = phase2_;
  stall_ = 0;
  bland_ = false;
}

double Simplex::total_objective() const {
  double total = 0.0;
  for (std::size_t j = 0; j < n_; ++j) {
    const Pwl& f = phase2_[j];
    double rem = x_[j];
    for (std::size_t k = 0; k < f.slopes.size() && rem > 0.0; ++k) {
      const double take = std::min(rem, f.breaks[k + 1] - f.breaks[k]);
      total += take * f.slopes[k];
      rem -= take;
    }
  }
  return total;
}

LpResult Simplex::run() {
  setup();
  LpResult res;

  Outcome out = iterate();
  refresh_basic_values();
  double infeas = 0.0;
  for (std::size_t j = 0; j < a_.size(); ++j) {
    if (artificial_[j]) infeas += std::max(0.0, x_[j]);
  }
  res.infeasibility = infeas;
  double bnorm = 1.0;
  for (double v : b_) bnorm = std::max(bnorm, std::abs(v));
  const bool phase1_done = out == Outcome::Optimal;
  if (phase1_done && infeas > opt_.feasibility_tol * bnorm * 10.0) {
    res.status = LpStatus::Infeasible;
  } else {
    drive_out_artificials();
    enter_phase_two();
    out = phase1_done ? iterate() : Outcome::Limit;
    if (m_ <= 2500 && refactor()) {
      refresh_basic_values();
    }
    compute_duals();
    res.status = out == Outcome::Optimal     ? LpStatus::Optimal
                 : out == Outcome::Unbounded ? LpStatus::Unbounded
                                             : LpStatus::IterationLimit;
  }

  res.x.resize(n_);
  for (std::size_t j = 0; j < n_; ++j) {
    res.x[j] = std::clamp(x_[j], 0.0, phase2_[j].breaks.back());
  }
  res.duals.resize(m_);
  for (std::size_t i = 0; i < m_; ++i) res.duals[i] = y_[i] * row_sign_[i];
  res.objective = total_objective();
  res.pivots = pivots_;
  res.breakpoint_steps = steps_;
  return res;
}

}  // namespace

std::size_t LinearProgram::add_column(double objective, double upper, std::string name) {
  if (!(upper > 0.0)) {
    // A fixed-at-zero column: keep it with a tiny range so it stays well formed.
    upper = 0.0;
  }
  Column c;
  c.breaks = {0.0, upper};
  c.slopes = {objective};
  c.name = std::move(name);
  cols_.push_back(std::move(c));
  return cols_.size() - 1;
}

std::size_t LinearProgram::add_pwl_column(const std::vector<LpSegment>& segments, std::string name) {
  Column c;
  c.breaks.push_back(0.0);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& s = segments[k];
    if (!(s.length > 0.0)) throw std::invalid_argument("segment lengths must be positive");
    if (std::isinf(s.length) && k + 1 != segments.size()) {
      throw std::invalid_argument("only the last segment may be unbounded");
    }
    if (k > 0 && s.slope > segments[k - 1].slope) throw std::invalid_argument("segment slopes must not increase");
    c.breaks.push_back(c.breaks.back() + s.length);
    c.slopes.push_back(s.slope);
  }
  if (c.slopes.empty()) {
    c.breaks.push_back(0.0);
    c.slopes.push_back(0.0);
  }
  c.name = std::move(name);
  cols_.push_back(std::move(c));
  return cols_.size() - 1;
}

std::size_t LinearProgram::add_row(Sense sense, double rhs, std::string name) {
  sense_.push_back(sense);
  rhs_.push_back(rhs);
  row_names_.push_back(std::move(name));
  return rhs_.size() - 1;
}

void LinearProgram::add(std::size_t row, std::size_t col, double value) {
  if (row >= rows() || col >= cols()) throw std::out_of_range("coefficient outside the program");
  auto& entries = cols_[col].entries;
  for (auto& e : entries) {
    if (e.row == row) {
      e.value += value;
      return;
    }
  }
  entries.push_back({row, value});
}

std::vector<double> LinearProgram::activity(const std::vector<double>& x) const {
  std::vector<double> act(rows(), 0.0);
  for (std::size_t j = 0; j < cols(); ++j) {
    for (const auto& e : cols_[j].entries) act[e.row] += e.value * x[j];
  }
  return act;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < cols(); ++j) {
    worst = std::max({worst, -x[j], x[j] - upper(j)});
  }
  const auto act = activity(x);
  for (std::size_t i = 0; i < rows(); ++i) {
    const double gap = act[i] - rhs_[i];
    switch (sense_[i]) {
      case Sense::LessEqual: worst = std::max(worst, gap); break;
      case Sense::GreaterEqual: worst = std::max(worst, -gap); break;
      case Sense::Equal: worst = std::max(worst, std::abs(gap)); break;
    }
  }
  return worst;
}

double LinearProgram::evaluate(const std::vector<double>& x) const {
  double total = 0.0;
  for (std::size_t j = 0; j < cols(); ++j) {
    const auto& c = cols_[j];
    double rem = x[j];
    for (std::size_t k = 0; k < c.slopes.size() && rem > 0.0; ++k) {
      const double take = std::min(rem, c.breaks[k + 1] - c.breaks[k]);
      total += take * c.slopes[k];
      rem -= take;
    }
  }
  return total;
}

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  Simplex s(lp, options);
  return s.run();
}

}  // namespace fleetflow
