#ifndef ISTL_SIMPLEX_HPP
#define ISTL_SIMPLEX_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "istl/errors.hpp"
#include "istl/milp.hpp"

namespace istl {

enum class lp_status { optimal, infeasible, unbounded, timed_out };

struct simplex_options {
    double primal_tol = 1e-9;
    double dual_tol = 1e-9;
    double pivot_tol = 1e-9;
    double residual_tol = 1e-7;
    // Stand-in magnitude for missing bounds, so every nonbasic variable can
    // be parked at a finite bound.
    double big_box = 1e6;
    std::size_t degenerate_limit = 500;
    std::size_t iteration_limit = 200000;
    std::size_t refactor_interval = 1000;
};

// Bounded dual simplex on a dense tableau over the LP relaxation of a
// milp_model. Row activities r = A x are logical variables, so the starting
// all-logical basis is always available. Every nonbasic variable sits at a
// finite bound, which lets a solved tableau be reused after any bound change:
// re-seat the nonbasics on the side their reduced cost prefers and continue.
//
// Only nonbasic columns are stored: basic variable i satisfies
//   x_basis[i] = -sum_k tab(i, k) x_col[k].
class dual_simplex {
public:
    explicit dual_simplex(const milp_model& model, simplex_options opts = {})
        : opts_(opts), n_(model.variables().size()), m_(model.constraints().size()), width_(n_ + m_) {
        rows_.reserve(m_);
        for (const auto& r : model.constraints()) rows_.push_back(r.terms);
        lo_.resize(width_);
        hi_.resize(width_);
        cost_.assign(width_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            lo_[j] = model.variables()[j].lo;
            hi_[j] = model.variables()[j].hi;
            cost_[j] = model.objective()[j];
        }
        for (std::size_t i = 0; i < m_; ++i) {
            const auto& r = model.constraints()[i];
            lo_[n_ + i] = r.sense == row_sense::le ? -inf : r.rhs;
            hi_[n_ + i] = r.sense == row_sense::ge ? inf : r.rhs;
        }
        objective_constant_ = model.objective_constant();
        basis_.resize(m_);
        cols_.resize(n_);
        where_.assign(width_, npos);
        col_of_.assign(width_, npos);
        for (std::size_t i = 0; i < m_; ++i) {
            basis_[i] = n_ + i;
            where_[n_ + i] = i;
        }
        for (std::size_t k = 0; k < n_; ++k) {
            cols_[k] = k;
            col_of_[k] = k;
        }
        side_.assign(width_, at_lo);
        x_.assign(width_, 0.0);
        tab_.assign(m_ * n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            for (const auto& t : rows_[i]) T(i, t.var) -= t.coef;
        }
        recompute_duals();
    }

    void set_bounds(std::size_t j, double lo, double hi) {
        lo_[j] = lo;
        hi_[j] = hi;
    }
    [[nodiscard]] double lower(std::size_t j) const { return lo_[j]; }
    [[nodiscard]] double upper(std::size_t j) const { return hi_[j]; }

    lp_status solve(std::optional<std::chrono::steady_clock::time_point> deadline = std::nullopt) {
        seat_nonbasics();
        compute_basics();
        std::size_t degenerate_run = 0;
        bool bland = false;
        for (std::size_t iter = 0;; ++iter) {
            if (iter >= opts_.iteration_limit) throw numerical_failure("simplex iteration limit reached");
            if (iter % 64 == 63) {
                if (deadline && std::chrono::steady_clock::now() > *deadline) return lp_status::timed_out;
                if (since_refactor_ > opts_.refactor_interval || residual() > opts_.residual_tol) refresh();
            }
            const std::size_t r = choose_leaving(bland);
            if (r == npos) {
                if (!fresh_ && residual() > opts_.residual_tol) {
                    refresh();
                    continue;
                }
                break;
            }
            const std::size_t leaving = basis_[r];
            const bool to_lower = x_[leaving] < lo_[leaving];
            const std::size_t k = choose_entering(r, to_lower, bland);
            if (k == npos) {
                // A drifted tableau can hide an entering candidate; retry
                // from a fresh factorization before declaring infeasibility.
                if (!fresh_) {
                    refresh();
                    continue;
                }
                return lp_status::infeasible;
            }
            if (std::fabs(dcol_[k] / T(r, k)) <= 1e-12) {
                if (++degenerate_run > opts_.degenerate_limit) bland = true;
            } else {
                degenerate_run = 0;
                bland = false;
            }
            pivot(r, k, to_lower ? lo_[leaving] : hi_[leaving], to_lower ? at_lo : at_hi);
            ++iterations_;
        }
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t j = cols_[k];
            const bool artificial = (side_[j] == at_lo && lo_[j] == -inf) || (side_[j] == at_hi && hi_[j] == inf);
            if (artificial && std::fabs(dcol_[k]) > opts_.dual_tol) return lp_status::unbounded;
        }
        return lp_status::optimal;
    }

    [[nodiscard]] std::vector<double> primal() const {
        return {x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_)};
    }

    [[nodiscard]] double objective() const {
        double s = objective_constant_;
        for (std::size_t j = 0; j < n_; ++j) s += cost_[j] * x_[j];
        return s;
    }

    [[nodiscard]] std::size_t iterations() const noexcept { return iterations_; }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    enum side_t : unsigned char { at_lo, at_hi, at_zero };

    double& T(std::size_t i, std::size_t k) { return tab_[i * n_ + k]; }
    [[nodiscard]] double T(std::size_t i, std::size_t k) const { return tab_[i * n_ + k]; }

    [[nodiscard]] double finite_lo(std::size_t j) const { return lo_[j] == -inf ? -opts_.big_box : lo_[j]; }
    [[nodiscard]] double finite_hi(std::size_t j) const { return hi_[j] == inf ? opts_.big_box : hi_[j]; }

    void recompute_duals() {
        dcol_.assign(n_, 0.0);
        for (std::size_t k = 0; k < n_; ++k) dcol_[k] = cost_[cols_[k]];
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = cost_[basis_[i]];
            if (cb == 0.0) continue;
            const double* row = &tab_[i * n_];
            for (std::size_t k = 0; k < n_; ++k) dcol_[k] -= cb * row[k];
        }
    }

    // Rebuild the tableau of the current basis from the original rows by
    // Gauss-Jordan elimination on the full [A, -I] system.
    void refactor() {
        std::vector<double> full(m_ * width_, 0.0);
        auto F = [&](std::size_t i, std::size_t j) -> double& { return full[i * width_ + j]; };
        for (std::size_t i = 0; i < m_; ++i) {
            for (const auto& t : rows_[i]) F(i, t.var) -= t.coef;
            F(i, n_ + i) = 1.0;
        }
        std::vector<char> in_basis(width_, 0);
        for (std::size_t v : basis_) in_basis[v] = 1;
        std::vector<std::size_t> basis(m_);
        std::vector<char> row_done(m_, 0);
        for (std::size_t i = 0; i < m_; ++i) {
            basis[i] = n_ + i;
            row_done[i] = in_basis[n_ + i];
        }
        std::vector<std::size_t> nz;
        for (std::size_t v : basis_) {
            if (v >= n_) continue;
            std::size_t best = npos;
            double mag = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (!row_done[i] && std::fabs(F(i, v)) > mag) {
                    mag = std::fabs(F(i, v));
                    best = i;
                }
            }
            // Columns that lost rank to round-off leave the basis; the free
            // row keeps its logical, and re-seating the nonbasics restores
            // dual feasibility because every variable is boxed.
            if (best == npos || mag < 1e-9) continue;
            double* prow = &full[best * width_];
            const double inv = 1.0 / prow[v];
            nz.clear();
            for (std::size_t j = 0; j < width_; ++j) {
                if (prow[j] != 0.0) {
                    prow[j] *= inv;
                    nz.push_back(j);
                }
            }
            prow[v] = 1.0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (i == best) continue;
                double* row = &full[i * width_];
                const double f = row[v];
                if (f == 0.0) continue;
                for (std::size_t j : nz) row[j] -= f * prow[j];
                row[v] = 0.0;
            }
            basis[best] = v;
            row_done[best] = 1;
        }
        basis_ = basis;
        std::fill(where_.begin(), where_.end(), npos);
        std::fill(col_of_.begin(), col_of_.end(), npos);
        for (std::size_t i = 0; i < m_; ++i) where_[basis_[i]] = i;
        std::size_t k = 0;
        for (std::size_t j = 0; j < width_; ++j) {
            if (where_[j] != npos) continue;
            cols_[k] = j;
            col_of_[j] = k;
            ++k;
        }
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t c = 0; c < n_; ++c) T(i, c) = F(i, cols_[c]);
        }
        recompute_duals();
        fresh_ = true;
        since_refactor_ = 0;
    }

    void refresh() {
        refactor();
        seat_nonbasics();
        compute_basics();
    }

    void seat_nonbasics() {
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t j = cols_[k];
            const double d = dcol_[k];
            side_t s;
            if (lo_[j] == hi_[j]) {
                s = at_lo;
            } else if (d > opts_.dual_tol) {
                s = at_lo;
            } else if (d < -opts_.dual_tol) {
                s = at_hi;
            } else if (side_[j] == at_lo && lo_[j] != -inf) {
                s = at_lo;
            } else if (side_[j] == at_hi && hi_[j] != inf) {
                s = at_hi;
            } else if (lo_[j] != -inf) {
                s = at_lo;
            } else if (hi_[j] != inf) {
                s = at_hi;
            } else {
                s = at_zero;
            }
            side_[j] = s;
            x_[j] = s == at_lo ? finite_lo(j) : s == at_hi ? finite_hi(j) : 0.0;
        }
    }

    void compute_basics() {
        xn_.resize(n_);
        for (std::size_t k = 0; k < n_; ++k) xn_[k] = x_[cols_[k]];
        for (std::size_t i = 0; i < m_; ++i) {
            const double* row = &tab_[i * n_];
            double s = 0.0;
            for (std::size_t k = 0; k < n_; ++k) s -= row[k] * xn_[k];
            x_[basis_[i]] = s;
        }
    }

    [[nodiscard]] double residual() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            double s = -x_[n_ + i];
            double scale = std::fabs(x_[n_ + i]);
            for (const auto& t : rows_[i]) {
                s += t.coef * x_[t.var];
                scale = std::max(scale, std::fabs(t.coef * x_[t.var]));
            }
            worst = std::max(worst, std::fabs(s) / std::max(1.0, scale));
        }
        return worst;
    }

    [[nodiscard]] std::size_t choose_leaving(bool bland) const {
        std::size_t best = npos;
        double worst = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t v = basis_[i];
            const double tol = opts_.primal_tol * std::max(1.0, std::fabs(x_[v]));
            const double viol = std::max(lo_[v] - x_[v], x_[v] - hi_[v]);
            if (viol <= tol) continue;
            if (bland) {
                if (best == npos || v < basis_[best]) best = i;
            } else if (viol > worst) {
                worst = viol;
                best = i;
            }
        }
        return best;
    }

    // Harris two-pass ratio test: find the largest step that keeps every
    // reduced cost within dual_tol of feasibility, then take the largest
    // pivot among the candidates inside that step. Bland mode takes the
    // lowest variable index at the exact minimum ratio instead.
    [[nodiscard]] std::size_t choose_entering(std::size_t r, bool to_lower, bool bland) const {
        const double* row = &tab_[r * n_];
        cand_.clear();
        double bound = inf;
        for (std::size_t k = 0; k < n_; ++k) {
            const double a = row[k];
            if (std::fabs(a) <= opts_.pivot_tol) continue;
            const std::size_t j = cols_[k];
            if (lo_[j] == hi_[j]) continue;
            // The leaving variable moves by -a * dx_j; it must rise when
            // below its lower bound and fall when above its upper bound.
            const bool up_ok = side_[j] != at_hi;
            const bool down_ok = side_[j] != at_lo;
            const bool eligible = to_lower ? ((up_ok && a < 0.0) || (down_ok && a > 0.0))
                                           : ((up_ok && a > 0.0) || (down_ok && a < 0.0));
            if (!eligible) continue;
            cand_.push_back(k);
            bound = std::min(bound, (std::fabs(dcol_[k]) + opts_.dual_tol) / std::fabs(a));
        }
        std::size_t best = npos;
        double best_key = inf;
        double best_mag = 0.0;
        for (std::size_t k : cand_) {
            const double mag = std::fabs(row[k]);
            const double q = std::fabs(dcol_[k]) / mag;
            if (bland) {
                if (best == npos || q < best_key - 1e-12 || (q <= best_key + 1e-12 && cols_[k] < cols_[best])) {
                    best = k;
                    best_key = std::min(best_key, q);
                }
            } else if (q <= bound && mag > best_mag) {
                best = k;
                best_mag = mag;
            }
        }
        return best;
    }

    void pivot(std::size_t r, std::size_t k, double target, side_t leave_side) {
        const std::size_t leaving = basis_[r];
        const std::size_t entering = cols_[k];
        double* prow = &tab_[r * n_];
        const double a = prow[k];
        const double step = (x_[leaving] - target) / a;
        for (std::size_t i = 0; i < m_; ++i) {
            const double f = T(i, k);
            if (f != 0.0) x_[basis_[i]] -= f * step;
        }
        x_[entering] += step;
        x_[leaving] = target;

        // Column k now stands for the leaving variable.
        const double inv = 1.0 / a;
        nz_.clear();
        for (std::size_t c = 0; c < n_; ++c) {
            if (prow[c] != 0.0) {
                prow[c] *= inv;
                nz_.push_back(c);
            }
        }
        prow[k] = inv;
        const bool dense = nz_.size() * 4 > n_;
        const auto update = [&](double* row, double f) {
            row[k] = 0.0;
            if (dense) {
                for (std::size_t c = 0; c < n_; ++c) row[c] -= f * prow[c];
            } else {
                for (std::size_t c : nz_) row[c] -= f * prow[c];
            }
        };
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            double* row = &tab_[i * n_];
            const double f = row[k];
            if (f != 0.0) update(row, f);
        }
        const double fd = dcol_[k];
        if (fd != 0.0) update(dcol_.data(), fd);

        basis_[r] = entering;
        where_[entering] = r;
        col_of_[entering] = npos;
        where_[leaving] = npos;
        col_of_[leaving] = k;
        cols_[k] = leaving;
        side_[leaving] = leave_side;
        fresh_ = false;
        ++since_refactor_;
    }

    simplex_options opts_;
    std::size_t n_;
    std::size_t m_;
    std::size_t width_;
    std::vector<std::vector<milp_term>> rows_;
    std::vector<double> lo_, hi_, cost_;
    double objective_constant_ = 0.0;
    std::vector<double> tab_;
    std::vector<double> dcol_;
    std::vector<double> x_;
    std::vector<double> xn_;
    std::vector<std::size_t> basis_;
    std::vector<std::size_t> cols_;
    std::vector<std::size_t> where_;
    std::vector<std::size_t> col_of_;
    std::vector<side_t> side_;
    std::vector<std::size_t> nz_;
    mutable std::vector<std::size_t> cand_;
    std::size_t iterations_ = 0;
    std::size_t since_refactor_ = 0;
    bool fresh_ = true;
};

} // namespace istl

#endif
