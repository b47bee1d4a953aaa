#ifndef ISTL_EMBEDDING_HPP
#define ISTL_EMBEDDING_HPP

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "istl/errors.hpp"
#include "istl/interval.hpp"
#include "istl/trace.hpp"

namespace istl {

using matrix = std::vector<std::vector<double>>;

// x(t+1) = A x(t) + B u(t) + w(t), w(t) in [w_lo, w_hi], u(t) in [u_lo, u_hi].
// Outputs are selected state components, exposed under their own names.
class linear_system {
public:
    linear_system(matrix A, matrix B, std::vector<double> w_lo, std::vector<double> w_hi,
                  std::vector<double> u_lo, std::vector<double> u_hi,
                  std::vector<std::pair<std::string, std::size_t>> outputs, double dt = 1.0)
        : A_(std::move(A)), B_(std::move(B)), w_lo_(std::move(w_lo)), w_hi_(std::move(w_hi)),
          u_lo_(std::move(u_lo)), u_hi_(std::move(u_hi)), outputs_(std::move(outputs)), dt_(dt) {
        const std::size_t n = A_.size();
        if (n == 0) throw construction_error("system has no states");
        for (const auto& row : A_) {
            if (row.size() != n) throw construction_error("A must be square");
            for (double a : row) {
                if (a < 0.0) {
                    throw construction_error(
                        "A has a negative entry; the decoupled lower/upper embedding is only valid for "
                        "nonnegative A, general mixed-monotone decompositions are not supported");
                }
            }
        }
        if (B_.size() != n) throw construction_error("B must have one row per state");
        const std::size_t m = B_.front().size();
        for (const auto& row : B_) {
            if (row.size() != m) throw construction_error("B rows have inconsistent length");
        }
        if (w_lo_.size() != n || w_hi_.size() != n) throw construction_error("disturbance box dimension mismatch");
        if (u_lo_.size() != m || u_hi_.size() != m) throw construction_error("input box dimension mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(w_lo_[i] <= w_hi_[i])) throw construction_error("w_lo > w_hi");
        }
        for (std::size_t k = 0; k < m; ++k) {
            if (!(u_lo_[k] <= u_hi_[k])) throw construction_error("u_lo > u_hi");
        }
        for (const auto& [name, idx] : outputs_) {
            if (idx >= n) throw construction_error("output '" + name + "' selects a missing state");
        }
    }

    [[nodiscard]] std::size_t states() const noexcept { return A_.size(); }
    [[nodiscard]] std::size_t inputs() const noexcept { return B_.front().size(); }
    [[nodiscard]] const matrix& A() const noexcept { return A_; }
    [[nodiscard]] const matrix& B() const noexcept { return B_; }
    [[nodiscard]] const std::vector<double>& w_lo() const noexcept { return w_lo_; }
    [[nodiscard]] const std::vector<double>& w_hi() const noexcept { return w_hi_; }
    [[nodiscard]] const std::vector<double>& u_lo() const noexcept { return u_lo_; }
    [[nodiscard]] const std::vector<double>& u_hi() const noexcept { return u_hi_; }
    [[nodiscard]] const std::vector<std::pair<std::string, std::size_t>>& outputs() const noexcept {
        return outputs_;
    }
    [[nodiscard]] double dt() const noexcept { return dt_; }

    [[nodiscard]] std::vector<std::string> output_vars() const {
        std::vector<std::string> names;
        for (const auto& o : outputs_) names.push_back(o.first);
        return names;
    }

    void check_input(std::span<const double> u) const {
        if (u.size() != inputs()) throw input_out_of_bounds("input has wrong dimension");
        for (std::size_t k = 0; k < u.size(); ++k) {
            if (!(u[k] >= u_lo_[k] && u[k] <= u_hi_[k])) {
                throw input_out_of_bounds("u[" + std::to_string(k) + "] = " + std::to_string(u[k]) +
                                          " outside [" + std::to_string(u_lo_[k]) + ", " +
                                          std::to_string(u_hi_[k]) + "]");
            }
        }
    }

    // A x + B u, without disturbance.
    [[nodiscard]] std::vector<double> drift(std::span<const double> x, std::span<const double> u) const {
        std::vector<double> out(states(), 0.0);
        for (std::size_t i = 0; i < states(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < states(); ++j) s += A_[i][j] * x[j];
            for (std::size_t k = 0; k < inputs(); ++k) s += B_[i][k] * u[k];
            out[i] = s;
        }
        return out;
    }

private:
    matrix A_;
    matrix B_;
    std::vector<double> w_lo_, w_hi_;
    std::vector<double> u_lo_, u_hi_;
    std::vector<std::pair<std::string, std::size_t>> outputs_;
    double dt_;
};

struct embedding_state {
    std::vector<double> lo;
    std::vector<double> hi;

    static embedding_state degenerate(std::vector<double> x) { return {x, x}; }

    [[nodiscard]] bool contains(std::span<const double> x) const {
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!(lo[i] <= x[i] && x[i] <= hi[i])) return false;
        }
        return true;
    }
};

inline embedding_state step_embedding(const linear_system& sys, const embedding_state& s,
                                      std::span<const double> u) {
    sys.check_input(u);
    embedding_state out{sys.drift(s.lo, u), sys.drift(s.hi, u)};
    for (std::size_t i = 0; i < sys.states(); ++i) {
        out.lo[i] += sys.w_lo()[i];
        out.hi[i] += sys.w_hi()[i];
    }
    return out;
}

inline interval_vector project_outputs(const linear_system& sys, const embedding_state& s) {
    interval_vector row;
    for (const auto& [name, idx] : sys.outputs()) row.emplace_back(s.lo[idx], s.hi[idx]);
    return row;
}

// States visited by the embedding, s0 first; length |u_seq| + 1.
inline std::vector<embedding_state> embedding_states(const linear_system& sys, embedding_state s0,
                                                     const std::vector<std::vector<double>>& u_seq) {
    std::vector<embedding_state> out;
    out.reserve(u_seq.size() + 1);
    out.push_back(std::move(s0));
    for (const auto& u : u_seq) out.push_back(step_embedding(sys, out.back(), u));
    return out;
}

inline interval_trace simulate_embedding(const linear_system& sys, const embedding_state& s0,
                                         const std::vector<std::vector<double>>& u_seq) {
    std::vector<interval_vector> samples;
    for (const auto& s : embedding_states(sys, s0, u_seq)) samples.push_back(project_outputs(sys, s));
    return interval_trace(sys.output_vars(), std::move(samples));
}

inline std::vector<double> sample_disturbance(const linear_system& sys, std::mt19937_64& rng) {
    std::vector<double> w(sys.states());
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = sys.w_lo()[i] == sys.w_hi()[i]
                   ? sys.w_lo()[i]
                   : std::uniform_real_distribution<double>(sys.w_lo()[i], sys.w_hi()[i])(rng);
    }
    return w;
}

// One step of the true dynamics with a sampled disturbance.
inline std::vector<double> step_true(const linear_system& sys, std::span<const double> x,
                                     std::span<const double> u, std::mt19937_64& rng) {
    auto next = sys.drift(x, u);
    const auto w = sample_disturbance(sys, rng);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += w[i];
    return next;
}

// State trajectory of the true dynamics, x0 first.
inline std::vector<std::vector<double>> sample_states(const linear_system& sys, std::vector<double> x0,
                                                      const std::vector<std::vector<double>>& u_seq,
                                                      std::mt19937_64& rng) {
    std::vector<std::vector<double>> xs{std::move(x0)};
    for (const auto& u : u_seq) {
        sys.check_input(u);
        xs.push_back(step_true(sys, xs.back(), u, rng));
    }
    return xs;
}

inline trace outputs_of(const linear_system& sys, const std::vector<std::vector<double>>& xs) {
    std::vector<std::vector<double>> samples;
    for (const auto& x : xs) {
        std::vector<double> row;
        for (const auto& o : sys.outputs()) row.push_back(x[o.second]);
        samples.push_back(std::move(row));
    }
    return trace(sys.output_vars(), std::move(samples));
}

// Output trace of one realization of the disturbed dynamics.
inline trace sample_trajectory(const linear_system& sys, std::vector<double> x0,
                               const std::vector<std::vector<double>>& u_seq, std::mt19937_64& rng) {
    return outputs_of(sys, sample_states(sys, std::move(x0), u_seq, rng));
}

// System file: {"A": [[...]], "B": [[...]], "w_lo": [...], "w_hi": [...],
// "u_lo": [...], "u_hi": [...], "dt": 0.25, "outputs": {"y": 0}, "x0": [...]}.
struct system_file {
    linear_system sys;
    std::vector<double> x0;
};

inline system_file load_system(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
        auto vec = [&](const char* key) { return j.at(key).get<std::vector<double>>(); };
        std::vector<std::pair<std::string, std::size_t>> outputs;
        for (const auto& [name, idx] : j.at("outputs").items()) outputs.emplace_back(name, idx.get<std::size_t>());
        linear_system sys(j.at("A").get<matrix>(), j.at("B").get<matrix>(), vec("w_lo"), vec("w_hi"),
                          vec("u_lo"), vec("u_hi"), std::move(outputs), j.value("dt", 1.0));
        std::vector<double> x0 = j.contains("x0") ? vec("x0") : std::vector<double>(sys.states(), 0.0);
        if (x0.size() != sys.states()) throw construction_error("x0 dimension mismatch");
        return {std::move(sys), std::move(x0)};
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("system file: ") + e.what());
    }
}

inline system_file load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    return load_system(in);
}

} // namespace istl

#endif
