#ifndef ISTL_ERRORS_HPP
#define ISTL_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace istl {

// Root of every exception thrown by the library. Catch this to handle any
// toolkit failure in one place (the CLI maps it to exit code 3).
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define ISTL_DEFINE_ERROR(name)                                                                    \
    class name : public error {                                                                    \
    public:                                                                                        \
        using error::error;                                                                        \
    }

// interval arithmetic
ISTL_DEFINE_ERROR(construction_error);
ISTL_DEFINE_ERROR(indeterminate_form);
ISTL_DEFINE_ERROR(empty_argument);

// expressions
ISTL_DEFINE_ERROR(unbound_variable);
ISTL_DEFINE_ERROR(nondegenerate_constant);
ISTL_DEFINE_ERROR(domain_error);

// formulas
ISTL_DEFINE_ERROR(unknown_variable);
ISTL_DEFINE_ERROR(malformed_bound);
ISTL_DEFINE_ERROR(unsupported_negation);

// traces
ISTL_DEFINE_ERROR(format_error);
ISTL_DEFINE_ERROR(io_error);
ISTL_DEFINE_ERROR(negative_radius);

// embedding
ISTL_DEFINE_ERROR(input_out_of_bounds);
ISTL_DEFINE_ERROR(system_error);

// synthesis
ISTL_DEFINE_ERROR(not_pnf);
ISTL_DEFINE_ERROR(non_affine_predicate);
ISTL_DEFINE_ERROR(horizon_mismatch);
ISTL_DEFINE_ERROR(bad_big_m);
ISTL_DEFINE_ERROR(numerical_failure);
ISTL_DEFINE_ERROR(solver_timeout);

#undef ISTL_DEFINE_ERROR

class parse_error : public error {
public:
    parse_error(const std::string& msg, std::size_t line, std::size_t column)
        : error("parse error at " + std::to_string(line) + ":" + std::to_string(column) + ": " +
                msg),
          line_(line), column_(column) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class trace_too_short : public error {
public:
    trace_too_short(std::size_t required, std::size_t actual)
        : error("trace too short: need " + std::to_string(required) + " samples, have " +
                std::to_string(actual)),
          required_(required) {}

    // Minimum trace length t + horizon + 1 for the failed request.
    [[nodiscard]] std::size_t required() const noexcept { return required_; }

private:
    std::size_t required_;
};

class step_infeasible : public error {
public:
    step_infeasible(std::size_t step, std::size_t window_lo, std::size_t window_hi)
        : error("synthesis infeasible at step " + std::to_string(step) +
                " (constraint window " + std::to_string(window_lo) + ".." +
                std::to_string(window_hi) + ")"),
          step_(step), window_lo_(window_lo), window_hi_(window_hi) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }
    [[nodiscard]] std::size_t window_lo() const noexcept { return window_lo_; }
    [[nodiscard]] std::size_t window_hi() const noexcept { return window_hi_; }

private:
    std::size_t step_;
    std::size_t window_lo_;
    std::size_t window_hi_;
};

} // namespace istl

#endif
