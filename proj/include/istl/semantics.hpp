#ifndef ISTL_SEMANTICS_HPP
#define ISTL_SEMANTICS_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "istl/errors.hpp"
#include "istl/expr.hpp"
#include "istl/formula.hpp"
#include "istl/interval.hpp"
#include "istl/sliding_window.hpp"
#include "istl/trace.hpp"

namespace istl {

// Until semantics.
//   paper:     max_{t' in [t+t1, t+t2]} min( rho_lhs(t'), min_{t'' in [t+t1, t']} rho_rhs(t'') )
//   classical: max_{t' in [t+t1, t+t2]} min( rho_rhs(t'), min_{t'' in [t, t']}    rho_lhs(t'') )
enum class until_convention { paper, classical };

struct monitor_options {
    until_convention until = until_convention::paper;
};

// Three-valued verdict of an interval robustness.
enum class truth { true_ = 0, false_ = 1, undef = 2 };

inline const char* to_string(truth v) {
    switch (v) {
    case truth::true_: return "True";
    case truth::false_: return "False";
    case truth::undef: return "Undef";
    }
    return "?";
}

// True when the interval lies in [0, inf], False when it lies in [-inf, 0).
inline truth classify(const interval& rho) {
    if (rho.lo() >= 0.0) return truth::true_;
    if (rho.hi() < 0.0) return truth::false_;
    return truth::undef;
}

struct robustness_trace {
    std::vector<interval> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] const interval& operator[](std::size_t t) const { return values[t]; }
};

namespace detail {

template <class V>
struct value_ops;

template <>
struct value_ops<double> {
    static double neg(double a) { return -a; }
    static double min(double a, double b) { return std::min(a, b); }
    static double max(double a, double b) { return std::max(a, b); }
    static double pred(const compiled_expr& e, std::span<const double> x) { return e.eval_point(x); }
};

template <>
struct value_ops<interval> {
    static interval neg(const interval& a) { return -a; }
    static interval min(const interval& a, const interval& b) { return min_inc(a, b); }
    static interval max(const interval& a, const interval& b) { return max_inc(a, b); }
    static interval pred(const compiled_expr& e, std::span<const interval> x) {
        return e.eval_interval(x);
    }
};

// Compiled predicate bodies keyed by predicate node.
class predicate_table {
public:
    predicate_table(const formula& f, const var_binding& binding) { add(f, binding); }

    [[nodiscard]] const compiled_expr& at(const formula& p) const { return table_.at(p.id()); }

    [[nodiscard]] bool has_uncertain_constant() const {
        return std::any_of(table_.begin(), table_.end(),
                           [](const auto& kv) { return kv.second.has_uncertain_constant(); });
    }

private:
    void add(const formula& f, const var_binding& binding) {
        if (f.kind() == formula_kind::pred) {
            if (!table_.count(f.id())) table_.emplace(f.id(), compiled_expr(f.body(), binding));
            return;
        }
        for (const auto& a : f.args()) add(a, binding);
    }

    std::unordered_map<const void*, compiled_expr> table_;
};

inline void require_length(const formula& f, std::size_t t, std::size_t length) {
    const std::size_t need = t + horizon(f) + 1;
    if (need > length) {
        throw trace_too_short(need, length);
    }
}

// Direct recursive evaluation, one time step at a time. This is the reference
// the sliding-window engine is checked against.
template <class V>
class naive_evaluator {
    using ops = value_ops<V>;

public:
    naive_evaluator(const formula& f, const basic_trace<V>& tr, monitor_options opts)
        : preds_(f, tr.binding()), trace_(tr), opts_(opts) {}

    V eval(const formula& f, std::size_t t) const {
        switch (f.kind()) {
        case formula_kind::pred:
            return ops::pred(preds_.at(f), trace_.at(t));
        case formula_kind::negation:
            return ops::neg(eval(f.args()[0], t));
        case formula_kind::conjunction: {
            V acc = eval(f.args()[0], t);
            for (std::size_t i = 1; i < f.args().size(); ++i) acc = ops::min(acc, eval(f.args()[i], t));
            return acc;
        }
        case formula_kind::disjunction: {
            V acc = eval(f.args()[0], t);
            for (std::size_t i = 1; i < f.args().size(); ++i) acc = ops::max(acc, eval(f.args()[i], t));
            return acc;
        }
        case formula_kind::always: {
            V acc = eval(f.args()[0], t + f.t1());
            for (std::size_t s = t + f.t1() + 1; s <= t + f.t2(); ++s) acc = ops::min(acc, eval(f.args()[0], s));
            return acc;
        }
        case formula_kind::eventually: {
            V acc = eval(f.args()[0], t + f.t1());
            for (std::size_t s = t + f.t1() + 1; s <= t + f.t2(); ++s) acc = ops::max(acc, eval(f.args()[0], s));
            return acc;
        }
        case formula_kind::until:
            return opts_.until == until_convention::paper ? until_paper(f, t) : until_classical(f, t);
        }
        return V{};
    }

private:
    V until_paper(const formula& f, std::size_t t) const {
        const formula& lhs = f.args()[0];
        const formula& rhs = f.args()[1];
        V best{};
        for (std::size_t tp = t + f.t1(); tp <= t + f.t2(); ++tp) {
            V inner = eval(rhs, t + f.t1());
            for (std::size_t tpp = t + f.t1() + 1; tpp <= tp; ++tpp) inner = ops::min(inner, eval(rhs, tpp));
            const V term = ops::min(eval(lhs, tp), inner);
            best = tp == t + f.t1() ? term : ops::max(best, term);
        }
        return best;
    }

    V until_classical(const formula& f, std::size_t t) const {
        const formula& lhs = f.args()[0];
        const formula& rhs = f.args()[1];
        V best{};
        for (std::size_t tp = t + f.t1(); tp <= t + f.t2(); ++tp) {
            V inner = eval(lhs, t);
            for (std::size_t tpp = t + 1; tpp <= tp; ++tpp) inner = ops::min(inner, eval(lhs, tpp));
            const V term = ops::min(eval(rhs, tp), inner);
            best = tp == t + f.t1() ? term : ops::max(best, term);
        }
        return best;
    }

    predicate_table preds_;
    const basic_trace<V>& trace_;
    monitor_options opts_;
};

template <class V>
struct window_ops;

template <>
struct window_ops<double> {
    static std::vector<double> min(const std::vector<double>& in, std::size_t off, std::size_t w, std::size_t n) {
        return sliding_min(in, off, w, n);
    }
    static std::vector<double> max(const std::vector<double>& in, std::size_t off, std::size_t w, std::size_t n) {
        return sliding_max(in, off, w, n);
    }
};

// Lower and upper endpoint streams are windowed independently: [min] and
// [max] act on each endpoint on its own.
template <>
struct window_ops<interval> {
    template <class Fn>
    static std::vector<interval> split(const std::vector<interval>& in, std::size_t off, std::size_t w,
                                       std::size_t n, Fn fn) {
        std::vector<double> lo(in.size());
        std::vector<double> hi(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) {
            lo[i] = in[i].lo();
            hi[i] = in[i].hi();
        }
        const auto wlo = fn(lo, off, w, n);
        const auto whi = fn(hi, off, w, n);
        std::vector<interval> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = interval::from_ordered(wlo[i], whi[i]);
        return out;
    }
    static std::vector<interval> min(const std::vector<interval>& in, std::size_t off, std::size_t w,
                                     std::size_t n) {
        return split(in, off, w, n, [](const std::vector<double>& v, std::size_t o, std::size_t ww,
                                        std::size_t nn) { return sliding_min(v, o, ww, nn); });
    }
    static std::vector<interval> max(const std::vector<interval>& in, std::size_t off, std::size_t w,
                                     std::size_t n) {
        return split(in, off, w, n, [](const std::vector<double>& v, std::size_t o, std::size_t ww,
                                        std::size_t nn) { return sliding_max(v, o, ww, nn); });
    }
};

// Bottom-up offline monitor: one robustness signal per subformula, each of
// length T - horizon(subformula). Always/Eventually use the O(T) monotone
// wedge; Until is an O(T * window) scan that keeps a running inner minimum.
template <class V>
class signal_engine {
    using ops = value_ops<V>;

public:
    signal_engine(const formula& f, const basic_trace<V>& tr, monitor_options opts)
        : preds_(f, tr.binding()), trace_(tr), opts_(opts) {}

    const std::vector<V>& signal(const formula& f) {
        if (auto it = cache_.find(f.id()); it != cache_.end()) return it->second;
        std::vector<V> out = compute(f);
        return cache_.emplace(f.id(), std::move(out)).first->second;
    }

private:
    std::size_t length_of(const formula& f) const { return trace_.length() - horizon(f); }

    std::vector<V> compute(const formula& f) {
        const std::size_t n = length_of(f);
        std::vector<V> out;
        switch (f.kind()) {
        case formula_kind::pred: {
            out.resize(n);
            const compiled_expr& e = preds_.at(f);
            for (std::size_t t = 0; t < n; ++t) out[t] = ops::pred(e, trace_.at(t));
            return out;
        }
        case formula_kind::negation: {
            const auto& c = signal(f.args()[0]);
            out.resize(n);
            for (std::size_t t = 0; t < n; ++t) out[t] = ops::neg(c[t]);
            return out;
        }
        case formula_kind::conjunction:
        case formula_kind::disjunction: {
            const bool conj = f.kind() == formula_kind::conjunction;
            out.assign(signal(f.args()[0]).begin(), signal(f.args()[0]).begin() + static_cast<std::ptrdiff_t>(n));
            for (std::size_t i = 1; i < f.args().size(); ++i) {
                const auto& c = signal(f.args()[i]);
                for (std::size_t t = 0; t < n; ++t) out[t] = conj ? ops::min(out[t], c[t]) : ops::max(out[t], c[t]);
            }
            return out;
        }
        case formula_kind::always:
            return window_ops<V>::min(signal(f.args()[0]), f.t1(), f.t2() - f.t1() + 1, n);
        case formula_kind::eventually:
            return window_ops<V>::max(signal(f.args()[0]), f.t1(), f.t2() - f.t1() + 1, n);
        case formula_kind::until:
            return opts_.until == until_convention::paper ? until_paper(f, n) : until_classical(f, n);
        }
        return out;
    }

    std::vector<V> until_paper(const formula& f, std::size_t n) {
        const auto& lhs = signal(f.args()[0]);
        const auto& rhs = signal(f.args()[1]);
        std::vector<V> out(n);
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t start = t + f.t1();
            V inner = rhs[start];
            V best = ops::min(lhs[start], inner);
            for (std::size_t tp = start + 1; tp <= t + f.t2(); ++tp) {
                inner = ops::min(inner, rhs[tp]);
                best = ops::max(best, ops::min(lhs[tp], inner));
            }
            out[t] = best;
        }
        return out;
    }

    std::vector<V> until_classical(const formula& f, std::size_t n) {
        const auto& lhs = signal(f.args()[0]);
        const auto& rhs = signal(f.args()[1]);
        std::vector<V> out(n);
        for (std::size_t t = 0; t < n; ++t) {
            V inner = lhs[t];
            for (std::size_t s = t + 1; s <= t + f.t1(); ++s) inner = ops::min(inner, lhs[s]);
            const std::size_t start = t + f.t1();
            V best = ops::min(rhs[start], inner);
            for (std::size_t tp = start + 1; tp <= t + f.t2(); ++tp) {
                inner = ops::min(inner, lhs[tp]);
                best = ops::max(best, ops::min(rhs[tp], inner));
            }
            out[t] = best;
        }
        return out;
    }

    predicate_table preds_;
    const basic_trace<V>& trace_;
    monitor_options opts_;
    std::unordered_map<const void*, std::vector<V>> cache_;
};

} // namespace detail

// Interval robustness at step t by direct recursion.
inline interval rho(const formula& f, const interval_trace& tr, std::size_t t,
                    monitor_options opts = {}) {
    detail::require_length(f, t, tr.length());
    return detail::naive_evaluator<interval>(f, tr, opts).eval(f, t);
}

// Point robustness at step t. Every predicate constant must be exact.
inline double rho_point(const formula& f, const trace& tr, std::size_t t, monitor_options opts = {}) {
    detail::require_length(f, t, tr.length());
    return detail::naive_evaluator<double>(f, tr, opts).eval(f, t);
}

// Three-valued verdict at t = 0.
inline truth verdict(const formula& f, const interval_trace& tr, monitor_options opts = {}) {
    return classify(rho(f, tr, 0, opts));
}

// Boolean verdict at t = 0; robustness exactly 0 counts as satisfied.
inline bool verdict_point(const formula& f, const trace& tr, monitor_options opts = {}) {
    return rho_point(f, tr, 0, opts) >= 0.0;
}

// Interval robustness for every t in [0, T - 1 - horizon(f)].
inline robustness_trace monitor(const formula& f, const interval_trace& tr, monitor_options opts = {}) {
    detail::require_length(f, 0, tr.length());
    detail::signal_engine<interval> engine(f, tr, opts);
    return {engine.signal(f)};
}

// Point robustness for every t in [0, T - 1 - horizon(f)].
inline std::vector<double> monitor_point(const formula& f, const trace& tr, monitor_options opts = {}) {
    detail::require_length(f, 0, tr.length());
    detail::signal_engine<double> engine(f, tr, opts);
    return engine.signal(f);
}

// Reference per-step evaluation over the same range as monitor().
inline robustness_trace monitor_naive(const formula& f, const interval_trace& tr,
                                      monitor_options opts = {}) {
    detail::require_length(f, 0, tr.length());
    detail::naive_evaluator<interval> ev(f, tr, opts);
    robustness_trace out;
    const std::size_t n = tr.length() - horizon(f);
    out.values.reserve(n);
    for (std::size_t t = 0; t < n; ++t) out.values.push_back(ev.eval(f, t));
    return out;
}

} // namespace istl

#endif
