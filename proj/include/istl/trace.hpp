#ifndef ISTL_TRACE_HPP
#define ISTL_TRACE_HPP

#include <charconv>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "istl/errors.hpp"
#include "istl/expr.hpp"
#include "istl/interval.hpp"

namespace istl {

namespace detail {

template <class V>
class basic_trace {
public:
    using value_type = V;

    basic_trace() = default;

    basic_trace(std::vector<std::string> vars, std::vector<std::vector<V>> samples)
        : binding_(vars), vars_(std::move(vars)) {
        if (samples.empty()) {
            throw format_error("trace must contain at least one sample");
        }
        data_.reserve(samples.size() * vars_.size());
        for (std::size_t t = 0; t < samples.size(); ++t) {
            if (samples[t].size() != vars_.size()) {
                throw format_error("sample " + std::to_string(t) + " has " +
                                   std::to_string(samples[t].size()) + " values, expected " +
                                   std::to_string(vars_.size()));
            }
            data_.insert(data_.end(), samples[t].begin(), samples[t].end());
        }
        length_ = samples.size();
    }

    [[nodiscard]] const std::vector<std::string>& vars() const noexcept { return vars_; }
    [[nodiscard]] const var_binding& binding() const noexcept { return binding_; }
    [[nodiscard]] std::size_t length() const noexcept { return length_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return vars_.size(); }

    [[nodiscard]] std::span<const V> at(std::size_t t) const {
        return {data_.data() + t * vars_.size(), vars_.size()};
    }
    [[nodiscard]] const V& at(std::size_t t, std::size_t var) const {
        return data_[t * vars_.size() + var];
    }

    // Samples [first, first + count) as a new trace.
    [[nodiscard]] basic_trace slice(std::size_t first, std::size_t count) const {
        std::vector<std::vector<V>> out;
        for (std::size_t t = first; t < first + count && t < length_; ++t) {
            auto row = at(t);
            out.emplace_back(row.begin(), row.end());
        }
        return basic_trace(vars_, std::move(out));
    }

    friend bool operator==(const basic_trace& a, const basic_trace& b) {
        return a.vars_ == b.vars_ && a.data_ == b.data_;
    }

private:
    var_binding binding_;
    std::vector<std::string> vars_;
    std::vector<V> data_;
    std::size_t length_ = 0;
};

} // namespace detail

// Discrete-time signal of real vectors; index = time step.
using trace = detail::basic_trace<double>;
// Discrete-time signal of interval vectors.
using interval_trace = detail::basic_trace<interval>;

// Degenerate embedding x -> [x, x].
inline interval_trace embed(const trace& tr) {
    std::vector<interval_vector> samples;
    samples.reserve(tr.length());
    for (std::size_t t = 0; t < tr.length(); ++t) {
        interval_vector row;
        for (double v : tr.at(t)) row.emplace_back(v);
        samples.push_back(std::move(row));
    }
    return interval_trace(tr.vars(), std::move(samples));
}

// Measurement uncertainty: sample x of variable v becomes [x - r_v, x + r_v].
// Variables absent from radii keep radius 0.
inline interval_trace widen(const trace& tr, const std::map<std::string, double>& radii) {
    std::vector<double> r(tr.dimension(), 0.0);
    for (const auto& [name, radius] : radii) {
        if (!(radius >= 0.0)) {
            throw negative_radius("radius for '" + name + "' must be nonnegative");
        }
        const auto idx = tr.binding().find(name);
        if (!idx) {
            throw unknown_variable("radius given for unknown variable '" + name + "'");
        }
        r[*idx] = radius;
    }
    std::vector<interval_vector> samples;
    samples.reserve(tr.length());
    for (std::size_t t = 0; t < tr.length(); ++t) {
        interval_vector row;
        for (std::size_t i = 0; i < tr.dimension(); ++i) {
            const double x = tr.at(t, i);
            row.emplace_back(x - r[i], x + r[i]);
        }
        samples.push_back(std::move(row));
    }
    return interval_trace(tr.vars(), std::move(samples));
}

// Widening applied on top of an interval trace (radii add endpoint-wise).
inline interval_trace widen(const interval_trace& tr, const std::map<std::string, double>& radii) {
    std::vector<double> r(tr.dimension(), 0.0);
    for (const auto& [name, radius] : radii) {
        if (!(radius >= 0.0)) {
            throw negative_radius("radius for '" + name + "' must be nonnegative");
        }
        const auto idx = tr.binding().find(name);
        if (!idx) {
            throw unknown_variable("radius given for unknown variable '" + name + "'");
        }
        r[*idx] = radius;
    }
    std::vector<interval_vector> samples;
    for (std::size_t t = 0; t < tr.length(); ++t) {
        interval_vector row;
        for (std::size_t i = 0; i < tr.dimension(); ++i) {
            const interval& x = tr.at(t, i);
            row.emplace_back(x.lo() - r[i], x.hi() + r[i]);
        }
        samples.push_back(std::move(row));
    }
    return interval_trace(tr.vars(), std::move(samples));
}

using any_trace = std::variant<trace, interval_trace>;

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
            cell.remove_suffix(1);
        }
        out.emplace_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline double parse_real(const std::string& s, std::size_t row) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [end, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || end != last || s.empty()) {
        throw format_error("row " + std::to_string(row) + ": cannot parse '" + s + "' as a number");
    }
    return v;
}

inline void append_number(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

} // namespace detail

// Reads a CSV trace. Header "t,a,b" gives a point trace; "t,a:lo,a:hi,..."
// gives an interval trace. The t column must count 0, 1, 2, ... without gaps.
inline any_trace load_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw format_error("empty CSV input");
    }
    const auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "t" || header.size() < 2) {
        throw format_error("CSV header must start with 't' followed by variable columns");
    }
    bool is_interval = false;
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (header[i].find(':') != std::string::npos) is_interval = true;
    }
    std::vector<std::string> vars;
    if (is_interval) {
        if ((header.size() - 1) % 2 != 0) {
            throw format_error("interval CSV header needs name:lo,name:hi column pairs");
        }
        for (std::size_t i = 1; i < header.size(); i += 2) {
            const auto& lo = header[i];
            const auto& hi = header[i + 1];
            const auto colon = lo.rfind(':');
            if (colon == std::string::npos || lo.substr(colon) != ":lo" ||
                hi != lo.substr(0, colon) + ":hi") {
                throw format_error("expected column pair '" + lo + "' and '<name>:hi'");
            }
            vars.push_back(lo.substr(0, colon));
        }
    } else {
        vars.assign(header.begin() + 1, header.end());
    }
    for (const auto& v : vars) {
        if (v.empty()) throw format_error("empty variable name in CSV header");
    }

    std::vector<std::vector<double>> points;
    std::vector<interval_vector> boxes;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw format_error("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                               " cells, header has " + std::to_string(header.size()));
        }
        const double t = detail::parse_real(cells[0], row);
        if (t != static_cast<double>(row)) {
            throw format_error("time column must be 0,1,2,... without gaps; row " +
                               std::to_string(row) + " has t=" + cells[0]);
        }
        if (is_interval) {
            interval_vector box;
            for (std::size_t i = 1; i < cells.size(); i += 2) {
                const double lo = detail::parse_real(cells[i], row);
                const double hi = detail::parse_real(cells[i + 1], row);
                if (!(lo <= hi)) {
                    throw format_error("row " + std::to_string(row) + ": lower endpoint exceeds upper endpoint");
                }
                box.emplace_back(lo, hi);
            }
            boxes.push_back(std::move(box));
        } else {
            std::vector<double> x;
            for (std::size_t i = 1; i < cells.size(); ++i) x.push_back(detail::parse_real(cells[i], row));
            points.push_back(std::move(x));
        }
        ++row;
    }
    if (row == 0) {
        throw format_error("CSV trace has no samples");
    }
    if (is_interval) return interval_trace(std::move(vars), std::move(boxes));
    return trace(std::move(vars), std::move(points));
}

inline any_trace load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    return load_csv(in);
}

inline void save_csv(std::ostream& out, const trace& tr) {
    std::string s = "t";
    for (const auto& v : tr.vars()) s += "," + v;
    s += '\n';
    for (std::size_t t = 0; t < tr.length(); ++t) {
        s += std::to_string(t);
        for (double x : tr.at(t)) {
            s += ',';
            detail::append_number(s, x);
        }
        s += '\n';
    }
    out << s;
}

inline void save_csv(std::ostream& out, const interval_trace& tr) {
    std::string s = "t";
    for (const auto& v : tr.vars()) s += "," + v + ":lo," + v + ":hi";
    s += '\n';
    for (std::size_t t = 0; t < tr.length(); ++t) {
        s += std::to_string(t);
        for (const interval& x : tr.at(t)) {
            s += ',';
            detail::append_number(s, x.lo());
            s += ',';
            detail::append_number(s, x.hi());
        }
        s += '\n';
    }
    out << s;
}

// JSON form: {"vars": [...], "samples": [[...], ...]} where each sample value
// is a number (point trace) or a [lo, hi] pair (interval trace).
inline any_trace load_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("invalid JSON trace: ") + e.what());
    }
    if (!j.is_object() || !j.contains("vars") || !j.contains("samples") || !j["vars"].is_array() ||
        !j["samples"].is_array()) {
        throw format_error("JSON trace needs array fields 'vars' and 'samples'");
    }
    std::vector<std::string> vars;
    for (const auto& v : j["vars"]) {
        if (!v.is_string()) throw format_error("'vars' must hold strings");
        vars.push_back(v.get<std::string>());
    }
    const auto& samples = j["samples"];
    if (samples.empty()) throw format_error("JSON trace has no samples");
    const bool is_interval = samples[0].is_array() && !samples[0].empty() && samples[0][0].is_array();
    std::vector<std::vector<double>> points;
    std::vector<interval_vector> boxes;
    for (std::size_t t = 0; t < samples.size(); ++t) {
        const auto& s = samples[t];
        if (!s.is_array()) throw format_error("sample " + std::to_string(t) + " is not an array");
        if (is_interval) {
            interval_vector box;
            for (const auto& cell : s) {
                if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() || !cell[1].is_number()) {
                    throw format_error("sample " + std::to_string(t) + ": expected [lo, hi] pairs");
                }
                const double lo = cell[0].get<double>();
                const double hi = cell[1].get<double>();
                if (!(lo <= hi)) {
                    throw format_error("sample " + std::to_string(t) + ": lower endpoint exceeds upper endpoint");
                }
                box.emplace_back(lo, hi);
            }
            boxes.push_back(std::move(box));
        } else {
            std::vector<double> x;
            for (const auto& cell : s) {
                if (!cell.is_number()) throw format_error("sample " + std::to_string(t) + ": expected numbers");
                x.push_back(cell.get<double>());
            }
            points.push_back(std::move(x));
        }
    }
    if (is_interval) return interval_trace(std::move(vars), std::move(boxes));
    return trace(std::move(vars), std::move(points));
}

inline any_trace load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    return load_json(in);
}

inline void save_json(std::ostream& out, const trace& tr) {
    nlohmann::json j;
    j["vars"] = tr.vars();
    j["samples"] = nlohmann::json::array();
    for (std::size_t t = 0; t < tr.length(); ++t) {
        auto row = tr.at(t);
        j["samples"].push_back(std::vector<double>(row.begin(), row.end()));
    }
    out << j.dump() << '\n';
}

inline void save_json(std::ostream& out, const interval_trace& tr) {
    nlohmann::json j;
    j["vars"] = tr.vars();
    j["samples"] = nlohmann::json::array();
    for (std::size_t t = 0; t < tr.length(); ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (const interval& x : tr.at(t)) row.push_back({x.lo(), x.hi()});
        j["samples"].push_back(std::move(row));
    }
    out << j.dump() << '\n';
}

// Loads by extension: ".json" is JSON, anything else CSV.
inline any_trace load_trace(const std::string& path) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return load_json(path);
    return load_csv(path);
}

inline interval_trace as_interval_trace(const any_trace& tr) {
    if (const auto* p = std::get_if<trace>(&tr)) return embed(*p);
    return std::get<interval_trace>(tr);
}

} // namespace istl

#endif
