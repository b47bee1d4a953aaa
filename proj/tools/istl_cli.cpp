// istl: monitor, check-soundness, synth and encode front end.
//
// Exit codes: monitor returns 0/1/2 for True/False/Undef; check-soundness and
// synth return 0 on success and 1 on a violated or infeasible run; every
// error (parse, format, I/O, solver) returns 3 or more.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "istl/istl.hpp"

namespace {

constexpr int exit_error = 3;
constexpr int exit_parse = 4;
constexpr int exit_io = 5;
constexpr int exit_solver = 6;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::map<std::string, double> parse_radii(const std::string& text) {
    std::map<std::string, double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw istl::format_error("radius '" + item + "' is not name=value");
        try {
            out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw istl::format_error("radius '" + item + "' has no numeric value");
        }
    }
    return out;
}

istl::interval_trace load_input_trace(const std::string& path, const std::string& radii) {
    istl::any_trace tr = path == "-" ? istl::load_csv(std::cin) : istl::load_trace(path);
    istl::interval_trace out = istl::as_interval_trace(tr);
    if (!radii.empty()) out = istl::widen(out, parse_radii(radii));
    return out;
}

// Writes to path, or stdout for "" / "-".
class sink {
public:
    explicit sink(const std::string& path) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw istl::io_error("cannot write " + path);
        }
    }
    std::ostream& os() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

istl::until_convention convention_of(const std::string& s) {
    return s == "classical" ? istl::until_convention::classical : istl::until_convention::paper;
}

struct global_options {
    std::string until = "paper";
};

struct monitor_args {
    std::string spec, trace, radii, out;
    long at = -1;
};

int run_monitor(const global_options& g, const monitor_args& a) {
    const auto spec = istl::load_specification(a.spec);
    const auto tr = load_input_trace(a.trace, a.radii);
    const istl::monitor_options opts{convention_of(g.until)};
    sink out(a.out);
    auto& os = out.os();
    os << "# istl monitor spec=" << a.spec << " trace=" << a.trace << " until=" << g.until;
    if (!a.radii.empty()) os << " radii=" << a.radii;
    os << "\n# formula " << istl::to_string(spec.phi) << "\n# horizon " << istl::horizon(spec.phi)
       << " samples " << tr.length() << "\n";
    os << "t,rho_lo,rho_hi,verdict\n";
    istl::truth verdict;
    if (a.at >= 0) {
        const auto r = istl::rho(spec.phi, tr, static_cast<std::size_t>(a.at), opts);
        verdict = istl::classify(r);
        os << a.at << "," << num(r.lo()) << "," << num(r.hi()) << "," << istl::to_string(verdict) << "\n";
    } else {
        const auto rt = istl::monitor(spec.phi, tr, opts);
        for (std::size_t t = 0; t < rt.size(); ++t) {
            os << t << "," << num(rt[t].lo()) << "," << num(rt[t].hi()) << ","
               << istl::to_string(istl::classify(rt[t])) << "\n";
        }
        verdict = istl::classify(rt[0]);
    }
    if (!a.out.empty() && a.out != "-") std::cout << istl::to_string(verdict) << "\n";
    return static_cast<int>(verdict);
}

struct soundness_args {
    std::string spec, trace, radii, out;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
};

// Samples point signals inside the interval trace together with predicate
// realizations and compares their robustness with the interval robustness.
int run_check_soundness(const global_options& g, const soundness_args& a) {
    const auto spec = istl::load_specification(a.spec);
    const auto tr = load_input_trace(a.trace, a.radii);
    const istl::monitor_options opts{convention_of(g.until)};
    const auto rho = istl::monitor(spec.phi, tr, opts);
    std::mt19937_64 rng(a.seed);

    std::vector<double> lo(rho.size(), istl::inf), hi(rho.size(), -istl::inf);
    std::vector<std::size_t> bad(rho.size(), 0);
    std::size_t membership = 0, implication = 0;
    for (std::size_t k = 0; k < a.samples; ++k) {
        std::vector<std::vector<double>> rows;
        for (std::size_t t = 0; t < tr.length(); ++t) {
            std::vector<double> row;
            for (const auto& iv : tr.at(t)) {
                row.push_back(iv.degenerate() ? iv.lo() : std::uniform_real_distribution<double>(iv.lo(), iv.hi())(rng));
            }
            rows.push_back(std::move(row));
        }
        const istl::trace x(tr.vars(), std::move(rows));
        const auto phi = istl::sample_realization(spec.phi, rng);
        const auto r = istl::monitor_point(phi, x, opts);
        for (std::size_t t = 0; t < r.size(); ++t) {
            lo[t] = std::min(lo[t], r[t]);
            hi[t] = std::max(hi[t], r[t]);
            if (!rho[t].contains(r[t])) {
                ++membership;
                ++bad[t];
            }
            const auto v = istl::classify(rho[t]);
            if ((v == istl::truth::true_ && r[t] < 0.0) || (v == istl::truth::false_ && r[t] >= 0.0)) {
                ++implication;
                ++bad[t];
            }
        }
    }

    sink out(a.out);
    auto& os = out.os();
    os << "# istl check-soundness spec=" << a.spec << " trace=" << a.trace << " until=" << g.until
       << " samples=" << a.samples << " seed=" << a.seed;
    if (!a.radii.empty()) os << " radii=" << a.radii;
    os << "\n# membership_violations " << membership << "\n# implication_violations " << implication << "\n";
    os << "t,rho_lo,rho_hi,sample_min,sample_max,verdict,violations\n";
    for (std::size_t t = 0; t < rho.size(); ++t) {
        os << t << "," << num(rho[t].lo()) << "," << num(rho[t].hi()) << "," << num(lo[t]) << "," << num(hi[t])
           << "," << istl::to_string(istl::classify(rho[t])) << "," << bad[t] << "\n";
    }
    if (!a.out.empty() && a.out != "-") {
        std::cout << "violations " << membership + implication << " over " << a.samples << " samples\n";
    }
    return membership + implication == 0 ? 0 : 1;
}

struct synth_args {
    std::string system, spec, out, emit_lp, corners = "hypograph";
    std::size_t steps = 119, N = 16, b = 1, monte_carlo = 0;
    std::uint64_t seed = 0;
    double big_m = 0.0;
    double time_limit = 60.0;
    bool no_timing = false;
};

istl::synthesis_config synth_config(const global_options& g, const synth_args& a) {
    istl::synthesis_config c;
    c.N = a.N;
    c.b = a.b;
    if (a.big_m != 0.0) c.big_m = a.big_m;
    c.corners = a.corners == "selection" ? istl::corner_encoding::selection : istl::corner_encoding::hypograph;
    c.until = convention_of(g.until);
    return c;
}

int run_synth(const global_options& g, const synth_args& a) {
    const auto sf = istl::load_system(a.system);
    const auto spec = istl::load_specification(a.spec);
    istl::receding_config cfg;
    cfg.synth = synth_config(g, a);
    cfg.steps = a.steps;
    cfg.seed = a.seed;
    cfg.solver.time_limit = std::chrono::duration<double>(a.time_limit);
    if (!a.emit_lp.empty()) std::filesystem::create_directories(a.emit_lp);

    sink out(a.out);
    auto& os = out.os();
    os << "# istl synth system=" << a.system << " spec=" << a.spec << " steps=" << a.steps << " N=" << a.N
       << " b=" << a.b << " seed=" << a.seed << " until=" << g.until << " corners=" << a.corners
       << " big_m=" << (a.big_m != 0.0 ? num(a.big_m) : std::string("auto")) << "\n";
    os << "t,u,rho_lo,rho_hi,window_rho_lo,solve_seconds,nodes,binaries\n";
    const auto on_model = [&](std::size_t t, const istl::encoding& enc) {
        if (a.emit_lp.empty()) return;
        std::ofstream f(std::filesystem::path(a.emit_lp) / ("step_" + std::to_string(t) + ".lp"));
        f << istl::emit_lp(enc.model);
    };
    bool all_nonnegative = true;
    const auto on_step = [&](const istl::step_record& r) {
        os << r.t << ",";
        for (std::size_t q = 0; q < r.u.size(); ++q) os << (q ? ";" : "") << num(r.u[q]);
        os << "," << num(r.rho.lo()) << "," << num(r.rho.hi()) << "," << num(r.window_rho_lo) << ","
           << (a.no_timing ? std::string("0") : num(r.seconds)) << "," << r.nodes << "," << r.binaries << "\n";
        os.flush();
        all_nonnegative = all_nonnegative && r.rho.lo() >= 0.0 && r.window_rho_lo >= 0.0;
    };
    istl::receding_result run;
    try {
        run = istl::receding_horizon(sf.sys, spec.phi, sf.x0, cfg, on_model, on_step);
    } catch (const istl::step_infeasible& e) {
        os << "# infeasible step " << e.step() << " window " << e.window_lo() << ".." << e.window_hi() << "\n";
        std::cerr << "istl: " << e.what() << "\n";
        return 1;
    }
    if (a.monte_carlo > 0) {
        const auto mc = istl::monte_carlo_check(sf.sys, spec.phi, run, a.monte_carlo, a.seed + 1, cfg.synth.until);
        os << "# monte_carlo realizations=" << mc.realizations << " checks=" << mc.checks
           << " violations=" << mc.violations << " min_robustness=" << num(mc.min_robustness) << "\n";
        all_nonnegative = all_nonnegative && mc.violations == 0;
    }
    return all_nonnegative ? 0 : 1;
}

int run_encode(const global_options& g, const synth_args& a) {
    const auto sf = istl::load_system(a.system);
    const auto spec = istl::load_specification(a.spec);
    const istl::synthesis_problem p{&sf.sys,
                                    spec.phi,
                                    synth_config(g, a),
                                    0,
                                    istl::detail::degenerate_outputs(sf.sys, {sf.x0}, 1),
                                    istl::embedding_state::degenerate(sf.x0),
                                    istl::encode_mode::synthesize,
                                    {}};
    const auto enc = istl::encode(p);
    sink out(a.out);
    out.os() << istl::emit_lp(enc.model);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interval signal temporal logic: monitoring and robust synthesis"};
    app.require_subcommand(1);
    global_options g;
    app.add_option("--until-convention", g.until, "Until semantics: paper or classical")
        ->check(CLI::IsMember({"paper", "classical"}));

    monitor_args mon;
    auto* cmon = app.add_subcommand("monitor", "Interval robustness of a trace, one row per step");
    cmon->add_option("spec", mon.spec, "Specification file")->required();
    cmon->add_option("trace", mon.trace, "Trace file (CSV or JSON, '-' for CSV on stdin)")->required();
    cmon->add_option("--radii", mon.radii, "Measurement radii, e.g. x=0.02,vx=0.075");
    cmon->add_option("--at", mon.at, "Evaluate a single step");
    cmon->add_option("--out", mon.out, "Write the CSV here instead of stdout");

    soundness_args snd;
    auto* csnd = app.add_subcommand("check-soundness", "Sample realizations inside an interval trace");
    csnd->add_option("spec", snd.spec, "Specification file")->required();
    csnd->add_option("trace", snd.trace, "Interval or point trace")->required();
    csnd->add_option("--samples", snd.samples, "Sampled signals");
    csnd->add_option("--seed", snd.seed, "Random seed");
    csnd->add_option("--radii", snd.radii, "Measurement radii");
    csnd->add_option("--out", snd.out, "Write the report here instead of stdout");

    synth_args syn;
    auto add_synth_options = [&](CLI::App* c) {
        c->add_option("system", syn.system, "System file (JSON)")->required();
        c->add_option("spec", syn.spec, "Specification file")->required();
        c->add_option("--N", syn.N, "Prediction horizon");
        c->add_option("--b", syn.b, "Window misalignment");
        c->add_option("--big-m", syn.big_m, "Big-M constant (default: derived from reachability)");
        c->add_option("--corners", syn.corners, "Corner-product min encoding")
            ->check(CLI::IsMember({"hypograph", "selection"}));
        c->add_option("--out", syn.out, "Output file");
    };
    auto* csyn = app.add_subcommand("synth", "Receding-horizon robust synthesis");
    add_synth_options(csyn);
    csyn->add_option("--steps", syn.steps, "Closed-loop steps");
    csyn->add_option("--seed", syn.seed, "Disturbance seed");
    csyn->add_option("--emit-lp", syn.emit_lp, "Directory for per-step LP files");
    csyn->add_option("--time-limit", syn.time_limit, "Solver time limit per step, seconds");
    csyn->add_option("--monte-carlo", syn.monte_carlo, "Post-hoc realizations to check");
    csyn->add_flag("--no-timing", syn.no_timing, "Write 0 for solve times (byte-stable logs)");
    auto* cenc = app.add_subcommand("encode", "Emit the first-step model as LP text");
    add_synth_options(cenc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : exit_error;
    }

    try {
        if (*cmon) return run_monitor(g, mon);
        if (*csnd) return run_check_soundness(g, snd);
        if (*csyn) return run_synth(g, syn);
        if (*cenc) return run_encode(g, syn);
    } catch (const istl::parse_error& e) {
        std::cerr << "istl: parse error at " << e.line() << ":" << e.column() << ": " << e.what() << "\n";
        return exit_parse;
    } catch (const istl::io_error& e) {
        std::cerr << "istl: " << e.what() << "\n";
        return exit_io;
    } catch (const istl::solver_timeout& e) {
        std::cerr << "istl: " << e.what() << "\n";
        return exit_solver;
    } catch (const istl::numerical_failure& e) {
        std::cerr << "istl: " << e.what() << "\n";
        return exit_solver;
    } catch (const std::exception& e) {
        std::cerr << "istl: " << e.what() << "\n";
        return exit_error;
    }
    return exit_error;
}
