// Writes a synthetic blimp trace as CSV.
//   blimp_trace [--samples 600] [--seed 7] [--out file]

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "blimp_model.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Synthetic blimp trace generator"};
    std::size_t samples = 600;
    std::uint64_t seed = 7;
    std::string out;
    app.add_option("--samples", samples, "Number of samples (dt = 0.2 s)");
    app.add_option("--seed", seed, "Random seed for the gusts");
    app.add_option("--out", out, "Output CSV (default stdout)");
    CLI11_PARSE(app, argc, argv);

    const auto tr = blimp::simulate(samples, seed);
    if (out.empty()) {
        istl::save_csv(std::cout, tr);
        return 0;
    }
    std::ofstream f(out);
    if (!f) {
        std::cerr << "blimp_trace: cannot write " << out << "\n";
        return 5;
    }
    istl::save_csv(f, tr);
    return 0;
}
