// bmreg command line: one subcommand per experiment, see README.md.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "runner.hpp"

namespace {

struct Flags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<std::size_t> samples;
    std::vector<std::string> specs;
    std::optional<double> alpha;
    std::vector<int> N;
    std::optional<int> dim;
    std::vector<int> j, k, M0, n_list;
    std::optional<int> band_factor, grid;
    std::optional<double> eps;
    std::optional<std::string> path;
    std::vector<std::string> expect;
    bool plot = false;

    nlohmann::json overrides() const
    {
        nlohmann::json o = nlohmann::json::object();
        if (seed) o["seed"] = *seed;
        if (workers) o["workers"] = *workers;
        if (out) o["out"] = *out;
        if (format) o["format"] = *format;
        if (samples) o["samples"] = *samples;
        if (!specs.empty()) o["specs"] = specs;
        if (alpha) o["alpha"] = *alpha;
        if (!N.empty()) o["N"] = N;
        if (dim) o["dim"] = *dim;
        if (!j.empty()) o["j"] = j;
        if (!k.empty()) o["k"] = k;
        if (!M0.empty()) o["M0"] = M0;
        if (!n_list.empty()) o["n_list"] = n_list;
        if (band_factor) o["band_factor"] = *band_factor;
        if (grid) o["grid"] = *grid;
        if (eps) o["eps"] = *eps;
        if (path) o["path"] = *path;
        if (!expect.empty()) o["expect"] = expect;
        if (plot) o["plot"] = true;
        return o;
    }
};

void add_flags(CLI::App* app, Flags& f)
{
    app->add_option("--config", f.config, "JSON config file");
    app->add_option("--seed", f.seed, "master seed (env BMREG_SEED)");
    app->add_option("--workers", f.workers, "worker threads (env BMREG_WORKERS)");
    app->add_option("--out", f.out, "output directory (env BMREG_OUT)");
    app->add_option("--format", f.format, "table format: csv or json (env BMREG_FORMAT)");
    app->add_option("--samples", f.samples, "Monte Carlo sample count");
    app->add_option("--spec", f.specs, "norm spec space:s:p:q[:d], repeatable");
    app->add_option("--alpha", f.alpha, "spectral exponent");
    app->add_option("--N", f.N, "truncation, repeatable");
    app->add_option("--dim", f.dim, "lattice dimension");
    app->add_option("--j", f.j, "shell index, repeatable");
    app->add_option("--k", f.k, "block moment order (2 or 3), repeatable");
    app->add_option("--M0", f.M0, "probe cut-off, repeatable");
    app->add_option("--band-factor", f.band_factor, "probe truncation as a multiple of M0");
    app->add_option("--eps", f.eps, "probe threshold or Levy window");
    app->add_option("--grid", f.grid, "time grid size for bridge and levy");
    app->add_option("--n", f.n_list, "bridge frequency, repeatable");
    app->add_option("--path", f.path, "path JSON file for norm");
    app->add_option("--expect", f.expect, "expected scan verdict per spec");
    app->add_flag("--plot", f.plot, "also write gnuplot scripts");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Brownian regularity experiments"};
    app.require_subcommand(1);
    Flags flags;
    const std::vector<std::pair<std::string, std::string>> descriptions{
        {"sample", "emit sampled spectral paths"},
        {"norm", "evaluate norm specs on sampled or given paths"},
        {"scan", "regularity grid with convergence verdicts"},
        {"tail", "tail probabilities and Gaussian exponent fit"},
        {"chaos", "block moment decompositions and hypercontractivity"},
        {"wick", "Hermite and Wick tables"},
        {"probe", "high-frequency measurability probe"},
        {"bridge", "time-domain loop versus direct spectra"},
        {"levy", "Levy modulus ratios"},
    };
    for (const auto& [name, desc] : descriptions) add_flags(app.add_subcommand(name, desc), flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        nlohmann::json j;
        j["error"] = {{"type", "config"}, {"kind", "InvalidArgument"}, {"message", e.what()}};
        std::cerr << j.dump() << std::endl;
        return bmreg::cli::kExitConfig;
    }
    const auto* sub = app.get_subcommands().front();
    return bmreg::cli::run_guarded(sub->get_name(), flags.config, flags.overrides(), std::cerr);
}
