#include "runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>
#include <variant>

#include "bmreg/bridge.hpp"
#include "bmreg/chaos.hpp"
#include "bmreg/deviations.hpp"
#include "bmreg/io.hpp"
#include "bmreg/norms.hpp"
#include "bmreg/parallel.hpp"
#include "bmreg/rng.hpp"
#include "bmreg/spectral.hpp"
#include "bmreg/stats.hpp"

namespace bmreg::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> names{"sample", "norm", "scan", "tail", "chaos", "wick", "probe", "bridge", "levy"};
    return names;
}

// ---------------------------------------------------------------- config

namespace {

const std::vector<std::string> kVerdicts{"converge", "endpoint-growth", "diverge"};

template <class T>
T get_field(const nlohmann::json& j, const char* key)
{
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("field '") + key + "' has the wrong type");
    }
}

} // namespace

ojson ExperimentConfig::to_json() const
{
    ojson j;
    j["subcommand"] = subcommand;
    j["seed"] = seed;
    j["samples"] = samples;
    j["specs"] = specs;
    j["alpha"] = alpha;
    j["N"] = N;
    j["dim"] = dim;
    j["out"] = out;
    j["workers"] = workers;
    j["format"] = format;
    j["j"] = this->j;
    j["k"] = k;
    j["M0"] = M0;
    j["band_factor"] = band_factor;
    if (eps) j["eps"] = *eps;
    j["grid"] = grid;
    j["n_list"] = n_list;
    if (path) j["path"] = *path;
    j["expect"] = expect;
    j["plot"] = plot;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::vector<std::string> known{"subcommand", "seed", "samples", "specs", "alpha", "N", "dim",
                                                "out", "workers", "format", "j", "k", "M0", "band_factor",
                                                "eps", "grid", "n_list", "path", "expect", "plot"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config field '" + key + "'");

    ExperimentConfig c;
    if (j.contains("subcommand")) c.subcommand = get_field<std::string>(j, "subcommand");
    if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed");
    if (j.contains("samples")) c.samples = get_field<std::size_t>(j, "samples");
    if (j.contains("specs")) c.specs = get_field<std::vector<std::string>>(j, "specs");
    if (j.contains("alpha")) c.alpha = get_field<double>(j, "alpha");
    if (j.contains("N")) c.N = get_field<std::vector<int>>(j, "N");
    if (j.contains("dim")) c.dim = get_field<int>(j, "dim");
    if (j.contains("out")) c.out = get_field<std::string>(j, "out");
    if (j.contains("workers")) c.workers = get_field<unsigned>(j, "workers");
    if (j.contains("format")) c.format = get_field<std::string>(j, "format");
    if (j.contains("j")) c.j = get_field<std::vector<int>>(j, "j");
    if (j.contains("k")) c.k = get_field<std::vector<int>>(j, "k");
    if (j.contains("M0")) c.M0 = get_field<std::vector<int>>(j, "M0");
    if (j.contains("band_factor")) c.band_factor = get_field<int>(j, "band_factor");
    if (j.contains("eps") && !j["eps"].is_null()) c.eps = get_field<double>(j, "eps");
    if (j.contains("grid")) c.grid = get_field<int>(j, "grid");
    if (j.contains("n_list")) c.n_list = get_field<std::vector<int>>(j, "n_list");
    if (j.contains("path") && !j["path"].is_null()) c.path = get_field<std::string>(j, "path");
    if (j.contains("expect")) c.expect = get_field<std::vector<std::string>>(j, "expect");
    if (j.contains("plot")) c.plot = get_field<bool>(j, "plot");
    return c;
}

void ExperimentConfig::validate() const
{
    const auto& subs = subcommands();
    if (std::find(subs.begin(), subs.end(), subcommand) == subs.end())
        throw ConfigError("unknown subcommand '" + subcommand + "'");
    for (const auto& s : specs) {
        try {
            NormSpec::parse(s);
        } catch (const Error& e) {
            throw ConfigError(std::string("bad norm spec: ") + e.what());
        }
    }
    if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
    if (dim < 1 || dim > 3) throw ConfigError("dim must lie in [1, 3]");
    for (int n : N)
        if (n < 1) throw ConfigError("every N must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
    for (int v : j)
        if (v < 0 || v > 24) throw ConfigError("shell indices must lie in [0, 24]");
    for (int v : M0)
        if (v < 2) throw ConfigError("M0 values must be >= 2");
    if (band_factor < 2) throw ConfigError("band_factor must be >= 2");
    if (eps && !(*eps > 0.0)) throw ConfigError("eps must be positive");
    if (grid < 0) throw ConfigError("grid must be >= 0");
    for (int n : n_list)
        if (n == 0) throw ConfigError("n_list must not contain 0");
    for (const auto& v : expect)
        if (std::find(kVerdicts.begin(), kVerdicts.end(), v) == kVerdicts.end())
            throw ConfigError("unknown verdict '" + v + "'");
    if (!expect.empty() && subcommand != "scan") throw ConfigError("expect is only meaningful for scan");
    if (out.empty()) throw ConfigError("out must not be empty");
}

std::string ExperimentConfig::hash() const
{
    auto j = to_json();
    j.erase("out");
    j.erase("workers");
    return sha256_hex(j.dump());
}

ojson RunManifest::to_json() const
{
    ojson j;
    j["format_version"] = format_version;
    j["artifact_version"] = artifact_version;
    j["subcommand"] = subcommand;
    j["config_hash"] = config_hash;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["outputs"] = ojson::array();
    for (const auto& o : outputs) j["outputs"].push_back({{"file", o.file}, {"sha256", o.sha256}, {"bytes", o.bytes}});
    return j;
}

std::map<std::string, std::string> process_environment()
{
    std::map<std::string, std::string> env;
    for (const char* name : {"BMREG_SEED", "BMREG_WORKERS", "BMREG_OUT", "BMREG_FORMAT"})
        if (const char* v = std::getenv(name)) env[name] = v;
    return env;
}

namespace {

template <class T>
T parse_env_integer(const std::string& name, const std::string& text)
{
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) throw ConfigError(name + " is not a valid integer");
    return v;
}

} // namespace

ExperimentConfig resolve_config(const std::string& subcommand, const std::optional<std::string>& config_path,
                                const nlohmann::json& flag_overrides, const std::map<std::string, std::string>& env)
{
    nlohmann::json merged = nlohmann::json::object();
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw ConfigError("cannot open config file '" + *config_path + "'");
        nlohmann::json file;
        try {
            in >> file;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!file.is_object()) throw ConfigError("config must be a JSON object");
        if (file.contains("subcommand") && file["subcommand"] != subcommand)
            throw ConfigError("config file is for subcommand '" + file["subcommand"].dump() + "'");
        merged.update(file);
    }
    if (auto it = env.find("BMREG_SEED"); it != env.end()) merged["seed"] = parse_env_integer<std::uint64_t>(it->first, it->second);
    if (auto it = env.find("BMREG_WORKERS"); it != env.end()) merged["workers"] = parse_env_integer<unsigned>(it->first, it->second);
    if (auto it = env.find("BMREG_OUT"); it != env.end()) merged["out"] = it->second;
    if (auto it = env.find("BMREG_FORMAT"); it != env.end()) merged["format"] = it->second;
    if (!flag_overrides.is_null()) merged.update(flag_overrides);
    merged["subcommand"] = subcommand;

    auto config = ExperimentConfig::from_json(merged);
    config.validate();
    return config;
}

// ---------------------------------------------------------------- digests

std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string sha256_file(const fs::path& file)
{
    std::ifstream in(file, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

// ---------------------------------------------------------------- tables

namespace {

using Cell = std::variant<long long, double, std::string>;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_cell(const Cell& c)
{
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
    const auto& s = std::get<std::string>(c);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}

ojson json_cell(const Cell& c)
{
    if (const auto* i = std::get_if<long long>(&c)) return *i;
    if (const auto* d = std::get_if<double>(&c)) return std::isfinite(*d) ? ojson(*d) : ojson(format_double(*d));
    return std::get<std::string>(c);
}

ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

class OutputSink {
public:
    OutputSink(fs::path dir, std::string format) : dir_(std::move(dir)), format_(std::move(format))
    {
        fs::create_directories(dir_);
    }

    void table(const Table& t)
    {
        std::string body;
        if (format_ == "csv") {
            for (std::size_t i = 0; i < t.columns.size(); ++i) body += (i ? "," : "") + t.columns[i];
            body += '\n';
            for (const auto& row : t.rows) {
                for (std::size_t i = 0; i < row.size(); ++i) body += (i ? "," : "") + csv_cell(row[i]);
                body += '\n';
            }
            write(t.name + ".csv", body);
        } else {
            ojson j;
            j["columns"] = t.columns;
            j["rows"] = ojson::array();
            for (const auto& row : t.rows) {
                ojson r = ojson::array();
                for (const auto& c : row) r.push_back(json_cell(c));
                j["rows"].push_back(std::move(r));
            }
            write(t.name + ".json", j.dump(2) + "\n");
        }
    }

    void text(const std::string& file, const std::string& body) { write(file, body); }

    std::vector<OutputFile> files() const { return files_; }
    const std::string& format() const noexcept { return format_; }

private:
    void write(const std::string& file, const std::string& body)
    {
        std::ofstream out(dir_ / file, std::ios::binary);
        out << body;
        out.close();
        if (!out) throw std::runtime_error("cannot write " + (dir_ / file).string());
        files_.push_back({file, sha256_hex(body), static_cast<std::uintmax_t>(body.size())});
    }

    fs::path dir_;
    std::string format_;
    std::vector<OutputFile> files_;
};

std::string utc_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

double quantile_of(std::vector<double> v, double q)
{
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
}

double mean_of(const std::vector<double>& v)
{
    return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<NormSpec> parse_specs(const ExperimentConfig& c, std::vector<std::string> fallback)
{
    std::vector<NormSpec> out;
    for (const auto& s : c.specs.empty() ? fallback : c.specs) out.push_back(NormSpec::parse(s));
    return out;
}

std::vector<int> or_default(const std::vector<int>& v, std::vector<int> fallback) { return v.empty() ? fallback : v; }

std::size_t samples_or(const ExperimentConfig& c, std::size_t fallback) { return c.samples ? c.samples : fallback; }

// ---------------------------------------------------------------- subcommands

struct Context {
    const ExperimentConfig& config;
    OutputSink& sink;
    ojson& summary;
    int exit_code = kExitOk;
};

void run_sample(Context& ctx)
{
    const auto& c = ctx.config;
    const int N = or_default(c.N, {16}).front();
    const std::size_t samples = samples_or(c, 1);
    const auto paths = parallel_map(samples, c.workers, [&](std::size_t i) {
        return build_path(sample_family(rng::derive_seed(c.seed, i), c.dim, N), c.alpha);
    });

    Table t{"sample", {"sample", "seed"}, {}};
    if (c.dim == 1) t.columns.push_back("n");
    else
        for (int d = 1; d <= c.dim; ++d) t.columns.push_back("n" + std::to_string(d));
    t.columns.insert(t.columns.end(), {"re", "im"});
    for (std::size_t s = 0; s < samples; ++s) {
        const auto& p = paths[s];
        for (std::size_t i = 0; i < p.size(); ++i) {
            std::vector<Cell> row{static_cast<long long>(s), std::to_string(*p.seed)};
            for (int v : p.lattice.point(i)) row.emplace_back(static_cast<long long>(v));
            row.emplace_back(p.coeffs[i].real());
            row.emplace_back(p.coeffs[i].imag());
            t.add(std::move(row));
        }
    }
    ctx.sink.table(t);
    ctx.summary["N"] = N;
    ctx.summary["samples"] = samples;
    ctx.summary["lattice_size"] = paths.front().size();
    if (samples <= 16) {
        ctx.summary["paths"] = ojson::array();
        for (const auto& p : paths) ctx.summary["paths"].push_back(ojson::parse(path_to_json(p).dump()));
    }
}

void run_norm(Context& ctx)
{
    const auto& c = ctx.config;
    const auto specs = parse_specs(c, {"fl:0:-:2"});
    Table t{"norm", {"sample", "N", "spec", "value"}, {}};
    ctx.summary["results"] = ojson::array();

    if (c.path) {
        std::ifstream in(*c.path);
        if (!in) throw ConfigError("cannot open path file '" + *c.path + "'");
        nlohmann::json pj;
        try {
            in >> pj;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("path file is not valid JSON: ") + e.what());
        }
        const auto path = path_from_json(pj);
        for (const auto& spec : specs) {
            const double v = evaluate(spec, path);
            t.add({0LL, static_cast<long long>(path.truncation()), spec.to_string(), v});
            ctx.summary["results"].push_back({{"spec", spec.to_string()}, {"N", path.truncation()}, {"value", v}});
        }
        ctx.sink.table(t);
        return;
    }

    const auto Ns = or_default(c.N, {256});
    const std::size_t samples = samples_or(c, 100);
    // values[sample][N index][spec index]
    const auto values = parallel_map(samples, c.workers, [&](std::size_t i) {
        std::vector<std::vector<double>> out;
        for (int N : Ns) {
            const auto path = build_path(sample_family(rng::derive_seed(c.seed, i), c.dim, N), c.alpha);
            std::vector<double> row;
            for (const auto& spec : specs) row.push_back(evaluate(spec, path));
            out.push_back(std::move(row));
        }
        return out;
    });
    for (std::size_t s = 0; s < samples; ++s)
        for (std::size_t a = 0; a < Ns.size(); ++a)
            for (std::size_t b = 0; b < specs.size(); ++b)
                t.add({static_cast<long long>(s), static_cast<long long>(Ns[a]), specs[b].to_string(), values[s][a][b]});
    ctx.sink.table(t);
    for (std::size_t a = 0; a < Ns.size(); ++a)
        for (std::size_t b = 0; b < specs.size(); ++b) {
            std::vector<double> col;
            for (const auto& v : values) col.push_back(v[a][b]);
            ctx.summary["results"].push_back(
                {{"spec", specs[b].to_string()}, {"N", Ns[a]}, {"median", quantile_of(col, 0.5)}, {"mean", mean_of(col)}});
        }
}

// Per-shell contribution a_j^r: the part of the norm carried by shell j, raised
// to the exponent it is summed with. Its log2 slope in j decides convergence.
std::vector<double> shell_contributions(const NormSpec& spec, const SpectralPath& path)
{
    const auto part = DyadicPartition::covering(PartitionMode::Sharp, path.truncation());
    std::vector<double> out(static_cast<std::size_t>(part.jmax() + 1), 0.0);
    if (spec.space == Space::Besov) {
        const auto smooth = DyadicPartition::covering(PartitionMode::Smooth, path.truncation());
        const double r = std::isinf(spec.p) ? 2.0 : spec.p;
        const std::size_t M = fft::next_pow2(8 * (std::size_t{1} << smooth.jmax()));
        out.assign(static_cast<std::size_t>(smooth.jmax() + 1), 0.0);
        for (int j = 0; j <= smooth.jmax(); ++j) {
            std::vector<int> f;
            std::vector<cplx> v;
            for (std::size_t i = 0; i < path.size(); ++i) {
                const double w = smooth.window(j, path.lattice.norm2(i));
                if (w == 0.0) continue;
                f.push_back(path.lattice.coord(i));
                v.push_back(w * path.coeffs[i]);
            }
            if (f.empty()) continue;
            out[static_cast<std::size_t>(j)] = std::pow(std::exp2(spec.s * j) * normalized_lp(fft::synthesize_modes(f, v, M), spec.p), r);
        }
        return out;
    }
    const double r = spec.fourier_lebesgue_like() ? (std::isinf(spec.q) ? 2.0 : spec.q) : (std::isinf(spec.p) ? 2.0 : spec.p);
    for (std::size_t i = 0; i < path.size(); ++i) {
        const long long n2 = path.lattice.norm2(i);
        out[static_cast<std::size_t>(shell_of_norm2(n2))] += std::pow(japanese_bracket_pow(n2, spec.s) * std::abs(path.coeffs[i]), r);
    }
    return out;
}

std::string verdict_of(double slope)
{
    if (slope < -0.1) return "converge";
    if (slope > 0.1) return "diverge";
    return "endpoint-growth";
}

void run_scan(Context& ctx)
{
    const auto& c = ctx.config;
    const auto specs = parse_specs(c, {"fl:0.3:-:2", "fl:0.5:-:2", "fl:0.7:-:2"});
    auto Ns = or_default(c.N, {1 << 8, 1 << 9, 1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14, 1 << 15, 1 << 16});
    std::sort(Ns.begin(), Ns.end());
    Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());
    const std::size_t samples = samples_or(c, 200);
    if (!c.expect.empty() && c.expect.size() != specs.size())
        throw ConfigError("expect needs one verdict per spec");

    struct PerSample {
        std::vector<std::vector<double>> norms;  // [spec][N]
        std::vector<std::vector<double>> shells; // [spec][j]
    };
    const auto results = parallel_map(samples, c.workers, [&](std::size_t i) {
        PerSample out;
        const auto seed = rng::derive_seed(c.seed, i);
        const auto full = build_path(sample_family(seed, c.dim, Ns.back()), c.alpha);
        for (const auto& spec : specs) {
            std::vector<double> row;
            for (int N : Ns) row.push_back(N == Ns.back() ? evaluate(spec, full)
                                                          : evaluate(spec, build_path(sample_family(seed, c.dim, N), c.alpha)));
            out.norms.push_back(std::move(row));
            out.shells.push_back(shell_contributions(spec, full));
        }
        return out;
    });

    Table scan{"scan", {"spec", "N", "samples", "median", "mean", "q25", "q75"}, {}};
    Table verdicts{"verdict", {"spec", "shell_slope", "median_ratio", "verdict", "expected", "match"}, {}};
    ctx.summary["verdicts"] = ojson::array();
    bool all_match = true;
    for (std::size_t b = 0; b < specs.size(); ++b) {
        std::vector<double> medians;
        for (std::size_t a = 0; a < Ns.size(); ++a) {
            std::vector<double> col;
            for (const auto& r : results) col.push_back(r.norms[b][a]);
            medians.push_back(quantile_of(col, 0.5));
            scan.add({specs[b].to_string(), static_cast<long long>(Ns[a]), static_cast<long long>(samples), medians.back(),
                      mean_of(col), quantile_of(col, 0.25), quantile_of(col, 0.75)});
        }
        const std::size_t shells = results.front().shells[b].size();
        const std::size_t first = shells / 2;
        double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
        for (std::size_t jj = first; jj < shells; ++jj) {
            double mean = 0.0;
            for (const auto& r : results) mean += r.shells[b][jj];
            mean /= static_cast<double>(samples);
            if (!(mean > 0.0)) continue;
            const double x = static_cast<double>(jj), y = std::log2(mean);
            sx += x, sy += y, sxx += x * x, sxy += x * y, m += 1;
        }
        const double slope = m >= 2 ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : std::nan("");
        const std::string verdict = std::isnan(slope) ? "undetermined" : verdict_of(slope);
        const std::string expected = c.expect.empty() ? "" : c.expect[b];
        const bool match = expected.empty() || expected == verdict;
        all_match = all_match && match;
        const double ratio = medians.back() / medians.front();
        verdicts.add({specs[b].to_string(), slope, ratio, verdict, expected, static_cast<long long>(match)});
        ctx.summary["verdicts"].push_back({{"spec", specs[b].to_string()},
                                           {"shell_slope", slope},
                                           {"median_ratio", ratio},
                                           {"verdict", verdict},
                                           {"expected", expected.empty() ? ojson(nullptr) : ojson(expected)}});
    }
    ctx.sink.table(scan);
    ctx.sink.table(verdicts);
    ctx.summary["samples"] = samples;
    ctx.summary["N"] = Ns;
    ctx.summary["all_match"] = all_match;
    if (c.plot && ctx.sink.format() == "csv") {
        std::string gp = "set datafile separator ','\nset logscale x 2\nset xlabel 'N'\nset ylabel 'median norm'\nset key left\n"
                         "plot ";
        for (std::size_t b = 0; b < specs.size(); ++b)
            gp += std::string(b ? ", " : "") + "'scan.csv' using 2:(strcol(1) eq '" + specs[b].to_string() +
                  "' ? $4 : 1/0) with linespoints title '" + specs[b].to_string() + "'";
        ctx.sink.text("scan.gp", gp + "\n");
    }
    if (!all_match) ctx.exit_code = kExitCheck;
}

void run_tail(Context& ctx)
{
    const auto& c = ctx.config;
    const auto specs = parse_specs(c, {"fl:0.3:-:2"});
    const int N = or_default(c.N, {1024}).front();
    const std::size_t samples = samples_or(c, kMinTailSamples);
    Table t{"tail", {"spec", "N", "K", "count", "prob", "ci_lo", "ci_hi", "retained"}, {}};
    ctx.summary["estimates"] = ojson::array();
    for (const auto& spec : specs) {
        const auto est = tail_estimate(spec, c.alpha, N, samples, c.seed, c.workers);
        for (const auto& b : est.bins)
            t.add({est.spec, static_cast<long long>(N), b.K, static_cast<long long>(b.count), b.prob, b.ci.lo, b.ci.hi,
                   static_cast<long long>(b.retained)});
        ojson s = summary_json(est);
        s["fitted_b"] = opt_json(est.fitted_b);
        s["N"] = N;
        ctx.summary["estimates"].push_back(s);
    }
    ctx.sink.table(t);
    if (c.plot && ctx.sink.format() == "csv") {
        std::string gp = "set datafile separator ','\nset logscale y\nset xlabel 'K^2'\nset ylabel 'P(norm > K)'\nplot ";
        for (std::size_t b = 0; b < specs.size(); ++b)
            gp += std::string(b ? ", " : "") + "'tail.csv' using ($3*$3):(strcol(1) eq '" + specs[b].to_string() +
                  "' ? $5 : 1/0) with points title '" + specs[b].to_string() + "'";
        ctx.sink.text("tail.gp", gp + "\n");
    }
}

void run_chaos(Context& ctx)
{
    const auto& c = ctx.config;
    const auto js = or_default(c.j, {1, 2, 3, 4, 5, 6});
    const auto ks = or_default(c.k, {2});
    for (int k : ks)
        if (k != 2 && k != 3) throw ConfigError("k must be 2 or 3");
    const std::size_t samples = samples_or(c, 10);
    const int jmax = *std::max_element(js.begin(), js.end());

    const auto decomps = parallel_map(samples, c.workers, [&](std::size_t i) {
        const auto fam = sample_family(rng::derive_seed(c.seed, i), 1, 1 << jmax);
        std::vector<ChaosDecomposition> out;
        for (int j : js)
            for (int k : ks) out.push_back(k == 2 ? l4_block_decomposition(fam, j) : l2k_block_decomposition(fam, j, k));
        return out;
    });
    Table t{"chaos", {"sample", "j", "k", "lhs", "I", "II", "error_i", "error_ii", "III", "rel_residual"}, {}};
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s)
        for (const auto& d : decomps[s]) {
            const double rel = std::abs(d.lhs - d.sum()) / d.lhs;
            worst = std::max(worst, rel);
            t.add({static_cast<long long>(s), static_cast<long long>(d.j), static_cast<long long>(d.k), d.lhs, d.I, d.II,
                   d.error_i, d.error_ii, d.III ? *d.III : std::nan(""), rel});
        }
    ctx.sink.table(t);
    ctx.summary["max_rel_residual"] = worst;

    // Hypercontractivity of the second and fourth chaos components of
    // F_j = 2^{-j} sum |g|^4, over at least 10^4 independent families.
    const std::size_t hc_samples = std::max(samples, kMinHypercontractivitySamples);
    Table h{"hypercontractivity", {"j", "order", "q", "ratio", "bound", "rel_se", "pass"}, {}};
    for (int j : js) {
        const auto comps = parallel_map(hc_samples, c.workers, [&](std::size_t i) {
            return chaos_project_F(sample_band(rng::derive_seed(c.seed ^ 0x9e3779b97f4a7c15ULL, i), 1, shell_range(j).lo_exclusive, 1 << j), j, 2);
        });
        for (int l : {1, 2}) {
            std::vector<double> v;
            for (const auto& comp : comps) v.push_back(comp[static_cast<std::size_t>(l)].second);
            const auto rep = hypercontractivity_check(v, 2 * l, 4.0);
            h.add({static_cast<long long>(j), static_cast<long long>(2 * l), 4.0, rep.ratio, rep.bound, rep.rel_se,
                   static_cast<long long>(rep.pass)});
        }
    }
    ctx.sink.table(h);
    ctx.summary["samples"] = samples;
    ctx.summary["hypercontractivity_samples"] = hc_samples;
}

void run_wick(Context& ctx)
{
    const auto& c = ctx.config;
    Table herm{"hermite", {"n", "x", "value"}, {}};
    for (int n = 0; n <= 6; ++n)
        for (int i = -6; i <= 6; ++i) herm.add({static_cast<long long>(n), 0.5 * i, hermite(n, 0.5 * i)});
    ctx.sink.table(herm);

    const std::size_t samples = samples_or(c, 100'000);
    const auto vals = parallel_map(samples, c.workers, [&](std::size_t i) {
        const cplx g = rng::indexed_normal(c.seed, rng::Stream::Scalar, i);
        return std::array<double, 3>{wick_abs2n(g, 1), wick_abs2n(g, 2), wick_abs2n(g, 3)};
    });
    Table w{"wick", {"n", "m", "mean", "se", "expected", "z"}, {}};
    const double ns = static_cast<double>(samples);
    for (int n = 0; n <= 3; ++n)
        for (int m = std::max(n, 1); m <= 3; ++m) {
            double mean = 0.0, sq = 0.0;
            for (const auto& v : vals) {
                const double x = (n == 0 ? 1.0 : v[n - 1]) * v[m - 1];
                mean += x;
                sq += x * x;
            }
            mean /= ns;
            const double se = std::sqrt(std::max(0.0, sq / ns - mean * mean) / ns);
            const double fact = std::tgamma(n + 1.0);
            const double expected = n == m ? fact * fact * std::pow(4.0, n) : 0.0;
            w.add({static_cast<long long>(n), static_cast<long long>(m), mean, se, expected, se > 0 ? (mean - expected) / se : 0.0});
        }
    ctx.sink.table(w);
    ctx.summary["samples"] = samples;
}

void run_probe(Context& ctx)
{
    const auto& c = ctx.config;
    const auto specs = parse_specs(c, {"fbesov:0.5:2:inf"});
    const auto M0s = or_default(c.M0, {1 << 2, 1 << 4, 1 << 6, 1 << 8, 1 << 10});
    const std::size_t samples = samples_or(c, 1000);
    Table t{"probe", {"spec", "M0", "N", "eps", "samples", "exceed", "probability", "ci_lo", "ci_hi"}, {}};
    for (const auto& spec : specs) {
        const double p = std::isnan(spec.p) || std::isinf(spec.p) ? 2.0 : spec.p;
        const double eps = c.eps ? *c.eps : 0.5 * std::pow(c_p_exact(p), 1.0 / p);
        for (int M0 : M0s) {
            const auto r = measurability_probe(spec, c.alpha, M0, c.band_factor * M0, eps, samples, c.seed, c.workers);
            t.add({spec.to_string(), static_cast<long long>(M0), static_cast<long long>(r.truncation), eps,
                   static_cast<long long>(samples), static_cast<long long>(r.exceed), r.probability, r.ci.lo, r.ci.hi});
        }
    }
    ctx.sink.table(t);
    ctx.summary["samples"] = samples;
}

void run_bridge(Context& ctx)
{
    const auto& c = ctx.config;
    const std::size_t M = c.grid ? static_cast<std::size_t>(c.grid) : 4096;
    const int N = or_default(c.N, {static_cast<int>(M / 16)}).front();
    const auto n_list = or_default(c.n_list, {1, 2, 5, 10});
    for (int n : n_list)
        if (std::abs(n) > N) throw ConfigError("n_list entries must satisfy |n| <= N");
    const auto specs = parse_specs(c, {"fl:0.3:-:2"});
    const std::size_t samples = samples_or(c, kMinCovarianceSamples);

    const auto spectra = parallel_map(samples, c.workers, [&](std::size_t i) {
        return bridge_to_spectrum(sample_bridge(rng::derive_seed(c.seed, i), M), N);
    });
    const auto rep = covariance_report(spectra, n_list);
    Table t{"bridge", {"n", "mean_abs2", "se", "expected", "z"}, {}};
    double pooled2 = 0.0, pooled4 = 0.0;
    for (std::size_t a = 0; a < n_list.size(); ++a) {
        const double m = rep.moment[a][a].real(), se = rep.se[a][a], e = rep.expected[a][a];
        t.add({static_cast<long long>(n_list[a]), m, se, e, se > 0 ? (m - e) / se : 0.0});
    }
    for (const auto& s : spectra)
        for (int n : n_list) {
            const double a = std::norm(bridge_coefficient_to_gaussian(s.coeffs[*s.lattice.index_of(n)], n));
            pooled2 += a;
            pooled4 += a * a;
        }
    const double count = static_cast<double>(samples * n_list.size());
    const double kurtosis = (pooled4 / count) / std::pow(pooled2 / count, 2);
    ctx.sink.table(t);

    Table norms{"bridge_norms", {"spec", "source", "median"}, {}};
    ctx.summary["norm_agreement"] = ojson::array();
    for (const auto& spec : specs) {
        std::vector<double> bridge_vals, direct_vals;
        for (const auto& s : spectra) {
            auto scaled = s;
            for (auto& v : scaled.coeffs) v *= bridge_to_fourier_wiener_scale();
            bridge_vals.push_back(evaluate(spec, scaled));
        }
        direct_vals = parallel_map(samples, c.workers, [&](std::size_t i) {
            return evaluate(spec, build_path(sample_family(rng::derive_seed(c.seed ^ 0x5851f42d4c957f2dULL, i), 1, N), 1.0));
        });
        const double mb = quantile_of(bridge_vals, 0.5), md = quantile_of(direct_vals, 0.5);
        norms.add({spec.to_string(), std::string("bridge"), mb});
        norms.add({spec.to_string(), std::string("direct"), md});
        ctx.summary["norm_agreement"].push_back(
            {{"spec", spec.to_string()}, {"bridge_median", mb}, {"direct_median", md}, {"relative_difference", std::abs(mb - md) / md}});
    }
    ctx.sink.table(norms);
    ctx.summary["samples"] = samples;
    ctx.summary["grid"] = M;
    ctx.summary["N"] = N;
    ctx.summary["max_z"] = rep.max_z();
    ctx.summary["fourth_moment_ratio"] = kurtosis;
}

void run_levy(Context& ctx)
{
    const auto& c = ctx.config;
    const std::size_t M = c.grid ? static_cast<std::size_t>(c.grid) : (1 << 16);
    const std::vector<double> eps_list = c.eps ? std::vector<double>{*c.eps} : std::vector<double>{0.05, 0.01, 0.002};
    const std::size_t samples = samples_or(c, 20);
    const auto ratios = parallel_map(samples, c.workers, [&](std::size_t i) {
        const auto path = sample_bridge(rng::derive_seed(c.seed, i), M);
        std::vector<double> out;
        for (double e : eps_list) out.push_back(bridge_levy_ratio(path, e));
        return out;
    });
    Table t{"levy", {"sample", "eps", "ratio"}, {}};
    for (std::size_t s = 0; s < samples; ++s)
        for (std::size_t e = 0; e < eps_list.size(); ++e) t.add({static_cast<long long>(s), eps_list[e], ratios[s][e]});
    ctx.sink.table(t);
    ctx.summary["medians"] = ojson::array();
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
        std::vector<double> col;
        for (const auto& r : ratios) col.push_back(r[e]);
        ctx.summary["medians"].push_back({{"eps", eps_list[e]}, {"median", quantile_of(col, 0.5)}});
    }
    ctx.summary["samples"] = samples;
    ctx.summary["grid"] = M;
}

} // namespace

RunResult run(const ExperimentConfig& config)
{
    config.validate();
    RunResult result;
    result.manifest.subcommand = config.subcommand;
    result.manifest.config_hash = config.hash();
    result.manifest.started_at = utc_now();

    OutputSink sink(config.out, config.format);
    ojson summary;
    summary["subcommand"] = config.subcommand;
    summary["config"] = config.to_json();
    summary["config"].erase("out");
    summary["config"].erase("workers");
    Context ctx{config, sink, summary};

    const auto& s = config.subcommand;
    if (s == "sample") run_sample(ctx);
    else if (s == "norm") run_norm(ctx);
    else if (s == "scan") run_scan(ctx);
    else if (s == "tail") run_tail(ctx);
    else if (s == "chaos") run_chaos(ctx);
    else if (s == "wick") run_wick(ctx);
    else if (s == "probe") run_probe(ctx);
    else if (s == "bridge") run_bridge(ctx);
    else if (s == "levy") run_levy(ctx);

    sink.text("summary.json", summary.dump(2) + "\n");
    result.manifest.outputs = sink.files();
    result.manifest.finished_at = utc_now();
    std::ofstream(fs::path(config.out) / "manifest.json") << result.manifest.to_json().dump(2) << "\n";
    result.summary = std::move(summary);
    result.exit_code = ctx.exit_code;
    return result;
}

namespace {

void emit_error(std::ostream& err, const char* type, const std::string& kind, const std::string& message)
{
    ojson j;
    j["error"] = {{"type", type}, {"kind", kind}, {"message", message}};
    err << j.dump() << std::endl;
}

} // namespace

int run_guarded(const std::string& subcommand, const std::optional<std::string>& config_path,
                const nlohmann::json& flag_overrides, std::ostream& err)
{
    ExperimentConfig config;
    try {
        config = resolve_config(subcommand, config_path, flag_overrides, process_environment());
    } catch (const ConfigError& e) {
        emit_error(err, "config", "InvalidConfig", e.what());
        return kExitConfig;
    } catch (const Error& e) {
        emit_error(err, "config", std::string(to_string(e.kind())), e.what());
        return kExitConfig;
    }
    try {
        return run(config).exit_code;
    } catch (const ConfigError& e) {
        emit_error(err, "config", "InvalidConfig", e.what());
        return kExitConfig;
    } catch (const Error& e) {
        emit_error(err, "runtime", std::string(to_string(e.kind())), e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        emit_error(err, "runtime", "Internal", e.what());
        return kExitRuntime;
    }
}

} // namespace bmreg::cli
