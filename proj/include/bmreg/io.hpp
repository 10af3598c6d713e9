#pragma once

// JSON forms of the library's result types (nlohmann/json).

#include <cmath>
#include <nlohmann/json.hpp>

#include "bmreg/chaos.hpp"
#include "bmreg/deviations.hpp"
#include "bmreg/error.hpp"
#include "bmreg/spectral.hpp"

namespace bmreg {

/// {dim, N, alpha, seed, coeffs: [[n..., re, im], ...]} in lexicographic lattice order.
inline nlohmann::json path_to_json(const SpectralPath& path)
{
    nlohmann::json coeffs = nlohmann::json::array();
    for (std::size_t i = 0; i < path.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int c : path.lattice.point(i)) row.push_back(c);
        row.push_back(path.coeffs[i].real());
        row.push_back(path.coeffs[i].imag());
        coeffs.push_back(std::move(row));
    }
    nlohmann::json j{{"dim", path.dim()}, {"N", path.truncation()}, {"alpha", path.alpha}, {"coeffs", std::move(coeffs)}};
    j["seed"] = path.seed ? nlohmann::json(*path.seed) : nlohmann::json(nullptr);
    return j;
}

/// Inverse of path_to_json. Frequencies omitted from `coeffs` are zero.
inline SpectralPath path_from_json(const nlohmann::json& j)
{
    try {
        const int dim = j.at("dim").get<int>();
        const int N = j.at("N").get<int>();
        auto lattice = Lattice::punctured(dim, N);
        std::vector<cplx> coeffs(lattice.size());
        for (const auto& row : j.at("coeffs")) {
            require(row.size() == static_cast<std::size_t>(dim) + 2, ErrorKind::InvalidArgument, "bad coefficient row");
            std::vector<int> n(static_cast<std::size_t>(dim));
            for (int d = 0; d < dim; ++d) n[static_cast<std::size_t>(d)] = row[static_cast<std::size_t>(d)].get<int>();
            std::optional<std::size_t> idx;
            if (dim == 1) idx = lattice.index_of(n[0]);
            else
                for (std::size_t i = 0; i < lattice.size() && !idx; ++i)
                    if (std::equal(n.begin(), n.end(), lattice.point(i).begin())) idx = i;
            require(idx.has_value(), ErrorKind::InvalidArgument, "coefficient outside the lattice");
            coeffs[*idx] = {row[static_cast<std::size_t>(dim)].get<double>(), row[static_cast<std::size_t>(dim) + 1].get<double>()};
        }
        auto path = path_from_coefficients(std::move(lattice), std::move(coeffs), j.value("alpha", 0.0));
        if (j.contains("seed") && !j["seed"].is_null()) path.seed = j["seed"].get<std::uint64_t>();
        return path;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed path JSON: ") + e.what());
    }
}

inline nlohmann::json to_json(const ChaosDecomposition& d)
{
    nlohmann::json j{{"j", d.j}, {"k", d.k}, {"lhs", d.lhs}, {"I", d.I}, {"II", d.II}, {"error_i", d.error_i}, {"error_ii", d.error_ii}};
    j["III"] = d.III ? nlohmann::json(*d.III) : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json summary_json(const TailEstimate& t)
{
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    return {{"fitted_c", opt(t.fitted_c)}, {"fit_r2", opt(t.fit_r2)}, {"n_samples", t.sample_count}, {"spec", t.spec}};
}

} // namespace bmreg
