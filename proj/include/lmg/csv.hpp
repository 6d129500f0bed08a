// csv.hpp — CSV emission with a JSON metadata header line
#pragma once

#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "core.hpp"

namespace lmg {

inline constexpr std::string_view tool_version = "0.1.0";

// Shortest round-trip double formatting (what the JSON library uses) would be
// fine too; %.12g keeps the bodies compact and is byte-stable for equal inputs.
inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Full resolved configuration, one key per config-file key, so the header can be
// pasted back into a config file (modulo JSON punctuation) and reproduce the run.
inline nlohmann::json config_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["gamma_over_h"] = cfg.params.gamma;
    j["gamma_y_over_h"] = cfg.params.gamma_y;
    j["kappa_over_h"] = cfg.params.kappa;
    j["lambda_over_h"] = cfg.params.lambda;
    j["tau_over_h"] = cfg.params.tau;
    j["n_spins"] = cfg.params.n_spins;
    if (cfg.bin_width) j["bin_width"] = *cfg.bin_width;
    if (cfg.eta) j["eta"] = *cfg.eta;
    j["energy_min"] = cfg.energy_min;
    j["energy_max"] = cfg.energy_max;
    j["energy_count"] = cfg.energy_count;
    j["dt_over_h"] = cfg.dt;
    j["t_max_over_h"] = cfg.t_max;
    if (cfg.initial) {
        j["initial_jx"] = cfg.initial->jx;
        j["initial_jy"] = cfg.initial->jy;
        j["initial_jz"] = cfg.initial->jz;
    }
    j["tau_min_over_h"] = cfg.tau_min;
    j["tau_max_over_h"] = cfg.tau_max;
    j["tau_count"] = cfg.tau_count;
    j["lambda_min_over_h"] = cfg.lambda_min;
    j["lambda_max_over_h"] = cfg.lambda_max;
    j["lambda_count"] = cfg.lambda_count;
    j["z_max"] = cfg.z_max;
    j["settle_over_h"] = cfg.settle;
    j["observe_over_h"] = cfg.observe;
    j["delta_t_over_h"] = cfg.delta_t;
    j["stride_over_h"] = cfg.stride;
    j["esqpt_source"] = cfg.esqpt_source;
    j["out_dir"] = cfg.out_dir;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    return j;
}

// Layout: one '#'-prefixed JSON object line, a header row, then data rows.
// Keys in the metadata are sorted by the JSON library, so equal runs produce
// byte-identical files.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::string& command, const RunConfig& cfg,
              const std::vector<std::string>& columns)
        : os_(os), n_cols_(columns.size()) {
        if (columns.empty()) throw std::invalid_argument("CsvWriter: no columns");
        nlohmann::json meta;
        meta["command"] = command;
        meta["version"] = std::string(tool_version);
        meta["units"] = {{"time", "1/h"}, {"rates", "h"}, {"energy_per_spin", "h"}};
        meta["config"] = config_json(cfg);
        os_ << "# " << meta.dump() << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            os_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != n_cols_)
            throw std::invalid_argument("CsvWriter: row width does not match the header");
        for (std::size_t i = 0; i < cells.size(); ++i)
            os_ << cells[i] << (i + 1 < cells.size() ? "," : "\n");
    }

    void row(const std::vector<double>& cells) {
        std::vector<std::string> s(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) s[i] = csv_num(cells[i]);
        row(s);
    }

private:
    std::ostream& os_;
    std::size_t n_cols_;
};

} // namespace lmg
