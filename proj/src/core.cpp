// SPDX-License-Identifier: Apache-2.0
#include "csound/core.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace csound {

namespace {

struct BandRow {
    double f_ghz;
    int beams;
    int elements;
};

// One row per deployed band. 7 GHz has no array hardware.
constexpr BandRow kBands[] = {
    {7.0, 0, 0},
    {8.3, 15, 32},
    {11.3, 15, 32},
    {14.5, 20, 64},
};

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

BandPlan BandPlan::from_frequency_ghz(double f_ghz) {
    for (const auto& row : kBands) {
        if (std::abs(f_ghz - row.f_ghz) < 1e-6) {
            BandPlan plan;
            plan.center_frequency_ghz = row.f_ghz;
            plan.beams_per_array = row.beams;
            plan.elements_per_array = row.elements;
            return plan;
        }
    }
    std::ostringstream os;
    os << "BandPlan: unsupported center frequency " << f_ghz
       << " GHz (supported: 7.0, 8.3, 11.3, 14.5)";
    throw std::invalid_argument(os.str());
}

SounderConfig SounderConfig::defaults(double center_frequency_ghz) {
    SounderConfig cfg;
    cfg.band = BandPlan::from_frequency_ghz(center_frequency_ghz);
    return cfg;
}

std::vector<std::string> validate_config(const SounderConfig& cfg) {
    std::vector<std::string> errs;
    auto fail = [&errs](const std::string& m) { errs.push_back(m); };

    bool band_known = false;
    for (const auto& row : kBands) {
        if (std::abs(cfg.band.center_frequency_ghz - row.f_ghz) < 1e-6) {
            band_known = true;
            if (cfg.band.beams_per_array != row.beams)
                fail("band: beams_per_array must be " + std::to_string(row.beams) +
                     " at " + std::to_string(row.f_ghz) + " GHz");
            if (cfg.band.elements_per_array != row.elements)
                fail("band: elements_per_array must be " + std::to_string(row.elements) +
                     " at " + std::to_string(row.f_ghz) + " GHz");
        }
    }
    if (!band_known)
        fail("band: center frequency must be one of 7.0, 8.3, 11.3, 14.5 GHz");

    if (!(cfg.bandwidth_hz > 0)) fail("bandwidth_hz must be > 0");
    if (!(cfg.subcarrier_spacing_hz > 0)) fail("subcarrier_spacing_hz must be > 0");
    if (cfg.zc_length < 3) fail("zc_length must be >= 3");
    if (cfg.zc_length % 2 == 0) fail("zc_length must be odd");
    if (cfg.n_repetitions < 1) fail("n_repetitions must be >= 1");
    if (!is_pow2(cfg.fft_size)) fail("fft_size must be a power of two");
    if (cfg.fft_size < cfg.zc_length)
        fail("fft_size must be >= zc_length");

    if (cfg.bandwidth_hz > 0 && cfg.subcarrier_spacing_hz > 0) {
        const double occ = cfg.zc_length * cfg.subcarrier_spacing_hz;
        if (std::abs(occ - cfg.bandwidth_hz) / cfg.bandwidth_hz > 0.01)
            fail("zc_length * subcarrier_spacing must lie within 1% of bandwidth_hz");
        const double period = 1.0 / cfg.subcarrier_spacing_hz;
        if (cfg.max_excess_delay_s <= 0 || cfg.max_excess_delay_s > period)
            fail("max_excess_delay_s must be in (0, one sequence period]");
    }

    if (cfg.tx_eirp_dbm.value > 43.0)
        fail("tx_eirp_dbm must be <= 43 dBm (regulatory ceiling)");
    if (!(cfg.rx_noise_figure_omni_db >= 0))
        fail("rx_noise_figure_omni_db must be >= 0");
    if (!(cfg.rx_noise_figure_array_db >= 0))
        fail("rx_noise_figure_array_db must be >= 0");

    return errs;
}

void require_valid(const SounderConfig& cfg) {
    const auto errs = validate_config(cfg);
    if (errs.empty()) return;
    std::ostringstream os;
    os << "invalid configuration (" << errs.size() << " problem(s)):";
    for (const auto& e : errs) os << "\n  - " << e;
    throw std::invalid_argument(os.str());
}

namespace {

const char* const kKnownKeys[] = {
    "center_frequency_hz", "bandwidth_hz",       "subcarrier_spacing_hz",
    "zc_length",           "n_repetitions",      "fft_size",
    "max_excess_delay_s",  "tx_eirp_dbm",        "rx_noise_figure_omni_db",
    "rx_noise_figure_array_db",
};

}  // namespace

SounderConfig parse_config(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    if (!j.is_object())
        throw std::invalid_argument("config: top level must be a JSON object");

    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : kKnownKeys)
            if (item.key() == k) { known = true; break; }
        if (!known)
            throw std::invalid_argument("config: unknown key \"" + item.key() + "\"");
    }

    const double f_hz = j.value("center_frequency_hz", 14.5e9);
    SounderConfig cfg = SounderConfig::defaults(f_hz / 1e9);
    cfg.bandwidth_hz = j.value("bandwidth_hz", cfg.bandwidth_hz);
    cfg.subcarrier_spacing_hz = j.value("subcarrier_spacing_hz", cfg.subcarrier_spacing_hz);
    cfg.zc_length = j.value("zc_length", cfg.zc_length);
    cfg.n_repetitions = j.value("n_repetitions", cfg.n_repetitions);
    cfg.fft_size = j.value("fft_size", cfg.fft_size);
    cfg.max_excess_delay_s = j.value("max_excess_delay_s", cfg.max_excess_delay_s);
    cfg.tx_eirp_dbm = Dbm{j.value("tx_eirp_dbm", cfg.tx_eirp_dbm.value)};
    cfg.rx_noise_figure_omni_db = j.value("rx_noise_figure_omni_db", cfg.rx_noise_figure_omni_db);
    cfg.rx_noise_figure_array_db = j.value("rx_noise_figure_array_db", cfg.rx_noise_figure_array_db);
    return cfg;
}

SounderConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str());
}

std::string config_to_json(const SounderConfig& cfg) {
    nlohmann::json j;
    j["center_frequency_hz"] = cfg.band.center_frequency_ghz * 1e9;
    j["bandwidth_hz"] = cfg.bandwidth_hz;
    j["subcarrier_spacing_hz"] = cfg.subcarrier_spacing_hz;
    j["zc_length"] = cfg.zc_length;
    j["n_repetitions"] = cfg.n_repetitions;
    j["fft_size"] = cfg.fft_size;
    j["max_excess_delay_s"] = cfg.max_excess_delay_s;
    j["tx_eirp_dbm"] = cfg.tx_eirp_dbm.value;
    j["rx_noise_figure_omni_db"] = cfg.rx_noise_figure_omni_db;
    j["rx_noise_figure_array_db"] = cfg.rx_noise_figure_array_db;
    return j.dump(2);
}

}  // namespace csound
