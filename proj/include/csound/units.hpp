// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <stdexcept>

namespace csound {

// Speed of light, m/s. Fixed value used everywhere; never redefine locally.
inline constexpr double kSpeedOfLight = 2.99792458e8;

/// Convert a dB quantity to a linear power ratio. Rejects non-finite input.
template <typename Scalar>
inline Scalar db_to_linear(Scalar db) {
    if (!std::isfinite(static_cast<double>(db)))
        throw std::invalid_argument("db_to_linear: non-finite input");
    return std::pow(Scalar(10), db / Scalar(10));
}

/// Convert a linear power ratio (> 0) to dB.
template <typename Scalar>
inline Scalar linear_to_db(Scalar linear) {
    if (!(linear > Scalar(0)) || !std::isfinite(static_cast<double>(linear)))
        throw std::invalid_argument("linear_to_db: input must be positive and finite");
    return Scalar(10) * std::log10(linear);
}

inline double dbm_to_milliwatt(double dbm) { return db_to_linear(dbm); }

inline double milliwatt_to_dbm(double mw) { return linear_to_db(mw); }

/// Carrier wavelength in metres for a frequency given in GHz.
inline double wavelength_m(double frequency_ghz) {
    if (!(frequency_ghz > 0.0))
        throw std::invalid_argument("wavelength_m: frequency must be > 0");
    return kSpeedOfLight / (frequency_ghz * 1e9);
}

// Unit-tagged scalars. Relative (dB) and absolute (dBm, dBi, dBsm) quantities
// are distinct types so that meaningless combinations (dBm + dBm, dB + dBi)
// fail to compile. Only the physically sensible operators are defined.
struct Db {
    double value = 0.0;
    constexpr explicit Db(double v = 0.0) : value(v) {}
};

struct Dbm {
    double value = 0.0;
    constexpr explicit Dbm(double v = 0.0) : value(v) {}
    double milliwatt() const { return dbm_to_milliwatt(value); }
};

struct Dbi {
    double value = 0.0;
    constexpr explicit Dbi(double v = 0.0) : value(v) {}
};

struct Dbsm {
    double value = 0.0;
    constexpr explicit Dbsm(double v = 0.0) : value(v) {}
};

// dB is a group under addition.
constexpr Db operator+(Db a, Db b) { return Db{a.value + b.value}; }
constexpr Db operator-(Db a, Db b) { return Db{a.value - b.value}; }
constexpr Db operator-(Db a) { return Db{-a.value}; }

// Absolute power shifted by a relative gain stays absolute.
constexpr Dbm operator+(Dbm p, Db g) { return Dbm{p.value + g.value}; }
constexpr Dbm operator+(Db g, Dbm p) { return Dbm{p.value + g.value}; }
constexpr Dbm operator-(Dbm p, Db g) { return Dbm{p.value - g.value}; }

// Antenna gain applied to an absolute power; the dBi tag degrades to dB here.
constexpr Dbm operator+(Dbm p, Dbi g) { return Dbm{p.value + g.value}; }
constexpr Dbm operator-(Dbm p, Dbi g) { return Dbm{p.value - g.value}; }

// Ratio of two absolute powers is relative.
constexpr Db operator-(Dbm a, Dbm b) { return Db{a.value - b.value}; }

constexpr bool operator==(Db a, Db b) { return a.value == b.value; }
constexpr bool operator==(Dbm a, Dbm b) { return a.value == b.value; }

}  // namespace csound
