// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "csound/analysis.hpp"
#include "csound/core.hpp"
#include "csound/receiver.hpp"

namespace csound {

inline constexpr std::uint16_t kOmniBeamId = 0xFFFF;
inline constexpr std::uint8_t kOmniArrayId = 0xFF;
inline constexpr std::uint16_t kRecordingVersion = 1;

// One stored impulse response. Taps are single precision to keep files
// small; analysis recomputes in double.
struct CirRecord {
    std::uint64_t timestamp_ns = 0;
    std::uint16_t node_id = 0;
    std::uint8_t array_id = kOmniArrayId;  // face index, or the omni port
    std::uint16_t beam_id = kOmniBeamId;
    float power_reference_dbm = 0.0f;
    std::vector<std::complex<float>> taps;
};

// Descriptive part of a recording file, stored as one JSON blob after the
// fixed preamble. The JSON strings round-trip losslessly.
struct RecordingHeader {
    std::string config_json;
    std::string calibration_json;  // empty when the run was uncalibrated
    std::string scene_digest;
    std::string schedule_digest;
    bool calibration_pending = false;
};

// A campaign's output: header plus time-ordered impulse-response records
// (strictly increasing timestamps within each (node, array) stream).
struct Recording {
    RecordingHeader header;
    std::vector<CirRecord> records;
    // set only by a salvage read that hit a truncated body
    std::optional<std::uint64_t> truncated_at_offset;
};

/// Pack a processed impulse response into a storable record.
CirRecord record_from_cir(const Cir& cir);

/// Expand a stored record back to a double-precision impulse response using
/// the file's configuration for the delay grid.
Cir cir_from_record(const CirRecord& record, const SounderConfig& cfg);

/// Serialize to the container format: "CSND" magic, version, header length,
/// JSON header, then fixed-size little-endian records. Validates the stream
/// ordering and constant tap-count invariants.
std::vector<std::uint8_t> write_recording(const Recording& recording);

struct ReadOptions {
    bool salvage = false;  // return complete records before a truncation
};

/// Parse the container format. Malformed input raises std::runtime_error
/// naming the problem and its byte offset; with salvage enabled a truncated
/// body instead yields the complete records plus the truncation offset.
Recording read_recording(const std::vector<std::uint8_t>& bytes, const ReadOptions& opts = {});

void save_recording(const Recording& recording, const std::string& path);
Recording load_recording(const std::string& path, const ReadOptions& opts = {});

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

// CSV exports, RFC 4180 with a one-line header row naming axes and units.
void export_pdp_csv(const Pdp& pdp, std::ostream& os);
void export_pap_csv(const std::vector<PapEntry>& pap, std::ostream& os);
void export_padp_csv(const Padp& padp, std::ostream& os);
void export_fit_csv(const PathLossFit& fit, const std::vector<PathLossSample>& samples,
                    std::ostream& os);

}  // namespace csound
