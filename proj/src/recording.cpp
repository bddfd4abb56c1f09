// SPDX-License-Identifier: Apache-2.0
#include "csound/recording.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace csound {

namespace {

using nlohmann::json;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    static_assert(sizeof(float) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

// Cursor over the input with offset-carrying truncation errors.
struct ByteReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    std::size_t remaining() const { return bytes.size() - pos; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            std::ostringstream msg;
            msg << "recording truncated at offset " << pos << " (" << what << ")";
            throw std::runtime_error(msg.str());
        }
    }

    std::uint16_t u16() {
        std::uint16_t v = static_cast<std::uint16_t>(bytes[pos]) |
                          static_cast<std::uint16_t>(bytes[pos + 1]) << 8;
        pos += 2;
        return v;
    }

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }

    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }

    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

// Every record must keep its (node, array) stream strictly time-ordered and
// share one tap count.
void check_invariants(const Recording& recording) {
    std::map<std::pair<std::uint16_t, std::uint8_t>, std::uint64_t> last_time;
    std::size_t n_taps = recording.records.empty() ? 0 : recording.records.front().taps.size();
    for (std::size_t i = 0; i < recording.records.size(); ++i) {
        const CirRecord& r = recording.records[i];
        if (r.taps.size() != n_taps) {
            std::ostringstream msg;
            msg << "recording record " << i << " has " << r.taps.size()
                << " taps, expected " << n_taps;
            throw std::runtime_error(msg.str());
        }
        const auto key = std::make_pair(r.node_id, r.array_id);
        auto it = last_time.find(key);
        if (it != last_time.end() && r.timestamp_ns <= it->second) {
            std::ostringstream msg;
            msg << "recording record " << i << " breaks time ordering of stream (node "
                << r.node_id << ", array " << int(r.array_id) << ")";
            throw std::runtime_error(msg.str());
        }
        last_time[key] = r.timestamp_ns;
    }
}

json header_to_blob(const RecordingHeader& header, std::uint64_t record_count) {
    json blob;
    blob["config"] = header.config_json.empty() ? json(nullptr) : json::parse(header.config_json);
    blob["calibration"] =
        header.calibration_json.empty() ? json(nullptr) : json::parse(header.calibration_json);
    blob["scene_digest"] = header.scene_digest;
    blob["schedule_digest"] = header.schedule_digest;
    blob["calibration_pending"] = header.calibration_pending;
    blob["record_count"] = record_count;
    return blob;
}

}  // namespace

CirRecord record_from_cir(const Cir& cir) {
    CirRecord r;
    r.timestamp_ns = static_cast<std::uint64_t>(std::llround(cir.meta.timestamp_s * 1e9));
    r.node_id = cir.meta.node_id;
    r.array_id = cir.meta.array_id;
    r.beam_id = cir.meta.beam_id < 0 ? kOmniBeamId : static_cast<std::uint16_t>(cir.meta.beam_id);
    r.power_reference_dbm = static_cast<float>(cir.power_reference_dbm);
    r.taps.reserve(static_cast<std::size_t>(cir.taps.size()));
    for (Eigen::Index i = 0; i < cir.taps.size(); ++i) {
        r.taps.emplace_back(static_cast<float>(cir.taps[i].real()),
                            static_cast<float>(cir.taps[i].imag()));
    }
    return r;
}

Cir cir_from_record(const CirRecord& record, const SounderConfig& cfg) {
    Cir cir;
    cir.taps.resize(static_cast<Eigen::Index>(record.taps.size()));
    for (std::size_t i = 0; i < record.taps.size(); ++i) {
        cir.taps[static_cast<Eigen::Index>(i)] = {double(record.taps[i].real()),
                                                  double(record.taps[i].imag())};
    }
    cir.tap_spacing_s = cfg.tap_spacing_s();
    cir.power_reference_dbm = record.power_reference_dbm;
    cir.meta.timestamp_s = static_cast<double>(record.timestamp_ns) * 1e-9;
    cir.meta.node_id = record.node_id;
    cir.meta.array_id = record.array_id;
    cir.meta.beam_id = record.beam_id == kOmniBeamId ? -1 : record.beam_id;
    return cir;
}

std::vector<std::uint8_t> write_recording(const Recording& recording) {
    check_invariants(recording);

    const std::string blob =
        header_to_blob(recording.header, recording.records.size()).dump();

    std::vector<std::uint8_t> out;
    out.reserve(10 + blob.size() + recording.records.size() * 64);
    out.push_back('C');
    out.push_back('S');
    out.push_back('N');
    out.push_back('D');
    put_u16(out, kRecordingVersion);
    put_u32(out, static_cast<std::uint32_t>(blob.size()));
    out.insert(out.end(), blob.begin(), blob.end());

    for (const CirRecord& r : recording.records) {
        put_u64(out, r.timestamp_ns);
        put_u16(out, r.node_id);
        out.push_back(r.array_id);
        put_u16(out, r.beam_id);
        put_u32(out, static_cast<std::uint32_t>(r.taps.size()));
        put_f32(out, r.power_reference_dbm);
        for (const auto& t : r.taps) {
            put_f32(out, t.real());
            put_f32(out, t.imag());
        }
    }
    return out;
}

Recording read_recording(const std::vector<std::uint8_t>& bytes, const ReadOptions& opts) {
    ByteReader in{bytes};

    in.need(4, "magic");
    if (bytes[0] != 'C' || bytes[1] != 'S' || bytes[2] != 'N' || bytes[3] != 'D')
        throw std::runtime_error("not a recording: bad magic at offset 0");
    in.pos = 4;

    in.need(2, "version");
    const std::uint16_t version = in.u16();
    if (version != kRecordingVersion) {
        std::ostringstream msg;
        msg << "unsupported recording version " << version << " at offset 4 (expected "
            << kRecordingVersion << ")";
        throw std::runtime_error(msg.str());
    }

    in.need(4, "header length");
    const std::uint32_t header_len = in.u32();
    in.need(header_len, "header blob");

    json blob;
    try {
        blob = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(in.pos),
                           bytes.begin() + static_cast<std::ptrdiff_t>(in.pos + header_len));
    } catch (const json::exception& e) {
        std::ostringstream msg;
        msg << "recording header is not valid JSON at offset " << in.pos << ": " << e.what();
        throw std::runtime_error(msg.str());
    }
    in.pos += header_len;

    Recording rec;
    try {
        if (!blob.at("config").is_null()) rec.header.config_json = blob.at("config").dump();
        if (!blob.at("calibration").is_null())
            rec.header.calibration_json = blob.at("calibration").dump();
        rec.header.scene_digest = blob.at("scene_digest").get<std::string>();
        rec.header.schedule_digest = blob.at("schedule_digest").get<std::string>();
        rec.header.calibration_pending = blob.at("calibration_pending").get<bool>();
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("recording header is missing fields: ") + e.what());
    }
    const std::uint64_t declared = blob.at("record_count").get<std::uint64_t>();

    for (std::uint64_t i = 0; i < declared; ++i) {
        const std::size_t record_start = in.pos;
        try {
            in.need(8 + 2 + 1 + 2 + 4 + 4, "record preamble");
            CirRecord r;
            r.timestamp_ns = in.u64();
            r.node_id = in.u16();
            r.array_id = bytes[in.pos++];
            r.beam_id = in.u16();
            const std::uint32_t n_taps = in.u32();
            r.power_reference_dbm = in.f32();
            in.need(std::size_t{8} * n_taps, "record taps");
            r.taps.reserve(n_taps);
            for (std::uint32_t t = 0; t < n_taps; ++t) {
                const float re = in.f32();
                const float im = in.f32();
                r.taps.emplace_back(re, im);
            }
            rec.records.push_back(std::move(r));
        } catch (const std::runtime_error&) {
            if (!opts.salvage) throw;
            rec.truncated_at_offset = record_start;
            check_invariants(rec);
            return rec;
        }
    }

    if (in.remaining() != 0) {
        std::ostringstream msg;
        msg << "recording has " << in.remaining() << " unexpected trailing bytes at offset "
            << in.pos;
        throw std::runtime_error(msg.str());
    }
    check_invariants(rec);
    return rec;
}

void save_recording(const Recording& recording, const std::string& path) {
    const std::vector<std::uint8_t> bytes = write_recording(recording);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("write failed: " + path);
}

Recording load_recording(const std::string& path, const ReadOptions& opts) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());
    return read_recording(bytes, opts);
}

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

double mw_to_dbm_or_neg_inf(double mw) {
    return mw > 0.0 ? 10.0 * std::log10(mw) : -std::numeric_limits<double>::infinity();
}

}  // namespace

void export_pdp_csv(const Pdp& pdp, std::ostream& os) {
    os << "delay_ns,power_dbm,retained\n";
    for (Eigen::Index i = 0; i < pdp.power_mw.size(); ++i) {
        const double delay_ns = static_cast<double>(i) * pdp.tap_spacing_s * 1e9;
        os << format_double(delay_ns) << ','
           << format_double(mw_to_dbm_or_neg_inf(pdp.power_mw[i])) << ','
           << (pdp.threshold_applied && pdp.retained[i] ? 1 : 0) << '\n';
    }
}

void export_pap_csv(const std::vector<PapEntry>& pap, std::ostream& os) {
    os << "beam_id,face,az_deg,el_deg,power_dbm\n";
    for (const auto& e : pap) {
        os << e.beam_id << ',' << e.face << ',' << format_double(e.az_deg) << ','
           << format_double(e.el_deg) << ',' << format_double(mw_to_dbm_or_neg_inf(e.power_mw))
           << '\n';
    }
}

void export_padp_csv(const Padp& padp, std::ostream& os) {
    os << "az_deg,el_deg,delay_ns,power_dbm\n";
    for (Eigen::Index r = 0; r < padp.power_mw.rows(); ++r) {
        for (Eigen::Index t = 0; t < padp.power_mw.cols(); ++t) {
            const double delay_ns = static_cast<double>(t) * padp.tap_spacing_s * 1e9;
            os << format_double(padp.az_deg[r]) << ',' << format_double(padp.el_deg[r]) << ','
               << format_double(delay_ns) << ','
               << format_double(mw_to_dbm_or_neg_inf(padp.power_mw(r, t))) << '\n';
        }
    }
}

void export_fit_csv(const PathLossFit& fit, const std::vector<PathLossSample>& samples,
                    std::ostream& os) {
    os << "distance_m,path_loss_db,fitted_db\n";
    for (const auto& s : samples) {
        const double fitted =
            fit.intercept_db + 10.0 * fit.ple * std::log10(s.distance_m / fit.d0_m);
        os << format_double(s.distance_m) << ',' << format_double(s.path_loss_db) << ','
           << format_double(fitted) << '\n';
    }
}

}  // namespace csound
