#pragma once

// Flat-file formats.
//
//   accuracy curves   N,d_avg,std_error,method,state,normalized
//   event streams     event_index,outcome
//   likelihood grids  longitude,latitude,log_likelihood,member   (degrees)
//   power-law fits    {"a", "c", "residual_rms", "n_min", "n_max"}
//
// Floating-point values use the shortest representation that round-trips,
// so identical results give byte-identical files.

#include "tetratomo/accuracy.hpp"
#include "tetratomo/estimate.hpp"
#include "tetratomo/harness/config.hpp"
#include "tetratomo/sim.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace tetratomo::harness {

using json = nlohmann::ordered_json;

inline std::string format_double(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    if (std::isnan(v))
        return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Malformed input file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Quotes a CSV field when it contains a comma, quote or newline.
inline std::string csv_field(std::string_view v)
{
    if (v.find_first_of(",\"\n") == std::string_view::npos)
        return std::string(v);
    std::string out = "\"";
    for (char ch : v) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + '"';
}

inline constexpr std::string_view kCurveHeader = "N,d_avg,std_error,method,state,normalized";

inline void write_curve_rows(std::ostream& os, const AccuracyCurve& curve)
{
    for (const auto& pt : curve.points())
        os << pt.n << ',' << format_double(pt.d_avg) << ',' << format_double(pt.std_error) << ','
           << to_string(curve.method()) << ',' << csv_field(curve.state_label()) << ','
           << (curve.normalized() ? "true" : "false") << '\n';
}

inline void write_curves_csv(std::ostream& os, std::span<const AccuracyCurve> curves)
{
    os << kCurveHeader << '\n';
    for (const auto& c : curves)
        write_curve_rows(os, c);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch != '"')
                out.back() += ch;
            else if (i + 1 < line.size() && line[i + 1] == '"')
                out.back() += line[++i];
            else
                quoted = false;
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.emplace_back();
        } else {
            out.back() += ch;
        }
    }
    if (quoted)
        throw FormatError("unterminated quoted CSV field");
    return out;
}

inline std::string trim(std::string s)
{
    while (!s.empty() && (s.back() == '\r' || s.back() == ' '))
        s.pop_back();
    return s;
}

} // namespace detail

/// Reads curves in the schema above, grouped by (state, method, normalized)
/// in order of first appearance.
inline std::vector<AccuracyCurve> read_curves_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || detail::trim(line) != kCurveHeader)
        throw FormatError("curve CSV must start with header '" + std::string(kCurveHeader) + "'");
    std::vector<AccuracyCurve> curves;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != 6)
            throw FormatError("curve CSV row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                             " fields, expected 6");
        CurveMethod method;
        if (cells[3] == "exact")
            method = CurveMethod::exact;
        else if (cells[3] == "monte_carlo")
            method = CurveMethod::monte_carlo;
        else
            throw FormatError("curve CSV row " + std::to_string(row) + ": unknown method '" + cells[3] + "'");
        if (cells[5] != "true" && cells[5] != "false")
            throw FormatError("curve CSV row " + std::to_string(row) + ": normalized must be true or false");
        const bool normalized = cells[5] == "true";
        CurvePoint pt;
        try {
            pt.n = std::stoll(cells[0]);
            pt.d_avg = std::stod(cells[1]);
            pt.std_error = std::stod(cells[2]);
        } catch (const std::exception&) {
            throw FormatError("curve CSV row " + std::to_string(row) + ": malformed number");
        }
        auto it = std::find_if(curves.begin(), curves.end(), [&](const AccuracyCurve& c) {
            return c.state_label() == cells[4] && c.method() == method && c.normalized() == normalized;
        });
        if (it == curves.end()) {
            curves.emplace_back(method, cells[4], normalized);
            it = std::prev(curves.end());
        }
        it->push_back(pt);
    }
    return curves;
}

inline void write_events_csv(std::ostream& os, const EventStream& s)
{
    os << "event_index,outcome\n";
    for (std::size_t i = 0; i < s.outcomes.size(); ++i)
        os << (i + 1) << ',' << s.outcomes[i] << '\n';
}

/// Collapses an event CSV into counts over `outcomes` detectors.
inline CountVector read_events_csv(std::istream& is, int outcomes)
{
    std::string line;
    if (!std::getline(is, line) || detail::trim(line) != "event_index,outcome")
        throw FormatError("event CSV must start with header 'event_index,outcome'");
    CountVector c(outcomes);
    while (std::getline(is, line)) {
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto cells = detail::split_csv_line(line);
        int outcome = -1;
        if (cells.size() == 2) {
            const auto& f = cells[1];
            std::from_chars(f.data(), f.data() + f.size(), outcome);
        }
        if (outcome < 0 || outcome >= outcomes)
            throw FormatError("event CSV: invalid row '" + line + "'");
        c.add(outcome);
    }
    return c;
}

inline void write_region_csv(std::ostream& os, const LikelihoodRegion& r)
{
    os << "longitude,latitude,log_likelihood,member\n";
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
        const auto& g = r.grid[i];
        os << format_double(g.longitude_deg) << ',' << format_double(g.latitude_deg) << ','
           << format_double(g.log_likelihood) << ',' << (r.members[i] ? 1 : 0) << '\n';
    }
}

inline json fit_to_json(const PowerLawFit& f)
{
    return json{{"a", f.a}, {"c", f.c}, {"residual_rms", f.residual_rms}, {"n_min", f.n_min}, {"n_max", f.n_max}};
}

inline json stokes_to_json(const StokesVector& s)
{
    json arr = json::array();
    for (double v : s.components())
        arr.push_back(v);
    return arr;
}

inline std::string sha256_hex(const std::string& data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 computation failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes `content` to `path`, creating parent directories.
inline void write_file(const std::filesystem::path& p, const std::string& content)
{
    std::error_code ec;
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + p.string());
    out << content;
    if (!out)
        throw std::runtime_error("write failed for " + p.string());
}

inline json config_to_json(const ExperimentConfig& c)
{
    json j;
    j["recipe"] = std::string(to_string(c.recipe));
    j["state"] = c.state ? json(state_spec(*c.state)) : json(nullptr);
    j["events"] = c.events ? json(*c.events) : json(nullptr);
    j["runs"] = c.runs ? json(*c.runs) : json(nullptr);
    j["seed"] = c.seed;
    j["n_min"] = c.n_min ? json(*c.n_min) : json(nullptr);
    j["n_max"] = c.n_max ? json(*c.n_max) : json(nullptr);
    j["project"] = c.project;
    j["asymptote"] = c.asymptote ? json(*c.asymptote) : json(nullptr);
    j["asymptote_events"] = c.asymptote_events;
    j["grid_resolution"] = c.grid_resolution;
    j["threshold_delta"] = c.threshold_delta;
    j["tetrahedron"] = c.canonical_tetrahedron ? "canonical" : "default";
    return j;
}

} // namespace tetratomo::harness
