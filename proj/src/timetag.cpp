#include "mollow/timetag.hpp"
#include "mollow/units.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace mollow {

namespace {

// Locale-independent number formatting.
std::string format_double(double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 15);
    return std::string(buf, r.ptr);
}

double parse_double(std::string_view sv, const char* what) {
    double v{};
    auto r = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (r.ec != std::errc{} || r.ptr != sv.data() + sv.size())
        throw std::runtime_error(std::string("timetag: bad ") + what);
    return v;
}

std::int64_t parse_i64(std::string_view sv, const char* what) {
    std::int64_t v{};
    auto r = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (r.ec != std::errc{} || r.ptr != sv.data() + sv.size())
        throw std::runtime_error(std::string("timetag: bad ") + what);
    return v;
}

} // namespace

void write_timetag(std::ostream& out, const TimetagData& data) {
    const double pulse_ns = s_to_ns(data.pulse_length);
    out << "#timetag-v1 pulse_ns=" << format_double(pulse_ns) << " seed=" << data.seed
        << "\n";
    for (const auto& r : data.records) {
        const auto ps = static_cast<std::int64_t>(std::llround(r.t * 1e12));
        out << r.trial_id << '\t' << ps << '\t' << r.channel << '\n';
    }
}

void write_timetag_file(const std::string& path, const TimetagData& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("timetag: cannot open for writing: " + path);
    write_timetag(f, data);
    if (!f) throw std::runtime_error("timetag: write failed: " + path);
}

TimetagData read_timetag(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("timetag: empty input");
    constexpr std::string_view magic = "#timetag-v1 ";
    if (line.rfind(magic, 0) != 0)
        throw std::runtime_error("timetag: missing #timetag-v1 header");

    TimetagData data;
    {
        std::istringstream hs(line.substr(magic.size()));
        std::string kv;
        bool have_pulse = false;
        while (hs >> kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) continue;
            std::string_view key(kv.data(), eq);
            std::string_view val(kv.data() + eq + 1, kv.size() - eq - 1);
            if (key == "pulse_ns") {
                data.pulse_length = ns_to_s(parse_double(val, "pulse_ns"));
                have_pulse = true;
            } else if (key == "seed") {
                data.seed = static_cast<std::uint64_t>(parse_i64(val, "seed"));
            }
        }
        if (!have_pulse)
            throw std::runtime_error("timetag: header missing pulse_ns");
    }

    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::string_view sv = line;
        auto tab1 = sv.find('\t');
        auto tab2 = tab1 == std::string_view::npos ? tab1 : sv.find('\t', tab1 + 1);
        if (tab2 == std::string_view::npos)
            throw std::runtime_error("timetag: malformed record line");
        PhotonRecord r;
        r.trial_id = parse_i64(sv.substr(0, tab1), "trial_id");
        r.t = static_cast<double>(parse_i64(sv.substr(tab1 + 1, tab2 - tab1 - 1), "t_ps")) * 1e-12;
        r.channel = static_cast<int>(parse_i64(sv.substr(tab2 + 1), "channel"));
        data.records.push_back(r);
    }
    return data;
}

TimetagData read_timetag_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("timetag: cannot open: " + path);
    return read_timetag(f);
}

} // namespace mollow
