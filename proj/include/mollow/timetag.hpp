#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mollow/trajectory.hpp"

// Time-tag file format (timetag-v1):
//
//   #timetag-v1 pulse_ns=<T> seed=<seed>
//   <trial_id>\t<t_ps>\t<channel>
//   ...
//
// One record per line; times are integer picoseconds so files round-trip
// exactly and identical seeds give bit-identical files.

namespace mollow {

struct TimetagData {
    double pulse_length = 0.0; // s
    std::uint64_t seed = 0;
    std::vector<PhotonRecord> records;
};

void write_timetag(std::ostream& out, const TimetagData& data);
void write_timetag_file(const std::string& path, const TimetagData& data);

TimetagData read_timetag(std::istream& in);
TimetagData read_timetag_file(const std::string& path);

} // namespace mollow
