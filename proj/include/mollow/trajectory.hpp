#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mollow/atom.hpp"

// Monte Carlo wave-function simulation of the pulsed fluorescence
// experiment: per trigger, the atom starts in the ground state, evolves
// under the non-Hermitian effective Hamiltonian, and is reset to the ground
// state at each emission. Detected events are thinned by the detection
// efficiency and split onto two detectors for coincidence histogramming.

namespace mollow {

struct PhotonRecord {
    std::int64_t trial_id;
    double t;    // detection time within the pulse (s)
    int channel; // 0 or 1; simulate_stream emits 0, hbt_split assigns
};

struct SimConfig {
    AtomParams params{};
    double pulse_length = 2e-6;          // s
    std::int64_t n_trials = 1;
    double detection_efficiency = 0.0179;
    std::uint64_t rng_seed = 0;
    int n_threads = 0;                   // 0 = hardware concurrency
    double dead_time = 0.0;              // s, per-trial detector dead time
    double dark_rate = 0.0;              // counts/s of uniform background

    void validate() const;
};

// Photon records for all trials, sorted by (trial_id, t). Bit-identical for
// identical seed and config, independent of n_threads (per-trial sub-seeds).
std::vector<PhotonRecord> simulate_stream(const SimConfig& cfg);

// Assign each record independently to channel 0 or 1 with probability 1/2.
// Deterministic given the seed and the input order.
std::vector<PhotonRecord> hbt_split(std::vector<PhotonRecord> records, std::uint64_t rng_seed);

struct CorrelationHistogram {
    double bin_width = 0.0;
    double tau_min = 0.0, tau_max = 0.0; // symmetric, snapped so tau = 0 is a bin center
    std::vector<std::int64_t> counts;
    double norm = 0.0; // expected counts per bin for uncorrelated channels at tau = 0

    std::size_t n_bins() const { return counts.size(); }
    double bin_center(std::size_t i) const {
        return tau_min + (static_cast<double>(i) + 0.5) * bin_width;
    }
    std::vector<double> normalized() const; // counts / norm, estimates g2 * triangle
};

// Histogram of cross-channel delays t(ch1) - t(ch0) within the same trial.
// records must be sorted by (trial_id, t). n_trials = 0 infers the trial
// count as max trial_id + 1. Throws if either channel has no detections
// (normalization undefined). Large inputs are reduced in parallel over
// per-worker partial histograms, split at trial boundaries; the counts are
// identical for any worker count (integer merge).
CorrelationHistogram correlate(std::span<const PhotonRecord> records, double bin_width,
                               double tau_max, double pulse_length,
                               std::int64_t n_trials = 0, int n_threads = 0);

} // namespace mollow
