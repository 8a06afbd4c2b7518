#include "mollow/trajectory.hpp"
#include "mollow/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <thread>

namespace mollow {

void SimConfig::validate() const {
    params.validate();
    if (!std::isfinite(pulse_length) || pulse_length <= 0.0)
        throw std::invalid_argument("SimConfig: pulse_length must be > 0");
    if (n_trials < 1)
        throw std::invalid_argument("SimConfig: n_trials must be >= 1");
    if (!std::isfinite(detection_efficiency) || detection_efficiency <= 0.0 ||
        detection_efficiency > 1.0)
        throw std::invalid_argument("SimConfig: detection_efficiency must be in (0, 1]");
    if (!std::isfinite(dead_time) || dead_time < 0.0)
        throw std::invalid_argument("SimConfig: dead_time must be >= 0");
    if (!std::isfinite(dark_rate) || dark_rate < 0.0)
        throw std::invalid_argument("SimConfig: dark_rate must be >= 0");
}

namespace {

// No-jump evolution from the ground state under the effective Hamiltonian
// H - (i/2) G |e><e|. A jump resets the atom to |g>, so every inter-jump
// segment follows the same survival curve; it is integrated once on a fine
// fixed grid and jump times are found by bisection plus cubic Hermite
// interpolation (the derivative -G|c_e|^2 is known at the nodes).
struct NoJumpTable {
    double dt = 0.0;
    std::vector<double> survival;  // |c|^2, monotone non-increasing
    std::vector<double> jump_rate; // G |c_e|^2 = -d survival / dt

    double survival_at(double tau) const {
        if (tau <= 0.0) return 1.0;
        double s = tau / dt;
        auto j = static_cast<std::size_t>(s);
        if (j + 1 >= survival.size()) return survival.back();
        return hermite(j, s - static_cast<double>(j));
    }

    // Cubic Hermite value on cell j at local coordinate x in [0,1].
    double hermite(std::size_t j, double x) const {
        const double p0 = survival[j], p1 = survival[j + 1];
        const double m0 = -jump_rate[j] * dt, m1 = -jump_rate[j + 1] * dt;
        const double x2 = x * x, x3 = x2 * x;
        return (2 * x3 - 3 * x2 + 1) * p0 + (x3 - 2 * x2 + x) * m0 +
               (-2 * x3 + 3 * x2) * p1 + (x3 - x2) * m1;
    }

    // Smallest tau with survival(tau) = r, or +inf if survival stays above r
    // up to tau_limit (the remaining pulse time).
    double invert(double r, double tau_limit) const {
        if (survival_at(tau_limit) >= r) return std::numeric_limits<double>::infinity();
        const auto n = survival.size();
        std::size_t hi = std::min(n - 1, static_cast<std::size_t>(std::ceil(tau_limit / dt)));
        while (survival[hi] >= r) {
            if (hi + 1 >= n) return std::numeric_limits<double>::infinity();
            ++hi;
        }
        std::size_t lo = 0;
        while (hi - lo > 1) {
            std::size_t mid = lo + (hi - lo) / 2;
            if (survival[mid] >= r)
                lo = mid;
            else
                hi = mid;
        }
        // Newton refinement of the Hermite cubic within cell lo.
        const double p0 = survival[lo], p1 = survival[lo + 1];
        const double m0 = -jump_rate[lo] * dt, m1 = -jump_rate[lo + 1] * dt;
        double x = 0.5;
        if (p0 > p1) x = std::clamp((p0 - r) / (p0 - p1), 0.0, 1.0);
        for (int it = 0; it < 8; ++it) {
            const double f = hermite(lo, x) - r;
            const double x2 = x * x;
            const double df = (6 * x2 - 6 * x) * p0 + (3 * x2 - 4 * x + 1) * m0 +
                              (-6 * x2 + 6 * x) * p1 + (3 * x2 - 2 * x) * m1;
            if (df == 0.0) break;
            x = std::clamp(x - f / df, 0.0, 1.0);
        }
        return (static_cast<double>(lo) + x) * dt;
    }
};

NoJumpTable build_no_jump_table(const AtomParams& prm, double pulse_length) {
    const double G = prm.gamma, W = prm.omega, D = prm.delta;
    const double scale = std::max({W, std::abs(D), G});
    double h = 0.05 / scale;
    h = std::min(h, pulse_length / 1000.0);
    h = std::max(h, pulse_length / 4e6);
    auto n = static_cast<std::size_t>(std::ceil(pulse_length / h)) + 1;
    h = pulse_length / static_cast<double>(n - 1);

    NoJumpTable tbl;
    tbl.dt = h;
    tbl.survival.resize(n);
    tbl.jump_rate.resize(n);

    // RK4 on c' = -i H_eff c, c = (c_g, c_e), from c = (1, 0).
    using cplx = std::complex<double>;
    const cplx half_w(0.0, -0.5 * W);        // -i W/2
    const cplx e_diag(-0.5 * G, D);          // (iD - G/2)
    auto deriv = [&](const cplx c[2], cplx out[2]) {
        out[0] = half_w * c[1];
        out[1] = half_w * c[0] + e_diag * c[1];
    };
    cplx c[2] = {1.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        tbl.survival[i] = std::norm(c[0]) + std::norm(c[1]);
        tbl.jump_rate[i] = G * std::norm(c[1]);
        if (i + 1 == n) break;
        cplx k1[2], k2[2], k3[2], k4[2], tmp[2];
        deriv(c, k1);
        tmp[0] = c[0] + 0.5 * h * k1[0]; tmp[1] = c[1] + 0.5 * h * k1[1];
        deriv(tmp, k2);
        tmp[0] = c[0] + 0.5 * h * k2[0]; tmp[1] = c[1] + 0.5 * h * k2[1];
        deriv(tmp, k3);
        tmp[0] = c[0] + h * k3[0]; tmp[1] = c[1] + h * k3[1];
        deriv(tmp, k4);
        c[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        c[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
    return tbl;
}

void run_trial(std::int64_t trial, const SimConfig& cfg, const NoJumpTable& tbl,
               std::vector<PhotonRecord>& out) {
    rng::Xoshiro256pp gen(rng::derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(trial)));
    const double T = cfg.pulse_length;
    std::size_t first = out.size();

    double t0 = 0.0;
    while (t0 < T) {
        const double r = gen.next_double_open0();
        const double budget = T - t0;
        double tau = tbl.invert(r, budget);
        if (!(tau < budget)) break; // survived to pulse end
        if (!(tau > 0.0)) tau = 1e-9 * tbl.dt;
        const double t_jump = t0 + tau;
        const double thin = gen.next_double();
        if (thin < cfg.detection_efficiency)
            out.push_back(PhotonRecord{trial, t_jump, 0});
        t0 = t_jump;
    }

    if (cfg.dark_rate > 0.0) {
        double t = 0.0;
        while (true) {
            t += -std::log(gen.next_double_open0()) / cfg.dark_rate;
            if (t >= T) break;
            out.push_back(PhotonRecord{trial, t, 0});
        }
        std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
                  [](const PhotonRecord& a, const PhotonRecord& b) { return a.t < b.t; });
    }

    if (cfg.dead_time > 0.0 && out.size() > first) {
        std::size_t keep = first;
        double last = -std::numeric_limits<double>::infinity();
        for (std::size_t i = first; i < out.size(); ++i) {
            if (out[i].t - last >= cfg.dead_time) {
                out[keep++] = out[i];
                last = out[keep - 1].t;
            }
        }
        out.resize(keep);
    }
}

} // namespace

std::vector<PhotonRecord> simulate_stream(const SimConfig& cfg) {
    cfg.validate();
    const NoJumpTable tbl = build_no_jump_table(cfg.params, cfg.pulse_length);

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    auto n_workers = static_cast<std::int64_t>(cfg.n_threads > 0 ? cfg.n_threads : hw);
    n_workers = std::min<std::int64_t>(n_workers, cfg.n_trials);

    std::vector<std::vector<PhotonRecord>> parts(static_cast<std::size_t>(n_workers));
    auto worker = [&](std::int64_t w) {
        const std::int64_t lo = cfg.n_trials * w / n_workers;
        const std::int64_t hi = cfg.n_trials * (w + 1) / n_workers;
        auto& buf = parts[static_cast<std::size_t>(w)];
        for (std::int64_t trial = lo; trial < hi; ++trial)
            run_trial(trial, cfg, tbl, buf);
    };

    if (n_workers == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(n_workers));
        for (std::int64_t w = 0; w < n_workers; ++w) threads.emplace_back(worker, w);
        for (auto& th : threads) th.join();
    }

    std::vector<PhotonRecord> records;
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    records.reserve(total);
    for (auto& p : parts)
        records.insert(records.end(), p.begin(), p.end());
    return records;
}

std::vector<PhotonRecord> hbt_split(std::vector<PhotonRecord> records, std::uint64_t rng_seed) {
    rng::Xoshiro256pp gen(rng_seed);
    for (auto& r : records) r.channel = gen.next_double() < 0.5 ? 0 : 1;
    return records;
}

std::vector<double> CorrelationHistogram::normalized() const {
    std::vector<double> g(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        g[i] = static_cast<double>(counts[i]) / norm;
    return g;
}

namespace {

struct PartialHistogram {
    std::vector<std::int64_t> counts;
    std::int64_t n0 = 0, n1 = 0;
    std::int64_t max_trial = -1;
};

void correlate_range(std::span<const PhotonRecord> records, std::size_t begin,
                     std::size_t end, double bin_width, double tau_min, double tau_max,
                     PartialHistogram& out) {
    std::size_t i = begin;
    std::vector<double> t0s, t1s;
    while (i < end) {
        const std::int64_t trial = records[i].trial_id;
        out.max_trial = std::max(out.max_trial, trial);
        t0s.clear();
        t1s.clear();
        for (; i < end && records[i].trial_id == trial; ++i) {
            if (records[i].channel == 0)
                t0s.push_back(records[i].t);
            else
                t1s.push_back(records[i].t);
        }
        out.n0 += static_cast<std::int64_t>(t0s.size());
        out.n1 += static_cast<std::int64_t>(t1s.size());
        for (double ta : t0s) {
            for (double tb : t1s) {
                const double tau = tb - ta;
                if (tau < tau_min || tau >= tau_max) continue;
                auto bin = static_cast<std::size_t>((tau - tau_min) / bin_width);
                if (bin < out.counts.size()) ++out.counts[bin];
            }
        }
    }
}

} // namespace

CorrelationHistogram correlate(std::span<const PhotonRecord> records, double bin_width,
                               double tau_max, double pulse_length, std::int64_t n_trials,
                               int n_threads) {
    if (!std::isfinite(bin_width) || bin_width <= 0.0)
        throw std::invalid_argument("correlate: bin_width must be > 0");
    if (!(tau_max >= 0.5 * bin_width))
        throw std::invalid_argument("correlate: tau_max must cover at least one bin");
    if (!std::isfinite(pulse_length) || pulse_length <= 0.0)
        throw std::invalid_argument("correlate: pulse_length must be > 0");
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& a = records[i - 1];
        const auto& b = records[i];
        if (b.trial_id < a.trial_id || (b.trial_id == a.trial_id && b.t < a.t))
            throw std::invalid_argument("correlate: records not sorted by (trial_id, t)");
    }

    // Snap to a symmetric, bin-centered grid: tau = 0 sits mid-bin.
    const auto half_bins = static_cast<std::size_t>(std::llround(tau_max / bin_width));
    const double tmax = (static_cast<double>(half_bins) + 0.5) * bin_width;
    CorrelationHistogram h;
    h.bin_width = bin_width;
    h.tau_min = -tmax;
    h.tau_max = tmax;
    h.counts.assign(2 * half_bins + 1, 0);

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    std::size_t n_workers = n_threads > 0 ? static_cast<std::size_t>(n_threads) : hw;
    if (records.size() < 10000) n_workers = 1;

    // Partition at trial boundaries so every same-trial pair lands in
    // exactly one worker; integer merge makes the result partition-free.
    std::vector<std::size_t> cuts{0};
    for (std::size_t w = 1; w < n_workers; ++w) {
        std::size_t pos = records.size() * w / n_workers;
        while (pos > cuts.back() && pos < records.size() &&
               records[pos].trial_id == records[pos - 1].trial_id)
            ++pos;
        if (pos > cuts.back() && pos <= records.size()) cuts.push_back(pos);
    }
    cuts.push_back(records.size());

    std::vector<PartialHistogram> parts(cuts.size() - 1);
    for (auto& p : parts) p.counts.assign(h.counts.size(), 0);
    auto worker = [&](std::size_t w) {
        correlate_range(records, cuts[w], cuts[w + 1], bin_width, h.tau_min, h.tau_max,
                        parts[w]);
    };
    if (parts.size() == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(parts.size());
        for (std::size_t w = 0; w < parts.size(); ++w) threads.emplace_back(worker, w);
        for (auto& th : threads) th.join();
    }

    std::int64_t n0 = 0, n1 = 0, max_trial = -1;
    for (const auto& p : parts) {
        n0 += p.n0;
        n1 += p.n1;
        max_trial = std::max(max_trial, p.max_trial);
        for (std::size_t i = 0; i < h.counts.size(); ++i) h.counts[i] += p.counts[i];
    }

    if (n_trials <= 0) n_trials = max_trial + 1;
    if (n_trials <= 0 || n0 == 0 || n1 == 0)
        throw std::runtime_error(
            "correlate: need detections in both channels to normalize");
    h.norm = static_cast<double>(n0) * static_cast<double>(n1) * bin_width /
             (static_cast<double>(n_trials) * pulse_length);
    return h;
}

} // namespace mollow
