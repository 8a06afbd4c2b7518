// Command-line front end: spectra, correlations, simulated photon streams,
// coincidence histograms, and model fits. All interface units are MHz, ns,
// pW; everything internal is angular frequency and seconds.

#include "mollow/correlation.hpp"
#include "mollow/fit_models.hpp"
#include "mollow/instrument.hpp"
#include "mollow/rng.hpp"
#include "mollow/sensor.hpp"
#include "mollow/spectrum.hpp"
#include "mollow/timetag.hpp"
#include "mollow/trajectory.hpp"
#include "mollow/units.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace mollow;

std::string fmt(double v) {
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
    return std::string(buf, r.ptr);
}

struct Csv {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
};

Csv read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    Csv csv;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        if (csv.columns.empty()) {
            while (std::getline(ss, cell, ',')) csv.columns.push_back(cell);
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            double v{};
            auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (r.ec != std::errc{})
                throw std::runtime_error("bad number in " + path + ": " + cell);
            row.push_back(v);
        }
        if (row.size() != csv.columns.size())
            throw std::runtime_error("ragged CSV row in " + path);
        csv.rows.push_back(std::move(row));
    }
    if (csv.columns.empty() || csv.rows.empty())
        throw std::runtime_error("empty CSV: " + path);
    return csv;
}

void write_csv(const std::string& path, const std::vector<std::string>& comments,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& c : comments) f << "# " << c << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
        f << columns[i] << (i + 1 < columns.size() ? "," : "\n");
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            f << fmt(row[i]) << (i + 1 < row.size() ? "," : "\n");
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

// Column picked by name, with a positional fallback and a unit conversion
// keyed to the conventional column names.
std::vector<double> take_column(const Csv& csv, const std::string& name, int fallback,
                                double scale) {
    int idx = csv.column(name);
    if (idx < 0) idx = fallback;
    if (idx < 0 || idx >= static_cast<int>(csv.columns.size()))
        throw std::runtime_error("CSV is missing column " + name);
    std::vector<double> v(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        v[i] = csv.rows[i][static_cast<std::size_t>(idx)] * scale;
    return v;
}

std::optional<std::vector<double>> maybe_column(const Csv& csv, const std::string& name,
                                                double scale) {
    int idx = csv.column(name);
    if (idx < 0) return std::nullopt;
    std::vector<double> v(csv.rows.size());
    for (std::size_t i = 0; i < csv.rows.size(); ++i)
        v[i] = csv.rows[i][static_cast<std::size_t>(idx)] * scale;
    return v;
}

void write_fit_json(const std::string& path, const std::string& kind, const FitResult& res,
                    const std::vector<std::pair<std::string, double>>& extra = {}) {
    nlohmann::json j;
    j["fit"] = kind;
    j["status"] = to_string(res.status);
    j["names"] = res.names;
    j["values"] = std::vector<double>(res.values.data(), res.values.data() + res.values.size());
    j["sigmas"] = std::vector<double>(res.sigmas.data(), res.sigmas.data() + res.sigmas.size());
    j["reduced_chi2"] = res.reduced_chi2;
    j["iterations"] = res.iterations;
    for (const auto& [k, v] : extra) j[k] = v;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << j.dump() << "\n"; // JSON-lines: one object per fit
}

int run(int argc, char** argv) {
    CLI::App app{"Resonance-fluorescence toolkit: Mollow-triplet spectra, photon "
                 "correlations, Monte Carlo photon streams, and model fits"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file presetting any flag (CLI overrides)");

    // ---- spectrum ----------------------------------------------------
    auto* sp = app.add_subcommand("spectrum", "ideal and instrument-filtered emission spectra");
    double sp_gamma = rb87_d2_linewidth_mhz, sp_omega = 25.0, sp_delta = 0.0;
    double sp_cavity = 3.92, sp_reflection = 0.076, sp_span = 150.0;
    std::size_t sp_points = 6001;
    std::string sp_out;
    sp->add_option("--gamma-mhz", sp_gamma, "natural linewidth / 2pi (MHz)");
    sp->add_option("--omega-mhz", sp_omega, "Rabi frequency / 2pi (MHz)")->required();
    sp->add_option("--delta-mhz", sp_delta, "drive detuning / 2pi (MHz), negative = red");
    sp->add_option("--cavity-mhz", sp_cavity, "filter cavity FWHM (MHz)");
    sp->add_option("--reflection", sp_reflection, "laser-reflection power fraction");
    sp->add_option("--span-mhz", sp_span, "half-width of the frequency grid (MHz)");
    sp->add_option("--points", sp_points, "grid points");
    sp->add_option("--out", sp_out, "output CSV")->required();

    // ---- g2 ----------------------------------------------------------
    auto* g2c = app.add_subcommand("g2", "second-order correlation with the pulse window");
    double g2_gamma = rb87_d2_linewidth_mhz, g2_omega = 0.0, g2_delta = 0.0, g2_pulse_us = 2.0;
    double g2_taumax_ns = 200.0;
    std::size_t g2_points = 801;
    std::string g2_out;
    g2c->add_option("--gamma-mhz", g2_gamma, "natural linewidth / 2pi (MHz)");
    g2c->add_option("--omega-mhz", g2_omega, "Rabi frequency / 2pi (MHz)")->required();
    g2c->add_option("--delta-mhz", g2_delta, "drive detuning / 2pi (MHz)");
    g2c->add_option("--pulse-us", g2_pulse_us, "probe pulse length (us)");
    g2c->add_option("--taumax-ns", g2_taumax_ns, "maximum delay (ns)");
    g2c->add_option("--points", g2_points, "grid points (symmetric in tau)");
    g2c->add_option("--out", g2_out, "output CSV")->required();

    // ---- simulate ------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Monte Carlo photon stream (time-tag file)");
    SimConfig sim_cfg;
    double sim_gamma = rb87_d2_linewidth_mhz, sim_omega = 0.0, sim_delta = 0.0,
           sim_pulse_us = 2.0;
    std::uint64_t sim_seed = 1;
    std::string sim_out;
    sim->add_option("--gamma-mhz", sim_gamma, "natural linewidth / 2pi (MHz)");
    sim->add_option("--omega-mhz", sim_omega, "Rabi frequency / 2pi (MHz)")->required();
    sim->add_option("--delta-mhz", sim_delta, "drive detuning / 2pi (MHz)");
    sim->add_option("--pulse-us", sim_pulse_us, "probe pulse length (us)");
    sim->add_option("--trials", sim_cfg.n_trials, "number of triggered pulses")->required();
    sim->add_option("--seed", sim_seed, "RNG seed")->required();
    sim->add_option("--eta", sim_cfg.detection_efficiency, "total detection efficiency");
    sim->add_option("--threads", sim_cfg.n_threads, "worker threads (0 = all cores)");
    sim->add_option("--dead-ns", sim_cfg.dead_time, "detector dead time (ns)");
    sim->add_option("--dark-cps", sim_cfg.dark_rate, "dark count rate (counts/s)");
    sim->add_option("--out", sim_out, "output time-tag file")->required();

    // ---- correlate -----------------------------------------------------
    auto* corr = app.add_subcommand("correlate", "coincidence histogram from a time-tag file");
    std::string corr_in, corr_out;
    double corr_bin_ns = 1.0, corr_taumax_ns = 150.0;
    corr->add_option("--in", corr_in, "input time-tag file")->required();
    corr->add_option("--bin-ns", corr_bin_ns, "histogram bin width (ns)")->required();
    corr->add_option("--taumax-ns", corr_taumax_ns, "maximum delay (ns)")->required();
    corr->add_option("--out", corr_out, "output CSV")->required();

    // ---- cross ---------------------------------------------------------
    auto* cross = app.add_subcommand("cross", "filtered sideband cross-correlation");
    double cr_gamma = rb87_d2_linewidth_mhz, cr_omega = 0.0, cr_delta = 0.0, cr_filter = 20.0;
    double cr_taumax_ns = 200.0;
    std::size_t cr_points = 401;
    std::string cr_out;
    cross->add_option("--gamma-mhz", cr_gamma, "natural linewidth / 2pi (MHz)");
    cross->add_option("--omega-mhz", cr_omega, "Rabi frequency / 2pi (MHz)")->required();
    cross->add_option("--delta-mhz", cr_delta, "drive detuning / 2pi (MHz)")->required();
    cross->add_option("--filter-mhz", cr_filter, "sideband filter FWHM (MHz)");
    cross->add_option("--taumax-ns", cr_taumax_ns, "maximum delay (ns)");
    cross->add_option("--points", cr_points, "grid points (symmetric in tau)");
    cross->add_option("--out", cr_out, "output CSV")->required();

    // ---- fit -----------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "least-squares fits of the models to data");
    fit->require_subcommand(1);
    std::string fit_in, fit_out, fit_curve_out;
    double fit_gamma = rb87_d2_linewidth_mhz, fit_cavity = 3.92, fit_reflection = 0.076,
           fit_pulse_us = 2.0;
    auto add_io = [&](CLI::App* sub) {
        sub->add_option("--in", fit_in, "input CSV")->required();
        sub->add_option("--out", fit_out, "output JSON-lines")->required();
        sub->add_option("--curve-out", fit_curve_out,
                        "optional CSV of the fitted model on a dense grid");
        sub->add_option("--gamma-mhz", fit_gamma, "fixed natural linewidth / 2pi (MHz)");
    };
    auto* fsub_spectrum = fit->add_subcommand("spectrum", "triplet spectrum through the instrument");
    add_io(fsub_spectrum);
    fsub_spectrum->add_option("--cavity-mhz", fit_cavity, "fixed cavity FWHM (MHz)");
    fsub_spectrum->add_option("--reflection", fit_reflection, "fixed reflection fraction");
    auto* fsub_g2 = fit->add_subcommand("g2", "Rabi-oscillation correlation with pulse window");
    add_io(fsub_g2);
    fsub_g2->add_option("--pulse-us", fit_pulse_us, "fixed pulse length (us)");
    auto* fit_sat = fit->add_subcommand("saturation", "saturation of the detected rate");
    add_io(fit_sat);
    auto* fit_two = fit->add_subcommand("twoexp", "two-exponential bunching asymmetry");
    add_io(fit_two);

    CLI11_PARSE(app, argc, argv);

    if (*sp) {
        AtomParams p{mhz_to_angular(sp_gamma), mhz_to_angular(sp_omega),
                     mhz_to_angular(sp_delta)};
        auto grid = uniform_grid(-mhz_to_angular(sp_span), mhz_to_angular(sp_span), sp_points);
        Spectrum ideal = (sp_delta == 0.0) ? mollow_spectrum_analytic(p, grid)
                                           : spectrum_numeric(p, grid);
        Spectrum seen = convolve_with_cavity(
            add_reflection(ideal, ReflectionBackground{sp_reflection}),
            mhz_to_angular(sp_cavity));
        std::vector<std::vector<double>> rows(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            rows[i] = {angular_to_mhz(grid[i]), seen.density[i], ideal.density[i]};
        write_csv(sp_out,
                  {"densities in arbitrary units per (rad/s)",
                   "elastic_weight_ideal=" + fmt(ideal.elastic_weight)},
                  {"freq_mhz", "filtered_density", "ideal_density"}, rows);
        return 0;
    }

    if (*g2c) {
        AtomParams p{mhz_to_angular(g2_gamma), mhz_to_angular(g2_omega),
                     mhz_to_angular(g2_delta)};
        const double pulse = g2_pulse_us * 1e-6;
        const double taumax = ns_to_s(g2_taumax_ns);
        if (g2_points < 3) throw std::runtime_error("g2: need at least 3 points");
        // Symmetric grid from the one-sided numeric curve.
        std::size_t half = g2_points / 2;
        std::vector<double> tau_pos(half + 1);
        for (std::size_t i = 0; i <= half; ++i)
            tau_pos[i] = taumax * static_cast<double>(i) / static_cast<double>(half);
        auto gnum = g2_numeric(p, tau_pos);
        const bool resonant = g2_delta == 0.0;
        std::vector<std::string> cols = resonant
            ? std::vector<std::string>{"tau_ns", "g2_analytic", "g2_numeric", "g2_windowed"}
            : std::vector<std::string>{"tau_ns", "g2_numeric", "g2_windowed"};
        std::vector<std::vector<double>> rows;
        for (std::size_t k = 0; k < 2 * half + 1; ++k) {
            const double tau = -taumax + static_cast<double>(k) * taumax / half;
            const std::size_t i = k >= half ? k - half : half - k; // |tau| index
            const double tri = triangle_window(tau, pulse);
            if (resonant) {
                const double ga = g2_analytic(p, tau);
                rows.push_back({s_to_ns(tau), ga, gnum[i], ga * tri});
            } else {
                rows.push_back({s_to_ns(tau), gnum[i], gnum[i] * tri});
            }
        }
        write_csv(g2_out, {"pulse_us=" + fmt(g2_pulse_us)}, cols, rows);
        return 0;
    }

    if (*sim) {
        sim_cfg.params = AtomParams{mhz_to_angular(sim_gamma), mhz_to_angular(sim_omega),
                                    mhz_to_angular(sim_delta)};
        sim_cfg.pulse_length = sim_pulse_us * 1e-6;
        sim_cfg.rng_seed = sim_seed;
        sim_cfg.dead_time = ns_to_s(sim_cfg.dead_time); // flag is in ns
        auto records = simulate_stream(sim_cfg);
        // HBT beam splitter with a sub-seed derived from the master seed.
        records = hbt_split(std::move(records), rng::derive_seed(sim_seed, 0x48425453ull));
        TimetagData data;
        data.pulse_length = sim_cfg.pulse_length;
        data.seed = sim_seed;
        data.records = std::move(records);
        write_timetag_file(sim_out, data);
        std::cerr << data.records.size() << " records over " << sim_cfg.n_trials
                  << " trials\n";
        return 0;
    }

    if (*corr) {
        TimetagData data = read_timetag_file(corr_in);
        auto h = correlate(data.records, ns_to_s(corr_bin_ns), ns_to_s(corr_taumax_ns),
                           data.pulse_length);
        auto g = h.normalized();
        std::vector<std::vector<double>> rows(h.n_bins());
        for (std::size_t i = 0; i < h.n_bins(); ++i) {
            const double err = std::sqrt(static_cast<double>(std::max<std::int64_t>(
                                   h.counts[i], 1))) / h.norm;
            rows[i] = {s_to_ns(h.bin_center(i)), g[i], err,
                       static_cast<double>(h.counts[i])};
        }
        write_csv(corr_out,
                  {"norm=" + fmt(h.norm), "pulse_ns=" + fmt(s_to_ns(data.pulse_length)),
                   "normalized counts estimate g2(tau) x triangle(tau)"},
                  {"tau_ns", "g2_windowed", "y_err", "counts"}, rows);
        return 0;
    }

    if (*cross) {
        AtomParams p{mhz_to_angular(cr_gamma), mhz_to_angular(cr_omega),
                     mhz_to_angular(cr_delta)};
        SensorConfig cfg = sideband_sensors(p, mhz_to_angular(cr_filter));
        CompositeSystem sys(p, cfg);
        if (cr_points < 3) throw std::runtime_error("cross: need at least 3 points");
        std::vector<double> taus(cr_points);
        for (std::size_t i = 0; i < cr_points; ++i)
            taus[i] = ns_to_s(cr_taumax_ns) *
                      (2.0 * static_cast<double>(i) / static_cast<double>(cr_points - 1) - 1.0);
        CrossCorrelation c = filtered_cross_correlation(sys, taus);
        std::vector<std::vector<double>> rows(c.tau.size());
        for (std::size_t i = 0; i < c.tau.size(); ++i)
            rows[i] = {s_to_ns(c.tau[i]), c.g[i]};
        write_csv(cr_out,
                  {"filter centers at +-" + fmt(angular_to_mhz(generalized_rabi(p))) +
                       " MHz, FWHM " + fmt(cr_filter) + " MHz",
                   "tau > 0: higher-energy sideband photon after lower-energy one"},
                  {"tau_ns", "g_cross"}, rows);
        return 0;
    }

    if (*fit) {
        if (*fsub_spectrum) {
            Csv csv = read_csv(fit_in);
            DataSeries d;
            d.x = take_column(csv, "freq_mhz", 0, two_pi * 1e6);
            d.y = take_column(csv, "filtered_density", 1, 1.0);
            if (auto e = maybe_column(csv, "y_err", 1.0)) d.y_err = *e;
            SpectrumFitFixed fixed;
            fixed.gamma = mhz_to_angular(fit_gamma);
            fixed.cavity_fwhm = mhz_to_angular(fit_cavity);
            fixed.reflection_fraction = fit_reflection;
            FitResult res = mollow::fit_spectrum(d, fixed);
            write_fit_json(fit_out, "spectrum", res,
                           {{"omega_mhz", angular_to_mhz(res.value("omega"))},
                            {"omega_mhz_sigma", angular_to_mhz(res.sigma("omega"))}});
            if (!fit_curve_out.empty()) {
                auto grid = uniform_grid(*std::min_element(d.x.begin(), d.x.end()),
                                         *std::max_element(d.x.begin(), d.x.end()), 801);
                auto curve = spectrum_model_curve(fixed, res.value("omega"),
                                                  res.value("amplitude"),
                                                  res.value("offset"), grid);
                std::vector<std::vector<double>> rows(grid.size());
                for (std::size_t i = 0; i < grid.size(); ++i)
                    rows[i] = {angular_to_mhz(grid[i]), curve[i]};
                write_csv(fit_curve_out, {}, {"freq_mhz", "model_density"}, rows);
            }
            std::cerr << "status " << to_string(res.status) << ", omega = "
                      << fmt(angular_to_mhz(res.value("omega"))) << " MHz\n";
            return res.converged() ? 0 : 3;
        }
        if (*fsub_g2) {
            Csv csv = read_csv(fit_in);
            DataSeries d;
            d.x = take_column(csv, "tau_ns", 0, 1e-9);
            d.y = take_column(csv, "g2_windowed", 1, 1.0);
            if (auto e = maybe_column(csv, "y_err", 1.0)) d.y_err = *e;
            G2FitFixed fixed;
            fixed.gamma = mhz_to_angular(fit_gamma);
            fixed.pulse_length = fit_pulse_us * 1e-6;
            FitResult res = mollow::fit_g2(d, fixed);
            write_fit_json(fit_out, "g2", res,
                           {{"omega_mhz", angular_to_mhz(res.value("omega"))},
                            {"omega_mhz_sigma", angular_to_mhz(res.sigma("omega"))}});
            if (!fit_curve_out.empty()) {
                auto grid = uniform_grid(*std::min_element(d.x.begin(), d.x.end()),
                                         *std::max_element(d.x.begin(), d.x.end()), 801);
                auto curve =
                    g2_model_curve(fixed, res.value("omega"), res.value("amplitude"), grid);
                std::vector<std::vector<double>> rows(grid.size());
                for (std::size_t i = 0; i < grid.size(); ++i)
                    rows[i] = {s_to_ns(grid[i]), curve[i]};
                write_csv(fit_curve_out, {}, {"tau_ns", "model_g2_windowed"}, rows);
            }
            std::cerr << "status " << to_string(res.status) << ", omega = "
                      << fmt(angular_to_mhz(res.value("omega"))) << " MHz\n";
            return res.converged() ? 0 : 3;
        }
        if (*fit_sat) {
            Csv csv = read_csv(fit_in);
            DataSeries d;
            d.x = take_column(csv, "power_pw", 0, 1e-12);
            d.y = take_column(csv, "rate_cps", 1, 1.0);
            if (auto e = maybe_column(csv, "y_err", 1.0)) d.y_err = *e;
            FitResult res = fit_saturation(d, mhz_to_angular(fit_gamma));
            write_fit_json(fit_out, "saturation", res,
                           {{"p_sat_pw", res.value("p_sat") * 1e12},
                            {"eta_percent", res.value("eta") * 100.0}});
            if (!fit_curve_out.empty()) {
                SaturationModel m{res.value("p_sat"), res.value("eta")};
                auto grid = uniform_grid(*std::min_element(d.x.begin(), d.x.end()),
                                         *std::max_element(d.x.begin(), d.x.end()), 401);
                std::vector<std::vector<double>> rows(grid.size());
                for (std::size_t i = 0; i < grid.size(); ++i)
                    rows[i] = {grid[i] * 1e12,
                               saturation_rate(m, mhz_to_angular(fit_gamma), grid[i])};
                write_csv(fit_curve_out, {}, {"power_pw", "model_rate_cps"}, rows);
            }
            std::cerr << "status " << to_string(res.status) << ", P_sat = "
                      << fmt(res.value("p_sat") * 1e12) << " pW, eta = "
                      << fmt(res.value("eta") * 100.0) << " %\n";
            return res.converged() ? 0 : 3;
        }
        if (*fit_two) {
            Csv csv = read_csv(fit_in);
            CrossCorrelation c;
            c.tau = take_column(csv, "tau_ns", 0, 1e-9);
            c.g = take_column(csv, "g_cross", 1, 1.0);
            FitResult res = fit_two_exponentials(c);
            write_fit_json(fit_out, "twoexp", res,
                           {{"tau_rise_ns", s_to_ns(res.value("tau_rise"))},
                            {"tau_fall_ns", s_to_ns(res.value("tau_fall"))}});
            if (!fit_curve_out.empty()) {
                // Peak position rule matches the fit: grid argmax of the input.
                std::size_t pk = 0;
                for (std::size_t i = 1; i < c.g.size(); ++i)
                    if (c.g[i] > c.g[pk]) pk = i;
                const double tau_peak = c.tau[pk];
                auto grid = uniform_grid(c.tau.front(), c.tau.back(), 801);
                std::vector<std::vector<double>> rows(grid.size());
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    const double dtau = grid[i] - tau_peak;
                    const double m =
                        res.value("baseline") +
                        res.value("amplitude") *
                            (dtau < 0 ? std::exp(dtau / res.value("tau_rise"))
                                      : std::exp(-dtau / res.value("tau_fall")));
                    rows[i] = {s_to_ns(grid[i]), m};
                }
                write_csv(fit_curve_out, {}, {"tau_ns", "model_g"}, rows);
            }
            std::cerr << "status " << to_string(res.status) << ", tau_rise = "
                      << fmt(s_to_ns(res.value("tau_rise"))) << " ns, tau_fall = "
                      << fmt(s_to_ns(res.value("tau_fall"))) << " ns\n";
            return res.converged() ? 0 : 3;
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
