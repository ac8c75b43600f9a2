#pragma once

// Batch commands behind the softcue executable. Each command returns a result
// object; the executable only parses flags and writes files.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "softcue/softcue.hpp"

namespace softcue::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr const char* tool_name = "softcue";
inline constexpr const char* tool_version = "1.0.0";
inline constexpr int report_schema = 1;

/// Flags shared by every command.
struct Common {
    std::size_t window = 100;
    std::size_t downsample = 50;
    double jnd = 0.10;
    double gain_threshold = 0.10;
    std::uint64_t seed = 0;
};

struct Result {
    json results = json::object();
    std::vector<std::string> warnings;
    json errors = json::array();
    std::optional<std::string> csv;  // plot-ready table, when the command has one

    int exit_code() const { return errors.empty() ? 0 : 1; }

    void add_error(const std::string& item, const std::exception& e) {
        json entry{{"item", item}, {"error", e.what()}};
        if (const auto* pe = dynamic_cast<const ParseError*>(&e)) entry["line"] = pe->line();
        errors.push_back(std::move(entry));
    }
};

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

inline json make_report(const std::string& command, const json& settings, const Result& result,
                        bool with_timestamp) {
    json report;
    report["schema"] = report_schema;
    report["tool"] = tool_name;
    report["version"] = tool_version;
    report["command"] = command;
    if (with_timestamp) report["timestamp"] = utc_timestamp();
    report["settings"] = settings;
    report["warnings"] = result.warnings;
    report["errors"] = result.errors;
    report["results"] = result.results;
    return report;
}

namespace detail {

inline std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return in;
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::string csv_line(std::initializer_list<std::string> fields) {
    std::string line;
    for (const auto& f : fields) {
        if (!line.empty()) line += ',';
        line += f;
    }
    return line + '\n';
}

inline std::string num(double v) { return csv::format(v); }

}  // namespace detail

// ---------------------------------------------------------------- cues

/// Per-trial cues for every `*.csv` in `dir`, in filename order.
inline Result cues(const fs::path& dir, const Common& common) {
    Result result;
    if (!fs::is_directory(dir)) throw ArgumentError("cues: not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) result.warnings.push_back("no trace files in " + dir.string());

    struct TrialCues {
        std::string trial;
        LineFit rate;
        double amplitude;
        StiffnessEstimate peak;
        SlopeObservation slope;
        double work;
        double recursive;
        std::optional<double> recognition;
    };
    std::vector<TrialCues> trials;
    const CueOptions opt{common.window, 0.05};
    for (const auto& file : files) {
        const std::string trial = file.stem().string();
        try {
            auto in = detail::open_input(file);
            const Recording rec = load_recording(in);
            if (!rec.displacement) throw ArgumentError("trace has no displacement channel");
            TrialCues c{trial, force_rate(rec.force, opt), displacement_amplitude(*rec.displacement, opt),
                        {}, {}, 0.0, 0.0, std::nullopt};
            const RampCurve ramp = ramp_curve_from_traces(rec.force, *rec.displacement, opt);
            c.peak = peak_observation(ramp.curve);
            c.slope = slope_observation(ramp.curve);
            c.work = applied_work(ramp.curve);
            const auto k = instantaneous_stiffness(ramp.curve);
            std::vector<double> stamps;
            for (std::size_t j = 1; j < ramp.times.size(); ++j) stamps.push_back(ramp.times[j] - ramp.times[0]);
            const auto var = estimate_variances(k);
            const auto traj = recursive_update(k, var.measurement, var.initial, PosteriorUpdate::variance, stamps);
            c.recursive = traj.terminal().value;
            c.recognition = recognition_time(traj, common.gain_threshold);
            trials.push_back(std::move(c));
        } catch (const std::exception& e) {
            result.add_error(trial, e);
        }
    }

    // Observation spread across the cohort sets the fusion weights.
    std::vector<double> peaks, slopes;
    for (const auto& c : trials) {
        peaks.push_back(c.peak.value);
        slopes.push_back(c.slope.estimate.value);
    }
    const double sigma_peak = softcue::detail::sample_sd(peaks);
    const double sigma_slope = softcue::detail::sample_sd(slopes);

    json rows = json::array();
    std::vector<double> fused_values, works;
    std::vector<std::size_t> kept;
    std::vector<StiffnessEstimate> fused(trials.size());
    for (std::size_t i = 0; i < trials.size(); ++i) {
        try {
            fused[i] = fuse_observations(trials[i].peak.value, sigma_peak, trials[i].slope.estimate.value, sigma_slope);
            kept.push_back(i);
            fused_values.push_back(fused[i].value);
            works.push_back(trials[i].work);
        } catch (const std::exception& e) {
            result.add_error(trials[i].trial, e);
        }
    }
    std::vector<double> combined;
    if (!kept.empty()) combined = combine_recognition_cues(fused_values, works);

    std::string table = "trial,force_rate,force_rate_r2,displacement_mm,peak_stiffness,slope_stiffness,"
                        "slope_r2,fused_stiffness,fused_sigma,recursive_stiffness,recognition_time,work_mj,"
                        "combined_cue\n";
    for (std::size_t r = 0; r < kept.size(); ++r) {
        const auto& c = trials[kept[r]];
        const auto& f = fused[kept[r]];
        rows.push_back({{"trial", c.trial},
                        {"force_rate", c.rate.slope},
                        {"force_rate_r2", c.rate.r2},
                        {"displacement_mm", c.amplitude},
                        {"peak_stiffness", c.peak.value},
                        {"slope_stiffness", c.slope.estimate.value},
                        {"slope_r2", c.slope.r2},
                        {"fused_stiffness", f.value},
                        {"fused_sigma", f.sigma},
                        {"recursive_stiffness", c.recursive},
                        {"recognition_time", detail::optional_number(c.recognition)},
                        {"work_mj", c.work},
                        {"combined_cue", combined[r]}});
        table += c.trial + ',' + detail::num(c.rate.slope) + ',' + detail::num(c.rate.r2) + ',' +
                 detail::num(c.amplitude) + ',' + detail::num(c.peak.value) + ',' +
                 detail::num(c.slope.estimate.value) + ',' + detail::num(c.slope.r2) + ',' +
                 detail::num(f.value) + ',' + detail::num(f.sigma) + ',' + detail::num(c.recursive) + ',' +
                 (c.recognition ? detail::num(*c.recognition) : std::string()) + ',' + detail::num(c.work) + ',' +
                 detail::num(combined[r]) + '\n';
    }
    result.results["trials"] = std::move(rows);
    result.results["cohort"] = {{"peak_sigma", sigma_peak}, {"slope_sigma", sigma_slope}};
    result.csv = std::move(table);
    return result;
}

// ---------------------------------------------------------------- frechet-time

struct FrechetArgs {
    Cue cue = Cue::force;
    ThresholdMode mode = ThresholdMode::relative;
    bool time_value = false;
    double time_scale = 1.0;
    double value_scale = 1.0;
};

inline std::vector<Trace> load_force_traces(const std::vector<fs::path>& files) {
    std::vector<Trace> out;
    for (const auto& f : files) {
        auto in = detail::open_input(f);
        try {
            out.push_back(load_trace(in, Channel::force));
        } catch (const ParseError& e) {
            throw ParseError(e.line(), f.string() + ": " + e.what());
        }
    }
    return out;
}

inline Result frechet_time(const std::vector<fs::path>& h_files, const std::vector<fs::path>& s_files,
                           const FrechetArgs& args, const Common& common) {
    Result result;
    try {
        const auto h = load_force_traces(h_files);
        const auto s = load_force_traces(s_files);
        DissimilarityOptions cue_opt;
        cue_opt.cue = args.cue;
        cue_opt.downsample_factor = common.downsample;
        cue_opt.smoothing_window = common.window;
        cue_opt.time_value_curves = args.time_value;
        cue_opt.time_scale = args.time_scale;
        cue_opt.value_scale = args.value_scale;
        const CuePair pair = prepare_cue_curves(h, s, cue_opt);
        const auto disc = discrimination_profile(pair, {common.jnd, args.mode});
        const double full = discrete_frechet(pair.h, pair.s);
        const double reference = disc.profile.empty() ? 0.0 : disc.profile.back().reference;

        result.results["cue"] = args.cue == Cue::force ? "force" : "force_rate";
        result.results["threshold_mode"] = args.mode == ThresholdMode::relative ? "relative" : "absolute";
        result.results["curve_points"] = pair.h.size();
        result.results["dissimilarity"] = full;
        result.results["dissimilarity_normalized"] = reference > 0.0 ? json(full / reference) : json(nullptr);
        result.results["discriminable"] = disc.time.has_value();
        result.results["time_s"] = detail::optional_number(disc.time);

        std::string table = "t,dissimilarity,reference,ratio\n";
        for (const auto& p : disc.profile)
            table += detail::csv_line({detail::num(p.t), detail::num(p.dissimilarity), detail::num(p.reference),
                                       detail::num(p.ratio)});
        result.csv = std::move(table);
    } catch (const std::exception& e) {
        result.add_error("pair", e);
    }
    return result;
}

// ---------------------------------------------------------------- recognize-time

struct RecognizeArgs {
    std::optional<double> meas_variance;
    std::optional<double> init_variance;
    PosteriorUpdate posterior = PosteriorUpdate::variance;
};

inline Result recognize_time(const std::vector<fs::path>& files, const RecognizeArgs& args, const Common& common) {
    Result result;
    json rows = json::array();
    std::string table = "trial,t,gain,estimate,variance\n";
    const CueOptions opt{common.window, 0.05};
    for (const auto& file : files) {
        const std::string trial = file.stem().string();
        try {
            auto in = detail::open_input(file);
            const Recording rec = load_recording(in);
            if (!rec.displacement) throw ArgumentError("trace has no displacement channel");
            const RampCurve ramp = ramp_curve_from_traces(rec.force, *rec.displacement, opt);
            const auto k = instantaneous_stiffness(ramp.curve);
            std::vector<double> stamps;
            for (std::size_t j = 1; j < ramp.times.size(); ++j) stamps.push_back(ramp.times[j] - ramp.times[0]);
            const auto defaults = estimate_variances(k);
            const double meas = args.meas_variance.value_or(defaults.measurement);
            const double init = args.init_variance.value_or(defaults.initial);
            const auto traj = recursive_update(k, meas, init, args.posterior, stamps);
            const auto t = recognition_time(traj, common.gain_threshold);
            rows.push_back({{"trial", trial},
                            {"measurement_variance", meas},
                            {"initial_variance", init},
                            {"terminal_estimate", traj.terminal().value},
                            {"terminal_sigma", traj.terminal().sigma},
                            {"recognition_time", detail::optional_number(t)},
                            {"converged", t.has_value()},
                            {"steps", traj.gains.size()}});
            for (std::size_t i = 0; i < traj.estimates.size(); ++i)
                table += detail::csv_line({trial, detail::num(traj.timestamps[i]),
                                           i == 0 ? std::string() : detail::num(traj.gains[i - 1]),
                                           detail::num(traj.estimates[i]), detail::num(traj.variances[i])});
        } catch (const std::exception& e) {
            result.add_error(trial, e);
        }
    }
    result.results["posterior"] = args.posterior == PosteriorUpdate::variance ? "variance" : "literal_sqrt";
    result.results["trials"] = std::move(rows);
    result.csv = std::move(table);
    return result;
}

// ---------------------------------------------------------------- dprime

namespace detail {

inline std::optional<bool> parse_different(std::string_view s) {
    if (s == "different" || s == "diff" || s == "d" || s == "1") return true;
    if (s == "same" || s == "s" || s == "0") return false;
    return std::nullopt;
}

}  // namespace detail

/// Detection table from a `condition,pair,truth,response` CSV; truth and
/// response are `same`/`different` (or 0/1).
inline Result dprime(const fs::path& file, psycho::RateCorrection correction) {
    Result result;
    auto in = detail::open_input(file);
    const csv::Table table = csv::read(in);
    const auto cond = table.column("condition"), pair = table.column("pair");
    const auto truth = table.column("truth"), resp = table.column("response");
    if (!cond || !pair || !truth || !resp)
        throw ParseError(table.header_line, "expected header 'condition,pair,truth,response'");

    struct Group {
        std::string condition, pair;
        psycho::ResponseTable counts;
        std::vector<psycho::Response> responses;
    };
    std::vector<Group> groups;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (const auto& row : table.rows) {
        try {
            const std::size_t need = std::max({*cond, *pair, *truth, *resp});
            if (row.fields.size() <= need) throw ParseError(row.line, "too few fields");
            const auto t = detail::parse_different(row.fields[*truth]);
            const auto r = detail::parse_different(row.fields[*resp]);
            if (!t) throw ParseError(row.line, "truth must be same/different, got '" + row.fields[*truth] + "'");
            if (!r) throw ParseError(row.line, "response must be same/different, got '" + row.fields[*resp] + "'");
            const auto key = std::make_pair(row.fields[*cond], row.fields[*pair]);
            auto [it, fresh] = index.emplace(key, groups.size());
            if (fresh) groups.push_back({key.first, key.second, {}, {}});
            Group& g = groups[it->second];
            if (*t) {
                ++g.counts.n_diff;
                g.counts.resp_diff_given_diff += *r ? 1 : 0;
            } else {
                ++g.counts.n_same;
                g.counts.resp_diff_given_same += *r ? 1 : 0;
            }
            g.responses.push_back({*t, *r});
        } catch (const std::exception& e) {
            result.add_error("row", e);
        }
    }

    json rows = json::array();
    std::string out = "condition,pair,n_same,n_diff,hit,false_alarm,dprime,criterion,percent_correct\n";
    for (const auto& g : groups) {
        const std::string item = g.condition + "/" + g.pair;
        try {
            const auto rates = psycho::rates(g.counts, correction);
            const double d = psycho::dprime_differencing(rates.hit, rates.false_alarm);
            const double c = psycho::differencing_criterion(rates.false_alarm);
            const double pc = psycho::percent_correct(g.responses);
            rows.push_back({{"condition", g.condition},
                            {"pair", g.pair},
                            {"n_same", g.counts.n_same},
                            {"n_diff", g.counts.n_diff},
                            {"hit", rates.hit},
                            {"false_alarm", rates.false_alarm},
                            {"dprime", d},
                            {"criterion", c},
                            {"percent_correct", pc}});
            out += detail::csv_line({g.condition, g.pair, std::to_string(g.counts.n_same),
                                     std::to_string(g.counts.n_diff), detail::num(rates.hit),
                                     detail::num(rates.false_alarm), detail::num(d), detail::num(c),
                                     detail::num(pc)});
        } catch (const std::exception& e) {
            result.add_error(item, e);
        }
    }
    result.results["correction"] = correction == psycho::RateCorrection::none ? "none" : "half_trial";
    result.results["conditions"] = std::move(rows);
    result.csv = std::move(out);
    return result;
}

// ---------------------------------------------------------------- psychfit

/// Psychometric fit of a `level,n_correct,n_total` CSV.
inline Result psychfit(const fs::path& file, const psycho::PsychometricOptions& opt) {
    Result result;
    auto in = detail::open_input(file);
    const csv::Table table = csv::read(in);
    const auto lc = table.column("level"), cc = table.column("n_correct"), tc = table.column("n_total");
    if (!lc || !cc || !tc) throw ParseError(table.header_line, "expected header 'level,n_correct,n_total'");
    std::vector<double> levels, correct, total;
    for (const auto& row : table.rows) {
        try {
            const double l = csv::number(row, *lc, "level");
            const double c = csv::number(row, *cc, "n_correct");
            const double t = csv::number(row, *tc, "n_total");
            levels.push_back(l);
            correct.push_back(c);
            total.push_back(t);
        } catch (const std::exception& e) {
            result.add_error("row", e);
        }
    }
    try {
        const auto fit = psycho::fit_psychometric(levels, correct, total, opt);
        result.results["threshold"] = fit.threshold;
        result.results["slope"] = fit.slope;
        result.results["lapse"] = fit.lapse;
        result.results["guess"] = fit.guess;
        result.results["deviance"] = fit.deviance;
        result.results["log_likelihood"] = fit.log_likelihood;
        result.results["model"] = opt.overdispersion ? "beta-binomial" : "binomial";
        std::string out = "level,observed,fitted\n";
        for (std::size_t i = 0; i < levels.size(); ++i)
            out += detail::csv_line(
                {detail::num(levels[i]), detail::num(correct[i] / total[i]), detail::num(fit(levels[i]))});
        result.csv = std::move(out);
    } catch (const std::exception& e) {
        result.add_error("fit", e);
    }
    return result;
}

// ---------------------------------------------------------------- skinfit

inline FDCurve load_fd_curve(const fs::path& file) {
    auto in = detail::open_input(file);
    const csv::Table table = csv::read(in);
    const auto dc = table.column("d_mm"), fc = table.column("force_N");
    if (!dc || !fc) throw ParseError(table.header_line, "expected header 'd_mm,force_N'");
    std::vector<FDPoint> pts;
    for (const auto& row : table.rows)
        pts.push_back({csv::number(row, *dc, "d_mm"), csv::number(row, *fc, "force_N")});
    return FDCurve(std::move(pts));
}

struct SkinArgs {
    skin::LayerStack stack;
    skin::ScaleBounds bounds;
    bool default_thickness = true;
};

inline Result skinfit(const std::vector<fs::path>& files, const SkinArgs& args) {
    Result result;
    std::vector<FDCurve> curves;
    std::vector<std::string> names;
    for (const auto& f : files) {
        try {
            curves.push_back(load_fd_curve(f));
            names.push_back(f.stem().string());
        } catch (const std::exception& e) {
            result.add_error(f.stem().string(), e);
        }
    }
    if (args.default_thickness)
        result.warnings.push_back("dermis and hypodermis thicknesses are assumed defaults (1.0 mm, 3.0 mm)");
    if (curves.empty()) {
        if (files.empty()) result.warnings.push_back("no curves given");
        return result;
    }
    try {
        const skin::StackModel model{args.stack};
        const auto fit = skin::fit_scale(curves, model, args.bounds);
        const auto moduli = skin::moduli_from_scale(fit.k);
        result.results["k"] = fit.k;
        result.results["softness_index"] = skin::softness_index(fit.k);
        result.results["moduli_kpa"] = {
            {"epidermis", moduli[0]}, {"dermis", moduli[1]}, {"hypodermis", moduli[2]}};
        result.results["mean_r2"] = fit.mean_r2;
        json per_curve = json::array();
        for (std::size_t i = 0; i < curves.size(); ++i) per_curve.push_back({{"curve", names[i]}, {"r2", fit.r2[i]}});
        result.results["curves"] = std::move(per_curve);
        result.results["stack"] = {{"thickness_mm", args.stack.thickness_mm},
                                   {"area_mm2", args.stack.area_mm2},
                                   {"k_bounds", {args.bounds.lo, args.bounds.hi}}};
        std::string out = "curve,d_mm,measured_N,fitted_N\n";
        for (std::size_t i = 0; i < curves.size(); ++i)
            for (const auto& p : curves[i].points())
                out += detail::csv_line({names[i], detail::num(p.displacement_mm), detail::num(p.force_n),
                                         detail::num(model(fit.k, p.displacement_mm))});
        result.csv = std::move(out);
    } catch (const std::exception& e) {
        result.add_error("fit", e);
    }
    return result;
}

// ---------------------------------------------------------------- area

inline Result area(const std::vector<fs::path>& files) {
    Result result;
    json rows = json::array();
    for (const auto& f : files) {
        const std::string item = f.stem().string();
        try {
            auto in = detail::open_input(f);
            const auto print = geometry::read_print(in);
            const double a = geometry::polygon_area(print);
            if (!geometry::is_simple(print.boundary))
                result.warnings.push_back(item + ": outline intersects itself; area is the net signed area");
            rows.push_back({{"print", item}, {"area_cm2", a}, {"scale_cm_per_px", geometry::pixel_scale(print)}});
        } catch (const std::exception& e) {
            result.add_error(item, e);
        }
    }
    result.results["prints"] = std::move(rows);
    return result;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string model = "spring";  // spring | hertz
    double k = 1.0;
    double rate = 1.0;
    double peak = 2.0;
    double sample_rate = 1000.0;
    double noise = 0.0;
    synth::HertzParams hertz;
};

inline Result synthesize(const SynthArgs& args, std::uint64_t seed) {
    Result result;
    const Trace profile = synth::triangle_profile(args.rate, args.peak, args.sample_rate);
    synth::ContactTraces traces = [&] {
        if (args.model == "spring") return synth::spring_trace(args.k, profile, args.noise, seed);
        if (args.model == "hertz") return synth::hertz_trace(args.hertz, profile, args.noise, seed);
        throw ArgumentError("synth: model must be 'spring' or 'hertz', got '" + args.model + "'");
    }();
    std::vector<std::pair<std::string, std::string>> comments{
        {"model", args.model}, {"rate", detail::num(args.rate)},   {"peak", detail::num(args.peak)},
        {"sample_rate", detail::num(args.sample_rate)},            {"noise", detail::num(args.noise)},
        {"seed", std::to_string(seed)}};
    result.results["model"] = args.model;
    if (args.model == "spring") {
        comments.emplace_back("k", detail::num(args.k));
        result.results["k"] = args.k;
    } else {
        const auto& h = args.hertz;
        comments.emplace_back("finger_modulus_kpa", detail::num(h.finger_modulus_kpa));
        comments.emplace_back("sphere_modulus_kpa", detail::num(h.sphere_modulus_kpa));
        comments.emplace_back("finger_poisson", detail::num(h.finger_poisson));
        comments.emplace_back("sphere_poisson", detail::num(h.sphere_poisson));
        comments.emplace_back("radius_mm", detail::num(h.radius_mm));
        result.results["hertz"] = {{"finger_modulus_kpa", h.finger_modulus_kpa},
                                   {"sphere_modulus_kpa", h.sphere_modulus_kpa},
                                   {"finger_poisson", h.finger_poisson},
                                   {"sphere_poisson", h.sphere_poisson},
                                   {"radius_mm", h.radius_mm},
                                   {"effective_modulus_kpa", synth::effective_modulus_kpa(h)}};
    }
    std::ostringstream out;
    write_recording(out, traces.force, &traces.displacement, comments);
    const auto d = traces.displacement.values();
    result.results["samples"] = traces.force.size();
    result.results["duration_s"] = traces.force.times().back();
    result.results["peak_force_n"] = *std::max_element(traces.force.values().begin(), traces.force.values().end());
    result.results["peak_displacement_mm"] = *std::max_element(d.begin(), d.end());
    result.csv = out.str();
    return result;
}

// ---------------------------------------------------------------- cluster

/// k-means over the numeric columns of a CSV; an optional `label` column holds
/// reference labels for the match rate.
inline Result cluster(const fs::path& file, std::size_t k, std::size_t max_iter, std::uint64_t seed) {
    Result result;
    auto in = detail::open_input(file);
    const csv::Table table = csv::read(in);
    const auto label_col = table.column("label");
    std::vector<std::size_t> features;
    for (std::size_t c = 0; c < table.header.size(); ++c)
        if (!label_col || c != *label_col) features.push_back(c);
    if (features.empty()) throw ParseError(table.header_line, "no feature columns");

    std::vector<stats::Point> points;
    std::vector<std::string> labels;
    for (const auto& row : table.rows) {
        try {
            stats::Point p;
            for (std::size_t c : features) p.push_back(csv::number(row, c, table.header[c]));
            if (label_col) {
                if (*label_col >= row.fields.size()) throw ParseError(row.line, "missing label");
                labels.push_back(row.fields[*label_col]);
            }
            points.push_back(std::move(p));
        } catch (const std::exception& e) {
            result.add_error("row", e);
        }
    }
    try {
        const auto km = stats::kmeans(points, k, seed, max_iter);
        result.results["k"] = k;
        result.results["assignments"] = km.assignments;
        result.results["centroids"] = km.centroids;
        result.results["sse"] = km.sse;
        result.results["sse_history"] = km.sse_history;
        result.results["iterations"] = km.iterations;
        result.results["converged"] = km.converged;
        if (label_col)
            result.results["match_rate"] =
                stats::match_rate(std::span<const std::string>(labels), std::span<const std::size_t>(km.assignments));
        std::string out = "index,cluster" + std::string(label_col ? ",label" : "") + "\n";
        for (std::size_t i = 0; i < points.size(); ++i)
            out += std::to_string(i) + ',' + std::to_string(km.assignments[i]) +
                   (label_col ? ',' + labels[i] : std::string()) + '\n';
        result.csv = std::move(out);
    } catch (const std::exception& e) {
        result.add_error("kmeans", e);
    }
    return result;
}

// ---------------------------------------------------------------- stats

struct StatsArgs {
    std::size_t iterations = 1000;
    double level = 0.95;
};

/// Two-group comparison of a `group,value` CSV, or Spearman correlation of an
/// `x,y` CSV.
inline Result describe(const fs::path& file, const StatsArgs& args, std::uint64_t seed) {
    Result result;
    auto in = detail::open_input(file);
    const csv::Table table = csv::read(in);
    if (const auto xc = table.column("x"), yc = table.column("y"); xc && yc) {
        std::vector<double> x, y;
        for (const auto& row : table.rows) {
            try {
                const double a = csv::number(row, *xc, "x");
                const double b = csv::number(row, *yc, "y");
                x.push_back(a);
                y.push_back(b);
            } catch (const std::exception& e) {
                result.add_error("row", e);
            }
        }
        try {
            result.results["n"] = x.size();
            result.results["spearman"] = stats::spearman(x, y);
        } catch (const std::exception& e) {
            result.add_error("spearman", e);
        }
        return result;
    }
    const auto gc = table.column("group"), vc = table.column("value");
    if (!gc || !vc) throw ParseError(table.header_line, "expected header 'group,value' or 'x,y'");
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> groups;
    for (const auto& row : table.rows) {
        try {
            if (*gc >= row.fields.size()) throw ParseError(row.line, "missing group");
            const double v = csv::number(row, *vc, "value");
            const std::string& g = row.fields[*gc];
            if (!groups.contains(g)) order.push_back(g);
            groups[g].push_back(v);
        } catch (const std::exception& e) {
            result.add_error("row", e);
        }
    }
    json per_group = json::array();
    std::uint64_t sub_seed = seed;
    for (const auto& g : order) {
        const auto& v = groups[g];
        json entry{{"group", g}, {"n", v.size()}, {"mean", stats::mean(v)}, {"median", stats::median(v)},
                   {"sd", softcue::detail::sample_sd(v)}};
        const auto ci = stats::bootstrap_ci(
            v, [](std::span<const double> s) { return stats::mean(s); }, args.iterations, args.level, sub_seed++);
        entry["mean_ci"] = {ci.lo, ci.hi};
        per_group.push_back(std::move(entry));
    }
    result.results["groups"] = std::move(per_group);
    result.results["bootstrap"] = {{"iterations", args.iterations}, {"level", args.level}};
    if (order.size() != 2) {
        result.add_error("groups", ArgumentError("comparison needs exactly 2 groups, got " +
                                                 std::to_string(order.size())));
        return result;
    }
    const auto& a = groups[order[0]];
    const auto& b = groups[order[1]];
    try {
        const auto mw = stats::mann_whitney_u(a, b);
        result.results["mann_whitney"] = {{"u", mw.u}, {"p", mw.p}, {"exact", mw.exact}};
    } catch (const std::exception& e) {
        result.add_error("mann_whitney", e);
    }
    try {
        result.results["cohens_d"] = stats::cohens_d(a, b);
    } catch (const std::exception& e) {
        result.add_error("cohens_d", e);
    }
    return result;
}

}  // namespace softcue::cli
