#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using softcue::cli::json;

// Reads `key = value` lines; `#` starts a comment line.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::FileError::Missing(path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto text = softcue::csv::trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw CLI::ConversionError(path + ":" + std::to_string(number) + ": expected key=value");
        out.emplace_back(std::string(softcue::csv::trim(text.substr(0, eq))),
                         std::string(softcue::csv::trim(text.substr(eq + 1))));
    }
    return out;
}

bool given(const std::vector<std::string>& args, const std::string& flag) {
    for (const auto& a : args)
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
}

// Config values become ordinary arguments unless the same flag is already on
// the command line, so flags always win.
std::vector<std::string> merge_config(CLI::App& app, std::vector<std::string> args) {
    std::string config;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config = args[i].substr(9);
    }
    if (config.empty()) return args;
    CLI::App* sub = nullptr;
    for (const auto& a : args)
        if (auto* s = app.get_subcommand_no_throw(a)) {
            sub = s;
            break;
        }
    for (const auto& [key, value] : read_config(config)) {
        const std::string flag = "--" + key;
        if (key == "config" || given(args, flag)) continue;
        const CLI::Option* opt = sub ? sub->get_option_no_throw(flag) : nullptr;
        if (!opt) opt = app.get_option_no_throw(flag);
        if (!opt) throw CLI::ConversionError(config + ": unknown key '" + key + "'");
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1" || value.empty()) args.push_back(flag);
        } else {
            args.push_back(flag);
            args.push_back(value);
        }
    }
    return args;
}

json scalar(const std::string& text) {
    const char* end = text.data() + text.size();
    auto whole = [&](const std::from_chars_result& r) { return r.ec == std::errc() && r.ptr == end; };
    if (std::int64_t i = 0; whole(std::from_chars(text.data(), end, i))) return i;
    if (std::uint64_t u = 0; whole(std::from_chars(text.data(), end, u))) return u;
    if (const auto v = softcue::csv::try_number(text)) return *v;
    return text;
}

json option_value(const CLI::Option* opt) {
    if (opt->get_expected_min() == 0) return opt->count() > 0;
    if (opt->count() == 0) {
        const std::string d = opt->get_default_str();
        return d.empty() ? json(nullptr) : scalar(d);
    }
    const auto& r = opt->results();
    if (opt->get_expected_max() > 1 || r.size() > 1) {
        json list = json::array();
        for (const auto& item : r) list.push_back(scalar(item));
        return list;
    }
    return scalar(r.front());
}

json settings_echo(const CLI::App& app, const CLI::App& sub) {
    json echo = json::object();
    for (const CLI::App* a : {&app, &sub})
        for (const CLI::Option* opt : a->get_options()) {
            const std::string name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
            if (name == "help" || name == "config" || name == "version") continue;
            echo[name] = option_value(opt);
        }
    return echo;
}

}  // namespace

int main(int argc, char** argv) {
    namespace cli = softcue::cli;
    CLI::App app{"Softness-cue analysis: trace conditioning, stiffness estimation, discrimination models",
                 cli::tool_name};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(cli::tool_version));

    cli::Common common;
    std::string config, out_path, csv_path;
    bool no_timestamp = false;
    app.add_option("--window", common.window, "moving-average window (samples)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--downsample", common.downsample, "downsample factor for cue curves")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--jnd", common.jnd, "discrimination threshold fraction")->capture_default_str();
    app.add_option("--gain-threshold", common.gain_threshold, "recognition threshold, fraction of max gain")
        ->capture_default_str();
    app.add_option("--seed", common.seed, "random seed")->capture_default_str();
    app.add_option("--config", config, "key=value file; keys mirror long flag names, flags win");
    app.add_option("--out", out_path, "JSON report path (default: stdout)");
    app.add_option("--csv", csv_path, "plot-ready CSV output path");
    app.add_flag("--no-timestamp", no_timestamp, "omit the timestamp field from the report");

    // cues
    std::string cues_dir;
    auto* cues = app.add_subcommand("cues", "per-trial cue table for a directory of trace CSVs");
    cues->add_option("dir", cues_dir, "directory of <trial>.csv files")->required();

    // frechet-time
    std::vector<std::string> h_files, s_files;
    std::string cue_name = "force", mode_name = "relative";
    cli::FrechetArgs frechet_args;
    auto* frechet = app.add_subcommand("frechet-time", "differencing-rule discrimination time of two trace sets");
    frechet->add_option("--first", h_files, "trial CSVs of the first stimulus")->required();
    frechet->add_option("--second", s_files, "trial CSVs of the second stimulus")->required();
    frechet->add_option("--cue", cue_name, "force | force_rate")
        ->check(CLI::IsMember({"force", "force_rate"}))
        ->capture_default_str();
    frechet->add_option("--threshold-mode", mode_name, "relative | absolute")
        ->check(CLI::IsMember({"relative", "absolute"}))
        ->capture_default_str();
    frechet->add_flag("--time-value", frechet_args.time_value, "use (time, value) curves");
    frechet->add_option("--time-scale", frechet_args.time_scale, "time axis scale in 2-D mode")->capture_default_str();
    frechet->add_option("--value-scale", frechet_args.value_scale, "value axis scale in 2-D mode")
        ->capture_default_str();

    // recognize-time
    std::vector<std::string> recog_files;
    cli::RecognizeArgs recog_args;
    double meas_var = 0.0, init_var = 0.0;
    bool literal_sqrt = false;
    auto* recognize = app.add_subcommand("recognize-time", "recursive stiffness estimate and recognition time");
    recognize->add_option("files", recog_files, "trace CSVs")->required();
    auto* meas_opt = recognize->add_option("--meas-var", meas_var, "measurement variance (N/mm)^2");
    auto* init_opt = recognize->add_option("--init-var", init_var, "initial variance (N/mm)^2");
    recognize->add_flag("--literal-sqrt", literal_sqrt, "posterior update sqrt((1-gain) var)");

    // dprime
    std::string dprime_file;
    bool half_trial = false;
    auto* dprime = app.add_subcommand("dprime", "same-different detection table");
    dprime->add_option("file", dprime_file, "condition,pair,truth,response CSV")->required();
    dprime->add_flag("--half-trial", half_trial, "map rates of 0 and 1 to 1/(2N) and 1-1/(2N)");

    // psychfit
    std::string psych_file;
    softcue::psycho::PsychometricOptions psych_opt;
    double overdispersion = 0.0;
    auto* psychfit = app.add_subcommand("psychfit", "maximum-likelihood psychometric function");
    psychfit->add_option("file", psych_file, "level,n_correct,n_total CSV")->required();
    psychfit->add_option("--guess", psych_opt.guess, "guess rate")->capture_default_str();
    psychfit->add_option("--max-lapse", psych_opt.max_lapse, "upper bound on the lapse rate")->capture_default_str();
    auto* od_opt = psychfit->add_option("--overdispersion", overdispersion, "beta-binomial correlation in (0,1)");

    // skinfit
    std::vector<std::string> skin_files;
    cli::SkinArgs skin_args;
    std::vector<double> thickness;
    auto* skinfit = app.add_subcommand("skinfit", "fit the layer-modulus scale k");
    skinfit->add_option("files", skin_files, "d_mm,force_N CSVs")->required();
    skinfit->add_option("--area", skin_args.stack.area_mm2, "nominal contact area (mm^2)")->capture_default_str();
    skinfit->add_option("--thickness", thickness, "epidermis dermis hypodermis thickness (mm)")->expected(3);
    skinfit->add_option("--k-min", skin_args.bounds.lo, "lower bound on k")->capture_default_str();
    skinfit->add_option("--k-max", skin_args.bounds.hi, "upper bound on k")->capture_default_str();

    // area
    std::vector<std::string> area_files;
    auto* area = app.add_subcommand("area", "contact-print area from digitized outlines");
    area->add_option("files", area_files, "x_px,y_px CSVs with a scale_bar_px line")->required();

    // synth
    cli::SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "seeded synthetic contact trace");
    synth->add_option("--model", synth_args.model, "spring | hertz")
        ->check(CLI::IsMember({"spring", "hertz"}))
        ->capture_default_str();
    synth->add_option("--k", synth_args.k, "spring stiffness (N/mm)")->capture_default_str();
    synth->add_option("--rate", synth_args.rate, "loading rate (N/s)")->capture_default_str();
    synth->add_option("--peak", synth_args.peak, "peak force (N)")->capture_default_str();
    synth->add_option("--sample-rate", synth_args.sample_rate, "samples per second")->capture_default_str();
    synth->add_option("--noise", synth_args.noise, "multiplicative displacement noise sigma")->capture_default_str();
    synth->add_option("--finger-modulus", synth_args.hertz.finger_modulus_kpa, "kPa")->capture_default_str();
    synth->add_option("--sphere-modulus", synth_args.hertz.sphere_modulus_kpa, "kPa")->capture_default_str();
    synth->add_option("--finger-poisson", synth_args.hertz.finger_poisson)->capture_default_str();
    synth->add_option("--sphere-poisson", synth_args.hertz.sphere_poisson)->capture_default_str();
    synth->add_option("--radius", synth_args.hertz.radius_mm, "sphere radius (mm)")->capture_default_str();

    // cluster
    std::string cluster_file;
    std::size_t cluster_k = 2, max_iter = 300;
    auto* cluster = app.add_subcommand("cluster", "seeded k-means with optional match rate");
    cluster->add_option("file", cluster_file, "numeric feature CSV, optional label column")->required();
    cluster->add_option("--k", cluster_k, "number of clusters")->capture_default_str();
    cluster->add_option("--max-iter", max_iter, "Lloyd iteration cap")->capture_default_str();

    // stats
    std::string stats_file;
    cli::StatsArgs stats_args;
    auto* stats = app.add_subcommand("stats", "two-group comparison or rank correlation");
    stats->add_option("file", stats_file, "group,value or x,y CSV")->required();
    stats->add_option("--iterations", stats_args.iterations, "bootstrap iterations")->capture_default_str();
    stats->add_option("--level", stats_args.level, "confidence level")->capture_default_str();

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = merge_config(app, std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    CLI::App* chosen = app.get_subcommands().front();
    const std::string command = chosen->get_name();
    auto paths = [](const std::vector<std::string>& v) {
        return std::vector<std::filesystem::path>(v.begin(), v.end());
    };

    cli::Result result;
    try {
        if (command == "cues") {
            result = cli::cues(cues_dir, common);
        } else if (command == "frechet-time") {
            frechet_args.cue = cue_name == "force" ? softcue::Cue::force : softcue::Cue::force_rate;
            frechet_args.mode =
                mode_name == "relative" ? softcue::ThresholdMode::relative : softcue::ThresholdMode::absolute;
            result = cli::frechet_time(paths(h_files), paths(s_files), frechet_args, common);
        } else if (command == "recognize-time") {
            if (meas_opt->count()) recog_args.meas_variance = meas_var;
            if (init_opt->count()) recog_args.init_variance = init_var;
            if (literal_sqrt) recog_args.posterior = softcue::PosteriorUpdate::literal_sqrt;
            result = cli::recognize_time(paths(recog_files), recog_args, common);
        } else if (command == "dprime") {
            result = cli::dprime(dprime_file, half_trial ? softcue::psycho::RateCorrection::half_trial
                                                         : softcue::psycho::RateCorrection::none);
        } else if (command == "psychfit") {
            if (od_opt->count()) psych_opt.overdispersion = overdispersion;
            result = cli::psychfit(psych_file, psych_opt);
        } else if (command == "skinfit") {
            if (!thickness.empty()) {
                std::copy(thickness.begin(), thickness.end(), skin_args.stack.thickness_mm.begin());
                skin_args.default_thickness = false;
            }
            result = cli::skinfit(paths(skin_files), skin_args);
        } else if (command == "area") {
            result = cli::area(paths(area_files));
        } else if (command == "synth") {
            result = cli::synthesize(synth_args, common.seed);
        } else if (command == "cluster") {
            result = cli::cluster(cluster_file, cluster_k, max_iter, common.seed);
        } else if (command == "stats") {
            result = cli::describe(stats_file, stats_args, common.seed);
        }
    } catch (const std::exception& e) {
        result = {};
        result.add_error(command, e);
    }

    const json report = cli::make_report(command, settings_echo(app, *chosen), result, !no_timestamp);
    const std::string text = report.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "cannot write " << out_path << "\n";
            return 2;
        }
        out << text;
    }
    if (!csv_path.empty() && result.csv) {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) {
            std::cerr << "cannot write " << csv_path << "\n";
            return 2;
        }
        out << *result.csv;
    }
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& e : result.errors) std::cerr << "error: " << e.dump() << "\n";
    return result.exit_code();
}
