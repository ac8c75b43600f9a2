#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "support.hpp"

using namespace softcue;
using namespace softcue::cli;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("softcue_test_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path write(const std::string& name, const std::string& body) const {
        const fs::path p = path_ / name;
        std::ofstream(p) << body;
        return p;
    }

private:
    fs::path path_;
};

std::string spring_recording(double k, double rate, double peak, double noise, std::uint64_t seed) {
    SynthArgs args;
    args.k = k;
    args.rate = rate;
    args.peak = peak;
    args.noise = noise;
    return *synthesize(args, seed).csv;
}

std::string detection_rows(const std::string& condition, const std::string& pair, int n, double hit, double fa) {
    std::string out;
    const int hits = static_cast<int>(std::lround(hit * n)), false_alarms = static_cast<int>(std::lround(fa * n));
    for (int i = 0; i < n; ++i) out += condition + ',' + pair + ",different," + (i < hits ? "different" : "same") + '\n';
    for (int i = 0; i < n; ++i) out += condition + ',' + pair + ",same," + (i < false_alarms ? "d" : "s") + '\n';
    return out;
}

}  // namespace

TEST_CASE("cues: noiseless spring trials recover the spring constant") {
    TempDir dir;
    for (int i = 0; i < 3; ++i)
        dir.write("trial" + std::to_string(i) + ".csv", spring_recording(1.5, 1.0, 2.0, 0.0, static_cast<std::uint64_t>(i)));
    const Result r = cues(dir.path(), {});
    CHECK(r.exit_code() == 0);
    REQUIRE(r.results["trials"].size() == 3);
    for (const auto& row : r.results["trials"]) {
        CHECK(row["fused_stiffness"].get<double>() == Approx(1.5).margin(1e-6));
        CHECK(row["peak_stiffness"].get<double>() == Approx(1.5).margin(1e-6));
        CHECK(row["force_rate"].get<double>() == Approx(1.0).epsilon(0.01));
        // No resting baseline here, so the onset threshold and the smoothed apex
        // both shave a little off the full excursion.
        CHECK(row["displacement_mm"].get<double>() < 2.0 / 1.5);
        CHECK(row["displacement_mm"].get<double>() > 0.95 * 2.0 / 1.5);
        CHECK(row["recursive_stiffness"].get<double>() == Approx(1.5).margin(1e-6));
    }
    REQUIRE(r.csv.has_value());
    CHECK(r.csv->rfind("trial,force_rate,", 0) == 0);
    CHECK(std::count(r.csv->begin(), r.csv->end(), '\n') == 4);
}

TEST_CASE("cues: an empty directory warns and still succeeds") {
    TempDir dir;
    const Result r = cues(dir.path(), {});
    CHECK(r.exit_code() == 0);
    CHECK(r.warnings.size() == 1);
    CHECK(r.results["trials"].empty());
}

TEST_CASE("cues: a malformed file is reported without dropping the others") {
    TempDir dir;
    dir.write("a.csv", spring_recording(1.5, 1.0, 2.0, 0.01, 1));
    dir.write("b.csv", "t,force,displacement\n0,0,0\n0.001,oops,0\n");
    dir.write("c.csv", spring_recording(1.5, 1.0, 2.0, 0.01, 2));
    const Result r = cues(dir.path(), {});
    CHECK(r.results["trials"].size() == 2);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0]["item"] == "b");
    CHECK(r.errors[0]["line"] == 3);
    CHECK(r.exit_code() != 0);
}

TEST_CASE("dprime: tabulated detection rates") {
    TempDir dir;
    std::string body = "condition,pair,truth,response\n";
    body += detection_rows("passive_same", "A", 100, 0.35, 0.33);
    body += detection_rows("passive_same", "B", 100, 0.43, 0.35);
    body += detection_rows("active_same", "C", 100, 0.88, 0.22);
    const Result r = dprime(dir.write("resp.csv", body), psycho::RateCorrection::none);
    CHECK(r.exit_code() == 0);
    const auto& rows = r.results["conditions"];
    REQUIRE(rows.size() == 3);
    CHECK(rows[0]["condition"] == "passive_same");
    CHECK(rows[0]["dprime"].get<double>() == Approx(0.41).margin(0.06));
    CHECK(rows[1]["dprime"].get<double>() == Approx(0.84).margin(0.06));
    CHECK(rows[2]["dprime"].get<double>() == Approx(3.40).margin(0.06));
    CHECK(rows[0]["n_same"] == 100);
}

TEST_CASE("dprime: extreme rates need the correction") {
    TempDir dir;
    const std::string body = "condition,pair,truth,response\n" + detection_rows("x", "p", 10, 1.0, 0.0);
    const fs::path file = dir.write("resp.csv", body);
    const Result plain = dprime(file, psycho::RateCorrection::none);
    CHECK(plain.errors.size() == 1);
    const Result fixed = dprime(file, psycho::RateCorrection::half_trial);
    CHECK(fixed.exit_code() == 0);
    CHECK(fixed.results["conditions"][0]["hit"].get<double>() == Approx(0.95));
}

TEST_CASE("dprime: malformed rows carry their line") {
    TempDir dir;
    const std::string body = "condition,pair,truth,response\nx,p,different,maybe\n" + detection_rows("x", "p", 5, 0.6, 0.4);
    const Result r = dprime(dir.write("resp.csv", body), psycho::RateCorrection::none);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0]["line"] == 2);
    CHECK(r.results["conditions"].size() == 1);
}

TEST_CASE("psychfit: reads counts and reports the curve") {
    TempDir dir;
    const Result r = psychfit(dir.write("pf.csv", "level,n_correct,n_total\n0.1,21,40\n0.3,24,40\n0.5,35,40\n0.7,39,40\n"),
                              {});
    CHECK(r.exit_code() == 0);
    CHECK(r.results["deviance"].get<double>() >= 0.0);
    CHECK(r.results["model"] == "binomial");
    REQUIRE(r.csv.has_value());
    CHECK(r.csv->rfind("level,observed,fitted\n", 0) == 0);
}

TEST_CASE("skinfit: round trip of a synthetic curve") {
    TempDir dir;
    const skin::StackModel model{skin::LayerStack{}};
    std::string body = "d_mm,force_N\n";
    for (int i = 0; i <= 30; ++i) {
        const double d = 0.1 * i;
        body += csv::format(d) + ',' + csv::format(model(2.5, d)) + '\n';
    }
    const Result r = skinfit({dir.write("curve.csv", body)}, {});
    CHECK(r.exit_code() == 0);
    CHECK(r.results["k"].get<double>() == Approx(2.5).margin(1e-3));
    CHECK(r.results["softness_index"].get<double>() == Approx(0.4).margin(1e-3));
    CHECK(r.results["moduli_kpa"]["hypodermis"].get<double>() == Approx(2.5).margin(1e-3));
    CHECK(r.warnings.size() == 1);
}

TEST_CASE("area: unit square at unit scale") {
    TempDir dir;
    const Result r = area({dir.write("sq.csv", "x_px,y_px\n0,0\n1,0\n1,1\n0,1\nscale_bar_px,1\nscale_bar_cm,1\n"),
                           dir.write("bow.csv", "x_px,y_px\n0,0\n1,1\n1,0\n0,1\nscale_bar_px,1\n")});
    CHECK(r.exit_code() == 0);
    CHECK(r.results["prints"][0]["area_cm2"].get<double>() == 1.0);
    CHECK(r.warnings.size() == 1);
}

TEST_CASE("synth: same seed gives the same trace and report") {
    SynthArgs args;
    args.noise = 0.02;
    const Result a = synthesize(args, 7), b = synthesize(args, 7), c = synthesize(args, 8);
    CHECK(*a.csv == *b.csv);
    CHECK(*a.csv != *c.csv);
    const json settings{{"seed", 7}};
    CHECK(make_report("synth", settings, a, false).dump() == make_report("synth", settings, b, false).dump());
    CHECK_FALSE(make_report("synth", settings, a, false).contains("timestamp"));
    CHECK(make_report("synth", settings, a, true).contains("timestamp"));
    args.model = "cube";
    CHECK_THROWS_AS(synthesize(args, 1), ArgumentError);
}

TEST_CASE("synth: written recordings load back") {
    SynthArgs args;
    args.model = "hertz";
    std::istringstream in(*synthesize(args, 3).csv);
    const Recording rec = load_recording(in);
    REQUIRE(rec.displacement.has_value());
    CHECK(rec.force.size() == 4001);
    CHECK(rec.force.meta().at("model") == "hertz");
}

TEST_CASE("frechet-time: diverging recordings") {
    TempDir dir;
    auto write_force = [&](const std::string& name, double rate) {
        const Trace tr = synth::piecewise_profile({{0.0, 0.0}, {0.3, 0.3}, {2.0, 0.3 + rate * 1.7}}, 1000.0);
        std::ostringstream out;
        write_recording(out, tr, nullptr, {});
        return dir.write(name, out.str());
    };
    const Result r = frechet_time({write_force("h.csv", 1.0)}, {write_force("s.csv", 2.0)}, {}, {});
    CHECK(r.exit_code() == 0);
    CHECK(r.results["discriminable"] == true);
    CHECK(r.results["time_s"].get<double>() == Approx(0.35).margin(1e-9));
    CHECK(r.results["dissimilarity"].get<double>() == Approx(1.7).margin(1e-9));
    const Result missing = frechet_time({dir.path() / "none.csv"}, {write_force("s2.csv", 2.0)}, {}, {});
    CHECK(missing.exit_code() != 0);
}

TEST_CASE("recognize-time: gains shrink and the estimate settles") {
    TempDir dir;
    const Result r = recognize_time({dir.write("t.csv", spring_recording(2.0, 1.0, 2.0, 0.02, 4))}, {}, {});
    CHECK(r.exit_code() == 0);
    const auto& row = r.results["trials"][0];
    CHECK(row["terminal_estimate"].get<double>() == Approx(2.0).epsilon(0.05));
    CHECK(row["converged"] == true);
    RecognizeArgs literal;
    literal.posterior = PosteriorUpdate::literal_sqrt;
    literal.meas_variance = 0.01;
    literal.init_variance = 1.0;
    const Result l = recognize_time({dir.path() / "t.csv"}, literal, {});
    CHECK(l.results["posterior"] == "literal_sqrt");
    CHECK(l.results["trials"][0]["measurement_variance"].get<double>() == 0.01);
}

TEST_CASE("cluster: labelled blobs") {
    TempDir dir;
    testing::Rng rng(71);
    std::string body = "force_rate,displacement,label\n";
    for (int g = 0; g < 2; ++g)
        for (int i = 0; i < 20; ++i)
            body += csv::format(g * 10.0 + rng.gaussian()) + ',' + csv::format(g * 10.0 + rng.gaussian()) + ",g" +
                    std::to_string(g) + '\n';
    const Result r = cluster(dir.write("pts.csv", body), 2, 100, 1);
    CHECK(r.exit_code() == 0);
    CHECK(r.results["match_rate"].get<double>() == 1.0);
    const Result too_many = cluster(dir.path() / "pts.csv", 41, 100, 1);
    CHECK(too_many.exit_code() != 0);
}

TEST_CASE("stats: two groups and a correlation") {
    TempDir dir;
    std::string body = "group,value\n";
    for (int i = 1; i <= 5; ++i) body += "lo," + std::to_string(i) + "\nhi," + std::to_string(i + 5) + '\n';
    const Result r = describe(dir.write("g.csv", body), {}, 0);
    CHECK(r.exit_code() == 0);
    CHECK(r.results["mann_whitney"]["p"].get<double>() == Approx(2.0 / 252.0));
    CHECK(r.results["groups"].size() == 2);
    const Result c = describe(dir.write("xy.csv", "x,y\n1,1\n2,2\n2,3\n3,4\n"), {}, 0);
    CHECK(c.results["spearman"].get<double>() == Approx(0.9486832980505139));
    const Result three = describe(dir.write("g3.csv", "group,value\na,1\na,2\nb,3\nb,4\nc,5\nc,6\n"), {}, 0);
    CHECK(three.exit_code() != 0);
}
