#include "sopfx/config.hpp"
#include "sopfx/csv.hpp"
#include "sopfx/error.hpp"
#include "sopfx/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <unistd.h>

using namespace sopfx;
using namespace sopfx::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sopfx_test_harness_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
    }
    return out;
}

ExperimentConfig small_config(const fs::path& dir) {
    ExperimentConfig cfg = load_config(std::nullopt, {"--channel.n_symbols=65536", "--sensing.skip_symbols=16384",
                                                      "--rx.measure_skip_symbols=16384", "--psd.segment_len=4096",
                                                      "--eq.tap_guard_bits=8"});
    cfg.output_dir = dir.string();
    return cfg;
}

DualPolFrame random_frame(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    DualPolFrame f;
    f.samples_per_symbol = Rational(2);
    for (std::size_t i = 0; i < n; ++i) {
        f.x_pol.push_back({g(rng), g(rng)});
        f.y_pol.push_back({g(rng), g(rng)});
    }
    return f;
}

} // namespace

TEST_CASE("config defaults, parsing and overrides") {
    const ExperimentConfig d = parse_config("{}");
    CHECK(d.sweep_widths == std::vector<int>{5, 6, 7, 8});
    CHECK(d.include_float);
    CHECK(d.channel.n_symbols == std::int64_t{1} << 20);
    CHECK(d.q_threshold_db == 12.6);

    const ExperimentConfig c = parse_config(R"({"seed": 9, "sweep_widths": [8], "channel": {"snr_db": 20}})");
    CHECK(c.seed == 9);
    CHECK(c.sweep_widths == std::vector<int>{8});
    CHECK(c.channel.snr_db == 20.0);

    const ExperimentConfig o = load_config(std::nullopt, {"channel.snr_db=11.5", "--eq.n_taps=7", "output_dir=abc"});
    CHECK(o.channel.snr_db == 11.5);
    CHECK(o.eq.n_taps == 7);
    CHECK(o.output_dir == "abc");

    CHECK_THROWS_AS(parse_config(R"({"no_such_key": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"eq": {"no_such_key": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"sweep_widths": [3]})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"sweep_widths": [33]})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"channel": {"n_symbols": -5}})"), ConfigError);
    CHECK_THROWS_AS(load_config(std::nullopt, {"eq.n_taps"}), ConfigError);
    CHECK_THROWS_AS(load_config(fs::path("/nonexistent/sopfx.json")), ConfigError);
}

TEST_CASE("effective config round-trips through json") {
    ExperimentConfig c = load_config(std::nullopt, {"seed=42", "channel.snr_db=13.25", "sweep_widths=[6,9]",
                                                    "eq.tap_guard_bits=4", "sensing.probe_side=\"column\""});
    const std::string js = config_to_json(c);
    const ExperimentConfig back = parse_config(js);
    CHECK(config_to_json(back) == js);
    CHECK(back.seed == 42);
    CHECK(back.eq.tap_guard_bits == 4);
    CHECK(back.sensing.probe_side == sop::ProbeSide::Column);
    CHECK(config_to_json(parse_config("{}")) == config_to_json(ExperimentConfig{}));
}

TEST_CASE("csv number formatting round-trips") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 10000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        CHECK(csv::parse_double(csv::fmt(v), "v") == v);
    }
    CHECK(csv::fmt(0.1) == "0.1");
    CHECK(csv::fmt(std::int64_t{-7}) == "-7");
    CHECK_THROWS_AS(csv::parse_double("1.5x", "v"), InvalidInput);
}

TEST_CASE("ingest round trips") {
    const fs::path dir = scratch("ingest");
    const DualPolFrame f = random_frame(1000, 3);
    write_frame_f32(f, dir / "f.f32");
    CHECK(fs::file_size(dir / "f.f32") == 16000);
    const DualPolFrame b = cmd_ingest(dir / "f.f32", IngestFormat::Float32, Rational(2));
    REQUIRE(b.size() == f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(b.x_pol[i].real() == static_cast<double>(static_cast<float>(f.x_pol[i].real())));
        CHECK(b.y_pol[i].imag() == static_cast<double>(static_cast<float>(f.y_pol[i].imag())));
    }
    // Exported float32 data reads back bit-identically.
    write_frame_f32(b, dir / "g.f32");
    CHECK(slurp(dir / "f.f32") == slurp(dir / "g.f32"));

    write_frame_csv(f, dir / "f.csv");
    const DualPolFrame c = cmd_ingest(dir / "f.csv", IngestFormat::Csv, Rational(2));
    REQUIRE(c.size() == f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        CHECK(c.x_pol[i] == f.x_pol[i]);
        CHECK(c.y_pol[i] == f.y_pol[i]);
    }
}

TEST_CASE("ingest record framing") {
    const fs::path dir = scratch("framing");
    DualPolFrame one;
    one.samples_per_symbol = Rational(2);
    one.x_pol = {{1.0, -2.0}};
    one.y_pol = {{0.5, 0.25}};
    write_frame_f32(one, dir / "one.f32");
    CHECK(fs::file_size(dir / "one.f32") == 16);
    const DualPolFrame r = cmd_ingest(dir / "one.f32", IngestFormat::Float32, Rational(3, 2));
    CHECK(r.size() == 1);
    CHECK(r.x_pol[0] == cplx{1.0, -2.0});
    CHECK(r.y_pol[0] == cplx{0.5, 0.25});
    CHECK(r.samples_per_symbol == Rational(3, 2));

    {
        std::ofstream out(dir / "odd.f32", std::ios::binary);
        out << std::string(23, '\0');
    }
    CHECK_THROWS_AS(cmd_ingest(dir / "odd.f32", IngestFormat::Float32, Rational(2)), InvalidInput);
    CHECK_THROWS_AS(cmd_ingest(dir / "missing.f32", IngestFormat::Float32, Rational(2)), InvalidInput);
    {
        std::ofstream out(dir / "bad.csv");
        out << "1,2,3\n4,5,6\n";
    }
    CHECK_THROWS_AS(cmd_ingest(dir / "bad.csv", IngestFormat::Csv, Rational(2)), InvalidInput);
}

TEST_CASE("resampling an ingested frame to 2 sa/sy") {
    DualPolFrame f = random_frame(3000, 4);
    f.samples_per_symbol = Rational(3);
    const DualPolFrame r = to_two_sps(f);
    CHECK(r.samples_per_symbol == Rational(2));
    CHECK(std::abs(static_cast<double>(r.size()) - 2000.0) <= 2.0);
    const DualPolFrame same = to_two_sps(random_frame(10, 5));
    CHECK(same.size() == 10);
}

TEST_CASE("simulate writes a deterministic output tree") {
    const fs::path a = scratch("sim_a");
    const fs::path b = scratch("sim_b");
    ExperimentConfig ca = small_config(a);
    ExperimentConfig cb = small_config(b);
    ca.output_dir = cb.output_dir = (a.parent_path() / "sim").string();
    fs::remove_all(ca.output_dir);
    const RunReport ra = cmd_simulate(ca);
    const auto ta = tree(ca.output_dir);
    fs::remove_all(ca.output_dir);
    const RunReport rb = cmd_simulate(cb);
    const auto tb = tree(cb.output_dir);
    CHECK(ta == tb);

    REQUIRE(ra.rows.size() == 5);
    CHECK(ra.rows[0].label == "float");
    CHECK(ra.rows[0].angular_rmse_deg == 0.0);
    for (int i = 1; i <= 4; ++i) CHECK(ra.rows[static_cast<std::size_t>(i)].label == "W" + std::to_string(4 + i));
    for (const auto& r : ra.rows) CHECK(r.frame_checksum == ra.rows[0].frame_checksum);

    for (const char* f : {"config.json", "summary.csv", "front_end.csv", "truth_stokes.csv"}) CHECK(ta.count(f) == 1);
    const csv::Table s = csv::read(fs::path(cb.output_dir) / "summary.csv");
    CHECK(s.rows.size() == 5);
    const std::size_t cs = s.column("frame_checksum");
    for (const auto& r : s.rows) CHECK(r[cs] == s.rows[0][cs]);
    CHECK(parse_config(ta.at("config.json")).channel.n_symbols == 65536);
}

TEST_CASE("a failed row is recorded and the other rows continue") {
    ExperimentConfig c = small_config(scratch("fail"));
    c.eq.tap_guard_bits = 0;
    c.sweep_widths = {8};
    const RunReport r = cmd_simulate(c);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.rows[0].ok);
    CHECK_FALSE(r.rows[1].ok);
    CHECK(r.rows[1].failure.find("no convergence") != std::string::npos);
    CHECK(any_failed(r));
    const csv::Table s = csv::read(fs::path(c.output_dir) / "summary.csv");
    CHECK(s.rows[1][s.column("status")] == "failed");
    CHECK(!fs::exists(fs::path(c.output_dir) / "stokes_W8.csv"));
    CHECK(fs::exists(fs::path(c.output_dir) / "stokes_float.csv"));
}

TEST_CASE("width list [8] gives a single fixed row") {
    ExperimentConfig c = small_config(scratch("w8"));
    c.sweep_widths = {8};
    c.include_float = false;
    const RunReport r = cmd_simulate(c);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].width == 8);
    CHECK(r.rows[0].complexity.has_value());
    const csv::Table s = csv::read(fs::path(c.output_dir) / "summary.csv");
    CHECK(s.rows.size() == 1);
}

TEST_CASE("sweep with repeat 1 equals simulate") {
    const fs::path root = scratch("sweep");
    ExperimentConfig c = small_config(root / "sw");
    c.sweep_widths = {8};
    c.seed = 3;
    const SweepSummary sum = cmd_sweep(c, 1);
    REQUIRE(sum.seeds == std::vector<std::uint64_t>{3});
    ExperimentConfig single = c;
    single.output_dir = (root / "single").string();
    cmd_simulate(single);
    CHECK(slurp(root / "sw" / "seed_3" / "summary.csv") == slurp(root / "single" / "summary.csv"));
    const csv::Table agg = csv::read(root / "sw" / "sweep_summary.csv");
    CHECK(agg.rows.size() == 2);
    CHECK(agg.rows[0][agg.column("q_db_std")] == "0");
    CHECK_THROWS_AS(cmd_sweep(c, 0), ConfigError);
}

TEST_CASE("sweep seeds follow the base seed") {
    ExperimentConfig c = small_config(scratch("sweep3"));
    c.sweep_widths = {8};
    c.include_float = false;
    c.channel.n_symbols = 40000;
    c.seed = 10;
    const SweepSummary sum = cmd_sweep(c, 3);
    CHECK(sum.seeds == std::vector<std::uint64_t>{10, 11, 12});
    const csv::Table agg = csv::read(fs::path(c.output_dir) / "sweep_summary.csv");
    REQUIRE(agg.rows.size() == 1);
    CHECK(agg.rows[0][agg.column("runs")] == "3");
    CHECK(!agg.rows[0][agg.column("evm_rms_std")].empty());
    CHECK(csv::parse_double(agg.rows[0][agg.column("evm_rms_std")], "std") > 0.0);
}

TEST_CASE("report emits the plot data and names missing artifacts") {
    ExperimentConfig c = small_config(scratch("report"));
    c.sweep_widths = {7, 8};
    cmd_simulate(c);
    const fs::path dir = c.output_dir;
    cmd_report(dir);
    for (const char* f : {"rmse_vs_width.dat", "q_vs_width.dat", "psd_overlay.dat", "s2_timeseries.dat",
                          "poincare_float.dat", "poincare_W8.dat", "report.md"}) {
        CHECK_MESSAGE(fs::exists(dir / "report" / f), f);
    }
    const std::string q1 = slurp(dir / "report" / "q_vs_width.dat");
    const std::string p1 = slurp(dir / "report" / "psd_overlay.dat");
    cmd_report(dir);
    CHECK(slurp(dir / "report" / "q_vs_width.dat") == q1);
    CHECK(slurp(dir / "report" / "psd_overlay.dat") == p1);
    CHECK(q1.find("12.6") != std::string::npos);

    fs::remove(dir / "psd_W7.csv");
    try {
        cmd_report(dir);
        FAIL("expected InvalidInput");
    } catch (const InvalidInput& e) {
        CHECK(std::string(e.what()).find("psd_W7.csv") != std::string::npos);
    }
    CHECK_THROWS_AS(cmd_report(dir / "nope"), InvalidInput);
}

TEST_CASE("run_on_frame of an exported frame matches the simulated run") {
    ExperimentConfig c = small_config(scratch("frame"));
    c.sweep_widths = {8};
    c.output.export_frame = true;
    const RunReport sim = cmd_simulate(c);
    const DualPolFrame f = cmd_ingest(fs::path(c.output_dir) / "frame.f32", IngestFormat::Float32, Rational(2));
    const RunReport again = run_on_frame(f, c, nullptr);
    REQUIRE(again.rows.size() == sim.rows.size());
    for (std::size_t i = 0; i < sim.rows.size(); ++i) {
        CHECK(again.rows[i].ok);
        CHECK(!again.rows[i].direct.has_value());
        // float32 export rounds the samples, so the runs agree only approximately.
        CHECK(std::abs(again.rows[i].comm.evm_rms - sim.rows[i].comm.evm_rms) < 0.01);
    }
}

TEST_CASE("parallel rows equal serial rows") {
    ExperimentConfig c = small_config(scratch("jobs"));
    c.sweep_widths = {6, 8};
    const RunReport serial = run_experiment(c, 1);
    const RunReport par = run_experiment(c, 3);
    REQUIRE(serial.rows.size() == par.rows.size());
    for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        CHECK(serial.rows[i].comm.evm_rms == par.rows[i].comm.evm_rms);
        CHECK(serial.rows[i].angular_rmse_deg == par.rows[i].angular_rmse_deg);
        CHECK(serial.rows[i].noise_floor_s1 == par.rows[i].noise_floor_s1);
    }
}
