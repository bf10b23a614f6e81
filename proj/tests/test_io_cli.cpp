#include <rsgbm/cli.hpp>
#include <rsgbm/io.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using namespace rsgbm;
using Catch::Approx;

namespace {

const char* kModelJson = R"({"Q": [[-1.0, 1.0], [1.0, -1.0]],
                             "mu": [0.1, -0.1], "sigma": [0.2, 0.2]})";

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

int run_cli(const std::string& args, const std::string& env_prefix = "") {
    const std::string cmd = env_prefix + RSGBM_CLI_PATH + " " + args;
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

bool has_message(const ValidationErrors& e, const std::string& needle) {
    for (const auto& m : e.messages)
        if (m.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("format_g17 round-trips doubles through text", "[io]") {
    const double vals[] = {3.141592653589793, 0.1, 1e300, 5e-324, -0.0, 2.0 / 3.0};
    for (double v : vals) {
        const std::string s = io::format_g17(v);
        const double back = std::strtod(s.c_str(), nullptr);
        REQUIRE(back == v);
        REQUIRE(std::signbit(back) == std::signbit(v));
    }
}

TEST_CASE("parse_model applies defaults", "[io]") {
    RegimeModel m = io::parse_model(io::json::parse(kModelJson));
    REQUIRE(m.n_states == 2);
    REQUIRE(m.x0 == 1.0);
    REQUIRE(m.initial_state == 0);
    REQUIRE(m.Q(0, 1) == 1.0);
    REQUIRE(m.mu(1) == -0.1);
}

TEST_CASE("parse_model reports every violation at once", "[io]") {
    // three independent problems: an unknown key, a bad Q row sum, a bad sigma
    const char* bad = R"({"Q": [[-1.0, 2.0], [1.0, -1.0]],
                          "mu": [0.1, -0.1], "sigma": [0.2, -0.2],
                          "volatility": 1})";
    try {
        io::parse_model(io::json::parse(bad));
        FAIL("expected ValidationErrors");
    } catch (const ValidationErrors& e) {
        REQUIRE(e.messages.size() >= 3);
        REQUIRE(has_message(e, "unknown key 'volatility'"));
        REQUIRE(has_message(e, "Q row 0 does not sum to 0"));
        REQUIRE(has_message(e, "sigma[1] must be > 0"));
    }
}

TEST_CASE("model_to_json round-trips", "[io]") {
    TwoStateModel two(1.3, 0.7, 0.3, -0.2, 0.25, 0.45, 2.5);
    RegimeModel back = io::parse_model(io::model_to_json(two.base));
    REQUIRE(back.n_states == 2);
    REQUIRE(back.Q == two.base.Q);
    REQUIRE(back.mu == two.base.mu);
    REQUIRE(back.sigma == two.base.sigma);
    REQUIRE(back.x0 == 2.5);
    REQUIRE(back.initial_state == 0);
}

TEST_CASE("csv headers are stable", "[io]") {
    TwoStateModel two(1.0, 1.0, 0.1, -0.1, 0.2, 0.2);
    const std::string spec = io::spectrum_csv(lyapunov_curve(two.base, {0.0, 1.0}));
    REQUIRE(spec.rfind("p,growth_rate,eta_p,max_eig_real,max_eig_imag\n", 0) == 0);
    const std::string mom = io::moments_csv({moments_lnX(two, 1.0)});
    REQUIRE(mom.rfind("t,mean,second_moment,variance,terms_used\n", 0) == 0);
}

TEST_CASE("parse_config accepts a full classify config", "[cli]") {
    const std::string cfg = std::string(R"({"subcommand": "classify", "model": )") +
                            kModelJson +
                            R"(, "params": {"tolerance": 0.05},
                               "output": "/tmp/rsgbm_cfg_out.json", "format": "json"})";
    RunConfig rc = parse_config(cfg);
    REQUIRE(rc.subcommand == "classify");
    REQUIRE(rc.has_model);
    REQUIRE(rc.classify_tolerance == 0.05);
    REQUIRE(rc.output_path == "/tmp/rsgbm_cfg_out.json");
    REQUIRE(rc.format == RunConfig::Format::Json);
    REQUIRE(rc.format_explicit);
}

TEST_CASE("parse_config collects every violation", "[cli]") {
    const char* cfg = R"({"subcommand": "clasify", "bogus": 1,
                          "model": {"Q": "x"},
                          "mc": {"n_paths": 10}})";
    try {
        parse_config(cfg);
        FAIL("expected ValidationErrors");
    } catch (const ValidationErrors& e) {
        REQUIRE(e.messages.size() >= 4);
        REQUIRE(has_message(e, "unknown key 'bogus'"));
        REQUIRE(has_message(e, "unknown subcommand 'clasify'"));
        REQUIRE(has_message(e, "'Q' must be a non-empty array"));
        REQUIRE(has_message(e, "'n_paths' must be an integer >= 100"));
    }
}

TEST_CASE("parse_config output formats are per-subcommand", "[cli]") {
    const std::string model = std::string(R"(, "model": )") + kModelJson + "}";
    RunConfig mc = parse_config(R"({"subcommand": "fpp-mc")" + model);
    REQUIRE(mc.format == RunConfig::Format::Json);
    RunConfig val = parse_config(R"({"subcommand": "validate"})");
    REQUIRE(val.format == RunConfig::Format::Text);
    try {
        parse_config(R"({"subcommand": "slepian", "format": "csv")" + model);
        FAIL("expected ValidationErrors");
    } catch (const ValidationErrors& e) {
        REQUIRE(has_message(e, "'format' is fixed for subcommand 'slepian'"));
    }
    // a model is required for everything except validate
    try {
        parse_config(R"({"subcommand": "spectrum"})");
        FAIL("expected ValidationErrors");
    } catch (const ValidationErrors& e) {
        REQUIRE(has_message(e, "requires a model"));
    }
}

TEST_CASE("cli classify prints the human-readable line", "[cli]") {
    spit("/tmp/rsgbm_model.json", kModelJson);
    const int code =
        run_cli("classify -m /tmp/rsgbm_model.json > /tmp/rsgbm_classify.txt");
    REQUIRE(code == 0);
    const std::string out = slurp("/tmp/rsgbm_classify.txt");
    REQUIRE(out.find("TRANSIENT, TO_ZERO, mean_drift=-0.02") != std::string::npos);
}

TEST_CASE("cli spectrum emits a parseable csv row at p=0", "[cli]") {
    spit("/tmp/rsgbm_model.json", kModelJson);
    const int code = run_cli("spectrum -m /tmp/rsgbm_model.json --p 0 -o /tmp/rsgbm_spec.csv");
    REQUIRE(code == 0);
    std::istringstream in(slurp("/tmp/rsgbm_spec.csv"));
    std::string header, row;
    REQUIRE(std::getline(in, header));
    REQUIRE(header == "p,growth_rate,eta_p,max_eig_real,max_eig_imag");
    REQUIRE(std::getline(in, row));
    double p = -1.0, growth = -1.0;
    REQUIRE(std::sscanf(row.c_str(), "%lf,%lf", &p, &growth) == 2);
    REQUIRE(p == 0.0);
    REQUIRE(std::fabs(growth) <= 1e-10);
}

TEST_CASE("cli outputs are byte-identical across reruns and worker counts", "[cli]") {
    spit("/tmp/rsgbm_model.json", kModelJson);
    REQUIRE(run_cli("spectrum -m /tmp/rsgbm_model.json -o /tmp/rsgbm_spec_a.csv") == 0);
    REQUIRE(run_cli("spectrum -m /tmp/rsgbm_model.json -o /tmp/rsgbm_spec_b.csv") == 0);
    REQUIRE(slurp("/tmp/rsgbm_spec_a.csv") == slurp("/tmp/rsgbm_spec_b.csv"));

    const std::string mc_args =
        "fpp-mc -m /tmp/rsgbm_model.json --x 1 --barrier 0.5 --horizon 1"
        " --n-paths 2000 --seed 7 -o /tmp/rsgbm_mc_";
    REQUIRE(run_cli(mc_args + "a.json", "RSGBM_THREADS=1 ") == 0);
    REQUIRE(run_cli(mc_args + "b.json", "RSGBM_THREADS=5 ") == 0);
    const std::string a = slurp("/tmp/rsgbm_mc_a.json");
    REQUIRE(a == slurp("/tmp/rsgbm_mc_b.json"));
    REQUIRE(io::json::parse(a).contains("estimate"));
}

TEST_CASE("cli failure exit codes", "[cli]") {
    // 1: unreadable or malformed inputs
    REQUIRE(run_cli("classify -m /tmp/rsgbm_no_such_model.json 2> /dev/null") == 1);
    spit("/tmp/rsgbm_bad_model.json", "{not json");
    REQUIRE(run_cli("classify -m /tmp/rsgbm_bad_model.json 2> /dev/null") == 1);

    // 2: a series that cannot meet its tolerance within the term budget
    const std::string cfg = std::string(R"({"subcommand": "moments", "model": )") +
                            kModelJson +
                            R"(, "params": {"t_grid": [50.0]}, "series": {"max_terms": 12}})";
    spit("/tmp/rsgbm_trunc_cfg.json", cfg);
    REQUIRE(run_cli("--config /tmp/rsgbm_trunc_cfg.json > /dev/null 2>&1") == 2);
}
