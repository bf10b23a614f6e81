#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsgbm/cli.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw rsgbm::ParseError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void report(const rsgbm::ValidationErrors& e) {
    std::cerr << "validation failure:\n";
    for (const std::string& m : e.messages) std::cerr << "  - " << m << "\n";
}

int load_model(rsgbm::RunConfig& rc, const std::string& path) {
    try {
        rc.model = rsgbm::io::load_model_file(path);
        rc.has_model = true;
        return 0;
    } catch (const rsgbm::ValidationErrors& e) {
        report(e);
        return 1;
    } catch (const rsgbm::Error& e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return 1;
    }
}

struct FormatOpt {
    std::string value;
    void apply(rsgbm::RunConfig& rc) const {
        if (value.empty()) return;
        rc.format = value == "json" ? rsgbm::RunConfig::Format::Json
                                    : rsgbm::RunConfig::Format::Csv;
        rc.format_explicit = true;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"analytics for regime-switching geometric Brownian motion"};
    app.require_subcommand(0, 1);

    std::string config_path;
    app.add_option("--config", config_path,
                   "run from a JSON config file instead of subcommand flags");

    rsgbm::RunConfig rc;
    std::string model_path, variant = "density_consistent", mode = "full", format;
    double p_min = 0.0, p_max = 2.0;
    int p_count = 41;
    std::vector<double> p_list, t_list;

    auto add_common = [&](CLI::App* sub, bool with_format) {
        sub->add_option("--output,-o", rc.output_path, "write results to this file");
        if (with_format)
            sub->add_option("--format", format, "output format")
                ->check(CLI::IsMember({"csv", "json"}));
    };
    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--model,-m", model_path, "model JSON file")->required();
    };
    auto add_mc = [&](CLI::App* sub) {
        sub->add_option("--n-paths", rc.mc.n_paths, "number of Monte Carlo paths")
            ->check(CLI::Range(std::uint64_t{100}, std::uint64_t{1} << 40));
        sub->add_option("--seed", rc.mc.master_seed, "master seed");
        sub->add_option("--confidence", rc.mc.confidence_level,
                        "confidence level for intervals")
            ->check(CLI::Range(1e-12, 1.0 - 1e-12));
    };
    auto add_query = [&](CLI::App* sub) {
        sub->add_option("--x", rc.x, "initial price (> barrier)")->check(CLI::PositiveNumber);
        sub->add_option("--barrier,-a", rc.barrier, "lower barrier")
            ->check(CLI::PositiveNumber);
        sub->add_option("--horizon,-T", rc.horizon, "time horizon")
            ->check(CLI::PositiveNumber);
    };

    CLI::App* classify = app.add_subcommand("classify", "recurrence/transience of ln X");
    add_model(classify);
    classify->add_option("--tolerance", rc.classify_tolerance,
                         "dead-band for the mean drift (default: scale-aware)")
        ->check(CLI::PositiveNumber);
    add_common(classify, true);

    CLI::App* spectrum = app.add_subcommand("spectrum", "moment Lyapunov exponent curve");
    add_model(spectrum);
    spectrum->add_option("--p", p_list, "explicit moment orders (repeatable)");
    spectrum->add_option("--p-min", p_min, "grid start (default 0)");
    spectrum->add_option("--p-max", p_max, "grid end (default 2)");
    spectrum->add_option("--p-count", p_count, "grid size (default 41)")
        ->check(CLI::Range(1, 100000));
    add_common(spectrum, true);

    CLI::App* moments = app.add_subcommand("moments", "mean/variance of ln X(t)");
    add_model(moments);
    moments->add_option("--t", t_list, "evaluation times (repeatable)")->required();
    add_common(moments, true);

    CLI::App* fpp_bounds = app.add_subcommand("fpp-bounds", "analytic first-passage bounds");
    add_model(fpp_bounds);
    add_query(fpp_bounds);
    fpp_bounds->add_option("--variant", variant, "series coefficient variant")
        ->check(CLI::IsMember({"density_consistent", "as_printed"}));
    add_common(fpp_bounds, false);

    CLI::App* fpp_mc = app.add_subcommand("fpp-mc", "Monte Carlo first-passage probability");
    add_model(fpp_mc);
    add_query(fpp_mc);
    add_mc(fpp_mc);
    add_common(fpp_mc, false);

    CLI::App* slepian = app.add_subcommand("slepian", "Gaussian-comparison upper bound");
    add_model(slepian);
    add_query(slepian);
    add_mc(slepian);
    slepian->add_option("--refinement", rc.mc.refinement, "bridge grid size (power of two)");
    slepian->add_option("--mode", mode, "estimator mode")
        ->check(CLI::IsMember({"full", "eta0_zero", "eta0_zero_exact"}));
    add_common(slepian, false);

    CLI::App* validate = app.add_subcommand("validate", "run the self-validation suite");
    validate->add_option("--seed", rc.mc.master_seed, "master seed");
    validate->add_option("--scale", rc.validate_scale,
                         "path-count multiplier (1 = full size)")
        ->check(CLI::PositiveNumber);
    add_common(validate, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (!config_path.empty()) {
        if (app.get_subcommands().size() > 0) {
            std::cerr << "validation failure: --config cannot be combined with a subcommand\n";
            return 1;
        }
        try {
            return rsgbm::run(rsgbm::parse_config(read_file(config_path)));
        } catch (const rsgbm::ValidationErrors& e) {
            report(e);
            return 1;
        } catch (const rsgbm::Error& e) {
            std::cerr << "validation failure: " << e.what() << "\n";
            return 1;
        }
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 1;
    }

    CLI::App* sub = app.get_subcommands().front();
    rc.subcommand = sub->get_name();

    if (rc.subcommand != "validate") {
        const int code = load_model(rc, model_path);
        if (code != 0) return code;
    }
    if (rc.subcommand == "spectrum") {
        if (!p_list.empty()) {
            rc.p_grid = p_list;
        } else {
            for (int i = 0; i < p_count; ++i)
                rc.p_grid.push_back(p_count == 1
                                        ? p_min
                                        : p_min + (p_max - p_min) * i / (p_count - 1));
        }
        for (double p : rc.p_grid)
            if (p < 0.0) {
                std::cerr << "validation failure: moment orders must be >= 0\n";
                return 1;
            }
    }
    if (rc.subcommand == "moments") {
        rc.t_grid = t_list;
        for (double t : rc.t_grid)
            if (!(t > 0.0)) {
                std::cerr << "validation failure: evaluation times must be > 0\n";
                return 1;
            }
    }
    rc.variant = variant == "as_printed" ? rsgbm::CoefficientVariant::AsPrinted
                                         : rsgbm::CoefficientVariant::DensityConsistent;
    rc.slepian_mode = mode == "eta0_zero"
                          ? rsgbm::SlepianMode::Eta0Zero
                          : mode == "eta0_zero_exact" ? rsgbm::SlepianMode::Eta0ZeroExact
                                                      : rsgbm::SlepianMode::Full;
    FormatOpt{format}.apply(rc);
    if (!rc.format_explicit &&
        (rc.subcommand == "fpp-bounds" || rc.subcommand == "fpp-mc" ||
         rc.subcommand == "slepian"))
        rc.format = rsgbm::RunConfig::Format::Json;
    if (rc.subcommand == "validate") rc.format = rsgbm::RunConfig::Format::Text;

    if (rc.mc.refinement < 1 || (rc.mc.refinement & (rc.mc.refinement - 1)) != 0) {
        std::cerr << "validation failure: --refinement must be a power of two >= 1\n";
        return 1;
    }
    return rsgbm::run(rc);
}
