#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "rsgbm/errors.hpp"
#include "rsgbm/firstpassage.hpp"
#include "rsgbm/io.hpp"
#include "rsgbm/mc.hpp"
#include "rsgbm/model.hpp"
#include "rsgbm/moments.hpp"
#include "rsgbm/montecarlo.hpp"
#include "rsgbm/spectral.hpp"
#include "rsgbm/validate.hpp"

namespace rsgbm {

struct RunConfig {
    std::string subcommand;
    RegimeModel model;
    bool has_model = false;
    std::vector<double> p_grid;
    std::vector<double> t_grid;
    double x = 1.0;
    double barrier = 0.5;
    double horizon = 1.0;
    double classify_tolerance = -1.0;
    MCConfig mc;
    SeriesConfig series;
    QuadConfig quad;
    CoefficientVariant variant = CoefficientVariant::DensityConsistent;
    SlepianMode slepian_mode = SlepianMode::Full;
    double validate_scale = 1.0;
    std::string output_path;  // empty: stdout
    enum class Format { Csv, Json, Text } format = Format::Csv;
    bool format_explicit = false;
};

namespace detail {

inline bool known_subcommand(const std::string& s) {
    return s == "classify" || s == "spectrum" || s == "moments" || s == "fpp-bounds" ||
           s == "fpp-mc" || s == "slepian" || s == "validate";
}

inline void need_number(const io::json& j, const char* key, double& out, bool positive,
                        const std::string& where, std::vector<std::string>& errs) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) {
        errs.push_back(where + ": '" + key + "' must be a number");
        return;
    }
    const double v = j[key].get<double>();
    if (positive && !(v > 0.0)) {
        errs.push_back(where + ": '" + key + "' must be > 0");
        return;
    }
    out = v;
}

inline void need_grid(const io::json& j, const char* key, std::vector<double>& out,
                      double min_allowed, bool strict, const std::string& where,
                      std::vector<std::string>& errs) {
    if (!j.contains(key)) return;
    if (!j[key].is_array() || j[key].empty()) {
        errs.push_back(where + ": '" + key + "' must be a non-empty array of numbers");
        return;
    }
    std::vector<double> grid;
    for (std::size_t i = 0; i < j[key].size(); ++i) {
        if (!j[key][i].is_number()) {
            errs.push_back(where + ": '" + key + "[" + std::to_string(i) +
                           "]' must be a number");
            return;
        }
        const double v = j[key][i].get<double>();
        if (strict ? !(v > min_allowed) : !(v >= min_allowed)) {
            errs.push_back(where + ": '" + key + "[" + std::to_string(i) + "]' must be " +
                           (strict ? "> " : ">= ") + io::format_g17(min_allowed));
            return;
        }
        grid.push_back(v);
    }
    out = std::move(grid);
}

}  // namespace detail

/// Full config-file parse: returns a validated RunConfig or throws
/// ValidationErrors carrying every violation found, not just the first.
inline RunConfig parse_config(const std::string& contents) {
    io::json j;
    try {
        j = io::json::parse(contents);
    } catch (const io::json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ValidationErrors({"config: expected a JSON object"});

    std::vector<std::string> errs;
    RunConfig rc;
    io::check_keys(j,
                   {"subcommand", "model", "model_file", "params", "mc", "series",
                    "quadrature", "output", "format"},
                   "config", errs);

    if (!j.contains("subcommand") || !j["subcommand"].is_string()) {
        errs.push_back("config: missing string key 'subcommand'");
    } else {
        rc.subcommand = j["subcommand"].get<std::string>();
        if (!detail::known_subcommand(rc.subcommand))
            errs.push_back("config: unknown subcommand '" + rc.subcommand + "'");
    }

    if (j.contains("model") && j.contains("model_file"))
        errs.push_back("config: give either 'model' or 'model_file', not both");
    try {
        if (j.contains("model")) {
            rc.model = io::parse_model(j["model"]);
            rc.has_model = true;
        } else if (j.contains("model_file")) {
            if (!j["model_file"].is_string())
                errs.push_back("config: 'model_file' must be a string");
            else {
                rc.model = io::load_model_file(j["model_file"].get<std::string>());
                rc.has_model = true;
            }
        }
    } catch (const ValidationErrors& e) {
        errs.insert(errs.end(), e.messages.begin(), e.messages.end());
    } catch (const ParseError& e) {
        errs.push_back(e.what());
    }

    const bool needs_model = rc.subcommand != "validate" && !rc.subcommand.empty();
    if (needs_model && !rc.has_model && errs.empty())
        errs.push_back("config: subcommand '" + rc.subcommand + "' requires a model");

    if (j.contains("params")) {
        const io::json& p = j["params"];
        if (!p.is_object()) {
            errs.push_back("config: 'params' must be an object");
        } else if (rc.subcommand == "classify") {
            io::check_keys(p, {"tolerance"}, "params", errs);
            detail::need_number(p, "tolerance", rc.classify_tolerance, true, "params", errs);
        } else if (rc.subcommand == "spectrum") {
            io::check_keys(p, {"p_grid"}, "params", errs);
            detail::need_grid(p, "p_grid", rc.p_grid, 0.0, false, "params", errs);
        } else if (rc.subcommand == "moments") {
            io::check_keys(p, {"t_grid"}, "params", errs);
            detail::need_grid(p, "t_grid", rc.t_grid, 0.0, true, "params", errs);
        } else if (rc.subcommand == "fpp-bounds" || rc.subcommand == "fpp-mc" ||
                   rc.subcommand == "slepian") {
            if (rc.subcommand == "fpp-bounds")
                io::check_keys(p, {"x", "barrier", "horizon", "variant"}, "params", errs);
            else if (rc.subcommand == "slepian")
                io::check_keys(p, {"x", "barrier", "horizon", "mode"}, "params", errs);
            else
                io::check_keys(p, {"x", "barrier", "horizon"}, "params", errs);
            detail::need_number(p, "x", rc.x, true, "params", errs);
            detail::need_number(p, "barrier", rc.barrier, true, "params", errs);
            detail::need_number(p, "horizon", rc.horizon, true, "params", errs);
            if (!(rc.barrier < rc.x))
                errs.push_back("params: require 0 < barrier < x");
            if (p.contains("variant")) {
                const std::string v = p["variant"].is_string() ? p["variant"].get<std::string>() : "";
                if (v == "density_consistent")
                    rc.variant = CoefficientVariant::DensityConsistent;
                else if (v == "as_printed")
                    rc.variant = CoefficientVariant::AsPrinted;
                else
                    errs.push_back("params: 'variant' must be 'density_consistent' or 'as_printed'");
            }
            if (p.contains("mode")) {
                const std::string v = p["mode"].is_string() ? p["mode"].get<std::string>() : "";
                if (v == "full")
                    rc.slepian_mode = SlepianMode::Full;
                else if (v == "eta0_zero")
                    rc.slepian_mode = SlepianMode::Eta0Zero;
                else if (v == "eta0_zero_exact")
                    rc.slepian_mode = SlepianMode::Eta0ZeroExact;
                else
                    errs.push_back("params: 'mode' must be 'full', 'eta0_zero', or 'eta0_zero_exact'");
            }
        } else if (rc.subcommand == "validate") {
            io::check_keys(p, {"scale"}, "params", errs);
            detail::need_number(p, "scale", rc.validate_scale, true, "params", errs);
        }
    }

    if (j.contains("mc")) {
        const io::json& m = j["mc"];
        if (!m.is_object()) {
            errs.push_back("config: 'mc' must be an object");
        } else {
            io::check_keys(m, {"n_paths", "master_seed", "refinement", "confidence_level"},
                           "mc", errs);
            if (m.contains("n_paths")) {
                if (!m["n_paths"].is_number_unsigned() || m["n_paths"].get<std::uint64_t>() < 100)
                    errs.push_back("mc: 'n_paths' must be an integer >= 100");
                else
                    rc.mc.n_paths = m["n_paths"].get<std::uint64_t>();
            }
            if (m.contains("master_seed")) {
                if (!m["master_seed"].is_number_integer() && !m["master_seed"].is_number_unsigned())
                    errs.push_back("mc: 'master_seed' must be an integer");
                else
                    rc.mc.master_seed = m["master_seed"].get<std::uint64_t>();
            }
            if (m.contains("refinement")) {
                const bool ok = m["refinement"].is_number_unsigned() &&
                                m["refinement"].get<std::uint64_t>() >= 1 &&
                                (m["refinement"].get<std::uint64_t>() &
                                 (m["refinement"].get<std::uint64_t>() - 1)) == 0;
                if (!ok)
                    errs.push_back("mc: 'refinement' must be a power of two >= 1");
                else
                    rc.mc.refinement = int(m["refinement"].get<std::uint64_t>());
            }
            if (m.contains("confidence_level")) {
                const bool ok = m["confidence_level"].is_number() &&
                                m["confidence_level"].get<double>() > 0.0 &&
                                m["confidence_level"].get<double>() < 1.0;
                if (!ok)
                    errs.push_back("mc: 'confidence_level' must lie in (0,1)");
                else
                    rc.mc.confidence_level = m["confidence_level"].get<double>();
            }
        }
    }

    if (j.contains("series")) {
        const io::json& s = j["series"];
        if (!s.is_object()) {
            errs.push_back("config: 'series' must be an object");
        } else {
            io::check_keys(s, {"eps", "max_terms", "min_terms"}, "series", errs);
            detail::need_number(s, "eps", rc.series.eps, true, "series", errs);
            if (s.contains("max_terms")) {
                if (!s["max_terms"].is_number_unsigned() || s["max_terms"].get<int>() < 1)
                    errs.push_back("series: 'max_terms' must be a positive integer");
                else
                    rc.series.max_terms = s["max_terms"].get<int>();
            }
            if (s.contains("min_terms")) {
                if (!s["min_terms"].is_number_unsigned() || s["min_terms"].get<int>() < 1)
                    errs.push_back("series: 'min_terms' must be a positive integer");
                else
                    rc.series.min_terms = s["min_terms"].get<int>();
            }
        }
    }

    if (j.contains("quadrature")) {
        const io::json& q = j["quadrature"];
        if (!q.is_object()) {
            errs.push_back("config: 'quadrature' must be an object");
        } else {
            io::check_keys(q, {"rel_tol", "abs_tol", "max_depth", "panel_order"}, "quadrature",
                           errs);
            detail::need_number(q, "rel_tol", rc.quad.rel_tol, true, "quadrature", errs);
            if (q.contains("abs_tol")) {
                if (!q["abs_tol"].is_number() || q["abs_tol"].get<double>() < 0.0)
                    errs.push_back("quadrature: 'abs_tol' must be >= 0");
                else
                    rc.quad.abs_tol = q["abs_tol"].get<double>();
            }
            if (q.contains("max_depth")) {
                if (!q["max_depth"].is_number_unsigned() || q["max_depth"].get<int>() < 1)
                    errs.push_back("quadrature: 'max_depth' must be a positive integer");
                else
                    rc.quad.max_depth = q["max_depth"].get<int>();
            }
            if (q.contains("panel_order")) {
                if (!q["panel_order"].is_number_unsigned() || q["panel_order"].get<int>() < 2)
                    errs.push_back("quadrature: 'panel_order' must be an integer >= 2");
                else
                    rc.quad.panel_order = q["panel_order"].get<int>();
            }
        }
    }

    if (j.contains("output")) {
        if (!j["output"].is_string())
            errs.push_back("config: 'output' must be a string path");
        else
            rc.output_path = j["output"].get<std::string>();
    }

    const bool format_allowed = rc.subcommand == "classify" || rc.subcommand == "spectrum" ||
                                rc.subcommand == "moments";
    if (j.contains("format")) {
        const std::string f = j["format"].is_string() ? j["format"].get<std::string>() : "";
        if (f == "csv")
            rc.format = RunConfig::Format::Csv;
        else if (f == "json")
            rc.format = RunConfig::Format::Json;
        else
            errs.push_back("config: 'format' must be 'csv' or 'json'");
        rc.format_explicit = true;
        if (!format_allowed && !rc.subcommand.empty() && detail::known_subcommand(rc.subcommand))
            errs.push_back("config: 'format' is fixed for subcommand '" + rc.subcommand +
                           "' (fpp/slepian emit JSON, validate emits text)");
    }
    if (!format_allowed) {
        rc.format = rc.subcommand == "validate" ? RunConfig::Format::Text
                                                : RunConfig::Format::Json;
    }

    if (!errs.empty()) throw ValidationErrors(errs);
    return rc;
}

namespace detail {

inline void write_output(const RunConfig& rc, const std::string& payload) {
    if (rc.output_path.empty()) {
        std::fwrite(payload.data(), 1, payload.size(), stdout);
        return;
    }
    std::ofstream out(rc.output_path, std::ios::binary);
    if (!out) throw ParseError("cannot open output file: " + rc.output_path);
    out.write(payload.data(), std::streamsize(payload.size()));
}

inline std::string dump_json(const io::json& j) { return j.dump(2) + "\n"; }

inline int dispatch(const RunConfig& rc) {
    if (rc.subcommand == "classify") {
        Classification c = classify(rc.model, rc.classify_tolerance);
        char line[160];
        std::snprintf(line, sizeof(line), "%s, %s, mean_drift=%.12g\n",
                      to_string(c.recurrence_class), to_string(c.as_limit), c.mean_drift);
        std::fputs(line, stdout);
        if (!rc.output_path.empty() || rc.format == RunConfig::Format::Json) {
            std::string payload;
            if (rc.format == RunConfig::Format::Json) {
                payload = dump_json(io::classification_to_json(c));
            } else {
                payload = "recurrence_class,as_limit,mean_drift,tolerance_used\n";
                payload += std::string(to_string(c.recurrence_class)) + ',' +
                           to_string(c.as_limit) + ',' + io::format_g17(c.mean_drift) + ',' +
                           io::format_g17(c.tolerance_used) + '\n';
            }
            write_output(rc, payload);
        }
        return 0;
    }
    if (rc.subcommand == "spectrum") {
        std::vector<double> grid = rc.p_grid;
        if (grid.empty())
            for (int i = 0; i <= 40; ++i) grid.push_back(i * 0.05);
        LyapunovCurve curve = lyapunov_curve(rc.model, grid);
        if (rc.format == RunConfig::Format::Json) {
            io::json rows = io::json::array();
            for (const CurvePoint& pt : curve.points)
                rows.push_back(io::json{{"p", pt.p},
                                        {"growth_rate", pt.growth_rate},
                                        {"eta_p", pt.eta_p},
                                        {"max_eig_real", pt.max_eig_real},
                                        {"max_eig_imag", pt.max_eig_imag}});
            write_output(rc, dump_json(io::json{{"points", rows},
                                                {"convex", curve.convex},
                                                {"min_second_difference",
                                                 curve.min_second_difference}}));
        } else {
            write_output(rc, io::spectrum_csv(curve));
        }
        return 0;
    }
    if (rc.subcommand == "moments") {
        TwoStateModel two(rc.model);
        std::vector<double> grid = rc.t_grid.empty() ? std::vector<double>{1.0} : rc.t_grid;
        std::vector<MomentResult> rows;
        rows.reserve(grid.size());
        for (double t : grid) rows.push_back(moments_lnX(two, t, rc.series, rc.quad));
        if (rc.format == RunConfig::Format::Json) {
            io::json arr = io::json::array();
            for (const MomentResult& r : rows)
                arr.push_back(io::json{{"t", r.t},
                                       {"mean", r.mean},
                                       {"second_moment", r.second_moment},
                                       {"variance", r.variance},
                                       {"truncation_bound", r.truncation_bound},
                                       {"terms_used", r.terms_used}});
            write_output(rc, dump_json(arr));
        } else {
            write_output(rc, io::moments_csv(rows));
        }
        return 0;
    }
    if (rc.subcommand == "fpp-bounds") {
        FirstPassageQuery q = make_query(TwoStateModel(rc.model), rc.x, rc.barrier, rc.horizon);
        BoundsResult b = bounds(q, rc.variant, rc.series, rc.quad);
        write_output(rc, dump_json(io::bounds_to_json(q, b)));
        return 0;
    }
    if (rc.subcommand == "fpp-mc") {
        FirstPassageQuery q = make_query(TwoStateModel(rc.model), rc.x, rc.barrier, rc.horizon);
        MCEstimate est = estimate_first_passage(q, rc.mc);
        write_output(rc, dump_json(io::json{
                             {"query", io::query_to_json(q)},
                             {"estimate", io::estimate_to_json(est)},
                             {"config", io::json{{"n_paths", rc.mc.n_paths},
                                                 {"master_seed", rc.mc.master_seed},
                                                 {"refinement", rc.mc.refinement},
                                                 {"confidence_level", rc.mc.confidence_level}}}}));
        return 0;
    }
    if (rc.subcommand == "slepian") {
        FirstPassageQuery q = make_query(TwoStateModel(rc.model), rc.x, rc.barrier, rc.horizon);
        MCEstimate est = slepian_upper(q, rc.mc, rc.slepian_mode);
        const char* mode = rc.slepian_mode == SlepianMode::Full
                               ? "full"
                               : rc.slepian_mode == SlepianMode::Eta0Zero ? "eta0_zero"
                                                                          : "eta0_zero_exact";
        write_output(rc, dump_json(io::json{
                             {"query", io::query_to_json(q)},
                             {"estimate", io::estimate_to_json(est)},
                             {"mode", mode},
                             {"config", io::json{{"n_paths", rc.mc.n_paths},
                                                 {"master_seed", rc.mc.master_seed},
                                                 {"refinement", rc.mc.refinement},
                                                 {"confidence_level", rc.mc.confidence_level}}}}));
        return 0;
    }
    if (rc.subcommand == "validate") {
        AcceptanceOptions opt{rc.mc.master_seed, rc.validate_scale};
        std::vector<CriterionResult> results = run_acceptance(opt);
        write_output(rc, acceptance_report(opt, results));
        for (const CriterionResult& r : results)
            if (!r.passed) return 3;
        return 0;
    }
    throw ValidationErrors({"config: unknown subcommand '" + rc.subcommand + "'"});
}

}  // namespace detail

/// Execute a validated config. Exit codes: 0 success, 1 validation failure,
/// 2 numerical failure, 3 acceptance-suite failure.
inline int run(const RunConfig& rc) {
    try {
        return detail::dispatch(rc);
    } catch (const TruncationError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace rsgbm
