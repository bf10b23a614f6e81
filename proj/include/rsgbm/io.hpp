#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsgbm/errors.hpp"
#include "rsgbm/firstpassage.hpp"
#include "rsgbm/mc.hpp"
#include "rsgbm/model.hpp"
#include "rsgbm/moments.hpp"
#include "rsgbm/spectral.hpp"

namespace rsgbm::io {

using json = nlohmann::json;

/// 17 significant digits: enough for any double to round-trip through text.
inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where, std::vector<std::string>& errors) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) { known = true; break; }
        if (!known) errors.push_back("unknown key '" + item.key() + "' in " + where);
    }
}

namespace detail {

inline bool get_number(const json& j, const char* key, const std::string& where, bool required,
                       double& out, std::vector<std::string>& errors) {
    if (!j.contains(key)) {
        if (required) errors.push_back(where + ": missing required key '" + std::string(key) + "'");
        return false;
    }
    if (!j[key].is_number()) {
        errors.push_back(where + ": '" + std::string(key) + "' must be a number");
        return false;
    }
    out = j[key].get<double>();
    return true;
}

inline bool get_vector(const json& j, const char* key, const std::string& where,
                       Eigen::VectorXd& out, std::vector<std::string>& errors) {
    if (!j.contains(key)) {
        errors.push_back(where + ": missing required key '" + std::string(key) + "'");
        return false;
    }
    const json& arr = j[key];
    if (!arr.is_array() || arr.empty()) {
        errors.push_back(where + ": '" + std::string(key) + "' must be a non-empty array");
        return false;
    }
    out.resize(Eigen::Index(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) {
            errors.push_back(where + ": '" + std::string(key) + "[" + std::to_string(i) +
                             "]' must be a number");
            return false;
        }
        out(Eigen::Index(i)) = arr[i].get<double>();
    }
    return true;
}

}  // namespace detail

/// Model from its JSON object form. Collects every violation — structural and
/// semantic — before throwing, so a bad file reports all problems at once.
inline RegimeModel parse_model(const json& j) {
    std::vector<std::string> errors;
    RegimeModel m;
    if (!j.is_object()) throw ValidationErrors({"model: expected a JSON object"});
    check_keys(j, {"Q", "mu", "sigma", "x0", "initial_state"}, "model", errors);

    bool q_ok = false;
    if (!j.contains("Q")) {
        errors.push_back("model: missing required key 'Q'");
    } else if (!j["Q"].is_array() || j["Q"].empty()) {
        errors.push_back("model: 'Q' must be a non-empty array of rows");
    } else {
        const json& rows = j["Q"];
        const std::size_t n = rows.size();
        m.Q.resize(Eigen::Index(n), Eigen::Index(n));
        q_ok = true;
        for (std::size_t r = 0; r < n; ++r) {
            if (!rows[r].is_array() || rows[r].size() != n) {
                errors.push_back("model: 'Q' row " + std::to_string(r) + " must have " +
                                 std::to_string(n) + " entries");
                q_ok = false;
                break;
            }
            for (std::size_t c = 0; c < n; ++c) {
                if (!rows[r][c].is_number()) {
                    errors.push_back("model: 'Q[" + std::to_string(r) + "][" + std::to_string(c) +
                                     "]' must be a number");
                    q_ok = false;
                    break;
                }
                m.Q(Eigen::Index(r), Eigen::Index(c)) = rows[r][c].get<double>();
            }
            if (!q_ok) break;
        }
        if (q_ok) m.n_states = int(n);
    }

    Eigen::VectorXd mu, sigma;
    const bool mu_ok = detail::get_vector(j, "mu", "model", mu, errors);
    const bool sg_ok = detail::get_vector(j, "sigma", "model", sigma, errors);
    if (mu_ok) m.mu = mu;
    if (sg_ok) m.sigma = sigma;

    double x0 = 1.0;
    if (j.contains("x0")) detail::get_number(j, "x0", "model", false, x0, errors);
    m.x0 = x0;
    if (j.contains("initial_state")) {
        if (!j["initial_state"].is_number_integer())
            errors.push_back("model: 'initial_state' must be an integer");
        else
            m.initial_state = j["initial_state"].get<int>();
    }

    if (q_ok && mu_ok && sg_ok) {
        for (const std::string& msg : check_model(m)) errors.push_back(msg);
    }
    if (!errors.empty()) throw ValidationErrors(errors);
    return m;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline RegimeModel load_model_file(const std::string& path) {
    return parse_model(load_json_file(path));
}

inline json model_to_json(const RegimeModel& m) {
    json q = json::array();
    for (int r = 0; r < m.n_states; ++r) {
        json row = json::array();
        for (int c = 0; c < m.n_states; ++c) row.push_back(m.Q(r, c));
        q.push_back(row);
    }
    json mu = json::array(), sigma = json::array();
    for (int i = 0; i < m.n_states; ++i) {
        mu.push_back(m.mu(i));
        sigma.push_back(m.sigma(i));
    }
    return json{{"Q", q}, {"mu", mu}, {"sigma", sigma}, {"x0", m.x0},
                {"initial_state", m.initial_state}};
}

inline json estimate_to_json(const MCEstimate& e) {
    return json{{"value", e.value},       {"std_error", e.std_error},
                {"ci_low", e.ci_low},     {"ci_high", e.ci_high},
                {"n_paths", e.n_paths},   {"seed", e.seed},
                {"bias_estimate", e.bias_estimate}};
}

inline json query_to_json(const FirstPassageQuery& q) {
    return json{{"model", model_to_json(q.model.base)},
                {"x", q.x},
                {"a", q.a},
                {"T", q.T},
                {"a_tilde", q.a_tilde}};
}

inline json bounds_to_json(const FirstPassageQuery& q, const BoundsResult& b) {
    return json{{"query", query_to_json(q)},
                {"lower", b.lower},
                {"upper", b.upper},
                {"no_switch_term", b.no_switch_term},
                {"coefficient_variant", to_string(b.variant)},
                {"truncation_bound", b.truncation_bound},
                {"quadrature_error_estimate", b.quadrature_error_estimate},
                {"terms_used", b.terms_used}};
}

inline json classification_to_json(const Classification& c) {
    return json{{"mean_drift", c.mean_drift},
                {"recurrence_class", to_string(c.recurrence_class)},
                {"as_limit", to_string(c.as_limit)},
                {"tolerance_used", c.tolerance_used}};
}

inline std::string spectrum_csv(const LyapunovCurve& curve) {
    std::string out = "p,growth_rate,eta_p,max_eig_real,max_eig_imag\n";
    for (const CurvePoint& pt : curve.points) {
        out += format_g17(pt.p) + ',' + format_g17(pt.growth_rate) + ',' +
               format_g17(pt.eta_p) + ',' + format_g17(pt.max_eig_real) + ',' +
               format_g17(pt.max_eig_imag) + '\n';
    }
    return out;
}

inline std::string moments_csv(const std::vector<MomentResult>& rows) {
    std::string out = "t,mean,second_moment,variance,terms_used\n";
    for (const MomentResult& r : rows) {
        out += format_g17(r.t) + ',' + format_g17(r.mean) + ',' + format_g17(r.second_moment) +
               ',' + format_g17(r.variance) + ',' + std::to_string(r.terms_used) + '\n';
    }
    return out;
}

}  // namespace rsgbm::io
