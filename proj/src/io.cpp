#include "rdflex/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/tokenizer.hpp>

#include "rdflex/error.hpp"
#include "rdflex/log.hpp"

namespace rdflex {

namespace {

using Eigen::VectorXd;
using nlohmann::json;
namespace pt = boost::property_tree;

std::vector<std::string> split_csv_line(const std::string& line) {
    boost::tokenizer<boost::escaped_list_separator<char>> tok(line);
    std::vector<std::string> out;
    for (const auto& t : tok) out.push_back(boost::trim_copy(t));
    return out;
}

bool is_missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == ".";
}

bool parse_number(const std::string& s, double& v) {
    const char* b = s.c_str();
    char* e = nullptr;
    v = std::strtod(b, &e);
    return e != b && *e == '\0';
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts, out;
    boost::split(parts, s, boost::is_any_of(","));
    for (auto& p : parts) {
        boost::trim(p);
        if (!p.empty()) out.push_back(p);
    }
    return out;
}

template <class T>
T parse_value(const std::string& key, const std::string& value) {
    std::istringstream is(value);
    T v{};
    is >> v;
    if (is.fail() || !is.eof()) {
        throw ConfigError("cli-io", "bad value '" + value + "' for key '" + key + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string v = boost::to_lower_copy(value);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("cli-io", "bad boolean '" + value + "' for key '" + key + "'");
}

pt::ptree read_ini(std::istream& in) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("cli-io", e.what());
    }
    return tree;
}

std::string criterion_name(BiasAwareCriterion c) {
    return c == BiasAwareCriterion::mse ? "mse" : "flci";
}

// rethrows lower-level argument errors as config errors so the exit code is 2
template <class F>
auto as_config(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const InvalidArgument& e) {
        throw ConfigError("cli-io", key + ": " + e.what());
    }
}

json ci_json(const ConfidenceInterval& ci) {
    json j{{"lo", ci.lo}, {"hi", ci.hi}, {"level", ci.level},
           {"method", to_string(ci.method)}, {"half_length", ci.half_length}};
    j["bias_bound"] = ci.bias_bound ? json(*ci.bias_bound) : json(nullptr);
    return j;
}

ConfidenceInterval ci_from(const json& j) {
    ConfidenceInterval ci;
    ci.lo = j.at("lo").get<double>();
    ci.hi = j.at("hi").get<double>();
    ci.level = j.at("level").get<double>();
    ci.method = parse_ci_method(j.at("method").get<std::string>());
    ci.half_length = j.at("half_length").get<double>();
    if (!j.at("bias_bound").is_null()) ci.bias_bound = j.at("bias_bound").get<double>();
    return ci;
}

json fit_json(const RdFit& f) {
    json j{{"tau_hat", f.tau_hat}, {"se", f.se}, {"h", f.h}, {"p", f.p}, {"v", f.v},
           {"n_eff_left", f.n_eff_left}, {"n_eff_right", f.n_eff_right}};
    j["ci"] = f.ci ? ci_json(*f.ci) : json(nullptr);
    return j;
}

RdFit fit_from(const json& j) {
    RdFit f;
    f.tau_hat = j.at("tau_hat").get<double>();
    f.se = j.at("se").get<double>();
    f.h = j.at("h").get<double>();
    f.p = j.at("p").get<int>();
    f.v = j.at("v").get<int>();
    f.n_eff_left = j.at("n_eff_left").get<int>();
    f.n_eff_right = j.at("n_eff_right").get<int>();
    if (!j.at("ci").is_null()) f.ci = ci_from(j.at("ci"));
    return f;
}

json fuzzy_json(const FuzzyFit& f) {
    json j{{"theta_hat", f.theta_hat}, {"tau_y", f.tau_y}, {"tau_t", f.tau_t}, {"se", f.se},
           {"se_t", f.se_t}, {"h", f.h}, {"first_stage_strength", f.first_stage_strength}};
    j["ci"] = f.ci ? ci_json(*f.ci) : json(nullptr);
    return j;
}

FuzzyFit fuzzy_from(const json& j) {
    FuzzyFit f;
    f.theta_hat = j.at("theta_hat").get<double>();
    f.tau_y = j.at("tau_y").get<double>();
    f.tau_t = j.at("tau_t").get<double>();
    f.se = j.at("se").get<double>();
    f.se_t = j.at("se_t").get<double>();
    f.h = j.at("h").get<double>();
    f.first_stage_strength = j.at("first_stage_strength").get<double>();
    if (!j.at("ci").is_null()) f.ci = ci_from(j.at("ci"));
    return f;
}

json estimator_json(const EstimatorConfig& c) {
    json j{{"kernel", c.kernel.name()},
           {"p", c.p},
           {"adjuster", c.adjuster},
           {"lasso_basis", c.lasso_basis},
           {"folds", c.folds},
           {"splits", c.splits},
           {"bandwidth", to_string(c.bandwidth)},
           {"ci", to_string(c.ci)},
           {"alpha", c.alpha},
           {"smoothness", c.smoothness},
           {"ba_criterion", criterion_name(c.ba_criterion)},
           {"nn", c.nn.R},
           {"nn_dof_correction", c.nn.dof_correction},
           {"dml1", c.dml1}};
    j["window"] = c.window ? json(*c.window) : json(nullptr);
    return j;
}

EstimatorConfig estimator_from(const json& j) {
    EstimatorConfig c;
    c.kernel = parse_kernel(j.at("kernel").get<std::string>());
    c.p = j.at("p").get<int>();
    c.adjuster = j.at("adjuster").get<std::string>();
    c.lasso_basis = j.at("lasso_basis").get<std::string>();
    c.folds = j.at("folds").get<int>();
    c.splits = j.at("splits").get<int>();
    c.bandwidth = parse_bandwidth(j.at("bandwidth").get<std::string>());
    c.ci = parse_ci_method(j.at("ci").get<std::string>());
    c.alpha = j.at("alpha").get<double>();
    c.smoothness = j.at("smoothness").get<double>();
    c.ba_criterion = parse_bias_aware_criterion(j.at("ba_criterion").get<std::string>());
    c.nn.R = j.at("nn").get<int>();
    c.nn.dof_correction = j.at("nn_dof_correction").get<bool>();
    c.dml1 = j.at("dml1").get<bool>();
    if (!j.at("window").is_null()) c.window = j.at("window").get<double>();
    return c;
}

json cct_json(const CctIntermediates& c) {
    return json{{"v_n", c.v_n},         {"gamma4_plus", c.gamma4_plus},
                {"gamma4_minus", c.gamma4_minus}, {"C_n", c.C_n},
                {"c_n", c.c_n},         {"B_n", c.B_n},
                {"b_n", c.b_n},         {"H_n", c.H_n},
                {"b_n_noreg", c.b_n_noreg}, {"h_n_noreg", c.h_n_noreg}};
}

CctIntermediates cct_from(const json& j) {
    CctIntermediates c;
    c.v_n = j.at("v_n").get<double>();
    c.gamma4_plus = j.at("gamma4_plus").get<double>();
    c.gamma4_minus = j.at("gamma4_minus").get<double>();
    c.C_n = j.at("C_n").get<double>();
    c.c_n = j.at("c_n").get<double>();
    c.B_n = j.at("B_n").get<double>();
    c.b_n = j.at("b_n").get<double>();
    c.H_n = j.at("H_n").get<double>();
    c.b_n_noreg = j.at("b_n_noreg").get<double>();
    c.h_n_noreg = j.at("h_n_noreg").get<double>();
    return c;
}

std::string g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

BandwidthReport bandwidth_report(const BandwidthSelection& b) {
    return {b.h, to_string(b.method), b.intermediates};
}

}  // namespace

std::vector<std::string> resolve_columns(const std::vector<std::string>& header,
                                         const std::vector<std::string>& patterns,
                                         const std::vector<std::string>& exclude) {
    std::vector<std::string> out;
    std::set<std::string> seen(exclude.begin(), exclude.end());
    for (const auto& pat : patterns) {
        std::vector<std::string> hits;
        if (!pat.empty() && pat.back() == '*') {
            const std::string prefix = pat.substr(0, pat.size() - 1);
            for (const auto& h : header) {
                if (h.rfind(prefix, 0) == 0 && !std::count(exclude.begin(), exclude.end(), h)) {
                    hits.push_back(h);
                }
            }
        } else if (std::count(header.begin(), header.end(), pat)) {
            hits.push_back(pat);
        }
        if (hits.empty()) throw MissingColumn("cli-io", "no column matches '" + pat + "'");
        for (const auto& h : hits) {
            if (seen.insert(h).second) out.push_back(h);
        }
    }
    return out;
}

LoadedData read_csv(std::istream& in, const ColumnMapping& mapping, double cutoff) {
    if (!std::isfinite(cutoff)) throw ConfigError("cli-io", "cutoff must be finite");
    std::string line;
    if (!std::getline(in, line)) throw EmptyAfterFiltering("cli-io", "input has no header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);

    auto index_of = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw MissingColumn("cli-io", "column '" + name + "' not found");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::string> mapped{mapping.y, mapping.x};
    if (mapping.t) mapped.push_back(*mapping.t);
    const auto z_names = resolve_columns(header, mapping.z, mapped);

    std::vector<std::size_t> cols;
    std::vector<std::string> names = mapped;
    for (const auto& m : mapped) cols.push_back(index_of(m));
    for (const auto& z : z_names) {
        cols.push_back(index_of(z));
        names.push_back(z);
    }

    std::vector<std::vector<double>> rows;
    Index dropped = 0;
    Index row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (boost::trim_copy(line).empty()) continue;
        ++row;
        const auto cells = split_csv_line(line);
        std::vector<double> vals(cols.size());
        bool missing = false;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const std::string cell = cols[c] < cells.size() ? cells[cols[c]] : std::string();
            if (is_missing(cell)) {
                missing = true;
                continue;
            }
            if (!parse_number(cell, vals[c])) {
                throw NonNumericCell("cli-io", "row " + std::to_string(row) + ", column '" +
                                                   names[c] + "': '" + cell + "'");
            }
        }
        if (missing) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(vals));
    }
    if (dropped > 0) {
        warn("cli-io", "dropped " + std::to_string(dropped) + " row(s) with missing values");
    }
    if (rows.empty()) throw EmptyAfterFiltering("cli-io", "no complete rows remain");

    const auto n = static_cast<Index>(rows.size());
    const auto d = static_cast<Index>(z_names.size());
    const std::size_t z0 = mapping.t ? 3 : 2;
    LoadedData out;
    out.dropped_rows = dropped;
    Dataset& data = out.data;
    data.y.resize(n);
    data.x.resize(n);
    data.z.resize(n, d);
    if (mapping.t) data.t = VectorXd(n);
    for (Index i = 0; i < n; ++i) {
        const auto& r = rows[i];
        data.y(i) = r[0];
        data.x(i) = r[1] - cutoff;
        if (mapping.t) (*data.t)(i) = r[2];
        for (Index j = 0; j < d; ++j) data.z(i, j) = r[z0 + j];
    }
    data.z_names = z_names;
    return out;
}

LoadedData load_csv(const std::string& path, const ColumnMapping& mapping, double cutoff) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cli-io", "cannot open '" + path + "'");
    return read_csv(in, mapping, cutoff);
}

void set_estimator_key(EstimatorConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "kernel") {
        cfg.kernel = as_config(key, [&] { return parse_kernel(value); });
    } else if (key == "p") {
        cfg.p = parse_value<int>(key, value);
    } else if (key == "adjuster") {
        cfg.adjuster = value;
    } else if (key == "lasso_basis") {
        cfg.lasso_basis = value;
    } else if (key == "folds") {
        cfg.folds = parse_value<int>(key, value);
    } else if (key == "splits") {
        cfg.splits = parse_value<int>(key, value);
    } else if (key == "window") {
        cfg.window = parse_value<double>(key, value);
    } else if (key == "bandwidth") {
        cfg.bandwidth = as_config(key, [&] { return parse_bandwidth(value); });
    } else if (key == "ci") {
        cfg.ci = as_config(key, [&] { return parse_ci_method(value); });
    } else if (key == "alpha") {
        cfg.alpha = parse_value<double>(key, value);
    } else if (key == "smoothness" || key == "M") {
        cfg.smoothness = parse_value<double>(key, value);
    } else if (key == "ba_criterion") {
        cfg.ba_criterion = as_config(key, [&] { return parse_bias_aware_criterion(value); });
    } else if (key == "nn") {
        cfg.nn.R = parse_value<int>(key, value);
    } else if (key == "nn_dof_correction") {
        cfg.nn.dof_correction = parse_bool(key, value);
    } else if (key == "dml1") {
        cfg.dml1 = parse_bool(key, value);
    } else {
        throw ConfigError("cli-io", "unknown estimator key '" + key + "'");
    }
}

RunConfig parse_run_config(std::istream& in) {
    const pt::ptree tree = read_ini(in);
    RunConfig rc;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("cli-io", "key '" + section + "' outside of a section");
        }
        for (const auto& [key, node] : body) {
            const std::string v = node.data();
            if (section == "data") {
                if (key == "input") rc.input = v;
                else if (key == "y") rc.columns.y = v;
                else if (key == "x") rc.columns.x = v;
                else if (key == "z") rc.columns.z = split_list(v);
                else if (key == "t") rc.columns.t = v;
                else if (key == "cutoff") rc.cutoff = parse_value<double>(key, v);
                else throw ConfigError("cli-io", "unknown [data] key '" + key + "'");
            } else if (section == "estimator") {
                set_estimator_key(rc.estimator, key, v);
            } else if (section == "run") {
                if (key == "seed") rc.seed = parse_value<std::uint64_t>(key, v);
                else if (key == "fuzzy") rc.fuzzy = parse_bool(key, v);
                else throw ConfigError("cli-io", "unknown [run] key '" + key + "'");
            } else {
                throw ConfigError("cli-io", "unknown section [" + section + "]");
            }
        }
    }
    if (rc.columns.y.empty() || rc.columns.x.empty()) {
        throw ConfigError("cli-io", "[data] needs both y and x");
    }
    if (!std::isfinite(rc.cutoff)) throw ConfigError("cli-io", "cutoff must be finite");
    as_config("estimator", [&] {
        validate(rc.estimator);
        return 0;
    });
    return rc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cli-io", "cannot open '" + path + "'");
    RunConfig rc = parse_run_config(in);
    // a relative input is taken relative to the config file
    const std::filesystem::path input(rc.input);
    if (!rc.input.empty() && input.is_relative()) {
        rc.input = (std::filesystem::path(path).parent_path() / input).lexically_normal().string();
    }
    return rc;
}

SimStudySpec parse_study_spec(std::istream& in) {
    const pt::ptree tree = read_ini(in);
    SimStudySpec spec;
    std::string dgp = "hermite";
    for (const auto& [section, body] : tree) {
        if (section == "study") {
            for (const auto& [key, node] : body) {
                const std::string v = node.data();
                if (key == "dgp") dgp = v;
                else if (key == "d") spec.dgp.d = parse_value<int>(key, v);
                else if (key == "L") spec.dgp.L = parse_value<int>(key, v);
                else if (key == "shape") spec.dgp.shape = as_config(key, [&] { return parse_hermite_shape(v); });
                else if (key == "center") spec.dgp.center = parse_bool(key, v);
                else if (key == "noise_sd") spec.dgp.noise_sd = parse_value<double>(key, v);
                else if (key == "n") spec.n = parse_value<Index>(key, v);
                else if (key == "reps") spec.reps = parse_value<int>(key, v);
                else if (key == "seed") spec.seed = parse_value<std::uint64_t>(key, v);
                else if (key == "threads") spec.threads = parse_value<int>(key, v);
                else if (key == "max_failure_rate") spec.max_failure_rate = parse_value<double>(key, v);
                else throw ConfigError("cli-io", "unknown [study] key '" + key + "'");
            }
        } else if (section.rfind("estimator.", 0) == 0 && section.size() > 10) {
            EstimatorSpec e;
            e.label = section.substr(10);
            for (const auto& [key, node] : body) set_estimator_key(e.config, key, node.data());
            as_config(e.label, [&] {
                validate(e.config);
                return 0;
            });
            spec.estimators.push_back(std::move(e));
        } else {
            throw ConfigError("cli-io", "unknown section [" + section + "]");
        }
    }
    if (dgp == "hermite") {
        spec.dgp.kind = DgpSpec::Kind::hermite;
        if (spec.dgp.L != 0 && spec.dgp.L != 4 && spec.dgp.L != 16) {
            throw ConfigError("cli-io", "L must be 0, 4 or 16");
        }
    } else if (dgp == "crossfit_demo") {
        spec.dgp.kind = DgpSpec::Kind::crossfit_demo;
        if (spec.dgp.d < 0) throw ConfigError("cli-io", "d must be >= 0");
    } else {
        throw ConfigError("cli-io", "unknown dgp '" + dgp + "'");
    }
    if (spec.reps < 1) throw ConfigError("cli-io", "reps must be >= 1");
    if (spec.n < 2) throw ConfigError("cli-io", "n must be >= 2");
    if (spec.estimators.empty()) throw ConfigError("cli-io", "no [estimator.*] sections");
    return spec;
}

SimStudySpec load_study_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cli-io", "cannot open '" + path + "'");
    return parse_study_spec(in);
}

RdFit diag_adjustment_jump(const AdjustedDataset& adjusted, const Kernel& k, double h, int p) {
    const NearestNeighbors nn(adjusted.base->x);
    return local_fit(adjusted.base->x, adjusted.eta, k, h, p, 0, nn);
}

RunReport run(const RunConfig& config, std::shared_ptr<const Dataset> data, Index dropped_rows) {
    RunReport r;
    r.seed = config.seed;
    r.config = config;
    r.n = data->n();
    r.dropped_rows = dropped_rows;
    if (config.fuzzy) {
        const FuzzyResult res = estimate_fuzzy_pipeline(data, config.estimator, config.seed);
        r.fuzzy = res.fit;
        r.bandwidth = bandwidth_report(res.bandwidth);
        r.window_b = res.window_b;
    } else {
        const SharpResult res = estimate_sharp(data, config.estimator, config.seed);
        r.fit = res.fit;
        r.bandwidth = bandwidth_report(res.bandwidth);
        r.baseline_h = res.baseline_h;
        r.window_b = res.window_b;
        r.train_sizes = res.train_sizes;
        r.adjustment_jump = res.adjustment_jump;
    }
    return r;
}

RunReport run(const RunConfig& config) {
    if (config.fuzzy && !config.columns.t) {
        throw MissingTreatment("cli-io", "fuzzy estimation needs a treatment column");
    }
    LoadedData loaded = load_csv(config.input, config.columns, config.cutoff);
    const Index dropped = loaded.dropped_rows;
    return run(config, std::make_shared<const Dataset>(std::move(loaded.data)), dropped);
}

void to_json(json& j, const RunReport& r) {
    const RunConfig& c = r.config;
    json data{{"input", c.input}, {"y", c.columns.y}, {"x", c.columns.x},
              {"z", c.columns.z}, {"cutoff", c.cutoff}};
    data["t"] = c.columns.t ? json(*c.columns.t) : json(nullptr);
    json bw{{"h", r.bandwidth.h}, {"method", r.bandwidth.method}};
    bw["cct"] = r.bandwidth.cct ? cct_json(*r.bandwidth.cct) : json(nullptr);
    j = json{{"version", r.version},
             {"seed", r.seed},
             {"config", {{"data", data}, {"estimator", estimator_json(c.estimator)},
                         {"fuzzy", c.fuzzy}, {"seed", c.seed}}},
             {"n", r.n},
             {"dropped_rows", r.dropped_rows},
             {"bandwidth", bw},
             {"baseline_h", r.baseline_h},
             {"window_b", r.window_b},
             {"train_sizes", r.train_sizes}};
    j["fit"] = r.fit ? fit_json(*r.fit) : json(nullptr);
    j["fuzzy"] = r.fuzzy ? fuzzy_json(*r.fuzzy) : json(nullptr);
    j["adjustment_jump"] = r.adjustment_jump ? fit_json(*r.adjustment_jump) : json(nullptr);
}

void from_json(const json& j, RunReport& r) {
    r = RunReport{};
    r.version = j.at("version").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    const json& c = j.at("config");
    const json& data = c.at("data");
    r.config.input = data.at("input").get<std::string>();
    r.config.columns.y = data.at("y").get<std::string>();
    r.config.columns.x = data.at("x").get<std::string>();
    r.config.columns.z = data.at("z").get<std::vector<std::string>>();
    r.config.cutoff = data.at("cutoff").get<double>();
    if (!data.at("t").is_null()) r.config.columns.t = data.at("t").get<std::string>();
    r.config.estimator = estimator_from(c.at("estimator"));
    r.config.fuzzy = c.at("fuzzy").get<bool>();
    r.config.seed = c.at("seed").get<std::uint64_t>();
    r.n = j.at("n").get<Index>();
    r.dropped_rows = j.at("dropped_rows").get<Index>();
    const json& bw = j.at("bandwidth");
    r.bandwidth.h = bw.at("h").get<double>();
    r.bandwidth.method = bw.at("method").get<std::string>();
    if (!bw.at("cct").is_null()) r.bandwidth.cct = cct_from(bw.at("cct"));
    r.baseline_h = j.at("baseline_h").get<double>();
    r.window_b = j.at("window_b").get<double>();
    r.train_sizes = j.at("train_sizes").get<std::vector<Index>>();
    if (!j.at("fit").is_null()) r.fit = fit_from(j.at("fit"));
    if (!j.at("fuzzy").is_null()) r.fuzzy = fuzzy_from(j.at("fuzzy"));
    if (!j.at("adjustment_jump").is_null()) r.adjustment_jump = fit_from(j.at("adjustment_jump"));
}

std::string format_report(const RunReport& r) {
    std::ostringstream os;
    const auto& e = r.config.estimator;
    os << "rdflex " << r.version << "  seed " << r.seed << "\n";
    os << "n = " << r.n;
    if (r.dropped_rows > 0) os << " (" << r.dropped_rows << " rows dropped)";
    os << "  kernel " << e.kernel.name() << "  p " << e.p << "  adjuster " << e.adjuster << "\n";
    auto ci_line = [&](const std::optional<ConfidenceInterval>& ci) {
        if (!ci) return;
        os << "  " << g6(100 * ci->level) << "% CI (" << to_string(ci->method) << "): ["
           << g6(ci->lo) << ", " << g6(ci->hi) << "]";
        if (ci->bias_bound) os << "  bias bound " << g6(*ci->bias_bound);
        os << "\n";
    };
    if (r.fit) {
        os << "  tau_hat " << g6(r.fit->tau_hat) << "  se " << g6(r.fit->se) << "  h "
           << g6(r.fit->h) << "  n_eff " << r.fit->n_eff_left << " | " << r.fit->n_eff_right << "\n";
        ci_line(r.fit->ci);
    }
    if (r.fuzzy) {
        os << "  theta_hat " << g6(r.fuzzy->theta_hat) << "  se " << g6(r.fuzzy->se) << "  h "
           << g6(r.fuzzy->h) << "\n";
        os << "  tau_y " << g6(r.fuzzy->tau_y) << "  tau_t " << g6(r.fuzzy->tau_t)
           << "  first-stage strength " << g6(r.fuzzy->first_stage_strength) << "\n";
        ci_line(r.fuzzy->ci);
    }
    os << "bandwidth " << r.bandwidth.method << "  h " << g6(r.bandwidth.h);
    if (r.baseline_h > 0.0) os << "  baseline h " << g6(r.baseline_h);
    os << "\n";
    if (r.bandwidth.cct) {
        const auto& c = *r.bandwidth.cct;
        os << "  v_n " << g6(c.v_n) << "  c_n " << g6(c.c_n) << "  b_n " << g6(c.b_n)
           << "  (b_n without regularization " << g6(c.b_n_noreg) << ", h "
           << g6(c.h_n_noreg) << ")\n";
    }
    if (!r.train_sizes.empty()) {
        os << "first stage: window b " << g6(r.window_b) << "  training sizes";
        for (Index s : r.train_sizes) os << ' ' << s;
        os << "\n";
    }
    if (r.adjustment_jump) {
        const auto& a = *r.adjustment_jump;
        os << "adjustment jump " << g6(a.tau_hat) << "  se " << g6(a.se);
        if (a.se > 0.0) os << "  (" << g6(a.tau_hat / a.se) << " se)";
        os << "\n";
    }
    return os.str();
}

}  // namespace rdflex
