#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rdflex/error.hpp"
#include "rdflex/io.hpp"
#include "rdflex/simulate.hpp"

namespace {

using namespace rdflex;

// Options shared by the estimation subcommands. Anything given on the command
// line overrides the --config file.
struct RunOptions {
    std::string config;
    std::string input, y, x, t;
    std::vector<std::string> z;
    std::optional<double> cutoff;
    std::vector<std::pair<std::string, std::string>> est;  // estimator key, value
    std::optional<std::uint64_t> seed;
    std::string json_out;
    bool json_stdout = false;
};

void add_run_options(CLI::App* app, RunOptions& o, bool fuzzy) {
    app->add_option("--config", o.config, "INI file with [data], [estimator] and [run] sections");
    app->add_option("--input,-i", o.input, "CSV file");
    app->add_option("--y-col", o.y, "outcome column");
    app->add_option("--x-col", o.x, "running variable column");
    app->add_option("--z-cols", o.z, "covariate columns; 'prefix*' and '*' expand")->delimiter(',');
    if (fuzzy) app->add_option("--treatment-col", o.t, "treatment column");
    app->add_option("--cutoff", o.cutoff, "cutoff, subtracted from X on load");
    app->add_option("--seed", o.seed, "master seed");
    app->add_option("--json", o.json_out, "write the full report as JSON to this file");
    app->add_flag("--json-stdout", o.json_stdout, "print the JSON report instead of the text summary");
    const std::vector<std::pair<std::string, std::string>> keys{
        {"kernel", "uniform | triangular | epanechnikov"},
        {"p", "local polynomial order"},
        {"adjuster", "zero | linear | ridge | lasso | knn | ensemble | linear-nocf | linear-cf; oracle and oracle-limit in studies"},
        {"lasso-basis", "none | poly2 | hermite:N"},
        {"folds", "cross-fitting folds"},
        {"splits", "repeated sample splits"},
        {"window", "first-stage localization window b"},
        {"bandwidth", "auto-mse | auto-ba | undersmooth | fixed=H"},
        {"ci", "us | rbc | ba"},
        {"alpha", "1 - confidence level"},
        {"smoothness", "second-derivative bound M for bias-aware inference"},
        {"ba-criterion", "mse | flci"},
        {"nn", "nearest neighbours in the variance estimator"},
        {"nn-dof-correction", "scale the NN variance by R/(R+1) (true/false)"},
        {"dml1", "average per-fold estimates instead of pooling (true/false)"},
    };
    for (const auto& [flag, help] : keys) {
        std::string key = flag;
        std::replace(key.begin(), key.end(), '-', '_');
        std::string names = "--" + flag;
        if (flag == "window") names += ",--first-stage-window";
        app->add_option_function<std::string>(
            names, [&o, key](const std::string& v) { o.est.emplace_back(key, v); }, help);
    }
}

RunConfig build_config(const RunOptions& o, bool fuzzy) {
    RunConfig rc;
    if (!o.config.empty()) rc = load_run_config(o.config);
    if (!o.input.empty()) rc.input = o.input;
    if (!o.y.empty()) rc.columns.y = o.y;
    if (!o.x.empty()) rc.columns.x = o.x;
    if (!o.z.empty()) rc.columns.z = o.z;
    if (!o.t.empty()) rc.columns.t = o.t;
    if (o.cutoff) rc.cutoff = *o.cutoff;
    if (o.seed) rc.seed = *o.seed;
    for (const auto& [k, v] : o.est) set_estimator_key(rc.estimator, k, v);
    if (fuzzy) rc.fuzzy = true;
    if (rc.input.empty()) throw ConfigError("cli", "no input file (--input or [data] input)");
    if (rc.columns.y.empty() || rc.columns.x.empty()) {
        throw ConfigError("cli", "outcome and running variable columns are required");
    }
    if (rc.fuzzy && !rc.columns.t) throw ConfigError("cli", "fuzzy needs --treatment-col");
    try {
        validate(rc.estimator);
    } catch (const InvalidArgument& e) {
        throw ConfigError("cli", e.what());
    }
    return rc;
}

void emit(const RunReport& r, const RunOptions& o, const std::string& text) {
    const nlohmann::json j = r;
    if (!o.json_out.empty()) {
        std::ofstream f(o.json_out);
        if (!f) throw ConfigError("cli", "cannot write '" + o.json_out + "'");
        f << j.dump(2) << '\n';
    }
    if (o.json_stdout) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << text;
    }
}

std::string bandwidth_text(const RunReport& r) {
    char buf[512];
    std::string out;
    std::snprintf(buf, sizeof buf, "method %s\nh %.6g\n", r.bandwidth.method.c_str(), r.bandwidth.h);
    out += buf;
    if (r.baseline_h > 0.0) {
        std::snprintf(buf, sizeof buf, "baseline_h %.6g\n", r.baseline_h);
        out += buf;
    }
    if (r.bandwidth.cct) {
        const auto& c = *r.bandwidth.cct;
        std::snprintf(buf, sizeof buf,
                      "v_n %.6g\ngamma4_plus %.6g\ngamma4_minus %.6g\nC_n %.6g\nc_n %.6g\n"
                      "B_n %.6g\nb_n %.6g\nH_n %.6g\nb_n_noreg %.6g\nh_n_noreg %.6g\n",
                      c.v_n, c.gamma4_plus, c.gamma4_minus, c.C_n, c.c_n, c.B_n, c.b_n, c.H_n,
                      c.b_n_noreg, c.h_n_noreg);
        out += buf;
    }
    return out;
}

std::string diagnose_text(const RunReport& r) {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "adjuster %s\nwindow_b %.6g\n",
                  r.config.estimator.adjuster.c_str(), r.window_b);
    out += buf;
    out += "train_sizes";
    for (Index s : r.train_sizes) out += " " + std::to_string(s);
    out += "\n";
    if (r.adjustment_jump) {
        const auto& a = *r.adjustment_jump;
        std::snprintf(buf, sizeof buf, "adjustment_jump %.6g\nadjustment_jump_se %.6g\nh %.6g\n",
                      a.tau_hat, a.se, a.h);
        out += buf;
        if (a.se > 0.0) {
            std::snprintf(buf, sizeof buf, "z %.6g\n", a.tau_hat / a.se);
            out += buf;
        }
    }
    return out;
}

struct SimOptions {
    std::string spec;
    std::string csv_out;
    std::string ecdf;
    std::string ecdf_out;
    std::optional<int> reps;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
};

int run_simulate(const SimOptions& o) {
    SimStudySpec spec = load_study_spec(o.spec);
    if (o.reps) spec.reps = *o.reps;
    if (o.threads) spec.threads = *o.threads;
    if (o.seed) spec.seed = *o.seed;
    if (spec.reps < 1) throw ConfigError("cli", "reps must be >= 1");

    std::string a, b;
    if (!o.ecdf.empty()) {
        const auto comma = o.ecdf.find(',');
        if (comma == std::string::npos) throw ConfigError("cli", "--ecdf expects LABEL_A,LABEL_B");
        a = o.ecdf.substr(0, comma);
        b = o.ecdf.substr(comma + 1);
        bool found_a = false, found_b = false;
        for (const auto& e : spec.estimators) {
            found_a |= e.label == a;
            found_b |= e.label == b;
        }
        if (!found_a || !found_b) throw ConfigError("cli", "--ecdf names an unknown estimator");
    }

    const SimStudyResult res = run_study(spec);
    if (spec.dgp.kind == DgpSpec::Kind::hermite) {
        std::printf("# hermite design L=%d shape=%s, terms ordered by total degree\n", spec.dgp.L,
                    to_string(spec.dgp.shape).c_str());
    } else {
        std::printf("# cross-fitting demo design d=%d\n", spec.dgp.d);
    }
    std::printf("# n=%lld reps=%d seed=%llu tau=%g (entries x100)\n",
                static_cast<long long>(spec.n), spec.reps,
                static_cast<unsigned long long>(spec.seed), res.tau);
    std::cout << format_table(res);
    if (!o.csv_out.empty()) {
        std::ofstream f(o.csv_out);
        if (!f) throw ConfigError("cli", "cannot write '" + o.csv_out + "'");
        f << format_csv(res);
    }
    if (!a.empty()) {
        const Ecdf e = emit_ecdf(res, a, b);
        std::printf("KS(%s, %s) = %.6g\n", a.c_str(), b.c_str(), e.ks);
        if (!o.ecdf_out.empty()) {
            std::ofstream f(o.ecdf_out);
            if (!f) throw ConfigError("cli", "cannot write '" + o.ecdf_out + "'");
            f << "value,F_" << a << ",F_" << b << "\n";
            char buf[128];
            for (const auto& row : e.rows) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", row.value, row.f_a, row.f_b);
                f << buf;
            }
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rdflex: covariate-adjusted regression discontinuity estimation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kVersion));

    RunOptions est_opt, fuzzy_opt, bw_opt, diag_opt;
    auto* est = app.add_subcommand("estimate", "sharp RD estimate with optional covariate adjustment");
    add_run_options(est, est_opt, false);
    auto* fuzzy = app.add_subcommand("fuzzy", "fuzzy RD estimate");
    add_run_options(fuzzy, fuzzy_opt, true);
    auto* bw = app.add_subcommand("bandwidth", "report the selected bandwidth and its intermediates");
    add_run_options(bw, bw_opt, false);
    auto* diag = app.add_subcommand("diagnose", "first-stage diagnostics and the adjustment jump");
    add_run_options(diag, diag_opt, false);

    SimOptions sim_opt;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo study");
    sim->add_option("--spec", sim_opt.spec, "study INI file")->required();
    sim->add_option("--csv", sim_opt.csv_out, "write per-estimator summaries as CSV");
    sim->add_option("--ecdf", sim_opt.ecdf, "LABEL_A,LABEL_B: report their KS distance");
    sim->add_option("--ecdf-out", sim_opt.ecdf_out, "write the ECDF table as CSV");
    sim->add_option("--reps", sim_opt.reps, "override the number of replications");
    sim->add_option("--threads", sim_opt.threads, "worker threads (0: all cores)");
    sim->add_option("--seed", sim_opt.seed, "override the master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sim) return run_simulate(sim_opt);
        if (*est) {
            const RunReport r = run(build_config(est_opt, false));
            emit(r, est_opt, format_report(r));
        } else if (*fuzzy) {
            const RunReport r = run(build_config(fuzzy_opt, true));
            emit(r, fuzzy_opt, format_report(r));
        } else if (*bw) {
            const RunReport r = run(build_config(bw_opt, false));
            emit(r, bw_opt, bandwidth_text(r));
        } else if (*diag) {
            const RunReport r = run(build_config(diag_opt, false));
            emit(r, diag_opt, diagnose_text(r));
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
