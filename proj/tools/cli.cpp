#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rgflow/errors.hpp"
#include "rgflow/flow.hpp"
#include "rgflow/rgt.hpp"
#include "rgflow/spectral.hpp"
#include "rgflow/table.hpp"

namespace rgflow::cli {

namespace {

using io::Cell;
using io::Table;
using json = nlohmann::ordered_json;

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Output {
    std::string path;  // empty: stdout
    std::string format = "csv";
};

struct Emitted {
    std::string name;  // file name for multi-file commands, empty otherwise
    std::string text;
};

std::string render(const Table& table, const json& inputs, const std::string& format, const json& extra = {}) {
    std::ostringstream os;
    if (format == "json") {
        json j = io::to_json(table, inputs);
        for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
        os << j.dump(2) << '\n';
    } else {
        io::write_csv(table, os);
    }
    return os.str();
}

json pole_json(const PoleSignal& p) {
    return {{"log_lo", p.log_lo}, {"log_hi", p.log_hi}, {"direction", p.direction}};
}

// Two rows bracketing the pole, on the side reached first and the side beyond.
// With lambda0 set, the lambda column is filled in as well.
void add_pole_rows(Table& t, const std::vector<Cell>& prefix, const PoleSignal& p, double log_lambda0,
                   std::optional<double> lambda0 = std::nullopt) {
    const double inf = p.direction > 0 ? INFINITY : -INFINITY;
    const double first = p.direction > 0 ? p.log_lo : p.log_hi;
    const double beyond = p.direction > 0 ? p.log_hi : p.log_lo;
    for (const auto& [label, log_cut] : {std::pair{"pole_lo", first}, std::pair{"pole_hi", beyond}}) {
        auto row = prefix;
        row.emplace_back(std::string(label));
        row.emplace_back(log_cut - log_lambda0);
        if (lambda0) row.emplace_back(std::exp(log_cut));
        row.emplace_back(inf);
        t.add_row(std::move(row));
    }
}

std::vector<double> uniform_t(double t_end, int points) {
    std::vector<double> t;
    for (int k = 0; k < points; ++k) t.push_back(k == 0 ? 0.0 : t_end * k / (points - 1));
    return t;
}

// ---------------------------------------------------------------- commands

struct FlowArgs {
    double alpha = 0, f0 = 0, lambda0 = 1.0, span = 0;
    int l = 0, points = 101;
    std::string method = "analytic";
    bool through_poles = false;
    double rel_tol = 1e-10;
};

std::vector<Emitted> cmd_flow(const FlowArgs& a, const Output& o) {
    const FlowParams params = make_flow_params(a.alpha, a.l);
    const double t_end = std::log(a.span);
    const std::vector<double> ts = uniform_t(t_end, a.points);

    Table t{"flow", {{"point", "-"}, {"t", "1"}, {"lambda", "momentum"}, {"f", "1"}}, {}};
    std::optional<PoleSignal> pole;
    const double log0 = std::log(a.lambda0);
    if (a.method == "analytic") {
        const FlowTrajectory traj = sample_flow(params, a.f0, ts, a.through_poles);
        for (const auto& s : traj.samples) t.add_row({"sample", s.t, a.lambda0 * std::exp(s.t), s.f});
        for (const auto& p : traj.poles) {
            // sample_flow brackets are relative to ln lambda0
            const PoleSignal abs{p.log_lo + log0, p.log_hi + log0, p.direction};
            add_pole_rows(t, {}, abs, log0, a.lambda0);
            if (!pole) pole = abs;
        }
    } else {
        IntegratorOptions opt;
        opt.rel_tol = a.rel_tol;
        double f = a.f0;
        double prev = 0.0;
        for (double s : ts) {
            if (s != prev) {
                const FlowResult r = flow_numeric(params, f, a.lambda0 * std::exp(prev), a.lambda0 * std::exp(s), opt);
                if (r.has_pole()) {
                    pole = r.pole();
                    add_pole_rows(t, {}, *pole, log0, a.lambda0);
                    break;
                }
                f = r.value();
            }
            t.add_row({"sample", s, a.lambda0 * std::exp(s), f});
            prev = s;
        }
    }
    json inputs{{"command", "flow"}, {"alpha", a.alpha},   {"l", a.l},           {"f0", a.f0},
                {"lambda0", a.lambda0}, {"lambda_span", a.span}, {"points", a.points}, {"method", a.method},
                {"through_poles", a.through_poles}, {"rel_tol", a.rel_tol}};
    json extra;
    extra["pole"] = pole ? pole_json(*pole) : json(nullptr);
    return {{"", render(t, inputs, o.format, extra)}};
}

struct BetaArgs {
    double alpha = 0, f_min = -10, f_max = 4;
    int l = 0, points = 281;
};

std::vector<Emitted> cmd_beta(const BetaArgs& a, const Output& o) {
    const FlowParams params = make_flow_params(a.alpha, a.l);
    if (!(a.f_max > a.f_min)) throw ValidationError("--f-max must exceed --f-min");
    Table t{"beta", {{"f", "1"}, {"beta", "1"}}, {}};
    for (int k = 0; k < a.points; ++k) {
        const double f = a.points == 1 ? a.f_min : a.f_min + (a.f_max - a.f_min) * k / (a.points - 1);
        t.add_row({f, beta(f, params)});
    }
    json inputs{{"command", "beta"}, {"alpha", a.alpha}, {"l", a.l},
                {"f_min", a.f_min},  {"f_max", a.f_max}, {"points", a.points}};
    return {{"", render(t, inputs, o.format)}};
}

struct GridArgs {
    int n = 400;
    std::string grid = "graded";
    int panels = 20;
    double ir_fraction = 1e-9;
    std::string scheme = "subtracted";

    MomentumGrid make(double cutoff) const {
        if (grid == "uniform") return MomentumGrid::gauss_legendre(cutoff, n);
        return MomentumGrid::graded(cutoff, n, panels, ir_fraction);
    }
    spectral::Discretization discretization() const {
        return scheme == "nystrom" ? spectral::Discretization::Nystrom : spectral::Discretization::SubtractedNystrom;
    }
    void describe(json& j) const {
        j["n"] = n;
        j["grid"] = grid;
        j["panels"] = panels;
        j["ir_fraction"] = ir_fraction;
        j["scheme"] = scheme;
    }
};

void add_grid_options(CLI::App* sub, GridArgs& g) {
    sub->add_option("--n", g.n, "Number of quadrature nodes")->check(CLI::PositiveNumber);
    sub->add_option("--grid", g.grid, "Node layout")->check(CLI::IsMember({"graded", "uniform"}));
    sub->add_option("--panels", g.panels, "Panels of the graded grid")->check(CLI::Range(2, 100000));
    sub->add_option("--ir-fraction", g.ir_fraction, "Innermost panel edge / cutoff")
        ->check(CLI::Range(1e-300, 0.5));
    sub->add_option("--scheme", g.scheme, "Discretization")->check(CLI::IsMember({"subtracted", "nystrom"}));
}

Table ladder_table(const char* kind) {
    return Table{kind, {{"index", "1"}, {"eigenvalue", "momentum^2"}, {"ratio", "1"}}, {}};
}

struct SpectrumArgs {
    double alpha = 0, f0 = 0, lambda0 = 1.0;
    int l = 0;
    GridArgs grid;
};

std::vector<Emitted> cmd_spectrum(const SpectrumArgs& a, const Output& o) {
    const PartialWave wave(a.l);
    if (!(a.alpha >= 0.0)) throw ValidationError("--alpha must be non-negative");
    const MomentumGrid grid = a.grid.make(a.lambda0);
    const auto h = spectral::build_hamiltonian(grid, {a.alpha, wave, a.f0, a.lambda0}, a.grid.discretization());
    const Eigen::VectorXd ev = spectral::eigenvalues_of(h.matrix);
    Table t = ladder_table("spectrum");
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const double ratio = (i > 0 && ev[i] < 0.0 && ev[i - 1] < 0.0) ? ev[i] / ev[i - 1] : NAN;
        t.add_row({static_cast<long long>(i), ev[i], ratio});
    }
    json inputs{{"command", "spectrum"}, {"alpha", a.alpha}, {"l", a.l}, {"f0", a.f0}, {"lambda0", a.lambda0}};
    a.grid.describe(inputs);
    return {{"", render(t, inputs, o.format)}};
}

struct CalibrateArgs {
    double alpha = 0, lambda0 = 1.0, target = 0, f_max = 1e3;
    int l = 0;
    std::optional<int> index;
    GridArgs grid;
};

spectral::Calibration run_calibration(const MomentumGrid& grid, double alpha, int l, double target,
                                      std::optional<int> index, double f_max, const GridArgs& g) {
    spectral::CalibrationOptions opt;
    opt.index = index;
    opt.f_max = f_max;
    opt.scheme = g.discretization();
    return spectral::calibrate_f(grid, alpha, PartialWave(l), target, opt);
}

std::vector<Emitted> cmd_calibrate(const CalibrateArgs& a, const Output& o) {
    const MomentumGrid grid = a.grid.make(a.lambda0);
    const auto cal = run_calibration(grid, a.alpha, a.l, a.target, a.index, a.f_max, a.grid);
    Table t{"calibrate", {{"f0", "1"}, {"index", "1"}, {"eigenvalue", "momentum^2"}}, {}};
    t.add_row({cal.f, static_cast<long long>(cal.index), cal.eigenvalue});
    json inputs{{"command", "calibrate"}, {"alpha", a.alpha}, {"l", a.l}, {"lambda0", a.lambda0},
                {"target", a.target},     {"f_max", a.f_max}};
    inputs["index"] = a.index ? json(*a.index) : json(nullptr);
    a.grid.describe(inputs);
    return {{"", render(t, inputs, o.format)}};
}

struct TowerArgs {
    double alpha = 0, lambda0 = 1.0;
    int l = 0;
    std::optional<double> f0, target;
    std::optional<int> index;
    double infrared_factor = 100.0, cutoff_fraction = 1e-2;
    GridArgs grid;
};

std::vector<Emitted> cmd_tower(const TowerArgs& a, const Output& o) {
    if (a.f0.has_value() == a.target.has_value()) throw ValidationError("tower needs exactly one of --f0 or --calibrate");
    const MomentumGrid grid = a.grid.make(a.lambda0);
    double f0 = 0.0;
    json calibration = nullptr;
    if (a.target) {
        const auto cal = run_calibration(grid, a.alpha, a.l, *a.target, a.index, 1e3, a.grid);
        f0 = cal.f;
        calibration = {{"f0", cal.f}, {"index", cal.index}, {"eigenvalue", cal.eigenvalue}};
    } else {
        f0 = *a.f0;
    }
    const auto tower = spectral::bound_state_tower(grid, a.alpha, PartialWave(a.l), f0,
                                                   {a.cutoff_fraction, a.infrared_factor}, a.grid.discretization());
    Table t = ladder_table("tower");
    for (const auto& s : tower.states) t.add_row({static_cast<long long>(s.index), s.eigenvalue, s.ratio.value_or(NAN)});

    json inputs{{"command", "tower"}, {"alpha", a.alpha}, {"l", a.l}, {"lambda0", a.lambda0}};
    inputs["f0"] = a.f0 ? json(*a.f0) : json(nullptr);
    inputs["calibrate"] = a.target ? json(*a.target) : json(nullptr);
    inputs["index"] = a.index ? json(*a.index) : json(nullptr);
    inputs["infrared_factor"] = a.infrared_factor;
    inputs["cutoff_fraction"] = a.cutoff_fraction;
    a.grid.describe(inputs);
    json extra{{"band", {{"ceiling", tower.band.ceiling}, {"floor", tower.band.floor}}},
               {"expected_quotient", tower.expected_quotient},
               {"calibration", calibration}};
    return {{"", render(t, inputs, o.format, extra)}};
}

struct IndependenceArgs {
    double alpha = 0, f0 = 0, lambda0 = 1.0, lambda1 = 0, window = 1e-2, tolerance = 1e-2;
    int l = 0;
    GridArgs grid;
};

std::vector<Emitted> cmd_independence(const IndependenceArgs& a, const Output& o) {
    spectral::CutoffIndependenceOptions opt;
    opt.n = a.grid.n;
    opt.panels = a.grid.panels;
    opt.ir_fraction = a.grid.ir_fraction;
    opt.window_fraction = a.window;
    opt.tolerance = a.tolerance;
    opt.scheme = a.grid.discretization();
    const auto rep = spectral::cutoff_independence_check(a.alpha, PartialWave(a.l), a.f0, a.lambda0, a.lambda1, opt);
    Table t{"independence", {{"reference", "momentum^2"}, {"evolved", "momentum^2"}, {"deviation", "1"}}, {}};
    for (const auto& m : rep.levels) t.add_row({m.reference, m.evolved, m.deviation});
    json inputs{{"command", "independence"}, {"alpha", a.alpha}, {"l", a.l}, {"f0", a.f0}, {"lambda0", a.lambda0},
                {"lambda1", a.lambda1}, {"window_fraction", a.window}, {"tolerance", a.tolerance}};
    a.grid.describe(inputs);
    json extra{{"f_evolved", rep.f_evolved}, {"max_deviation", rep.max_deviation}, {"passed", rep.passed}};
    return {{"", render(t, inputs, o.format, extra)}};
}

struct StaircaseArgs {
    double alpha = 0, f0 = 0, lambda0 = 1.0, lambda1 = 0.5, eref = 0.0;
    int l = 0, shells = 100, nodes_per_shell = 1;
};

std::vector<Emitted> cmd_staircase(const StaircaseArgs& a, const Output& o) {
    if (!(a.lambda1 < a.lambda0)) throw ValidationError("--lambda1 must be below --lambda0");
    const PartialWave wave(a.l);
    const auto sg = rgt::staircase_grid(a.lambda0, a.lambda1, a.shells, a.nodes_per_shell);
    const auto h = spectral::build_hamiltonian(sg.grid, {a.alpha, wave, a.f0, a.lambda0});
    const auto stairs = rgt::staircase_flow(h, sg.cutoffs, a.eref);
    const FlowParams params = make_flow_params(a.alpha, a.l);

    Table t{"staircase",
            {{"cutoff", "momentum"},
             {"gamma", "momentum^-2L"},
             {"f", "1"},
             {"f_riccati", "1"},
             {"residual_separability", "1"}},
            {}};
    t.add_row({a.lambda0, stairs.initial_gamma, a.f0, a.f0, 0.0});
    // The continuum reference follows limit cycles through their poles, as
    // the discrete elimination does.
    std::vector<double> ts;
    for (const auto& s : stairs.steps) ts.push_back(std::log(s.cutoff / a.lambda0));
    const FlowTrajectory riccati = sample_flow(params, a.f0, ts, true);
    for (std::size_t k = 0; k < stairs.steps.size(); ++k) {
        const auto& s = stairs.steps[k];
        const double ref = k < riccati.samples.size() ? riccati.samples[k].f : NAN;
        t.add_row({s.cutoff, s.gamma, s.f, ref, s.residual_separability});
    }
    json inputs{{"command", "staircase"}, {"alpha", a.alpha},   {"l", a.l},
                {"f0", a.f0},             {"lambda0", a.lambda0}, {"lambda1", a.lambda1},
                {"shells", a.shells},     {"nodes_per_shell", a.nodes_per_shell}, {"eref", a.eref}};
    return {{"", render(t, inputs, o.format)}};
}

struct LocusArgs {
    double alpha = 0;
    int l_min = 0, l_max = 5;
};

std::vector<Emitted> cmd_locus(const LocusArgs& a, const Output& o) {
    Table t{"locus", {{"l", "1"}, {"vertex", "1"}, {"beta_min", "1"}}, {}};
    for (const auto& p : fixed_point_locus(a.alpha, a.l_min, a.l_max)) t.add_row({p.l, p.vertex, p.beta_min});
    json inputs{{"command", "locus"}, {"alpha", a.alpha}, {"l_min", a.l_min}, {"l_max", a.l_max}};
    return {{"", render(t, inputs, o.format)}};
}

struct FiguresArgs {
    double alpha = 2.25, t_max = 10.0, f_min = -10.0, f_max = 4.0, locus_l_max = 3.0;
    int points = 1001, beta_points = 1401;
    std::string out_dir = ".";
};

struct FigureSeries {
    int l;
    double f0;
};

Table flow_figure(const char* kind, double alpha, const std::vector<FigureSeries>& series, const std::vector<double>& ts,
                  json& poles) {
    Table t{kind, {{"series", "1"}, {"l", "1"}, {"f0", "1"}, {"point", "-"}, {"t", "1"}, {"f", "1"}}, {}};
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const FlowParams params = make_flow_params(alpha, s.l);
        // limit cycles are followed through their poles; other branches end at the first one
        const FlowTrajectory traj = sample_flow(params, s.f0, ts, true);
        const std::vector<Cell> prefix{static_cast<long long>(k), static_cast<long long>(s.l), s.f0};
        for (const auto& p : traj.samples) {
            auto row = prefix;
            row.insert(row.end(), {Cell{"sample"}, p.t, p.f});
            t.add_row(std::move(row));
        }
        for (const auto& p : traj.poles) {
            add_pole_rows(t, prefix, p, 0.0);
            poles.push_back({{"series", k}, {"log_lo", p.log_lo}, {"log_hi", p.log_hi}, {"direction", p.direction}});
        }
    }
    return t;
}

std::vector<Emitted> cmd_figures(const FiguresArgs& a, const Output& o) {
    const std::vector<double> ts = uniform_t(a.t_max, a.points);
    const FlowParams l2 = make_flow_params(a.alpha, 2);
    const double f_plus = l2.beta_min < 0 ? l2.vertex + std::sqrt(-l2.beta_min) : l2.vertex;

    json inputs{{"command", "figures"}, {"alpha", a.alpha}, {"t_max", a.t_max}, {"points", a.points},
                {"f_min", a.f_min},       {"f_max", a.f_max}, {"beta_points", a.beta_points},
                {"locus_l_max", a.locus_l_max}};
    const std::string ext = o.format == "json" ? ".json" : ".csv";
    std::vector<Emitted> out;

    json poles1 = json::array();
    const Table fig1 = flow_figure("fig1", a.alpha, {{0, -8.0}, {1, -8.0}, {1, -0.4}}, ts, poles1);
    out.push_back({"fig1" + ext, render(fig1, inputs, o.format, {{"poles", poles1}})});

    json poles2 = json::array();
    const Table fig2 = flow_figure("fig2", a.alpha, {{2, f_plus - 1e-6}, {2, f_plus + 1e-2}, {2, -8.0}}, ts, poles2);
    out.push_back({"fig2" + ext, render(fig2, inputs, o.format, {{"poles", poles2}})});

    Table fig3{"fig3", {{"curve", "-"}, {"l", "1"}, {"f", "1"}, {"beta", "1"}}, {}};
    for (int l = 0; l <= 2; ++l) {
        const FlowParams params = make_flow_params(a.alpha, l);
        for (int k = 0; k < a.beta_points; ++k) {
            const double f = a.f_min + (a.f_max - a.f_min) * k / (a.beta_points - 1);
            fig3.add_row({"beta", static_cast<double>(l), f, beta(f, params)});
        }
    }
    const int locus_steps = static_cast<int>(std::lround(a.locus_l_max * 100.0));
    for (int k = 0; k <= locus_steps; ++k) {
        const LocusPoint p = locus_at(a.alpha, k / 100.0);
        fig3.add_row({"locus", p.l, p.vertex, p.beta_min});
    }
    out.push_back({"fig3" + ext, render(fig3, inputs, o.format)});
    return out;
}

// ---------------------------------------------------------------- config

std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(lineno) + " is not key = value");
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

// Config entries become --key value arguments unless the command line
// already names that option.
std::vector<std::string> merge_config(std::vector<std::string> args) {
    std::optional<std::string> config;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw ValidationError("--config needs a file name");
            config = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (!config) return rest;

    auto named = [&](const std::string& key) {
        for (const auto& a : rest)
            if (a == "--" + key || a.rfind("--" + key + "=", 0) == 0) return true;
        return false;
    };
    std::size_t insert_at = 1;
    while (insert_at < rest.size() && rest[insert_at].rfind("-", 0) == 0) ++insert_at;
    if (insert_at < rest.size()) ++insert_at;  // after the subcommand name
    std::vector<std::string> injected;
    for (const auto& [k, v] : read_config(*config)) {
        if (named(k)) continue;
        if (v == "true") {
            injected.push_back("--" + k);
        } else {
            injected.push_back("--" + k);
            injected.push_back(v);
        }
    }
    rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(std::min(insert_at, rest.size())), injected.begin(),
                injected.end());
    return rest;
}

void report(std::ostream& err, const char* kind, const std::string& reason) {
    std::string r = reason;
    for (auto& ch : r)
        if (ch == '\n' || ch == '"') ch = ch == '\n' ? ' ' : '\'';
    err << "rgflow: error=" << kind << " reason=\"" << r << "\"\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Renormalization-group flow of the inverse-square potential"};
    app.require_subcommand(1);

    Output output;
    auto add_output = [&](CLI::App* sub) {
        sub->add_option("--out", output.path, "Output file (default: stdout)");
        sub->add_option("--format", output.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    };

    std::vector<Emitted> emitted;
    std::function<std::vector<Emitted>()> action;

    FlowArgs flow;
    auto* s_flow = app.add_subcommand("flow", "Run f(Lambda) from (lambda0, f0) over a span of cutoffs");
    s_flow->add_option("--alpha", flow.alpha, "Coupling alpha = 2mg")->required();
    s_flow->add_option("--l", flow.l, "Partial wave")->required()->check(CLI::NonNegativeNumber);
    s_flow->add_option("--f0", flow.f0, "Coupling at lambda0")->required();
    s_flow->add_option("--lambda0", flow.lambda0, "Reference cutoff")->check(CLI::PositiveNumber);
    s_flow->add_option("--lambda-span", flow.span, "Final cutoff / lambda0")->required()->check(CLI::PositiveNumber);
    s_flow->add_option("--points", flow.points, "Samples")->check(CLI::Range(1, 10000000));
    s_flow->add_option("--method", flow.method)->check(CLI::IsMember({"analytic", "numeric"}));
    s_flow->add_flag("--through-poles", flow.through_poles, "Follow limit cycles past their poles (analytic)");
    s_flow->add_option("--rtol", flow.rel_tol, "Integrator relative tolerance")->check(CLI::PositiveNumber);
    add_output(s_flow);
    s_flow->callback([&] { action = [&] { return cmd_flow(flow, output); }; });

    BetaArgs bta;
    auto* s_beta = app.add_subcommand("beta", "Tabulate the beta function");
    s_beta->add_option("--alpha", bta.alpha)->required();
    s_beta->add_option("--l", bta.l)->required()->check(CLI::NonNegativeNumber);
    s_beta->add_option("--f-min", bta.f_min);
    s_beta->add_option("--f-max", bta.f_max);
    s_beta->add_option("--points", bta.points)->check(CLI::Range(1, 10000000));
    add_output(s_beta);
    s_beta->callback([&] { action = [&] { return cmd_beta(bta, output); }; });

    SpectrumArgs spec;
    auto* s_spec = app.add_subcommand("spectrum", "Eigenvalues of the cutoff Hamiltonian");
    s_spec->add_option("--alpha", spec.alpha)->required();
    s_spec->add_option("--l", spec.l)->required()->check(CLI::NonNegativeNumber);
    s_spec->add_option("--f0", spec.f0, "Counterterm coupling at lambda0")->required();
    s_spec->add_option("--lambda0", spec.lambda0)->check(CLI::PositiveNumber);
    add_grid_options(s_spec, spec.grid);
    add_output(s_spec);
    s_spec->callback([&] { action = [&] { return cmd_spectrum(spec, output); }; });

    CalibrateArgs cal;
    auto* s_cal = app.add_subcommand("calibrate", "Find f0 reproducing a bound-state eigenvalue");
    s_cal->add_option("--alpha", cal.alpha)->required();
    s_cal->add_option("--l", cal.l)->required()->check(CLI::NonNegativeNumber);
    s_cal->add_option("--target", cal.target, "Eigenvalue E0 < 0")->required();
    s_cal->add_option("--lambda0", cal.lambda0)->check(CLI::PositiveNumber);
    s_cal->add_option("--index", cal.index, "Eigenvalue index to pin")->check(CLI::NonNegativeNumber);
    s_cal->add_option("--f-max", cal.f_max)->check(CLI::PositiveNumber);
    add_grid_options(s_cal, cal.grid);
    add_output(s_cal);
    s_cal->callback([&] { action = [&] { return cmd_calibrate(cal, output); }; });

    TowerArgs tow;
    auto* s_tow = app.add_subcommand("tower", "Geometric bound-state tower in a limit-cycle wave");
    s_tow->add_option("--alpha", tow.alpha)->required();
    s_tow->add_option("--l", tow.l)->required()->check(CLI::NonNegativeNumber);
    s_tow->add_option("--lambda0", tow.lambda0)->check(CLI::PositiveNumber);
    s_tow->add_option("--f0", tow.f0, "Counterterm coupling at lambda0");
    s_tow->add_option("--calibrate", tow.target, "Calibrate f0 to this eigenvalue instead");
    s_tow->add_option("--index", tow.index, "Eigenvalue index for --calibrate")->check(CLI::NonNegativeNumber);
    s_tow->add_option("--infrared-factor", tow.infrared_factor)->check(CLI::PositiveNumber);
    s_tow->add_option("--cutoff-fraction", tow.cutoff_fraction)->check(CLI::Range(1e-300, 1.0));
    add_grid_options(s_tow, tow.grid);
    add_output(s_tow);
    s_tow->callback([&] { action = [&] { return cmd_tower(tow, output); }; });

    IndependenceArgs ind;
    auto* s_ind = app.add_subcommand("independence", "Compare low eigenvalues at two cutoffs linked by the flow");
    s_ind->add_option("--alpha", ind.alpha)->required();
    s_ind->add_option("--l", ind.l)->required()->check(CLI::NonNegativeNumber);
    s_ind->add_option("--f0", ind.f0)->required();
    s_ind->add_option("--lambda0", ind.lambda0)->check(CLI::PositiveNumber);
    s_ind->add_option("--lambda1", ind.lambda1)->required()->check(CLI::PositiveNumber);
    s_ind->add_option("--window", ind.window, "Window as a fraction of lambda1^2")->check(CLI::Range(1e-300, 1e-2));
    s_ind->add_option("--tolerance", ind.tolerance)->check(CLI::PositiveNumber);
    add_grid_options(s_ind, ind.grid);
    add_output(s_ind);
    s_ind->callback([&] { action = [&] { return cmd_independence(ind, output); }; });

    StaircaseArgs st;
    auto* s_st = app.add_subcommand("staircase", "Eliminate momentum shells and fit the induced counterterm");
    s_st->add_option("--alpha", st.alpha)->required();
    s_st->add_option("--l", st.l)->required()->check(CLI::NonNegativeNumber);
    s_st->add_option("--f0", st.f0)->required();
    s_st->add_option("--lambda0", st.lambda0)->check(CLI::PositiveNumber);
    s_st->add_option("--lambda1", st.lambda1, "Final cutoff")->check(CLI::PositiveNumber);
    s_st->add_option("--shells", st.shells)->check(CLI::Range(1, 1000000));
    s_st->add_option("--nodes-per-shell", st.nodes_per_shell)->check(CLI::Range(1, 1000));
    s_st->add_option("--eref", st.eref, "Reference energy of the elimination");
    add_output(s_st);
    s_st->callback([&] { action = [&] { return cmd_staircase(st, output); }; });

    LocusArgs loc;
    auto* s_loc = app.add_subcommand("locus", "Beta-function minima (A, B^2) across partial waves");
    s_loc->add_option("--alpha", loc.alpha)->required();
    s_loc->add_option("--l-min", loc.l_min)->check(CLI::NonNegativeNumber);
    s_loc->add_option("--l-max", loc.l_max)->check(CLI::NonNegativeNumber);
    add_output(s_loc);
    s_loc->callback([&] { action = [&] { return cmd_locus(loc, output); }; });

    FiguresArgs fig;
    auto* s_fig = app.add_subcommand("figures", "Write fig1, fig2 and fig3 data files");
    s_fig->add_option("--alpha", fig.alpha);
    s_fig->add_option("--t-max", fig.t_max, "Span in ln(Lambda/Lambda0)")->check(CLI::PositiveNumber);
    s_fig->add_option("--points", fig.points)->check(CLI::Range(2, 10000000));
    s_fig->add_option("--f-min", fig.f_min);
    s_fig->add_option("--f-max", fig.f_max);
    s_fig->add_option("--beta-points", fig.beta_points)->check(CLI::Range(2, 10000000));
    s_fig->add_option("--locus-l-max", fig.locus_l_max)->check(CLI::NonNegativeNumber);
    s_fig->add_option("--out-dir", fig.out_dir, "Directory for the figure files")->envname("RGFLOW_OUTPUT_DIR");
    s_fig->add_option("--format", output.format)->check(CLI::IsMember({"csv", "json"}));
    s_fig->callback([&] { action = [&] { return cmd_figures(fig, output); }; });

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = merge_config(std::move(args));
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        report(err, "validation", e.what());
        return kExitValidation;
    } catch (const ValidationError& e) {
        report(err, "validation", e.what());
        return kExitValidation;
    }

    try {
        emitted = action();
    } catch (const ValidationError& e) {
        report(err, "validation", e.what());
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        report(err, "validation", e.what());
        return kExitValidation;
    } catch (const NumericalError& e) {
        report(err, "numerical", e.what());
        return kExitNumerical;
    }

    try {
        const bool multi = emitted.size() > 1 || !emitted.front().name.empty();
        if (multi) {
            std::filesystem::create_directories(fig.out_dir);
            for (const auto& e : emitted) {
                const auto path = std::filesystem::path(fig.out_dir) / e.name;
                std::ofstream f(path, std::ios::binary);
                if (!f || !(f << e.text)) throw std::runtime_error("cannot write " + path.string());
            }
        } else if (output.path.empty() || output.path == "-") {
            out << emitted.front().text;
        } else {
            std::ofstream f(output.path, std::ios::binary);
            if (!f || !(f << emitted.front().text)) throw std::runtime_error("cannot write " + output.path);
        }
    } catch (const std::exception& e) {
        report(err, "io", e.what());
        return 1;
    }
    return kExitOk;
}

}  // namespace rgflow::cli
