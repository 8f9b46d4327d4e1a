#include "rpv/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "rpv/pi0.hpp"
#include "rpv/pvalues.hpp"
#include "rpv/simkit.hpp"
#include "rpv/tuning.hpp"

namespace rpv::cli {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) fields.push_back(trim(field));
    if (!line.empty() && line.back() == sep) fields.emplace_back();
    return fields;
}

bool parse_double(const std::string& text, double& value) {
    if (text.empty()) return false;
    const char* begin = text.data();
    const char* end = begin + text.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Thrown for flag-level validation failures.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ModelFlags {
    std::string model = "z";
    std::size_t m = 1000;
    int n = 50;
    int n1 = 25;
    int n2 = 25;
    double sigma = 1.0;
    double pi0 = 0.7;
    double theta_null = -1.0 / std::sqrt(50.0);
    double theta_alt = 2.5 / std::sqrt(50.0);
    std::string copula = "independent";
    double nu = 2.0;

    void add_to(CLI::App& app) {
        app.add_option("--model", model, "Test model")->check(CLI::IsMember({"z", "two-sample"}));
        app.add_option("--m", m, "Number of hypotheses");
        app.add_option("--n", n, "Z model sample size");
        app.add_option("--n1", n1, "Two-sample model: first sample size");
        app.add_option("--n2", n2, "Two-sample model: second sample size");
        app.add_option("--sigma", sigma, "Two-sample model: common standard deviation");
        app.add_option("--pi0", pi0, "Proportion of true nulls");
        app.add_option("--theta-null", theta_null, "Effect under true nulls (raw scale, <= 0)");
        app.add_option("--theta-alt", theta_alt, "Effect under alternatives (raw scale, > 0)");
        app.add_option("--copula", copula, "Dependence of the LFC p-values")
            ->check(CLI::IsMember({"independent", "gumbel"}));
        app.add_option("--nu", nu, "Gumbel-Hougaard copula parameter (>= 1)");
    }

    ModelSpec build() const {
        if (m < 2) throw UsageError("--m must be >= 2");
        if (!(pi0 >= 0.0 && pi0 <= 1.0)) throw UsageError("--pi0 must lie in [0, 1]");
        const double nulls_real = pi0 * static_cast<double>(m);
        const double nulls_rounded = std::round(nulls_real);
        if (std::fabs(nulls_real - nulls_rounded) > 1e-6) {
            throw UsageError("--pi0 times --m must be a whole number of null hypotheses");
        }
        const auto nulls = static_cast<std::size_t>(nulls_rounded);
        if (nulls > 0 && !(theta_null <= 0.0)) throw UsageError("--theta-null must be <= 0");
        if (nulls < m && !(theta_alt > 0.0)) throw UsageError("--theta-alt must be > 0");
        std::vector<HypothesisGroup> groups;
        if (nulls > 0) groups.push_back({nulls, theta_null});
        if (nulls < m) groups.push_back({m - nulls, theta_alt});

        ModelSpec::Model model_value = ZTestsModel{n};
        if (model == "z") {
            if (n < 1) throw UsageError("--n must be >= 1");
        } else {
            if (n1 < 1 || n2 < 1 || n1 + n2 < 3) {
                throw UsageError("--n1 and --n2 must be >= 1 with n1 + n2 >= 3");
            }
            if (!(sigma > 0.0)) throw UsageError("--sigma must be > 0");
            model_value = TwoSampleModel{n1, n2, sigma};
        }
        ModelSpec::Dependence dependence = Independent{};
        if (copula == "gumbel") {
            if (!(nu >= 1.0) || !std::isfinite(nu)) throw UsageError("--nu must be >= 1");
            dependence = GumbelHougaard{nu};
        }
        return ModelSpec(model_value, std::move(groups), dependence);
    }
};

void check_lambda(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw UsageError("--lambda must lie in (0, 1)");
}

// Output sink: stdout for "" or "-", otherwise a file.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty() && path != "-") {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw UsageError("--out: cannot open '" + path + "' for writing");
            stream_ = file_.get();
        }
    }
    std::ostream& stream() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_;
};

struct AnalyzeArgs {
    std::string input;
    std::string column = "p_lfc";
    double lambda = 0.5;
    std::uint64_t seed = 1;
    std::string variant = "plain";
    std::string out;
};

int do_analyze(const AnalyzeArgs& a, std::ostream& out) {
    check_lambda(a.lambda);
    const EstimatorVariant variant = parse_estimator_variant(a.variant);
    std::ifstream file(a.input, std::ios::binary);
    if (!file) throw UsageError("cannot open input file '" + a.input + "'");
    std::vector<double> values = read_pvalue_csv(file, a.column);
    const PValueVector p(std::move(values), PValueKind::external);

    const C0Selection sel = select_c0(p, a.lambda, variant);
    RngStream rng(a.seed, 0, 0);
    const PValueVector randomized = randomize_vector(p, RandomizationRule::constant(sel.c0), rng);
    const EstimatorConfig cfg{a.lambda, variant};

    out << "m=" << p.size() << '\n'
        << "lambda=" << fmt_short(a.lambda) << '\n'
        << "variant=" << to_string(variant) << '\n'
        << "seed=" << a.seed << '\n'
        << "candidates=" << sel.candidates << '\n'
        << "c0=" << fmt(sel.c0) << '\n'
        << "g_max=" << fmt(sel.g_max) << '\n'
        << "conditional_expectation=" << fmt(sel.conditional_expectation) << '\n'
        << "pi0_hat_c0=" << fmt(schweder_spjotvoll(randomized, cfg)) << '\n'
        << "pi0_hat_lfc=" << fmt(schweder_spjotvoll(p, cfg)) << '\n';

    if (!a.out.empty()) {
        Sink sink(a.out, out);
        auto& csv = sink.stream();
        csv << "# c0=" << fmt(sel.c0) << " lambda=" << fmt(a.lambda) << " seed=" << a.seed << '\n';
        csv << "p_lfc,p_rand\n";
        for (std::size_t j = 0; j < p.size(); ++j) {
            csv << fmt(p[j]) << ',' << fmt(randomized[j]) << '\n';
        }
    }
    return kExitOk;
}

struct SimulateArgs {
    ModelFlags model;
    double lambda = 0.5;
    std::uint64_t seed = 1;
    std::string variant = "plain";
    long long reps = 10000;
    std::string c_grid = "0:0.05:1";
    std::string out;
};

int do_simulate(const SimulateArgs& a, std::ostream& out) {
    check_lambda(a.lambda);
    if (a.reps < 1) throw UsageError("--reps must be >= 1");
    SimulationPlan plan{a.model.build(), a.lambda, parse_grid(a.c_grid),
                        static_cast<std::size_t>(a.reps), a.seed, parse_estimator_variant(a.variant)};
    const McSummary summary = run_mc(plan);
    Sink sink(a.out, out);
    write_csv(sink.stream(), summary);
    return kExitOk;
}

struct CurvesArgs {
    ModelFlags model;
    std::string kind = "h";
    double lambda = 0.5;
    std::string variant = "plain";
    std::string c_grid = "0:0.05:1";
    std::string c_list = "0,0.25,0.5,0.75,1";
    double theta = -1.0 / std::sqrt(50.0);
    int t_points = 101;
    std::string out;
};

int do_curves(const CurvesArgs& a, std::ostream& out) {
    if (a.kind == "h") {
        check_lambda(a.lambda);
        const ModelSpec spec = a.model.build();
        const auto grid = parse_grid(a.c_grid);
        const CurveTable table =
            h_curve(spec.population(), a.lambda, grid, parse_estimator_variant(a.variant));
        Sink sink(a.out, out);
        write_csv(sink.stream(), table);
        return kExitOk;
    }
    if (a.t_points < 2) throw UsageError("--t-points must be >= 2");
    // A single-group spec carries the model parameters for the law.
    ModelFlags single = a.model;
    single.m = 2;
    single.pi0 = a.theta <= 0.0 ? 1.0 : 0.0;
    single.theta_null = a.theta;
    single.theta_alt = a.theta;
    const ModelSpec spec = single.build();
    const MarginalLaw law = spec.law(spec.groups()[0]);
    std::vector<double> t_grid(static_cast<std::size_t>(a.t_points));
    for (int i = 0; i < a.t_points; ++i) t_grid[i] = static_cast<double>(i) / (a.t_points - 1);
    const auto tables = cdf_curves(law, parse_grid(a.c_list), t_grid);
    Sink sink(a.out, out);
    write_cdf_csv(sink.stream(), law, tables);
    return kExitOk;
}

struct CstarArgs {
    ModelFlags model;
    double lambda = 0.5;
    std::string variant = "plain";
    double resolution = 1e-3;
};

int do_cstar(const CstarArgs& a, std::ostream& out) {
    check_lambda(a.lambda);
    if (!(a.resolution > 0.0 && a.resolution <= 1e-3)) {
        throw UsageError("--resolution must lie in (0, 0.001]");
    }
    const ModelSpec spec = a.model.build();
    const EstimatorVariant variant = parse_estimator_variant(a.variant);
    const CStarResult r = cstar_search(spec.population(), a.lambda, a.resolution, variant);
    out << "c_star=" << fmt(r.c_star) << '\n' << "h_min=" << fmt(r.h_min) << '\n';
    out << "pi0=" << fmt(spec.pi0()) << '\n' << "bias=" << fmt(r.h_min - spec.pi0()) << '\n';
    return kExitOk;
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return trim(s);
}

} // namespace

std::vector<double> read_pvalue_csv(std::istream& in, const std::string& column) {
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> col;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto fields = split(stripped, ',');
        if (!col) {
            const auto it = std::find(fields.begin(), fields.end(), column);
            if (it == fields.end()) {
                throw CsvError("line " + std::to_string(line_no) + ": header has no column '" +
                               column + "'");
            }
            col = static_cast<std::size_t>(it - fields.begin());
            continue;
        }
        if (*col >= fields.size()) {
            throw CsvError("line " + std::to_string(line_no) + ": missing column '" + column + "'");
        }
        double v = 0.0;
        if (!parse_double(fields[*col], v)) {
            throw CsvError("line " + std::to_string(line_no) + ": cannot parse '" + fields[*col] +
                           "' as a number");
        }
        if (!(v >= 0.0 && v <= 1.0)) {
            throw CsvError("line " + std::to_string(line_no) + ": value " + fields[*col] +
                           " outside [0, 1]");
        }
        values.push_back(v);
    }
    if (!col) throw CsvError("input has no header line");
    if (values.size() < 2) {
        throw CsvError("need at least 2 p-values, got " + std::to_string(values.size()));
    }
    return values;
}

std::vector<double> parse_grid(const std::string& text) {
    const std::string s = trim(text);
    std::vector<double> grid;
    if (s.find(':') != std::string::npos) {
        const auto parts = split(s, ':');
        double start, step, stop;
        if (parts.size() != 3 || !parse_double(parts[0], start) || !parse_double(parts[1], step) ||
            !parse_double(parts[2], stop)) {
            throw UsageError("grid '" + text + "' is not of the form start:step:stop");
        }
        if (!(step > 0.0) || !(stop >= start)) {
            throw UsageError("grid '" + text + "' needs step > 0 and stop >= start");
        }
        grid = make_grid(start, step, stop);
    } else {
        for (const auto& field : split(s, ',')) {
            double v;
            if (!parse_double(field, v)) throw UsageError("grid value '" + field + "' is not a number");
            grid.push_back(v);
        }
    }
    if (grid.empty()) throw UsageError("grid '" + text + "' is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) {
            throw UsageError("grid value " + fmt_short(grid[i]) + " outside [0, 1]");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw UsageError("grid '" + text + "' must be strictly increasing");
        }
    }
    return grid;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Randomized p-values and pi0 estimation"};
    app.require_subcommand(1);

    AnalyzeArgs analyze;
    auto* analyze_cmd = app.add_subcommand("analyze", "Select c0 for a p-value file and estimate pi0");
    analyze_cmd->add_option("input", analyze.input, "CSV with a p_lfc column")->required();
    analyze_cmd->add_option("--column", analyze.column, "Column to read");
    analyze_cmd->add_option("--lambda", analyze.lambda, "Tuning parameter in (0, 1)");
    analyze_cmd->add_option("--seed", analyze.seed, "Seed for the randomization");
    analyze_cmd->add_option("--variant", analyze.variant, "plain or storey-plus")
        ->check(CLI::IsMember({"plain", "storey-plus"}));
    analyze_cmd->add_option("--out", analyze.out, "Write p_lfc,p_rand CSV here");

    SimulateArgs simulate;
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo bias/variance/MSE over a c grid");
    simulate.model.add_to(*simulate_cmd);
    simulate_cmd->add_option("--lambda", simulate.lambda, "Tuning parameter in (0, 1)");
    simulate_cmd->add_option("--seed", simulate.seed, "Base seed");
    simulate_cmd->add_option("--variant", simulate.variant, "plain or storey-plus")
        ->check(CLI::IsMember({"plain", "storey-plus"}));
    simulate_cmd->add_option("--reps", simulate.reps, "Monte Carlo replicates");
    simulate_cmd->add_option("--c-grid", simulate.c_grid, "start:step:stop or comma list");
    simulate_cmd->add_option("--out", simulate.out, "Output CSV (default stdout)");

    CurvesArgs curves;
    auto* curves_cmd = app.add_subcommand("curves", "Exact h curves or randomized p-value cdfs");
    curves.model.add_to(*curves_cmd);
    curves_cmd->add_option("--kind", curves.kind, "h or cdf")->check(CLI::IsMember({"h", "cdf"}));
    curves_cmd->add_option("--lambda", curves.lambda, "Tuning parameter in (0, 1)");
    curves_cmd->add_option("--variant", curves.variant, "plain or storey-plus")
        ->check(CLI::IsMember({"plain", "storey-plus"}));
    curves_cmd->add_option("--c-grid", curves.c_grid, "Grid of c for --kind h");
    curves_cmd->add_option("--c-list", curves.c_list, "Values of c for --kind cdf");
    curves_cmd->add_option("--theta", curves.theta, "Effect (raw scale) for --kind cdf");
    curves_cmd->add_option("--t-points", curves.t_points, "Number of t grid points for --kind cdf");
    curves_cmd->add_option("--out", curves.out, "Output CSV (default stdout)");

    CstarArgs cstar;
    auto* cstar_cmd = app.add_subcommand("cstar", "Bias-minimizing c for a model");
    cstar.model.add_to(*cstar_cmd);
    cstar_cmd->add_option("--lambda", cstar.lambda, "Tuning parameter in (0, 1)");
    cstar_cmd->add_option("--variant", cstar.variant, "plain or storey-plus")
        ->check(CLI::IsMember({"plain", "storey-plus"}));
    cstar_cmd->add_option("--resolution", cstar.resolution, "Grid resolution (<= 0.001)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return kExitUsage;
    }

    try {
        if (analyze_cmd->parsed()) return do_analyze(analyze, out);
        if (simulate_cmd->parsed()) return do_simulate(simulate, out);
        if (curves_cmd->parsed()) return do_curves(curves, out);
        if (cstar_cmd->parsed()) return do_cstar(cstar, out);
    } catch (const CsvError& e) {
        err << "error: " << analyze.input << ": " << one_line(e.what()) << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << one_line(e.what()) << '\n';
        return kExitInternal;
    }
    err << "error: no subcommand\n";
    return kExitUsage;
}

} // namespace rpv::cli
