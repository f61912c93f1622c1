// Command-line front end for the sandwich integrator: builds schemes,
// measures and distributions from a JSON config and emits certificates,
// convergence tables, property-suite reports and comparison witnesses.
//
// Exit codes: 0 certified/pass, 1 usage or config errors, 2 NotCertified
// (or a failing suite).

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "leibniz/leibniz.hpp"

namespace {

using leibniz::json;

json read_config(const std::string& config_path) {
    std::string text;
    if (config_path.empty()) {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        text = buf.str();
    } else {
        std::ifstream in(config_path);
        if (!in) throw leibniz::ConfigError("$", "cannot open config file " + config_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        text = buf.str();
    }
    json cfg = json::parse(text, nullptr, false);
    if (cfg.is_discarded()) throw leibniz::ConfigError("$", "config is not valid JSON");
    return cfg;
}

void apply_overrides(json& cfg, const std::optional<double>& epsilon,
                     const std::optional<std::size_t>& depth,
                     const std::optional<std::string>& mode,
                     const std::optional<std::string>& tie) {
    if (epsilon) cfg["epsilon"] = *epsilon;
    if (depth) cfg["maxDepth"] = *depth;
    if (mode) cfg["mode"] = *mode;
    if (tie && cfg.contains("dist") && cfg["dist"].is_object()) cfg["dist"]["tie"] = *tie;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw leibniz::ConfigError("--out", "cannot open " + out_path);
        out << text;
    }
}

int run_integrate(const json& cfg, const std::string& out_path, const std::string& format) {
    leibniz::cfg::Problem p = leibniz::cfg::problem_from_json(cfg);
    leibniz::IntegrateResult r =
        leibniz::integrate(p.dist, p.scheme, p.epsilon, p.max_depth, p.mode);
    if (r.certified()) {
        if (format == "csv")
            emit(leibniz::sums_csv(r.certificate().sums_by_level), out_path);
        else
            emit(leibniz::certificate_json(r.certificate()).dump(2) + "\n", out_path);
        return 0;
    }
    emit(leibniz::failure_json(r.failure()).dump(2) + "\n", out_path);
    return 2;
}

int run_table(const json& cfg, const std::string& out_path) {
    leibniz::cfg::Problem p = leibniz::cfg::problem_from_json(cfg);
    leibniz::IntegrateResult r =
        leibniz::integrate(p.dist, p.scheme, p.epsilon, p.max_depth, p.mode);
    emit(leibniz::sums_csv(r.sums_by_level()), out_path);
    return r.certified() ? 0 : 2;
}

int run_verify(const std::string& suite, const json& cfg, const std::string& out_path) {
    leibniz::PartitionScheme scheme =
        cfg.contains("domain") ? leibniz::cfg::scheme_from_json(cfg)
                               : leibniz::PartitionScheme::dyadic(leibniz::Rational(0),
                                                                  leibniz::Rational(1));
    double epsilon = cfg.contains("epsilon") ? cfg.at("epsilon").get<double>() : 1e-6;
    std::size_t depth = cfg.contains("maxDepth") ? cfg.at("maxDepth").get<std::size_t>() : 24;
    std::uint64_t seed = cfg.contains("seed") ? cfg.at("seed").get<std::uint64_t>() : 2024;
    std::size_t count = cfg.contains("count") ? cfg.at("count").get<std::size_t>() : 20;

    leibniz::SuiteReport rep;
    if (suite == "newton-leibniz") {
        if (cfg.contains("f") && cfg.contains("fprime")) {
            rep = leibniz::newton_leibniz_suite(leibniz::parse_fn(cfg.at("f").get<std::string>()),
                                                leibniz::parse_fn(cfg.at("fprime").get<std::string>()),
                                                scheme, epsilon, depth);
        } else {
            rep = leibniz::newton_leibniz_suite(scheme, epsilon, depth);
        }
    } else if (suite == "berkeley") {
        rep = leibniz::berkeley_suite(scheme, cfg.contains("depth")
                                                  ? cfg.at("depth").get<std::size_t>()
                                                  : 20);
    } else if (suite == "indicator") {
        rep = leibniz::indicator_suite(scheme, count, seed, epsilon, depth);
    } else if (suite == "linearity") {
        rep = leibniz::linearity_suite(scheme, count, seed, epsilon);
    } else if (suite == "comparison") {
        rep = leibniz::comparison_suite(scheme, count, seed,
                                        cfg.contains("maxLevel")
                                            ? cfg.at("maxLevel").get<std::size_t>()
                                            : 12);
    } else {
        throw leibniz::ConfigError(
            "suite", "expected newton-leibniz, berkeley, indicator, linearity or comparison");
    }
    emit(rep.to_text(), out_path);
    return rep.pass ? 0 : 2;
}

int run_witness(const json& cfg, const std::string& out_path) {
    leibniz::PartitionScheme scheme = leibniz::cfg::scheme_from_json(cfg);
    const leibniz::Rational &a = scheme.lo(), &b = scheme.hi();
    leibniz::FinAddMeasure mu1 =
        leibniz::cfg::measure_from_json(leibniz::cfg::field(cfg, "mu1", "$"), "$.mu1", a, b);
    leibniz::FinAddMeasure mu2 =
        leibniz::cfg::measure_from_json(leibniz::cfg::field(cfg, "mu2", "$"), "$.mu2", a, b);
    std::size_t depth = cfg.contains("depth") ? cfg.at("depth").get<std::size_t>() : 12;
    auto chain = leibniz::comparison_witness(mu1, mu2, scheme, depth);
    std::ostringstream os;
    os << "level,lo,hi,mu1,mu2\n";
    for (const auto& u : chain) {
        os << u.level << ',' << leibniz::format_rational(u.lo) << ','
           << leibniz::format_rational(u.hi) << ',' << leibniz::ordered_json(mu1.value(u)).dump()
           << ',' << leibniz::ordered_json(mu2.value(u)).dump() << '\n';
    }
    emit(os.str(), out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Leibniz sandwich integrator"};
    app.require_subcommand(1);

    std::string config_path, out_path, format = "json", suite;
    std::optional<double> epsilon;
    std::optional<std::size_t> depth;
    std::optional<std::string> mode, tie;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (default: stdin)");
        cmd->add_option("--out", out_path, "write output to a file instead of stdout");
        cmd->add_option("--epsilon", epsilon, "override config epsilon");
        cmd->add_option("--depth", depth, "override config maxDepth");
        cmd->add_option("--mode", mode, "total | eventual | ultra");
        cmd->add_option("--tie", tie, "left | right");
    };

    CLI::App* c_int = app.add_subcommand("integrate", "emit an integral certificate");
    c_int->add_option("--format", format, "json | csv");
    add_common(c_int);
    CLI::App* c_tab = app.add_subcommand("table", "emit the convergence table as CSV");
    add_common(c_tab);
    CLI::App* c_ver = app.add_subcommand("verify", "run a named property suite");
    c_ver->add_option("suite", suite, "newton-leibniz | berkeley | indicator | linearity | comparison")
        ->required();
    add_common(c_ver);
    CLI::App* c_wit = app.add_subcommand("witness", "print a comparison-lemma witness chain");
    add_common(c_wit);

    CLI11_PARSE(app, argc, argv);

    try {
        json cfg = read_config(config_path);
        apply_overrides(cfg, epsilon, depth, mode, tie);
        if (app.got_subcommand(c_int)) return run_integrate(cfg, out_path, format);
        if (app.got_subcommand(c_tab)) return run_table(cfg, out_path);
        if (app.got_subcommand(c_ver)) return run_verify(suite, cfg, out_path);
        if (app.got_subcommand(c_wit)) return run_witness(cfg, out_path);
    } catch (const leibniz::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const leibniz::ParseError& e) {
        std::cerr << "expression error: " << e.what() << "\n";
        return 1;
    } catch (const leibniz::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
