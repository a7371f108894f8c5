#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "essstab/perturb.hpp"
#include "essstab/portrait.hpp"
#include "essstab/report.hpp"

using namespace essstab;

namespace {

int log_level() {
    const char* env = std::getenv("ESS_STAB_LOG");
    return env ? std::atoi(env) : 0;
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

EssField load_field_or_game(const std::string& field_path, const std::string& game_path) {
    if (!field_path.empty()) return field_from_json(load_json(field_path));
    const PayoffGame game = game_from_json(load_json(game_path));
    return reduce_game(game);
}

void print_certificate(const StabilityCertificate& cert) {
    std::cout << "a' (singularities hyperbolic): " << to_string(cert.a_prime.verdict) << " - "
              << cert.a_prime.reason << "\n";
    std::cout << "b' (cycles hyperbolic):        " << to_string(cert.b_prime.verdict) << " - "
              << cert.b_prime.reason << "\n";
    std::cout << "c  (connections in Lambda):    " << to_string(cert.c.verdict) << " - "
              << cert.c.reason << "\n";
    std::cout << "d' (admissible limit sets):    " << to_string(cert.d_prime.verdict) << " - "
              << cert.d_prime.reason << "\n";
    std::cout << "overall: " << to_string(cert.overall) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structural stability analysis of planar replicator fields"};
    app.require_subcommand(1);

    // ---------------- analyze ----------------
    auto* analyze_cmd = app.add_subcommand("analyze", "full pipeline on one field or game");
    std::string field_path, game_path, report_path, portrait_path;
    AnalysisOptions opt;
    analyze_cmd->add_option("--field", field_path, "field JSON ({d, f, g})");
    analyze_cmd->add_option("--game", game_path, "payoff game JSON ({n, A, B})");
    analyze_cmd->add_option("--report", report_path, "write the analysis report JSON here");
    analyze_cmd->add_option("--portrait", portrait_path, "write an SVG phase portrait here");
    analyze_cmd->add_option("--tol-hyperbolic", opt.tol_hyperbolic, "hyperbolicity threshold");
    analyze_cmd->add_option("--tol-generic", opt.tol_generic, "polycycle genericity threshold");
    analyze_cmd->add_option("--scan-sections", opt.scan_sections, "cycle scan resolution");
    analyze_cmd->add_option("--tmax", opt.t_max, "integration time cap");

    // ---------------- sweep ----------------
    auto* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo density experiment");
    DensityOptions dopt;
    std::string sweep_out = "sweep";
    sweep_cmd->add_option("-d,--degree", dopt.d, "degree bound of the sampled fields");
    sweep_cmd->add_option("-N,--samples", dopt.samples, "number of samples")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--seed", dopt.seed, "RNG seed");
    sweep_cmd->add_option("--radius", dopt.radius, "coefficient-ball radius");
    sweep_cmd->add_option("--jobs", dopt.jobs, "worker threads (0: default)");
    sweep_cmd->add_option("--out", sweep_out, "output prefix (.json/.csv)");
    sweep_cmd->add_option("--scan-sections", dopt.pipeline.scan_sections, "cycle scan resolution");
    sweep_cmd->add_option("--tmax", dopt.pipeline.t_max, "integration time cap");

    // ---------------- rotate ----------------
    auto* rotate_cmd = app.add_subcommand("rotate", "rotated-family perturbation of a field");
    std::string rot_field, rot_out, rot_report;
    double rot_eps = 0.1, rot_lambda = 1.0;
    rotate_cmd->add_option("--field", rot_field, "input field JSON")->required();
    rotate_cmd->add_option("--eps", rot_eps, "family amplitude");
    rotate_cmd->add_option("--lambda", rot_lambda, "family parameter in [-1,1]");
    rotate_cmd->add_option("--out", rot_out, "output field JSON")->required();
    rotate_cmd->add_option("--report", rot_report, "delta report JSON");

    // ---------------- curve-perturb ----------------
    auto* curve_cmd =
        app.add_subcommand("curve-perturb", "perturbation along an invariant algebraic curve");
    std::string cp_field, cp_curve, cp_out, cp_report;
    double cp_eps = 0.1;
    int cp_d1 = 1, cp_d2 = 1;
    curve_cmd->add_option("--field", cp_field, "input field JSON")->required();
    curve_cmd->add_option("--curve", cp_curve, "invariant curve polynomial JSON")->required();
    curve_cmd->add_option("--eps", cp_eps, "perturbation amplitude");
    curve_cmd->add_option("--delta1", cp_d1, "+1 or -1")->check(CLI::IsMember({-1, 1}));
    curve_cmd->add_option("--delta2", cp_d2, "+1 or -1")->check(CLI::IsMember({-1, 1}));
    curve_cmd->add_option("--out", cp_out, "output field JSON")->required();
    curve_cmd->add_option("--report", cp_report, "delta report JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*analyze_cmd) {
            if (field_path.empty() == game_path.empty()) {
                std::cerr << "analyze: pass exactly one of --field / --game\n";
                return 1;
            }
            const EssField X = load_field_or_game(field_path, game_path);
            if (log_level() > 0)
                std::cerr << "field: d=" << X.d() << " f=" << X.f().to_string()
                          << " g=" << X.g().to_string() << "\n";
            const AnalysisReport rep = analyze(X, opt);
            if (!report_path.empty()) write_text(report_path, report_to_json(rep).dump(2) + "\n");
            if (!portrait_path.empty()) write_text(portrait_path, render_portrait(rep));
            print_certificate(rep.certificate);
            switch (rep.certificate.overall) {
                case StabilityCertificate::Overall::InPd: return 0;
                case StabilityCertificate::Overall::NotInPd: return 3;
                case StabilityCertificate::Overall::Inconclusive: return 4;
            }
        }
        if (*sweep_cmd) {
            dopt.pipeline.economize = true;
            const DensityStats st = density_experiment(dopt);
            write_text(sweep_out + ".json", density_to_json(st).dump(2) + "\n");
            write_text(sweep_out + ".csv", density_to_csv(st));
            const double n = std::max(1, st.n);
            std::cout << "samples: " << st.n << "  InPd: " << st.in_pd / n
                      << "  NotInPd: " << st.not_in_pd / n
                      << "  Inconclusive: " << st.inconclusive / n << "\n";
            return 0;
        }
        if (*rotate_cmd) {
            const EssField X = field_from_json(load_json(rot_field));
            const EssField Y = rotate_family(X, rot_eps, rot_lambda);
            write_text(rot_out, field_to_json(Y).dump(2) + "\n");
            json delta{{"rho", distance(X, Y)},
                       {"eps", rot_eps},
                       {"lambda", rot_lambda},
                       {"lambda_invariance",
                        Y.eval_P(0.0, 0.3) == 0.0 && Y.eval_P(1.0, 0.7) == 0.0 &&
                            Y.eval_Q(0.3, 0.0) == 0.0 && Y.eval_Q(0.7, 1.0) == 0.0}};
            if (!rot_report.empty()) write_text(rot_report, delta.dump(2) + "\n");
            std::cout << "rho(X, Y_lambda) = " << distance(X, Y) << "\n";
            return 0;
        }
        if (*curve_cmd) {
            const EssField X = field_from_json(load_json(cp_field));
            const Poly2 F = poly_from_json(load_json(cp_curve));
            const EssField Y = algebraic_cycle_perturbation(X, F, cp_eps, cp_d1, cp_d2);
            write_text(cp_out, field_to_json(Y).dump(2) + "\n");
            json delta{{"rho", distance(X, Y)},
                       {"eps", cp_eps},
                       {"delta1", cp_d1},
                       {"delta2", cp_d2}};
            if (!cp_report.empty()) write_text(cp_report, delta.dump(2) + "\n");
            std::cout << "rho(X, Y) = " << distance(X, Y) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
