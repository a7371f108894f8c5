#include "essstab/report.hpp"

#include <sstream>

namespace essstab {

AnalysisReport analyze(const EssField& X, const AnalysisOptions& opt) {
    AnalysisReport rep;
    rep.field = X;
    rep.options = opt;
    rep.inputs = analyze_inputs(X, opt);
    bool a_ok = !rep.inputs.infinity_degenerate && rep.inputs.finite.degenerate_lines.empty();
    if (a_ok)
        for (const auto& s : rep.inputs.finite.points) a_ok = a_ok && s.cls.hyperbolic;
    if (a_ok)
        for (const auto& s : rep.inputs.infinity) a_ok = a_ok && s.cls.hyperbolic;
    if (opt.run_traces && (!opt.economize || a_ok))
        rep.skeleton = trace_separatrices(rep.inputs, opt);
    rep.certificate = assemble_certificate(rep.inputs, rep.skeleton, opt);
    return rep;
}

json poly_to_json(const Poly2& p) {
    json terms = json::array();
    for (const auto& [m, c] : p.terms())
        terms.push_back({{"i", m.i}, {"j", m.j}, {"c", c}});
    return json{{"terms", terms}};
}

Poly2 poly_from_json(const json& j) {
    Poly2 p;
    for (const auto& t : j.at("terms"))
        p.add_term(t.at("i").get<int>(), t.at("j").get<int>(), t.at("c").get<double>());
    return p;
}

json field_to_json(const EssField& X) {
    return json{{"d", X.d()}, {"f", poly_to_json(X.f())}, {"g", poly_to_json(X.g())}};
}

EssField field_from_json(const json& j) {
    return build_field(poly_from_json(j.at("f")), poly_from_json(j.at("g")), j.at("d").get<int>());
}

json game_to_json(const PayoffGame& g) {
    auto mat = [](const std::array<std::array<Poly2, 2>, 2>& m) {
        return json::array({json::array({poly_to_json(m[0][0]), poly_to_json(m[0][1])}),
                            json::array({poly_to_json(m[1][0]), poly_to_json(m[1][1])})});
    };
    return json{{"n", g.n}, {"A", mat(g.A)}, {"B", mat(g.B)}};
}

PayoffGame game_from_json(const json& j) {
    PayoffGame g;
    g.n = j.at("n").get<int>();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            g.A[a][b] = poly_from_json(j.at("A").at(a).at(b));
            g.B[a][b] = poly_from_json(j.at("B").at(a).at(b));
        }
    return g;
}

namespace {

json condition_to_json(const ConditionResult& r) {
    return json{{"verdict", to_string(r.verdict)}, {"reason", r.reason}};
}

json singularity_to_json(const Singularity& s) {
    return json{{"location", {s.location[0], s.location[1]}},
                {"jacobian", {s.jacobian.a11, s.jacobian.a12, s.jacobian.a21, s.jacobian.a22}},
                {"eigenvalues",
                 {{"re1", s.eigenvalues[0]},
                  {"im1", s.eigenvalues[1]},
                  {"re2", s.eigenvalues[2]},
                  {"im2", s.eigenvalues[3]}}},
                {"kind", to_string(s.cls.kind)},
                {"stability", to_string(s.cls.stability)},
                {"hyperbolic", s.cls.hyperbolic},
                {"index", s.index},
                {"index_defined", s.index_defined},
                {"on_lambda", s.on_lambda},
                {"residual", s.residual}};
}

json infinity_to_json(const InfinitySingularity& s) {
    return json{{"chart", to_string(s.chart)},
                {"u0", s.u0},
                {"eig_tangent", s.eig_tangent},
                {"eig_normal", s.eig_normal},
                {"kind", to_string(s.cls.kind)},
                {"hyperbolic", s.cls.hyperbolic},
                {"simple_root", s.simple_root},
                {"residual", s.residual}};
}

json polycycle_to_json(const PolycycleReport& p) {
    json saddles = json::array();
    if (p.exists)
        for (const auto& sr : p.saddles)
            saddles.push_back({{"corner", sr.corner}, {"mu", sr.mu}, {"nu", sr.nu},
                               {"ratio", sr.ratio}});
    return json{{"exists", p.exists},
                {"reason", p.reason},
                {"orientation", p.orientation == Orientation::CCW ? "CCW" : "CW"},
                {"saddles", saddles},
                {"r", p.r_product},
                {"generic", p.generic},
                {"predicted",
                 p.predicted == PolycycleStability::StableInside     ? "StableInside"
                 : p.predicted == PolycycleStability::UnstableInside ? "UnstableInside"
                                                                     : "NonGeneric"},
                {"tol_generic", p.tol_generic}};
}

json cycle_to_json(const LimitCycleRecord& c) {
    json pts = json::array();
    const std::size_t stride = std::max<std::size_t>(1, c.samples.size() / 512);
    for (std::size_t k = 0; k < c.samples.size(); k += stride)
        pts.push_back({c.samples[k][0], c.samples[k][1]});
    return json{{"period", c.period},
                {"s_star", c.s_star},
                {"r_gamma", c.r_gamma},
                {"multiplier", c.multiplier},
                {"slope_check_error", c.slope_check_error},
                {"closure_error", c.closure_error},
                {"verdict",
                 c.verdict == CycleVerdict::HyperbolicStable     ? "HyperbolicStable"
                 : c.verdict == CycleVerdict::HyperbolicUnstable ? "HyperbolicUnstable"
                                                                 : "NonHyperbolicSuspect"},
                {"scan_sections", c.scan_sections},
                {"points", pts}};
}

json trace_to_json(const SeparatrixTrace& t) {
    json pts = json::array();
    const std::size_t stride = std::max<std::size_t>(1, t.points.size() / 256);
    for (std::size_t k = 0; k < t.points.size(); k += stride)
        pts.push_back({t.points[k][0], t.points[k][1]});
    json lim{{"label", to_string(t.limit.label)},
             {"target", t.limit.target},
             {"final_distance", t.limit.final_distance}};
    if (t.limit.label == LimitLabel::Infinity) {
        lim["chart"] = to_string(t.limit.chart);
        lim["u0"] = t.limit.u0;
    }
    if (t.limit.label == LimitLabel::PolycycleInLambda) {
        lim["generic"] = t.limit.polycycle_generic;
        lim["ratio"] = t.limit.polycycle_ratio;
        lim["extended_cherkas"] = t.limit.extended_cherkas;
        lim["saddles"] = t.limit.polycycle_saddles;
    }
    return json{{"saddle", t.saddle},
                {"infinity_saddle", t.infinity_saddle},
                {"unstable", t.unstable},
                {"branch", t.branch},
                {"in_lambda", t.in_lambda},
                {"limit", lim},
                {"points", pts}};
}

}  // namespace

json certificate_to_json(const StabilityCertificate& cert, const AnalysisOptions& opt) {
    return json{{"a_prime", condition_to_json(cert.a_prime)},
                {"b_prime", condition_to_json(cert.b_prime)},
                {"c", condition_to_json(cert.c)},
                {"d_prime", condition_to_json(cert.d_prime)},
                {"overall", to_string(cert.overall)},
                {"margins",
                 {{"hyperbolic", cert.hyperbolic_margin},
                  {"polycycle", cert.polycycle_margin},
                  {"cycle", cert.cycle_margin}}},
                {"tolerances",
                 {{"hyperbolic", opt.tol_hyperbolic},
                  {"generic", opt.tol_generic},
                  {"cycle_hyperbolic", opt.tol_cycle_hyperbolic},
                  {"connection", opt.connection_threshold}}},
                {"resolutions",
                 {{"scan_sections", opt.scan_sections},
                  {"t_max", opt.t_max},
                  {"trace_delta0", opt.trace_delta0},
                  {"rel_tol", opt.rel_tol},
                  {"abs_tol", opt.abs_tol}}}};
}

json report_to_json(const AnalysisReport& rep) {
    json sing = json::array();
    for (const auto& s : rep.inputs.finite.points) sing.push_back(singularity_to_json(s));
    json inf = json::array();
    for (const auto& s : rep.inputs.infinity) inf.push_back(infinity_to_json(s));
    json cycles = json::array();
    for (const auto& c : rep.inputs.cycles.cycles) cycles.push_back(cycle_to_json(c));
    json traces = json::array();
    for (const auto& t : rep.skeleton.traces) traces.push_back(trace_to_json(t));

    return json{{"schema_version", kSchemaVersion},
                {"field", field_to_json(rep.field)},
                {"singularities", sing},
                {"infinity", inf},
                {"infinity_degenerate", rep.inputs.infinity_degenerate},
                {"degenerate_lines", rep.inputs.finite.degenerate_lines},
                {"unresolved_boxes", rep.inputs.finite.unresolved_boxes.size()},
                {"polycycle", polycycle_to_json(rep.inputs.polycycle)},
                {"cycles", cycles},
                {"cycle_scan",
                 {{"ran", rep.inputs.cycles_ran},
                  {"non_isolated_band", rep.inputs.cycles.non_isolated_band},
                  {"scan_gaps", rep.inputs.cycles.scan_gaps},
                  {"sections", rep.inputs.cycles.sections}}},
                {"separatrices", traces},
                {"certificate", certificate_to_json(rep.certificate, rep.options)},
                {"meta", {{"seed", rep.seed}, {"tool", "essstab"}, {"version", "0.1.0"}}}};
}

json density_to_json(const DensityStats& st) {
    const double n = std::max(1, st.n);
    return json{{"schema_version", kSchemaVersion},
                {"n", st.n},
                {"seed", st.seed},
                {"radius", st.radius},
                {"counts",
                 {{"in_pd", st.in_pd},
                  {"not_in_pd", st.not_in_pd},
                  {"inconclusive", st.inconclusive}}},
                {"fractions",
                 {{"in_pd", st.in_pd / n},
                  {"not_in_pd", st.not_in_pd / n},
                  {"inconclusive", st.inconclusive / n}}},
                {"condition_failures",
                 {{"a_prime", st.fail_a},
                  {"b_prime", st.fail_b},
                  {"c", st.fail_c},
                  {"d_prime", st.fail_d}}},
                {"nonhyperbolic_samples", st.nonhyperbolic},
                {"near_generic_polycycles", st.near_generic},
                {"max_cycles_per_field", st.max_cycles_per_field}};
}

std::string density_to_csv(const DensityStats& st) {
    std::ostringstream os;
    os << "sample,overall,a_prime,b_prime,c,d_prime,nonhyperbolic,near_generic,cycles\n";
    for (std::size_t k = 0; k < st.outcomes.size(); ++k) {
        const auto& o = st.outcomes[k];
        os << k << ',' << to_string(o.overall) << ',' << to_string(o.a_prime) << ','
           << to_string(o.b_prime) << ',' << to_string(o.c) << ',' << to_string(o.d_prime) << ','
           << (o.nonhyperbolic_singularity ? 1 : 0) << ',' << (o.near_generic_polycycle ? 1 : 0)
           << ',' << o.cycle_count << '\n';
    }
    return os.str();
}

}  // namespace essstab
