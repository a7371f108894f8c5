#ifndef ESSSTAB_CERTIFY_HPP
#define ESSSTAB_CERTIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "essstab/compactify.hpp"
#include "essstab/cycles.hpp"
#include "essstab/model.hpp"
#include "essstab/polycycle.hpp"
#include "essstab/singular.hpp"

namespace essstab {

struct AnalysisOptions {
    double tol_hyperbolic = 1e-8;        // relative eigenvalue threshold
    double tol_generic = 1e-6;           // |r(Omega) - 1| genericity margin
    double tol_cycle_hyperbolic = 1e-5;  // |r(gamma)| hyperbolicity floor
    double connection_threshold = 1e-5;  // trace mutual-proximity trigger
    int scan_sections = 200;
    double t_max = 1e4;
    double trace_delta0 = 1e-7;
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    Box box{};
    bool run_cycles = true;
    bool run_traces = true;
    bool economize = false;  // skip traces/cycles once (a') has already failed
};

// everything the certificate draws on, computed once per field
struct AnalysisInputs {
    EssField X;
    FiniteSingularities finite;  // box + chart completion
    std::vector<InfinitySingularity> infinity;
    bool infinity_degenerate = false;
    PolycycleReport polycycle;
    CycleScan cycles;
    bool cycles_ran = false;
};

AnalysisInputs analyze_inputs(const EssField& X, const AnalysisOptions& opt = {});

enum class LimitLabel { Singularity, LimitCycle, PolycycleInLambda, Infinity, Unresolved };

std::string to_string(LimitLabel l);

struct TraceLimit {
    LimitLabel label = LimitLabel::Unresolved;
    int target = -1;          // index into the finite/cycle list
    Chart chart = Chart::U1;  // Infinity labels
    double u0 = 0.0;
    double final_distance = 0.0;
    bool polycycle_generic = false;
    double polycycle_ratio = 0.0;
    bool extended_cherkas = false;  // ratio over a Lambda polycycle других than the square
    std::vector<int> polycycle_saddles;
};

struct SeparatrixTrace {
    int saddle = -1;           // finite-saddle index, or -1 for infinity sources
    int infinity_saddle = -1;  // infinity-list index when the source is on the equator
    bool unstable = true;
    int branch = 0;
    bool in_lambda = false;
    std::vector<Vec2> points;
    TraceLimit limit;
};

struct SeparatrixSkeleton {
    std::vector<SeparatrixTrace> traces;
};

SeparatrixSkeleton trace_separatrices(const AnalysisInputs& in, const AnalysisOptions& opt = {});

enum class Verdict { Pass, Fail, Inconclusive };

std::string to_string(Verdict v);

struct ConditionResult {
    Verdict verdict = Verdict::Inconclusive;
    std::string reason;
};

struct StabilityCertificate {
    ConditionResult a_prime;  // all singularities hyperbolic
    ConditionResult b_prime;  // all found closed orbits hyperbolic
    ConditionResult c;        // saddle connections confined to Lambda
    ConditionResult d_prime;  // limit sets: singularity / cycle / generic polycycle
    enum class Overall { InPd, NotInPd, Inconclusive } overall = Overall::Inconclusive;
    // openness margins as multiples of their tolerances (dimensionless):
    // min |Re eig| / tol, |r - 1| / tol_generic, min |r(gamma)| / tol_cycle
    double hyperbolic_margin = 0.0;
    double polycycle_margin = 0.0;
    double cycle_margin = 0.0;
};

std::string to_string(StabilityCertificate::Overall o);

StabilityCertificate assemble_certificate(const AnalysisInputs& in,
                                          const SeparatrixSkeleton& skel,
                                          const AnalysisOptions& opt);

// full pipeline for one field
StabilityCertificate check_membership(const EssField& X, const AnalysisOptions& opt = {});

struct DensityOptions {
    int d = 1;
    int samples = 100;
    std::uint64_t seed = 1;
    double radius = 1.0;
    int jobs = 0;  // 0: library default thread count
    AnalysisOptions pipeline{};
};

struct SampleOutcome {
    StabilityCertificate::Overall overall = StabilityCertificate::Overall::Inconclusive;
    Verdict a_prime{}, b_prime{}, c{}, d_prime{};
    bool nonhyperbolic_singularity = false;
    bool near_generic_polycycle = false;  // |r-1| below tolerance while the polycycle exists
    int cycle_count = 0;
    double hyperbolic_margin = 0.0;
    double polycycle_margin = 0.0;
    double cycle_margin = 0.0;

    bool operator==(const SampleOutcome&) const = default;
};

struct DensityStats {
    int n = 0;
    std::uint64_t seed = 0;
    double radius = 0.0;
    int in_pd = 0, not_in_pd = 0, inconclusive = 0;
    int fail_a = 0, fail_b = 0, fail_c = 0, fail_d = 0;
    int nonhyperbolic = 0;
    int near_generic = 0;
    int max_cycles_per_field = 0;
    std::vector<SampleOutcome> outcomes;  // indexed by sample, deterministic

    bool operator==(const DensityStats&) const = default;
};

// uniform sample in the coefficient-metric ball of the given radius
EssField sample_field_in_ball(int d, double radius, SplitMix64& rng);

// Monte-Carlo density probe over the coefficient ball. The parallel kernel
// distributes samples across OpenMP threads with per-sample substreams;
// aggregation is order-independent, so results match the serial reference
// for any job count.
DensityStats density_experiment(const DensityOptions& opt);
// serial reference implementation, kept for testing the parallel kernel
DensityStats density_experiment_serial(const DensityOptions& opt);

// 20 perturbations at coefficient distance rho are all still InPd
bool openness_probe(const EssField& X, const AnalysisOptions& opt, int k = 20, double rho = 1e-4,
                    std::uint64_t seed = 1);

}  // namespace essstab

#endif
