#ifndef ESSSTAB_REPORT_HPP
#define ESSSTAB_REPORT_HPP

#include <cstdint>
#include <string>

#include <json.hpp>

#include "essstab/certify.hpp"

namespace essstab {

using json = nlohmann::json;

constexpr int kSchemaVersion = 1;

struct AnalysisReport {
    EssField field;
    AnalysisInputs inputs;
    SeparatrixSkeleton skeleton;
    StabilityCertificate certificate;
    AnalysisOptions options;
    std::uint64_t seed = 0;
};

AnalysisReport analyze(const EssField& X, const AnalysisOptions& opt = {});

// ---- JSON forms (stable, versioned) ----
json poly_to_json(const Poly2& p);
Poly2 poly_from_json(const json& j);

json field_to_json(const EssField& X);
EssField field_from_json(const json& j);

json game_to_json(const PayoffGame& g);
PayoffGame game_from_json(const json& j);

json certificate_to_json(const StabilityCertificate& cert, const AnalysisOptions& opt);
json report_to_json(const AnalysisReport& rep);

json density_to_json(const DensityStats& st);
std::string density_to_csv(const DensityStats& st);

}  // namespace essstab

#endif
