#ifndef ESSSTAB_PORTRAIT_HPP
#define ESSSTAB_PORTRAIT_HPP

#include <string>

#include "essstab/report.hpp"

namespace essstab {

// Static phase portrait on the Poincare disk: equator circle, the images
// of the four invariant lines, singularity glyphs (squares for saddles),
// separatrix traces and cycle polylines. Output is deterministic for a
// fixed report: fixed float formatting, fixed element order.
std::string render_portrait(const AnalysisReport& rep);

}  // namespace essstab

#endif
