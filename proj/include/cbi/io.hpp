#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "cbi/measure.hpp"
#include "cbi/params.hpp"

namespace cbi {

using json = nlohmann::json;

// {"atoms":[{"point":[...],"weight":w},...]}
json measure_to_json(const AtomicLevyMeasure& m);
AtomicLevyMeasure measure_from_json(const json& j, Index dim);

// Tagged union:
//   {"rect":[w...]} | {"box":{"lo":[...],"hi":[...]}} | {"ball_complement":r}
// | {"norm_at_least":r} | {"full":true} | {"points":[[...],...]}
// | {"union":[a,b,...]} | {"intersection":[a,b,...]} | {"difference":[a,b]}
// Predicate sets have no serialized form.
json jump_set_to_json(const JumpSet& s);
JumpSet jump_set_from_json(const json& j);

// {"d":d,"c":[...],"beta":[...],"B":[[...]],"nu":{...},"mu":[{...},...]}
json params_to_json(const AdmissibleParams& p);
AdmissibleParams params_from_json(const json& j);

AdmissibleParams load_params_file(const std::string& path);

// Formats a double with 17 significant digits (round-trip exact, diff-stable
// CSV output).
std::string format_full(double v);

}  // namespace cbi
