#ifndef PHGB_IO_HPP
#define PHGB_IO_HPP

#include <string>

#include <json.hpp>

#include "phgb/boperator.hpp"
#include "phgb/euclid.hpp"
#include "phgb/formal.hpp"
#include "phgb/mellin.hpp"
#include "phgb/series.hpp"

namespace phgb {

using nlohmann::json;

json to_json(const Cplx& z);
Cplx cplx_from_json(const json& j);

json to_json(const IndexSet& s);
IndexSet index_set_from_json(const json& j);

json to_json(const PhgExpansion& e);
PhgExpansion expansion_from_json(const json& j);

json to_json(const MellinFamily& n);
MellinFamily mellin_from_json(const json& j);

json to_json(const BOperator& p);
BOperator boperator_from_json(const json& j);

json to_json(const MetricSpec& m);
MetricSpec metric_from_json(const json& j);

json to_json(const SolveReport& r);
json to_json(const DivSpectrumReport& r);
json to_json(const SpectrumReport& r);

/// CSV emission of (Re s, k, |coeff|) rows for plotting.
std::string solve_report_csv(const SolveReport& r);
std::string div_spectrum_csv(const DivSpectrumReport& r);
std::string radial_oracle_csv(const RadialOracleResult& r);

/// Parse a JSON document; malformed input raises InputError with the
/// parser's line/column message.
json parse_json(const std::string& text);
json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace phgb

#endif
