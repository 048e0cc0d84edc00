#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include <json.hpp>

#include "homog/experiment.hpp"

namespace homog {

/// {check, params, statistic, target, tol, pass, runtime_ms}
nlohmann::json to_json(const CheckRecord& record);

/// One compact JSON object per line.
void write_report(std::ostream& out, std::span<const CheckRecord> records);

/// Human-readable summary: one PASS/FAIL line per check, then the resolved
/// configuration.
void write_summary(std::ostream& out, std::span<const CheckRecord> records,
                   const nlohmann::json& resolved_config);

/// 17 significant digits, "." decimal separator.
std::string format_real(double v);

}  // namespace homog
