#include "homog/report.hpp"

#include <iomanip>
#include <ostream>
#include <sstream>

namespace homog {

std::string format_real(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17) << v;
  return s.str();
}

nlohmann::json to_json(const CheckRecord& record) {
  nlohmann::json j;
  j["check"] = record.check;
  j["params"] = record.params;
  j["statistic"] = record.statistic;
  j["target"] = record.target;
  j["tol"] = record.tol;
  j["pass"] = record.pass;
  j["runtime_ms"] = record.runtime_ms ? nlohmann::json(*record.runtime_ms) : nlohmann::json();
  return j;
}

void write_report(std::ostream& out, std::span<const CheckRecord> records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

void write_summary(std::ostream& out, std::span<const CheckRecord> records,
                   const nlohmann::json& resolved_config) {
  std::size_t passed = 0;
  for (const auto& r : records) {
    if (r.pass) ++passed;
    out << (r.pass ? "PASS " : "FAIL ") << r.check << "  statistic=" << format_real(r.statistic)
        << "  target=" << format_real(r.target) << "  tol=" << format_real(r.tol) << '\n';
  }
  out << passed << "/" << records.size() << " checks passed\n\n";
  out << "resolved config:\n" << resolved_config.dump(2) << '\n';
}

}  // namespace homog
