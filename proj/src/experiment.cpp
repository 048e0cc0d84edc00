#include "homog/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "homog/besov.hpp"
#include "homog/errors.hpp"
#include "homog/parallel.hpp"
#include "homog/rde.hpp"
#include "homog/report.hpp"
#include "homog/roughpath.hpp"
#include "homog/stats.hpp"

namespace homog {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Schema reading

class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ConfigError((path.empty() ? std::string("<root>") : path) + ": " + what);
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  double real(const std::string& key, double def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_number()) fail(at(key), "expected a number");
    return v.get<double>();
  }
  double real(const std::string& key) {
    require(key);
    return real(key, 0.0);
  }

  std::uint64_t count(const std::string& key, std::uint64_t def) {
    if (!has(key)) return def;
    return as_count(raw(key), at(key));
  }

  bool boolean(const std::string& key, bool def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_boolean()) fail(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    const json& v = raw(key);
    if (!v.is_string()) fail(at(key), "expected a string");
    return v.get<std::string>();
  }

  void require(const std::string& key) const {
    if (!has(key)) fail(at(key), "required key missing");
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(at(it.key()), "unknown key");
    }
  }

  static std::uint64_t as_count(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      if (v.get<std::int64_t>() < 0) fail(path, "expected a nonnegative integer");
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (x >= 0.0 && x == std::floor(x) && x < 9.007199254740992e15) {
        return static_cast<std::uint64_t>(x);
      }
    }
    fail(path, "expected a nonnegative integer");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

const json& array_at(const json& j, const std::string& path) {
  if (!j.is_array()) Obj::fail(path, "expected an array");
  return j;
}

std::string idx(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

// Scalar functions of the slow state, used for h and g entries.
json resolve_scalar_fn(const json& j, const std::string& path, std::size_t d) {
  if (j.is_number()) return json{{"fn", "const"}, {"value", j.get<double>()}};
  Obj o(j, path);
  const std::string fn = o.string("fn", "");
  json r;
  r["fn"] = fn;
  if (fn == "const") {
    r["value"] = o.real("value");
  } else if (fn == "sin" || fn == "cos") {
    r["coord"] = o.count("coord", 0);
    r["freq"] = o.real("freq", 1.0);
    r["amp"] = o.real("amp", 1.0);
    r["phase"] = o.real("phase", 0.0);
  } else if (fn == "linear") {
    r["coord"] = o.count("coord", 0);
    r["slope"] = o.real("slope", 1.0);
    r["offset"] = o.real("offset", 0.0);
  } else {
    Obj::fail(o.at("fn"), "expected one of const, sin, cos, linear");
  }
  if (r.contains("coord") && r["coord"].get<std::size_t>() >= d) {
    Obj::fail(o.at("coord"), "coordinate out of range");
  }
  o.finish();
  return r;
}

json resolve_observable(const json& j, const std::string& path) {
  Obj o(j, path);
  const std::string kind = o.string("kind", "");
  json r;
  r["kind"] = kind;
  if (kind == "cos" || kind == "sin") {
    r["k"] = o.real("k", 1.0);
    r["amp"] = o.real("amp", 1.0);
    r["offset"] = o.real("offset", 0.0);
  } else if (kind == "poly") {
    o.require("coeffs");
    const json& c = array_at(o.raw("coeffs"), o.at("coeffs"));
    json out = json::array();
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!c[i].is_number()) Obj::fail(idx(o.at("coeffs"), i), "expected a number");
      out.push_back(c[i].get<double>());
    }
    r["coeffs"] = out;
  } else if (kind == "const") {
    r["value"] = o.real("value");
  } else if (kind == "sum") {
    o.require("terms");
    const json& t = array_at(o.raw("terms"), o.at("terms"));
    if (t.empty()) Obj::fail(o.at("terms"), "expected at least one term");
    json out = json::array();
    for (std::size_t i = 0; i < t.size(); ++i) {
      out.push_back(resolve_observable(t[i], idx(o.at("terms"), i)));
    }
    r["terms"] = out;
  } else {
    Obj::fail(o.at("kind"), "expected one of cos, sin, poly, const, sum");
  }
  o.finish();
  return r;
}

json resolve_matrix(const json& j, const std::string& path, std::size_t d, std::size_t cols) {
  array_at(j, path);
  if (j.size() != d) Obj::fail(path, "expected " + std::to_string(d) + " rows");
  json out = json::array();
  for (std::size_t i = 0; i < d; ++i) {
    const std::string rp = idx(path, i);
    array_at(j[i], rp);
    if (j[i].size() != cols) Obj::fail(rp, "expected " + std::to_string(cols) + " entries");
    json row = json::array();
    for (std::size_t c = 0; c < cols; ++c) row.push_back(resolve_scalar_fn(j[i][c], idx(rp, c), d));
    out.push_back(row);
  }
  return out;
}

json resolve_observables(const json& j, const std::string& path) {
  array_at(j, path);
  if (j.empty()) Obj::fail(path, "expected at least one observable");
  json out = json::array();
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(resolve_observable(j[i], idx(path, i)));
  return out;
}

json resolve_field(const json& j, std::size_t& d, Vec& xi, bool& center) {
  Obj o(j, "field");
  d = o.count("d", 1);
  if (d == 0) Obj::fail(o.at("d"), "must be >= 1");
  xi.assign(d, 0.0);
  if (o.has("xi")) {
    const json& x = array_at(o.raw("xi"), o.at("xi"));
    if (x.size() != d) Obj::fail(o.at("xi"), "expected " + std::to_string(d) + " entries");
    for (std::size_t i = 0; i < d; ++i) {
      if (!x[i].is_number()) Obj::fail(idx(o.at("xi"), i), "expected a number");
      xi[i] = x[i].get<double>();
    }
  }
  center = o.boolean("center", true);
  o.require("v");
  json r;
  r["d"] = d;
  r["xi"] = xi;
  r["center"] = center;
  r["v"] = resolve_observables(o.raw("v"), o.at("v"));
  const std::size_t m = r["v"].size();
  if (o.has("h")) {
    r["h"] = resolve_matrix(o.raw("h"), o.at("h"), d, m);
  } else {
    if (d != m) Obj::fail(o.at("h"), "required unless d equals the number of observables");
    json h = json::array();
    for (std::size_t i = 0; i < d; ++i) {
      json row = json::array();
      for (std::size_t c = 0; c < m; ++c) row.push_back(json{{"fn", "const"}, {"value", i == c ? 1.0 : 0.0}});
      h.push_back(row);
    }
    r["h"] = h;
  }
  if (o.has("u") != o.has("g")) Obj::fail(o.at(o.has("u") ? "g" : "u"), "g and u go together");
  if (o.has("u")) {
    r["u"] = resolve_observables(o.raw("u"), o.at("u"));
    r["g"] = resolve_matrix(o.raw("g"), o.at("g"), d, r["u"].size());
  }
  o.finish();
  return r;
}

// ---------------------------------------------------------------------------
// Field construction

struct ScalarFn {
  std::string fn;
  std::size_t coord = 0;
  double freq = 1.0, amp = 1.0, phase = 0.0, slope = 1.0, offset = 0.0, value = 0.0;

  explicit ScalarFn(const json& r) : fn(r.at("fn").get<std::string>()) {
    if (fn == "const") {
      value = r.at("value").get<double>();
    } else if (fn == "linear") {
      coord = r.at("coord").get<std::size_t>();
      slope = r.at("slope").get<double>();
      offset = r.at("offset").get<double>();
    } else {
      coord = r.at("coord").get<std::size_t>();
      freq = r.at("freq").get<double>();
      amp = r.at("amp").get<double>();
      phase = r.at("phase").get<double>();
    }
  }

  double eval(std::span<const double> x) const {
    if (fn == "const") return value;
    if (fn == "linear") return slope * x[coord] + offset;
    const double arg = freq * x[coord] + phase;
    return fn == "sin" ? amp * std::sin(arg) : amp * std::cos(arg);
  }

  double deriv(std::span<const double> x, std::size_t k) const {
    if (fn == "const" || k != coord) return 0.0;
    if (fn == "linear") return slope;
    const double arg = freq * x[coord] + phase;
    return fn == "sin" ? amp * freq * std::cos(arg) : -amp * freq * std::sin(arg);
  }
};

Observable build_observable(const json& r) {
  const std::string kind = r.at("kind").get<std::string>();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (kind == "cos" || kind == "sin") {
    const double k = r.at("k").get<double>(), amp = r.at("amp").get<double>(),
                 offset = r.at("offset").get<double>();
    if (kind == "cos") return [=](double y) { return amp * std::cos(two_pi * k * y) + offset; };
    return [=](double y) { return amp * std::sin(two_pi * k * y) + offset; };
  }
  if (kind == "poly") {
    const auto c = r.at("coeffs").get<std::vector<double>>();
    return [c](double y) {
      double s = 0.0;
      for (std::size_t i = c.size(); i-- > 0;) s = s * y + c[i];
      return s;
    };
  }
  if (kind == "const") {
    const double value = r.at("value").get<double>();
    return [value](double) { return value; };
  }
  std::vector<Observable> terms;
  for (const auto& t : r.at("terms")) terms.push_back(build_observable(t));
  return [terms](double y) {
    double s = 0.0;
    for (const auto& f : terms) s += f(y);
    return s;
  };
}

VectorObservable build_observables(const json& r) {
  std::vector<Observable> comps;
  for (const auto& o : r) comps.push_back(build_observable(o));
  return VectorObservable::stack(std::move(comps));
}

struct FnMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<ScalarFn> entries;

  FnMatrix(const json& r) : rows(r.size()), cols(r.empty() ? 0 : r[0].size()) {
    for (const auto& row : r) {
      for (const auto& e : row) entries.emplace_back(e);
    }
  }
};

StateFn matrix_fn(std::shared_ptr<const FnMatrix> M) {
  return [M](std::span<const double> x, std::span<double> out) {
    for (std::size_t c = 0; c < M->entries.size(); ++c) out[c] = M->entries[c].eval(x);
  };
}

}  // namespace

ProductField build_field(const json& spec, std::size_t d) {
  ProductField f;
  f.d = d;
  f.v = build_observables(spec.at("v"));
  f.m = f.v.dim;
  auto H = std::make_shared<const FnMatrix>(spec.at("h"));
  f.h = matrix_fn(H);
  f.dh = [H, d](std::span<const double> x, std::span<double> out) {
    const std::size_t m = H->cols;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t j = 0; j < m; ++j) {
          out[(i * d + k) * m + j] = H->entries[i * m + j].deriv(x, k);
        }
      }
    }
  };
  if (spec.contains("u")) {
    f.u = build_observables(spec.at("u"));
    f.e = f.u.dim;
    f.g = matrix_fn(std::make_shared<const FnMatrix>(spec.at("g")));
  }
  return f;
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {
      "ks-normal", "sde-limit",      "sde-marginals", "sde-sup",
      "coeffs",    "drift-average",  "wip-mean",      "wip-cov",
      "moment-scaling", "consistency", "besov"};
  return names;
}

MapParams ExperimentConfig::map_at(std::size_t n_level) const {
  const double g = gamma + family_c * std::pow(static_cast<double>(n_level), -family_rate);
  return MapParams(g);
}

namespace {

bool is_limit_check(const std::string& name) {
  static const std::set<std::string> limit = {"ks-normal", "sde-limit", "sde-marginals",
                                              "sde-sup",   "wip-mean",  "wip-cov",
                                              "moment-scaling"};
  return limit.count(name) > 0;
}

json resolved_json(const ExperimentConfig& c) {
  json j;
  j["map"] = {{"gamma", c.gamma}, {"family", {{"c", c.family_c}, {"rate", c.family_rate}}}};
  j["measure"] = {{"kind", c.measure.kind == MeasureSpec::Kind::Lebesgue ? "lebesgue" : "invariant"},
                  {"burn_in", c.measure.burn_in}};
  j["field"] = c.field;
  j["n"] = c.n;
  j["samples"] = c.samples;
  j["orbit_length"] = c.orbit_length;
  j["L"] = c.L;
  j["auto_stop"] = c.auto_stop;
  j["q"] = c.q;
  j["p"] = c.p;
  j["moment_samples"] = c.moment_samples;
  j["consistency_samples"] = c.consistency_samples;
  j["em_steps"] = c.em_steps;
  j["seed"] = c.seed;
  j["probes"] = {{"lo", c.probe_lo}, {"hi", c.probe_hi}, {"points", c.probe_points}};
  j["checks"] = c.checks;
  json targets = json::object();
  if (c.target_mean) targets["mean"] = *c.target_mean;
  if (c.target_variance) targets["variance"] = *c.target_variance;
  if (c.expected_B1) targets["B1"] = *c.expected_B1;
  if (c.expected_B2) targets["B2"] = *c.expected_B2;
  j["targets"] = targets;
  j["besov"] = {{"alpha", c.besov.alpha}, {"q", c.besov.q},         {"n", c.besov.n},
                {"paths", c.besov.paths}, {"quadrature", c.besov.quadrature},
                {"pairs", c.besov.pairs}, {"beta", c.besov.beta}, {"source", c.besov.source}};
  const Tolerances& t = c.tol;
  j["tolerances"] = {{"ks", t.ks},
                     {"ks_sde", t.ks_sde},
                     {"ks_sup", t.ks_sup},
                     {"sigmas", t.sigmas},
                     {"moment_factor", t.moment_factor},
                     {"centering", t.centering},
                     {"coeffs", t.coeffs},
                     {"consistency", t.consistency},
                     {"besov_spread", t.besov_spread},
                     {"drift", t.drift}};
  j["outputs"] = {{"dir", c.out_dir}, {"paths", c.path_count}};
  return j;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig c;
  Obj root(doc, "");

  root.require("map");
  {
    Obj m(root.raw("map"), "map");
    c.gamma = m.real("gamma");
    if (m.has("family")) {
      Obj f(m.raw("family"), "map.family");
      c.family_c = f.real("c", 0.0);
      c.family_rate = f.real("rate", 1.0);
      if (!(c.family_rate > 0.0)) Obj::fail(f.at("rate"), "must be > 0");
      f.finish();
    }
    m.finish();
  }
  if (root.has("measure")) {
    Obj m(root.raw("measure"), "measure");
    const std::string kind = m.string("kind", "lebesgue");
    const std::size_t burn = m.count("burn_in", MeasureSpec::kDefaultBurnIn);
    if (kind == "lebesgue") {
      c.measure = MeasureSpec{MeasureSpec::Kind::Lebesgue, burn};
    } else if (kind == "invariant") {
      c.measure = MeasureSpec::invariant(burn);
    } else {
      Obj::fail(m.at("kind"), "expected lebesgue or invariant");
    }
    m.finish();
  }
  root.require("field");
  c.field = resolve_field(root.raw("field"), c.d, c.xi, c.center);

  root.require("n");
  {
    const json& n = root.raw("n");
    if (n.is_array()) {
      if (n.empty()) Obj::fail("n", "expected at least one level");
      for (std::size_t i = 0; i < n.size(); ++i) c.n.push_back(Obj::as_count(n[i], idx("n", i)));
    } else {
      c.n.push_back(Obj::as_count(n, "n"));
    }
    for (std::size_t i = 0; i < c.n.size(); ++i) {
      if (c.n[i] == 0) Obj::fail(idx("n", i), "must be >= 1");
      if (c.n[i] > kMaxDensePathCells) Obj::fail(idx("n", i), "must be <= 2^24");
    }
  }
  c.samples = root.count("samples", c.samples);
  c.orbit_length = root.count("orbit_length", c.orbit_length);
  {
    if (root.has("L")) {
      const json& L = root.raw("L");
      if (!L.is_number_integer()) Obj::fail("L", "expected an integer");
      c.L = L.get<std::int64_t>();
      if (c.L < 0) Obj::fail("L", "must be >= 0");
    }
  }
  c.auto_stop = root.boolean("auto_stop", c.auto_stop);
  c.q = root.real("q", c.q);
  c.p = root.real("p", c.p);
  c.moment_samples = root.count("moment_samples", c.samples);
  c.consistency_samples = root.count("consistency_samples", c.consistency_samples);
  c.em_steps = root.count("em_steps", c.em_steps);
  c.seed = root.count("seed", c.seed);
  if (root.has("probes")) {
    Obj p(root.raw("probes"), "probes");
    c.probe_lo = p.real("lo", c.probe_lo);
    c.probe_hi = p.real("hi", c.probe_hi);
    c.probe_points = p.count("points", c.probe_points);
    p.finish();
  }
  if (root.has("checks")) {
    const json& ch = array_at(root.raw("checks"), "checks");
    for (std::size_t i = 0; i < ch.size(); ++i) {
      if (!ch[i].is_string()) Obj::fail(idx("checks", i), "expected a string");
      const auto name = ch[i].get<std::string>();
      const auto& known = known_checks();
      if (std::find(known.begin(), known.end(), name) == known.end()) {
        Obj::fail(idx("checks", i), "unknown check '" + name + "'");
      }
      c.checks.push_back(name);
    }
  }
  if (root.has("targets")) {
    Obj t(root.raw("targets"), "targets");
    if (t.has("mean")) c.target_mean = t.real("mean");
    if (t.has("variance")) c.target_variance = t.real("variance");
    if (t.has("B1")) c.expected_B1 = t.real("B1");
    if (t.has("B2")) c.expected_B2 = t.real("B2");
    t.finish();
  }
  if (root.has("besov")) {
    Obj b(root.raw("besov"), "besov");
    c.besov.alpha = b.real("alpha", c.besov.alpha);
    c.besov.q = b.real("q", c.besov.q);
    c.besov.n = b.count("n", c.besov.n);
    c.besov.paths = b.count("paths", c.besov.paths);
    c.besov.quadrature = b.count("quadrature", c.besov.quadrature);
    c.besov.pairs = b.count("pairs", c.besov.pairs);
    c.besov.beta = b.real("beta", c.besov.beta);
    c.besov.source = b.string("source", c.besov.source);
    if (c.besov.source != "lift" && c.besov.source != "brownian") {
      Obj::fail(b.at("source"), "expected lift or brownian");
    }
    b.finish();
  }
  if (root.has("tolerances")) {
    Obj t(root.raw("tolerances"), "tolerances");
    Tolerances& x = c.tol;
    x.ks = t.real("ks", x.ks);
    x.ks_sde = t.real("ks_sde", x.ks_sde);
    x.ks_sup = t.real("ks_sup", x.ks_sup);
    x.sigmas = t.real("sigmas", x.sigmas);
    x.moment_factor = t.real("moment_factor", x.moment_factor);
    x.centering = t.real("centering", x.centering);
    x.coeffs = t.real("coeffs", x.coeffs);
    x.consistency = t.real("consistency", x.consistency);
    x.besov_spread = t.real("besov_spread", x.besov_spread);
    x.drift = t.real("drift", x.drift);
    t.finish();
  }
  if (root.has("outputs")) {
    Obj o(root.raw("outputs"), "outputs");
    c.out_dir = o.string("dir", c.out_dir);
    c.path_count = o.count("paths", c.path_count);
    o.finish();
  }
  root.finish();

  // Ranges.
  auto range = [](bool ok, const std::string& path, const std::string& what) {
    if (!ok) Obj::fail(path, what);
  };
  range(c.gamma >= 0.0 && c.gamma < 1.0, "map.gamma", "must lie in [0, 1)");
  for (std::size_t i = 0; i < c.n.size(); ++i) {
    const double g = c.gamma + c.family_c * std::pow(static_cast<double>(c.n[i]), -c.family_rate);
    range(g >= 0.0 && g < 1.0, "map.family", "gamma_n leaves [0, 1) at n = " + std::to_string(c.n[i]));
  }
  const bool limit = std::any_of(c.checks.begin(), c.checks.end(), is_limit_check);
  if (limit) {
    range(c.gamma < 0.5, "map.gamma", "must be < 0.5 for SDE-limit checks");
    for (std::size_t level : c.n) {
      range(c.map_at(level).admits_clt(), "map.family",
            "gamma_n must be < 0.5 for SDE-limit checks");
    }
  }
  range(c.samples >= 1, "samples", "must be >= 1");
  range(c.orbit_length >= 1, "orbit_length", "must be >= 1");
  if (c.center) {
    range(c.orbit_length >= CenterOptions{}.min_orbit_length, "orbit_length",
          "must be >= 100000 when field.center is true");
  }
  range(c.p > 2.0 && c.p < 3.0, "p", "must lie in (2, 3)");
  range(c.q > 1.0, "q", "must be > 1");
  range(c.besov.q > 1.0, "besov.q", "must be > 1");
  range(c.besov.alpha > 1.0 / c.besov.q && c.besov.alpha < 1.0, "besov.alpha",
        "must lie in (1/besov.q, 1)");
  range(c.besov.quadrature >= 64, "besov.quadrature", "must be >= 64");
  range(c.besov.n >= 1, "besov.n", "must be >= 1");
  range(c.besov.paths >= 1, "besov.paths", "must be >= 1");
  range(c.besov.beta > 0.0 && c.besov.beta <= 0.5, "besov.beta", "must lie in (0, 1/2]");
  range(c.em_steps >= 1, "em_steps", "must be >= 1");
  range(c.moment_samples >= 1, "moment_samples", "must be >= 1");
  range(c.probe_points >= 1, "probes.points", "must be >= 1");
  range(c.probe_points == 1 || c.probe_lo < c.probe_hi, "probes", "need lo < hi");
  if (std::find(c.checks.begin(), c.checks.end(), "moment-scaling") != c.checks.end()) {
    range(c.n.size() >= 2, "n", "moment-scaling needs at least two levels");
  }
  if (c.target_variance) range(*c.target_variance >= 0.0, "targets.variance", "must be >= 0");

  c.resolved = resolved_json(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(doc);
}

bool RunResult::all_pass() const {
  return std::all_of(records.begin(), records.end(), [](const CheckRecord& r) { return r.pass; });
}

PathEnsemble fast_slow_ensemble(const ProductField& field, std::span<const double> xi,
                                const MapParams& params, const MeasureSpec& measure,
                                std::size_t n, std::size_t samples, std::uint64_t seed,
                                std::size_t threads, std::size_t keep_paths) {
  const std::size_t d = field.d;
  if (xi.size() != d) throw ArgumentError("fast_slow_ensemble: xi dimension mismatch");
  PathEnsemble ens(d, samples);
  keep_paths = std::min(keep_paths, samples);
  if (keep_paths > 0) {
    ens.path_points = n + 1;
    ens.paths.resize(keep_paths * (n + 1) * d);
  }
  const SlowField slow = field.as_slow_field();
  parallel_for(samples, threads, [&](std::size_t s) {
    OrbitCursor cursor(measure, params,
                       RngStream::for_task(seed, StreamDomain::InitialCondition, s));
    PathRecorder rec(n, std::span<double>(&ens.marginals[s * kMarginalTimes * d],
                                          kMarginalTimes * d));
    double* path = s < keep_paths ? &ens.paths[s * (n + 1) * d] : nullptr;
    stream_fast_slow(slow, xi, cursor, n, [&](std::size_t k, std::span<const double> x) {
      rec.visit(k, x);
      if (path != nullptr) std::copy(x.begin(), x.end(), path + k * d);
    });
    ens.sup[s] = rec.sup();
  });
  return ens;
}

namespace {

// ---------------------------------------------------------------------------
// Runner

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

class Runner {
 public:
  Runner(ExperimentConfig config, const RunOptions& options)
      : cfg_(std::move(config)), opt_(options) {
    if (opt_.seed_override) {
      cfg_.seed = *opt_.seed_override;
      cfg_.resolved["seed"] = cfg_.seed;
    }
    raw_ = build_field(cfg_.field, cfg_.d);
    out_ = opt_.out_dir ? *opt_.out_dir : cfg_.out_dir;
  }

  RunResult run(Stage stage) {
    RunResult result;
    if (stage == Stage::Besov) {
      run_check("besov", result);
    } else {
      write_paths();
      if (stage >= Stage::Lift) write_lift();
      if (stage >= Stage::Coeffs) write_coeffs();
      if (stage == Stage::Compare) {
        for (const char* name : {"ks-normal", "sde-limit", "sde-marginals", "sde-sup"}) {
          if (selected(name)) run_check(name, result);
        }
      } else if (stage == Stage::Checks) {
        for (const auto& name : known_checks()) {
          if (selected(name)) run_check(name, result);
        }
      }
    }
    if (opt_.write_files) {
      std::ofstream rep = open("report.jsonl");
      write_report(rep, result.records);
      std::ofstream sum = open("summary.txt");
      write_summary(sum, result.records, cfg_.resolved);
    }
    return result;
  }

 private:
  bool selected(const std::string& name) const {
    if (std::find(cfg_.checks.begin(), cfg_.checks.end(), name) == cfg_.checks.end()) {
      return false;
    }
    if (opt_.check_filter.empty()) return true;
    return std::find(opt_.check_filter.begin(), opt_.check_filter.end(), name) !=
           opt_.check_filter.end();
  }

  std::ofstream open(const std::string& file) {
    std::filesystem::create_directories(out_);
    std::ofstream out(std::filesystem::path(out_) / file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (std::filesystem::path(out_) / file).string());
    out.imbue(std::locale::classic());
    return out;
  }

  std::size_t n0() const { return cfg_.n.front(); }

  const Orbit& reference() {
    if (!reference_) {
      reference_ = sample_orbit(MeasureSpec::lebesgue(), cfg_.limit_map(), cfg_.orbit_length,
                                RngStream::for_task(cfg_.seed, StreamDomain::Reference, 0));
    }
    return *reference_;
  }

  const ProductField& field() {
    if (!field_) field_ = cfg_.center ? center_product(raw_, reference()) : raw_;
    return *field_;
  }

  const PathEnsemble& ensemble() {
    if (!ensemble_) {
      ensemble_ = fast_slow_ensemble(field(), cfg_.xi, cfg_.map_at(n0()), cfg_.measure, n0(),
                                     cfg_.samples, cfg_.seed, opt_.threads, cfg_.path_count);
    }
    return *ensemble_;
  }

  const LiftEnsemble& lifts() {
    if (!lifts_) {
      const std::size_t m = field().m, n = n0();
      LiftEnsemble ens(n, m, cfg_.samples);
      const MapParams params = cfg_.map_at(n);
      parallel_for(cfg_.samples, opt_.threads, [&](std::size_t s) {
        OrbitCursor cursor(cfg_.measure, params,
                           RngStream::for_task(cfg_.seed, StreamDomain::InitialCondition, s));
        const Increment inc = lift_terminal(field().v, cursor, n);
        std::copy(inc.x.begin(), inc.x.end(), ens.x.begin() + s * m);
        std::copy(inc.xx.begin(), inc.xx.end(), ens.xx.begin() + s * m * m);
      });
      lifts_ = std::move(ens);
    }
    return *lifts_;
  }

  B2Options b2_options() const {
    B2Options o;
    o.L = cfg_.L;
    o.auto_stop = cfg_.auto_stop;
    return o;
  }

  const ObservableCovariances& covariances() {
    if (!cov_) {
      provenance_ = std::make_shared<CoefficientProvenance>();
      provenance_->mode = "product";
      provenance_->orbit_length = cfg_.orbit_length;
      provenance_->truncation = cfg_.L;
      provenance_->auto_stop = cfg_.auto_stop;
      cov_ = observable_covariances(field().v, reference(), b2_options(), provenance_.get());
    }
    return *cov_;
  }

  const CoefficientSet& coefficients() {
    if (!coeffs_) {
      const auto& cov = covariances();
      coeffs_ = assemble_product_coefficients(field(), product_abar(field(), reference()), cov,
                                              provenance_);
    }
    return *coeffs_;
  }

  const PathEnsemble& em() {
    if (!em_) {
      EulerMaruyamaOptions o;
      o.steps = cfg_.em_steps;
      o.samples = cfg_.samples;
      o.seed = cfg_.seed;
      o.threads = opt_.threads;
      em_ = euler_maruyama(coefficients(), cfg_.xi, o);
    }
    return *em_;
  }

  TensorGrid probe_grid() const {
    return TensorGrid::uniform(cfg_.d, cfg_.probe_lo, cfg_.probe_hi, cfg_.probe_points);
  }

  void write_paths() {
    if (!opt_.write_files) return;
    const PathEnsemble& ens = ensemble();
    std::ofstream out = open("paths.csv");
    out << "sample,k,t";
    for (std::size_t i = 0; i < ens.dim; ++i) out << ",x" << i;
    out << "\r\n";
    const std::size_t keep = ens.path_points == 0 ? 0 : ens.paths.size() / (ens.path_points * ens.dim);
    const std::size_t n = n0();
    for (std::size_t s = 0; s < keep; ++s) {
      for (std::size_t k = 0; k <= n; ++k) {
        out << s << ',' << k << ',' << format_real(static_cast<double>(k) / n);
        for (std::size_t i = 0; i < ens.dim; ++i) {
          out << ',' << format_real(ens.paths[(s * (n + 1) + k) * ens.dim + i]);
        }
        out << "\r\n";
      }
    }
  }

  void write_lift() {
    if (!opt_.write_files) return;
    const std::size_t n = n0(), m = field().m;
    OrbitCursor cursor(cfg_.measure, cfg_.map_at(n),
                       RngStream::for_task(cfg_.seed, StreamDomain::InitialCondition, 0));
    const GridRoughPath rp = lift_orbit(field().v, cursor, n);
    std::ofstream out = open("lift.csv");
    out << "k,t";
    for (std::size_t a = 0; a < m; ++a) out << ",X" << a;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) out << ",M" << a << b;
    }
    out << "\r\n";
    for (std::size_t k = 0; k <= n; ++k) {
      out << k << ',' << format_real(static_cast<double>(k) / n);
      for (double v : rp.X(k)) out << ',' << format_real(v);
      for (double v : rp.M(k)) out << ',' << format_real(v);
      out << "\r\n";
    }
  }

  void write_coeffs() {
    const CoefficientSet& set = coefficients();
    if (!opt_.write_files) return;
    std::ofstream out = open("coeffs.csv");
    write_coefficients_csv(out, set, probe_grid());
  }

  json base_params(const std::string& name) const {
    json p;
    p["n"] = n0();
    p["samples"] = cfg_.samples;
    p["seed"] = cfg_.seed;
    p["check"] = name;
    return p;
  }

  void run_check(const std::string& name, RunResult& result) {
    const auto start = std::chrono::steady_clock::now();
    CheckRecord rec;
    rec.check = name;
    rec.params = base_params(name);
    try {
      dispatch(name, rec);
    } catch (const NumericError& e) {
      throw CheckError(name, e.what());
    } catch (const DomainError& e) {
      throw CheckError(name, e.what());
    }
    rec.params.erase("check");
    rec.params["config"] = cfg_.resolved;
    if (opt_.timing) {
      rec.runtime_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    }
    result.records.push_back(std::move(rec));
  }

  void dispatch(const std::string& name, CheckRecord& rec) {
    if (name == "ks-normal") return ks_normal(rec);
    if (name == "sde-limit") return sde_limit(rec);
    if (name == "sde-marginals") return sde_marginals(rec);
    if (name == "sde-sup") return sde_sup(rec);
    if (name == "coeffs") return coeffs_check(rec);
    if (name == "drift-average") return drift_average(rec);
    if (name == "wip-mean") return wip_mean(rec);
    if (name == "wip-cov") return wip_cov(rec);
    if (name == "moment-scaling") return moment_scaling(rec);
    if (name == "consistency") return consistency(rec);
    if (name == "besov") return besov(rec);
    throw ConfigError("unknown check '" + name + "'");
  }

  void ks_normal(CheckRecord& rec) {
    const PathEnsemble& ens = ensemble();
    const double mean = cfg_.xi[0] + cfg_.target_mean.value_or(0.0);
    const double var =
        cfg_.target_variance ? *cfg_.target_variance : coefficients().Sigma_at(cfg_.xi)[0];
    const auto x = ens.column(kMarginalTimes - 1, 0);
    rec.statistic = ks_distance(x, [&](double t) { return normal_cdf(t, mean, var); });
    rec.target = 0.0;
    rec.tol = cfg_.tol.ks;
    rec.pass = rec.statistic < rec.tol;
    rec.params["mean"] = mean;
    rec.params["variance"] = var;
    rec.params["variance_source"] = cfg_.target_variance ? "config" : "estimated";
  }

  double ks_columns(std::size_t slot) {
    double worst = 0.0;
    for (std::size_t c = 0; c < cfg_.d; ++c) {
      worst = std::max(worst, ks_distance(ensemble().column(slot, c), em().column(slot, c)));
    }
    return worst;
  }

  void sde_limit(CheckRecord& rec) {
    rec.statistic = ks_columns(kMarginalTimes - 1);
    rec.tol = cfg_.tol.ks_sde;
    rec.pass = rec.statistic < rec.tol;
    rec.params["em_steps"] = cfg_.em_steps;
    rec.params["t"] = 1.0;
  }

  void sde_marginals(CheckRecord& rec) {
    json per = json::array();
    double worst = 0.0;
    for (std::size_t slot = 0; slot + 1 < kMarginalTimes; ++slot) {
      const double ks = ks_columns(slot);
      per.push_back(ks);
      worst = std::max(worst, ks);
    }
    rec.statistic = worst;
    rec.tol = cfg_.tol.ks_sde;
    rec.pass = rec.statistic < rec.tol;
    rec.params["em_steps"] = cfg_.em_steps;
    rec.params["times"] = {0.25, 0.5, 0.75};
    rec.params["ks"] = per;
  }

  void sde_sup(CheckRecord& rec) {
    rec.statistic = ks_distance(ensemble().sup, em().sup);
    rec.tol = cfg_.tol.ks_sup;
    rec.pass = rec.statistic < rec.tol;
    rec.params["em_steps"] = cfg_.em_steps;
    rec.params["functional"] = "sup_t |x(t) - x(0)|";
  }

  void coeffs_check(CheckRecord& rec) {
    const auto& cov = covariances();
    coefficients();
    const CoefficientProvenance& prov = *provenance_;
    rec.params["B1"] = cov.B1(0, 0);
    rec.params["B2"] = cov.B2(0, 0);
    rec.params["orbit_length"] = prov.orbit_length;
    rec.params["L"] = prov.truncation;
    rec.params["terms_used"] = prov.terms_used;
    rec.params["tail"] = prov.tail;
    if (cfg_.expected_B1 || cfg_.expected_B2) {
      double err = 0.0;
      if (cfg_.expected_B1) err = std::max(err, std::abs(cov.B1(0, 0) - *cfg_.expected_B1));
      if (cfg_.expected_B2) err = std::max(err, std::abs(cov.B2(0, 0) - *cfg_.expected_B2));
      rec.statistic = err;
      rec.tol = cfg_.tol.coeffs;
      rec.params["statistic"] = "max |B - expected|";
    } else {
      // Centering residual of the centered observable on an independent orbit.
      const Orbit fresh = sample_orbit(MeasureSpec::lebesgue(), cfg_.limit_map(), cfg_.orbit_length,
                                       RngStream::for_task(cfg_.seed, StreamDomain::Reference, 1));
      const Vec mean = birkhoff_mean(field().v, fresh);
      double worst = 0.0;
      for (double v : mean) worst = std::max(worst, std::abs(v));
      rec.statistic = worst;
      rec.tol = cfg_.tol.centering;
      rec.params["statistic"] = "centering residual";
    }
    rec.target = 0.0;
    rec.pass = rec.statistic <= rec.tol;
  }

  void drift_average(CheckRecord& rec) {
    rec.tol = cfg_.tol.drift;
    rec.target = 0.0;
    if (field().e == 0) {
      rec.statistic = 0.0;
      rec.pass = true;
      rec.params["note"] = "no drift configured";
      return;
    }
    const Orbit fresh = sample_orbit(MeasureSpec::lebesgue(), cfg_.limit_map(), cfg_.orbit_length,
                                     RngStream::for_task(cfg_.seed, StreamDomain::Reference, 2));
    rec.statistic = drift_average_deviation(field().as_slow_field(), cfg_.xi, fresh,
                                            cfg_.orbit_length, product_abar(field(), reference()));
    rec.pass = rec.statistic <= rec.tol;
    rec.params["orbit_length"] = cfg_.orbit_length;
  }

  void wip_mean(CheckRecord& rec) {
    const double target = cfg_.expected_B2.value_or(covariances().B2(0, 0));
    const MomentCheck mc = level2_mean_check(lifts(), target);
    rec.statistic = mc.statistic;
    rec.target = mc.target;
    rec.tol = cfg_.tol.sigmas * mc.stderr_;
    rec.pass = mc.within(cfg_.tol.sigmas);
    rec.params["stderr"] = mc.stderr_;
    rec.params["z"] = mc.z;
    rec.params["batches"] = kDefaultBatches;
  }

  void wip_cov(CheckRecord& rec) {
    const double B1 = cfg_.expected_B1.value_or(covariances().B1(0, 0));
    const double B2 = cfg_.expected_B2.value_or(covariances().B2(0, 0));
    rec.target = B1 + 2.0 * B2;
    try {
      const MomentCheck mc = covariance_check(lifts(), B1, B2);
      rec.statistic = mc.statistic;
      rec.tol = cfg_.tol.sigmas * mc.stderr_;
      rec.pass = mc.within(cfg_.tol.sigmas);
      rec.params["stderr"] = mc.stderr_;
      rec.params["z"] = mc.z;
    } catch (const DomainError& e) {
      rec.statistic = std::nan("");
      rec.pass = false;
      rec.params["note"] = e.what();
    }
    rec.params["batches"] = kDefaultBatches;
  }

  void moment_scaling(CheckRecord& rec) {
    json maxima = json::array(), maxima2 = json::array();
    double lo = INFINITY, hi = 0.0;
    constexpr std::size_t kChunk = 16;
    for (std::size_t n : cfg_.n) {
      MomentScalingAccumulator acc(n, cfg_.q);
      const MapParams params = cfg_.map_at(n);
      for (std::size_t base = 0; base < cfg_.moment_samples; base += kChunk) {
        const std::size_t count = std::min(kChunk, cfg_.moment_samples - base);
        std::vector<std::optional<GridRoughPath>> chunk(count);
        parallel_for(count, opt_.threads, [&](std::size_t i) {
          OrbitCursor cursor(cfg_.measure, params,
                             RngStream::for_task(cfg_.seed, StreamDomain::InitialCondition, base + i));
          chunk[i] = lift_orbit(field().v, cursor, n);
        });
        for (const auto& lift : chunk) acc.add(*lift);
      }
      const MomentScalingReport rep = acc.report();
      maxima.push_back(rep.max_level1);
      maxima2.push_back(rep.max_level2);
      lo = std::min(lo, rep.max_level1);
      hi = std::max(hi, rep.max_level1);
    }
    rec.statistic = lo > 0.0 ? hi / lo : (hi == 0.0 ? 1.0 : INFINITY);
    rec.target = 1.0;
    rec.tol = cfg_.tol.moment_factor;
    rec.pass = rec.statistic < rec.tol;
    rec.params["levels"] = cfg_.n;
    rec.params["q"] = cfg_.q;
    rec.params["moment_samples"] = cfg_.moment_samples;
    rec.params["max_level1"] = maxima;
    rec.params["max_level2"] = maxima2;
  }

  void consistency(CheckRecord& rec) {
    const std::size_t n = n0();
    const ProductField& f = field();
    const SlowField slow = f.as_slow_field();
    const VectorFieldPair vf = product_vector_fields(f);
    double worst = 0.0;
    double pvar_norm = 0.0;
    for (std::size_t s = 0; s < cfg_.consistency_samples; ++s) {
      const Orbit orbit = sample_orbit(cfg_.measure, cfg_.map_at(n), n,
                                       RngStream::for_task(cfg_.seed, StreamDomain::InitialCondition, s));
      const CadlagGridPath path = run_fast_slow(slow, cfg_.xi, orbit, n);
      const GridRoughPath rp = lift_orbit(f.v, orbit, n);
      std::optional<CadlagGridPath> V;
      if (f.e > 0) V = drift_driver(f.u, orbit, n);
      const ControlledOutput sol = solve_rde(vf, V ? &*V : nullptr, rp, cfg_.xi);
      double diff = 0.0, scale = 0.0;
      for (std::size_t k = 0; k <= n; ++k) {
        const auto a = path.value(k), b = sol.path().value(k);
        double r2 = 0.0;
        for (std::size_t i = 0; i < cfg_.d; ++i) {
          diff = std::max(diff, std::abs(a[i] - b[i]));
          r2 += a[i] * a[i];
        }
        scale = std::max(scale, std::sqrt(r2));
      }
      worst = std::max(worst, diff / (1.0 + scale));
      if (s == 0) pvar_norm = homogeneous_norm(rp, cfg_.p);
    }
    rec.statistic = worst;
    rec.target = 0.0;
    rec.tol = cfg_.tol.consistency;
    rec.pass = rec.statistic <= rec.tol;
    rec.params["consistency_samples"] = cfg_.consistency_samples;
    rec.params["p"] = cfg_.p;
    rec.params["homogeneous_norm_sample0"] = pvar_norm;
  }

  void besov(CheckRecord& rec) {
    const BesovConfig& b = cfg_.besov;
    std::vector<double> var(b.paths), hol(b.paths), l1(b.paths), l2(b.paths);
    BesovOptions opts;
    opts.alpha = b.alpha;
    opts.q = b.q;
    opts.quadrature = b.quadrature;
    parallel_for(b.paths, opt_.threads, [&](std::size_t s) {
      std::optional<GridRoughPath> rp;
      if (b.source == "brownian") {
        RngStream rng = RngStream::for_task(cfg_.seed, StreamDomain::Synthetic, s);
        const std::size_t m = field().m;
        std::vector<double> steps(b.n * m);
        const double sd = 1.0 / std::sqrt(static_cast<double>(b.n));
        for (auto& x : steps) x = sd * rng.normal();
        rp = lift_steps(steps, m);
      } else {
        OrbitCursor cursor(cfg_.measure, cfg_.map_at(b.n),
                           RngStream::for_task(cfg_.seed, StreamDomain::InitialCondition, s));
        rp = lift_orbit(field().v, cursor, b.n);
      }
      const ContinuousRoughPath crp(std::move(*rp));
      const EmbeddingRatios r = embedding_ratios(crp, opts);
      var[s] = r.var_ratio;
      hol[s] = r.holder_ratio;
      RngStream pairs = RngStream::for_task(cfg_.seed, StreamDomain::Synthetic, (1ULL << 32) + s);
      const ContPathBounds cb = cont_path_bounds(crp, b.beta, b.pairs, pairs);
      l1[s] = cb.level1_ratio;
      l2[s] = cb.level2_ratio;
    });
    auto spread = [](const std::vector<double>& v) {
      const double med = median(v);
      const double mx = *std::max_element(v.begin(), v.end());
      return med > 0.0 ? mx / med : (mx == 0.0 ? 1.0 : INFINITY);
    };
    const double sv = spread(var), sh = spread(hol);
    const double b1 = *std::max_element(l1.begin(), l1.end());
    const double b2 = *std::max_element(l2.begin(), l2.end());
    const bool finite = std::all_of(var.begin(), var.end(), [](double x) { return std::isfinite(x); }) &&
                        std::all_of(hol.begin(), hol.end(), [](double x) { return std::isfinite(x); });
    const bool bounds = b1 <= 1.0 + 1e-12 && b2 <= 1.0 + 1e-12;
    rec.statistic = std::max(sv, sh);
    rec.target = 1.0;
    rec.tol = cfg_.tol.besov_spread;
    rec.pass = finite && bounds && rec.statistic <= rec.tol;
    rec.params["n"] = b.n;
    rec.params["samples"] = b.paths;
    rec.params["source"] = b.source;
    rec.params["alpha"] = b.alpha;
    rec.params["q"] = b.q;
    rec.params["quadrature"] = b.quadrature;
    rec.params["var_ratio_median"] = median(var);
    rec.params["var_ratio_spread"] = sv;
    rec.params["holder_ratio_median"] = median(hol);
    rec.params["holder_ratio_spread"] = sh;
    rec.params["cont_bound_level1_max"] = b1;
    rec.params["cont_bound_level2_max"] = b2;
    rec.params["pairs"] = b.pairs;
  }

  ExperimentConfig cfg_;
  RunOptions opt_;
  ProductField raw_;
  std::string out_;
  std::optional<Orbit> reference_;
  std::optional<ProductField> field_;
  std::optional<PathEnsemble> ensemble_;
  std::optional<LiftEnsemble> lifts_;
  std::optional<ObservableCovariances> cov_;
  std::shared_ptr<CoefficientProvenance> provenance_;
  std::optional<CoefficientSet> coeffs_;
  std::optional<PathEnsemble> em_;
};

}  // namespace

RunResult run_experiment(ExperimentConfig config, Stage stage, const RunOptions& options) {
  for (const auto& name : options.check_filter) {
    const auto& known = known_checks();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw ConfigError("--check: unknown check '" + name + "'");
    }
  }
  Runner runner(std::move(config), options);
  return runner.run(stage);
}

}  // namespace homog
