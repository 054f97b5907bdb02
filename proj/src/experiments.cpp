#include "dimvar/experiments.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "dimvar/error.hpp"
#include "dimvar/grid.hpp"
#include "dimvar/variation.hpp"

namespace dimvar {

using cd = std::complex<double>;
using Params = std::vector<std::pair<std::string, std::string>>;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  if (s == "inf" || s == "infinity" || s == "Inf") return kInf;
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    require(pos == s.size(), "");
    return v;
  } catch (...) {
    throw DomainError("config: " + what + " is not a number: '" + s + "'");
  }
}

long to_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    require(pos == s.size(), "");
    return v;
  } catch (...) {
    throw DomainError("config: " + what + " is not an integer: '" + s + "'");
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------------------
// Config

Config Config::parse(const std::string& text) {
  boost::property_tree::ptree pt;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw DomainError(std::string("config: ") + e.what());
  }
  Config c;
  for (const auto& [sec, body] : pt) {
    require(!body.empty() || body.data().empty(), "config: key '" + sec + "' outside any section");
    auto& dst = c.data_[sec];
    for (const auto& [key, v] : body) dst[key] = trim(v.data());
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), "config: cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto it = data_.find(section);
  return it != data_.end() && it->second.count(key) > 0;
}

std::string Config::str(const std::string& section, const std::string& key, const std::string& fallback) const {
  return has(section, key) ? data_.at(section).at(key) : fallback;
}

double Config::number(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? to_double(str(section, key, ""), section + "." + key) : fallback;
}

long Config::integer(const std::string& section, const std::string& key, long fallback) const {
  return has(section, key) ? to_long(str(section, key, ""), section + "." + key) : fallback;
}

bool Config::flag(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = str(section, key, "");
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw DomainError("config: " + section + "." + key + " must be true or false");
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key,
                                    std::vector<double> fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<double> out;
  for (const auto& w : split(str(section, key, ""), ',')) out.push_back(to_double(w, section + "." + key));
  require(!out.empty(), "config: " + section + "." + key + " is empty");
  return out;
}

std::vector<int> Config::integers(const std::string& section, const std::string& key,
                                  std::vector<int> fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<int> out;
  for (const auto& w : split(str(section, key, ""), ',')) {
    const auto dots = w.find("..");
    if (dots == std::string::npos) {
      out.push_back(int(to_long(w, section + "." + key)));
    } else {
      const long a = to_long(trim(w.substr(0, dots)), section + "." + key);
      const long b = to_long(trim(w.substr(dots + 2)), section + "." + key);
      require(a <= b && b - a <= 100000, "config: bad range in " + section + "." + key);
      for (long v = a; v <= b; ++v) out.push_back(int(v));
    }
  }
  require(!out.empty(), "config: " + section + "." + key + " is empty");
  return out;
}

std::vector<std::string> Config::words(const std::string& section, const std::string& key,
                                       std::vector<std::string> fallback) const {
  if (!has(section, key)) return fallback;
  auto out = split(str(section, key, ""), ',');
  require(!out.empty(), "config: " + section + "." + key + " is empty");
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  data_[section][key] = value;
}

void Config::check_schema(const std::map<std::string, std::vector<std::string>>& allowed) const {
  for (const auto& [sec, kv] : data_) {
    auto it = allowed.find(sec);
    require(it != allowed.end(), "config: unknown section [" + sec + "]");
    for (const auto& [key, v] : kv)
      require(std::find(it->second.begin(), it->second.end(), key) != it->second.end(),
              "config: unknown key '" + key + "' in [" + sec + "]");
  }
}

const std::map<std::string, std::vector<std::string>>& config_schema(const std::string& command) {
  static const std::vector<std::string> run = {"seed", "out", "format", "timings"};
  static const std::map<std::string, std::map<std::string, std::vector<std::string>>> schemas = {
      {"sweep",
       {{"run", run},
        {"sweep",
         {"kind", "dims", "mode_dims", "bodies", "families", "p", "r", "trials", "L", "n_per_axis", "spacing",
          "band", "max_points", "mc_samples"}}}},
      {"certify-multiplier",
       {{"run", run},
        {"certify", {"bodies", "dims", "points", "xi_min", "xi_max", "minsum_points", "n_range", "j_range"}},
        {"decay", {"body", "d", "eps", "l_range", "n", "xi_norm", "j_range", "j_level"}}}},
      {"transfer",
       {{"run", run},
        {"transfer",
         {"d", "body", "flows", "R", "eps", "times", "x_points", "z_points", "band", "order", "n", "r", "p",
          "blocks", "L"}}}},
      {"variation", {{"run", run}, {"variation", {"path", "r", "split"}}}},
      {"decompose", {{"run", run}, {"decompose", {"s", "t", "n", "rho"}}}},
      {"body-invariants", {{"run", run}, {"body", {"name", "d", "samples", "directions"}}}},
      {"operator-run",
       {{"run", run},
        {"operator",
         {"input", "generate", "d", "n", "spacing", "band", "op", "body", "t", "r", "p", "blocks", "L",
          "output", "dump_csv", "mc_samples"}}}},
  };
  auto it = schemas.find(command);
  require(it != schemas.end(), "unknown command '" + command + "'");
  return it->second;
}

BodySpec body_from_name(const std::string& name, int d) {
  require(d >= 1, "body: need d >= 1");
  if (name == "B1") return BodySpec::ball(1.0, d);
  if (name == "B2") return BodySpec::ball(2.0, d);
  if (name == "Binf") return BodySpec::cube(d);
  if (name.size() > 1 && name[0] == 'B') {
    const double q = to_double(name.substr(1), "body exponent");
    require(q >= 1.0, "body: need q >= 1 in B_q");
    return BodySpec::ball(q, d);
  }
  throw DomainError("body: unknown body '" + name + "' (use B1, B2, Binf or Bq)");
}

// ---------------------------------------------------------------------------------------
// Reports

std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void ReportRow::finalize() { pass = measured <= threshold; }

std::string ReportRow::param_string() const {
  std::string s;
  for (const auto& [k, v] : params) {
    if (!s.empty()) s += ';';
    s += k + "=" + v;
  }
  return s;
}

ReportRow make_row(std::string experiment, Params params, double measured, double threshold) {
  ReportRow r;
  r.experiment = std::move(experiment);
  r.params = std::move(params);
  r.measured = std::stod(fmt_num(measured));
  r.threshold = threshold;
  r.finalize();
  return r;
}

const std::vector<Threshold>& threshold_registry() {
  static const std::vector<Threshold> reg = {
      {"sweep.stability", 1.5, "dimension sweep: max_d R(d) / min_d R(d)"},
      {"sweep.lacunary_excess", 1e-12, "lacunary ratio <= full ratio for identical f (relative excess)"},
      {"certify.ratio", 8.0, "symbol ratios |m| L|xi|, |m-1|/(L|xi|), |<xi, grad m>| bounded"},
      {"certify.ratio_drift", 0.25, "per-d sup of each symbol ratio varies < 25% between d = 8 and d = 64"},
      {"certify.minsum", 3.0, "sum_n min(2^n a, 1/(2^n a)) <= 3"},
      {"certify.minsum_equality", 1e-12, "minsum equals 3 at a = 2^j"},
      {"certify.poisson_decay_constant", M_PI, "sweep constant of the Poisson difference decay <= pi"},
      {"decay.slope_tolerance", 0.2, "multiplier difference sum slope within 0.2 of -(1 - eps)"},
      {"decay.block_l_slope", 0.2, "block square sum slope in l within 0.2 of -1"},
      {"decay.block_j_decay", 0.0, "block square sum decays in |j| at least like 2^(-eps |j| / 2)"},
      {"transfer.identity_defect", 1e-8, "A_t f(T^z x) = M_t phi_x(z) for z in G_R, t < R eps / d"},
      {"transfer.shift_defect", 1e-12, "unit shifts: A_t and M_t are the same operator"},
      {"operator.contraction", 1.0 + 1e-12, "averaging operators do not increase the L^2 norm"},
      {"variation.long_short", 0.0, "V_r - 3 (long + short) <= 0"},
      {"decompose.multiplicity", 2.0, "at most two pieces of any length"},
      {"decompose.cover", 0.0, "pieces cover [s, t) exactly"},
  };
  return reg;
}

double threshold_value(const std::string& name) {
  for (const auto& t : threshold_registry())
    if (t.name == name) return t.value;
  throw DomainError("unknown threshold '" + name + "'");
}

ReportFormat parse_format(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "jsonl") return ReportFormat::Jsonl;
  throw DomainError("unknown report format '" + s + "' (use csv or jsonl)");
}

namespace {
constexpr const char* kSchema = "dimvar-report/1";
}

std::string format_report(std::vector<ReportRow> rows, ReportFormat format, bool with_runtime) {
  require(!rows.empty(), "report: no rows to emit");
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.experiment != b.experiment) return a.experiment < b.experiment;
    return a.param_string() < b.param_string();
  });
  std::ostringstream os;
  if (format == ReportFormat::Csv) {
    os << "# schema " << kSchema << "\n";
    os << "experiment,params,measured,threshold,pass" << (with_runtime ? ",runtime_s" : "") << "\n";
    for (const auto& r : rows) {
      os << r.experiment << ',' << r.param_string() << ',' << fmt_num(r.measured) << ',' << fmt_num(r.threshold)
         << ',' << (r.pass ? "true" : "false");
      if (with_runtime) os << ',' << fmt_num(r.runtime_s);
      os << "\n";
    }
  } else {
    os << nlohmann::ordered_json{{"schema", kSchema}}.dump() << "\n";
    for (const auto& r : rows) {
      nlohmann::ordered_json j;
      j["experiment"] = r.experiment;
      nlohmann::ordered_json p = nlohmann::ordered_json::object();
      for (const auto& [k, v] : r.params) p[k] = v;
      j["params"] = p;
      auto num = [](double x) { return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(fmt_num(x)); };
      j["measured"] = num(r.measured);
      j["threshold"] = num(r.threshold);
      j["pass"] = r.pass;
      if (with_runtime) j["runtime_s"] = r.runtime_s;
      os << j.dump() << "\n";
    }
  }
  return os.str();
}

void emit_report(const std::vector<ReportRow>& rows, ReportFormat format, const std::string& path,
                 bool with_runtime) {
  const std::string text = format_report(rows, format, with_runtime);
  std::ofstream os(path, std::ios::binary);
  require(bool(os), "report: cannot open " + path + " for writing");
  os << text;
  os.close();
  require(!os.fail(), "report: write failed for " + path);
}

std::vector<ReportRow> parse_report(const std::string& text, ReportFormat format) {
  std::vector<ReportRow> rows;
  std::istringstream is(text);
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (format == ReportFormat::Csv) {
      if (line[0] == '#') continue;
      if (!header) {
        header = true;
        continue;
      }
      auto f = split(line, ',');
      require(f.size() >= 5, "report: short CSV row");
      ReportRow r;
      r.experiment = f[0];
      if (!f[1].empty())
        for (const auto& kv : split(f[1], ';')) {
          const auto eq = kv.find('=');
          r.params.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
        }
      r.measured = to_double(f[2], "measured");
      r.threshold = to_double(f[3], "threshold");
      r.pass = f[4] == "true";
      if (f.size() > 5) r.runtime_s = to_double(f[5], "runtime");
      rows.push_back(r);
    } else {
      auto j = nlohmann::ordered_json::parse(line);
      if (j.contains("schema")) continue;
      ReportRow r;
      r.experiment = j["experiment"].get<std::string>();
      for (const auto& [k, v] : j["params"].items()) r.params.emplace_back(k, v.get<std::string>());
      auto num = [](const nlohmann::ordered_json& v) {
        return v.is_string() ? to_double(v.get<std::string>(), "number") : v.get<double>();
      };
      r.measured = num(j["measured"]);
      r.threshold = num(j["threshold"]);
      r.pass = j["pass"].get<bool>();
      if (j.contains("runtime_s")) r.runtime_s = j["runtime_s"].get<double>();
      rows.push_back(r);
    }
  }
  return rows;
}

bool all_pass(const std::vector<ReportRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
}

// ---------------------------------------------------------------------------------------
// Sweeps

namespace {

struct SweepSpec {
  std::vector<int> dims, mode_dims;
  std::vector<std::string> bodies, families;
  double p = 2, r = 3;
  int trials = 64, L = 2;
  std::map<int, int> n_per_axis;
  double spacing = 1.0;
  double band = 0.25;  // highest wavenumber as a fraction of n
  long max_points = 1L << 20;
  long mc_samples = 20000;
  std::uint64_t seed = 1;
};

int default_n(int d) { return d <= 2 ? 64 : d == 3 ? 32 : d == 4 ? 16 : 8; }

SweepSpec sweep_spec(const Config& cfg) {
  SweepSpec s;
  s.seed = std::uint64_t(cfg.integer("run", "seed", 1));
  s.dims = cfg.integers("sweep", "dims", {1, 2, 3, 4});
  s.mode_dims = cfg.integers("sweep", "mode_dims", {});
  s.bodies = cfg.words("sweep", "bodies", {"B2", "Binf"});
  s.families = cfg.words("sweep", "families", {"random", "bump", "indicator", "mode"});
  s.p = cfg.number("sweep", "p", 2.0);
  s.r = cfg.number("sweep", "r", 3.0);
  s.trials = int(cfg.integer("sweep", "trials", 64));
  s.L = int(cfg.integer("sweep", "L", 2));
  s.spacing = cfg.number("sweep", "spacing", 1.0);
  s.band = cfg.number("sweep", "band", 0.25);
  s.max_points = cfg.integer("sweep", "max_points", 1L << 20);
  s.mc_samples = cfg.integer("sweep", "mc_samples", 20000);
  require(std::isfinite(s.r), "sweep: r = inf is out of scope");
  require(s.r >= 1, "sweep: need r >= 1");
  require(s.p >= 1 && std::isfinite(s.p), "sweep: need finite p >= 1");
  require(s.trials >= 1, "sweep: need trials >= 1");
  require(s.L >= 0 && s.L <= 8, "sweep: L must be in [0, 8]");
  require(s.band > 0 && s.band < 0.5, "sweep: band must be in (0, 1/2)");
  for (int d : s.dims) require(d >= 1 && d <= 8, "sweep: grid dimensions must be in [1, 8]");
  for (int d : s.mode_dims) require(d >= 1, "sweep: mode_dims must be positive");
  for (const auto& f : s.families)
    require(f == "random" || f == "bump" || f == "indicator" || f == "mode", "sweep: unknown family '" + f + "'");
  const auto ns = cfg.integers("sweep", "n_per_axis", {});
  require(ns.empty() || ns.size() == 1 || ns.size() == s.dims.size(),
          "sweep: n_per_axis must be one value or one per dimension");
  for (std::size_t i = 0; i < s.dims.size(); ++i)
    s.n_per_axis[s.dims[i]] = ns.empty() ? default_n(s.dims[i]) : ns[ns.size() == 1 ? 0 : i];
  return s;
}

std::string scope_full(double p, double r) { return (p > 1.5 && p < 4 && r > 2) ? "in-theorem" : "out-of-theorem"; }
std::string scope_lacunary(double p, double r) { return (p > 1 && r > 2) ? "in-theorem" : "out-of-theorem"; }

struct CellResult {
  double full = 0, lac = 0, excess = -kInf;
};

// t from about a quarter grid step to twice the period, whole dyadic blocks
TimeGrid sweep_times(double spacing, double period, int L) {
  TimeGrid tg;
  const int lo = int(std::floor(std::log2(0.25 * spacing))), hi = int(std::ceil(std::log2(2.0 * period)));
  for (int n = lo; n <= hi; ++n) tg.block_exponents.push_back(n);
  tg.L = L;
  return tg;
}

GridField radial_bump(int d, int n, double spacing, CounterRng& rng) {
  GridField f = GridField::zeros(d, n, spacing);
  f.band_limit.reset();
  const double P = f.period();
  Eigen::VectorXd c(d);
  for (int a = 0; a < d; ++a) c[a] = rng.uniform(0.0, P);
  // width log-uniform in [spacing, P/8]
  const double w = spacing * std::exp(rng.uniform() * std::log(std::max(1.0, n / 8.0)));
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    Eigen::ArrayXd dx = (f.point(i) - c).array().abs();
    dx = dx.min(P - dx);
    f.data[i] = std::exp(-dx.square().sum() / (2 * w * w));
  }
  return f;
}

// indicator of a random box, mollified at the grid scale
GridField mollified_box(int d, int n, double spacing, CounterRng& rng) {
  GridField f = GridField::zeros(d, n, spacing);
  f.band_limit.reset();
  const double P = f.period();
  Eigen::VectorXd c(d), h(d);
  for (int a = 0; a < d; ++a) {
    c[a] = rng.uniform(0.0, P);
    h[a] = rng.uniform(P / 8, P / 4);
  }
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    Eigen::ArrayXd dx = (f.point(i) - c).array().abs();
    dx = dx.min(P - dx);
    f.data[i] = (dx <= h.array()).all() ? 1.0 : 0.0;
  }
  const double s2 = spacing * spacing;
  return apply_symbol(f, [&](const Eigen::VectorXd& xi) {
    return std::complex<double>(std::exp(-2 * M_PI * M_PI * s2 * xi.squaredNorm()), 0.0);
  });
}

CellResult sweep_cell(const SweepSpec& s, const std::string& body_name, int d, const std::string& family,
                      bool grid_ok) {
  const BodySpec body = normalized(body_from_name(body_name, d));
  const Symbol m = Symbol::for_body(body, s.mc_samples, s.seed);
  const int n = grid_ok ? s.n_per_axis.at(d) : 8;
  const double P = n * s.spacing;
  const int K = std::max(1, int(std::floor(s.band * n)));
  const TimeGrid tg = sweep_times(s.spacing, P, s.L);
  const int n_lo = tg.block_exponents.front(), n_hi = tg.block_exponents.back() + 1;
  const auto ts = tg.times();
  const std::uint64_t cell_id = hash_combine(hash_combine(hash_str(body_name), std::uint64_t(d)), hash_str(family));
  const CounterRng base(s.seed, "sweep", cell_id);

  CellResult out;
  for (int trial = 0; trial < s.trials; ++trial) {
    CounterRng rng = base.substream(std::uint64_t(trial));
    double full = 0, lac = 0;
    if (family == "mode") {
      // |f| is constant, so the ratio is the variation of the scalar path m(t k / P)
      Eigen::VectorXi k(d);
      do {
        for (int a = 0; a < d; ++a) k[a] = int(std::floor(rng.uniform(-K, K + 1.0)));
      } while (k.isZero());
      const Eigen::VectorXd xi = k.cast<double>() / P;
      Eigen::VectorXd path(Eigen::Index(ts.size())), lpath(n_hi - n_lo + 1);
      for (std::size_t i = 0; i < ts.size(); ++i) path[Eigen::Index(i)] = m(ts[i] * xi);
      for (int e = n_lo; e <= n_hi; ++e) lpath[e - n_lo] = m(std::ldexp(1.0, e) * xi);
      full = vr_exact(path, s.r).value;
      lac = vr_exact(lpath, s.r).value;
    } else {
      GridField f = family == "random" ? random_trig_poly(d, P, K, rng).sample(n)
                    : family == "bump"   ? radial_bump(d, n, s.spacing, rng)
                                         : mollified_box(d, n, s.spacing, rng);
      const double nf = lp_norm(f, s.p);
      full = lp_norm(pointwise_variation_field(f, m, tg, s.r), s.p) / nf;
      lac = lp_norm(lacunary_variation(f, m, n_lo, n_hi, s.r), s.p) / nf;
    }
    out.full = std::max(out.full, full);
    out.lac = std::max(out.lac, lac);
    out.excess = std::max(out.excess, (lac - full) / full);
  }
  return out;
}

std::vector<ReportRow> sweep_rows(const Config& cfg, bool want_full, bool want_lac) {
  const SweepSpec s = sweep_spec(cfg);
  std::vector<ReportRow> rows;
  const std::string sf = scope_full(s.p, s.r), sl = scope_lacunary(s.p, s.r);
  for (const auto& b : s.bodies) {
    for (const auto& fam : s.families) {
      std::vector<int> dims = s.dims;
      if (fam == "mode")
        for (int d : s.mode_dims)
          if (std::find(dims.begin(), dims.end(), d) == dims.end()) dims.push_back(d);
      std::vector<double> rf, rl, ext;
      for (int d : dims) {
        const bool on_grid = s.n_per_axis.count(d) > 0;
        if (fam != "mode") {
          const long points = long(std::pow(double(s.n_per_axis.at(d)), d));
          if (points > s.max_points) {
            rows.push_back(make_row("sweep.truncated", {{"body", b}, {"d", std::to_string(d)}, {"family", fam}},
                                    double(points), kInf));
            continue;
          }
        }
        const auto t0 = std::chrono::steady_clock::now();
        const CellResult c = sweep_cell(s, b, d, fam, on_grid);
        const double dt = seconds_since(t0);
        Params prm{{"body", b}, {"d", std::to_string(d)}, {"family", fam}, {"p", fmt_num(s.p)},
                   {"r", fmt_num(s.r)}, {"trials", std::to_string(s.trials)}};
        if (want_full) {
          Params q = prm;
          q.emplace_back("scope", sf);
          rows.push_back(make_row("sweep.ratio", q, c.full, kInf));
          rows.back().runtime_s = dt;
        }
        if (want_lac) {
          Params q = prm;
          q.emplace_back("scope", sl);
          rows.push_back(make_row("sweep.lacunary_ratio", q, c.lac, kInf));
          rows.push_back(make_row("sweep.lacunary_excess", prm, c.excess, threshold_value("sweep.lacunary_excess")));
        }
        if (std::find(s.dims.begin(), s.dims.end(), d) != s.dims.end()) {
          rf.push_back(c.full);
          rl.push_back(c.lac);
        }
        ext.push_back(c.full);
      }
      if (rf.empty()) continue;
      Params prm{{"body", b}, {"family", fam}, {"p", fmt_num(s.p)}, {"r", fmt_num(s.r)}};
      auto stat = [](const std::vector<double>& v) {
        return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
      };
      if (want_full) {
        Params q = prm;
        q.emplace_back("scope", sf);
        rows.push_back(make_row("sweep.stability", q, stat(rf), threshold_value("sweep.stability")));
      }
      if (want_lac) {
        Params q = prm;
        q.emplace_back("scope", sl);
        rows.push_back(make_row("sweep.lacunary_stability", q, stat(rl), kInf));
      }
      // single modes beyond the grid dimensions, reported only
      if (want_full && ext.size() > rf.size())
        rows.push_back(make_row("sweep.mode_extended_stability", prm, stat(ext), kInf));
    }
  }
  return rows;
}

}  // namespace

std::vector<ReportRow> run_dimension_sweep(const Config& cfg) { return sweep_rows(cfg, true, false); }
std::vector<ReportRow> run_lacunary_sweep(const Config& cfg) { return sweep_rows(cfg, false, true); }
std::vector<ReportRow> run_sweeps(const Config& cfg) { return sweep_rows(cfg, true, true); }

// ---------------------------------------------------------------------------------------
// Certifications

namespace {

struct Fit {
  double slope = 0, se = 0;
};

Fit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  require(n >= 3, "fit: need at least three points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Fit f;
  f.slope = sxy / sxx;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - my - f.slope * (x[i] - mx);
    rss += e * e;
  }
  f.se = std::sqrt(rss / double(n - 2) / sxx);
  return f;
}

Eigen::VectorXd diagonal(int d, double norm) { return Eigen::VectorXd::Constant(d, norm / std::sqrt(double(d))); }

Symbol closed_form(const std::string& name, int d) {
  if (name == "B2") return Symbol::ball2(d);
  if (name == "Binf") return Symbol::cube(d);
  throw DomainError("certification needs a closed-form body (B2 or Binf), got '" + name + "'");
}

// sum_n sum_k |m(t_{k+1} xi) - m(t_k xi)|^2 |P_{L 2^(j+n)} - P_{L 2^(j+n-1)}|^2 at xi, the square of the
// block square function of a unit single mode
double block_square_sum(const Symbol& m, const Eigen::VectorXd& xi, int l, int j) {
  const double L = m.L(), x = xi.norm();
  const int nc = int(std::lround(-std::log2(L * x)));
  double s = 0;
  for (int n = nc - j - 30; n <= nc - j + 30; ++n) {
    const double a = std::ldexp(L * x, j + n);
    const double lp = std::exp(-2 * M_PI * a) - std::exp(-M_PI * a);
    const double w = lp * lp;
    if (w < 1e-300) continue;
    const double base = std::ldexp(1.0, n), step = std::ldexp(1.0, n - l);
    double prev = m(base * xi), acc = 0;
    for (long k = 0; k < (1L << l); ++k) {
      const double cur = m((base + step * double(k + 1)) * xi);
      acc += (cur - prev) * (cur - prev);
      prev = cur;
    }
    s += acc * w;
  }
  return s;
}

}  // namespace

std::vector<ReportRow> run_decay_certification(const Config& cfg) {
  const std::string bname = cfg.str("decay", "body", "B2");
  const int d = int(cfg.integer("decay", "d", 16));
  const auto eps = cfg.numbers("decay", "eps", {0.0, 0.5});
  const auto ls = cfg.integers("decay", "l_range", {2, 3, 4, 5, 6, 7, 8, 9, 10});
  const int n = int(cfg.integer("decay", "n", 0));
  const double xn = cfg.number("decay", "xi_norm", 1.0);
  const auto js = cfg.integers("decay", "j_range", {-6, -5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5, 6});
  const int jl = int(cfg.integer("decay", "j_level", 4));
  for (double e : eps) require(e >= 0 && e < 1, "decay: eps must be in [0, 1)");
  require(xn > 0, "decay: xi_norm must be positive");
  const Symbol m = closed_form(bname, d);
  const Eigen::VectorXd xi = diagonal(d, xn);
  std::vector<ReportRow> rows;
  const std::string ds = std::to_string(d);

  for (double e : eps) {
    std::vector<double> x, y;
    for (int l : ls) {
      if (l == 0) continue;  // single term, excluded from the fit
      x.push_back(l);
      y.push_back(std::log2(multiplier_difference_sum(m, n, l, xi, e)));
    }
    const Fit f = linear_fit(x, y);
    rows.push_back(make_row("decay.multiplier_diff_slope",
                            {{"body", bname}, {"d", ds}, {"eps", fmt_num(e)}, {"n", std::to_string(n)},
                             {"slope", fmt_num(f.slope)}, {"ci95", fmt_num(1.96 * f.se)}},
                            std::fabs(f.slope + (1 - e)), threshold_value("decay.slope_tolerance")));
  }
  {
    std::vector<double> x, y;
    for (int l : ls) {
      if (l == 0) continue;
      x.push_back(l);
      y.push_back(std::log2(block_square_sum(m, xi, l, 0)));
    }
    const Fit f = linear_fit(x, y);
    rows.push_back(make_row("decay.block_l_slope",
                            {{"body", bname}, {"d", ds}, {"j", "0"}, {"slope", fmt_num(f.slope)},
                             {"ci95", fmt_num(1.96 * f.se)}},
                            std::fabs(f.slope + 1), threshold_value("decay.block_l_slope")));
  }
  for (const char* side : {"negative", "positive"}) {
    std::vector<double> x, y;
    for (int j : js) {
      if (j == 0 || (j < 0) != (side[0] == 'n')) continue;
      x.push_back(std::abs(j));
      y.push_back(std::log2(block_square_sum(m, xi, jl, j)));
    }
    if (x.size() < 3) continue;
    const Fit f = linear_fit(x, y);
    for (double e : eps) {
      if (e == 0) continue;
      rows.push_back(make_row("decay.block_j_decay",
                              {{"body", bname}, {"d", ds}, {"eps", fmt_num(e)}, {"l", std::to_string(jl)},
                               {"side", side}, {"slope", fmt_num(f.slope)}, {"ci95", fmt_num(1.96 * f.se)}},
                              f.slope + e / 2, threshold_value("decay.block_j_decay")));
    }
  }
  return rows;
}

std::vector<ReportRow> run_multiplier_certification(const Config& cfg) {
  std::vector<ReportRow> rows;
  if (cfg.has_section("certify")) {
    const auto bodies = cfg.words("certify", "bodies", {"B2", "Binf"});
    std::vector<int> all_d(64);
    std::iota(all_d.begin(), all_d.end(), 1);
    const auto dims = cfg.integers("certify", "dims", all_d);
    const int points = int(cfg.integer("certify", "points", 1000));
    const double lo = cfg.number("certify", "xi_min", 1e-3), hi = cfg.number("certify", "xi_max", 1e3);
    require(points >= 2 && lo > 0 && hi > lo, "certify: need points >= 2 and 0 < xi_min < xi_max");
    for (const auto& b : bodies) {
      std::map<int, std::array<double, 3>> sup;
      for (int d : dims) {
        const Symbol m = closed_form(b, d);
        std::array<double, 3> s{0, 0, 0};
        for (int dir = 0; dir < 2; ++dir) {
          for (int i = 0; i < points; ++i) {
            // L|xi| on a log grid
            const double a = lo * std::pow(hi / lo, double(i) / (points - 1)) / m.L();
            Eigen::VectorXd xi = dir == 0 ? Eigen::VectorXd(Eigen::VectorXd::Unit(d, 0) * a) : diagonal(d, a);
            const SymbolRatios r = symbol_ratios(m, xi);
            if (r.r1) s[0] = std::max(s[0], *r.r1);
            if (r.r2) s[1] = std::max(s[1], *r.r2);
            s[2] = std::max(s[2], r.r3);
          }
        }
        sup[d] = s;
        for (int k = 0; k < 3; ++k)
          rows.push_back(make_row("certify.ratio",
                                  {{"body", b}, {"d", std::to_string(d)}, {"ratio", "r" + std::to_string(k + 1)}},
                                  s[std::size_t(k)], threshold_value("certify.ratio")));
      }
      for (int k = 0; k < 3; ++k) {
        double mx = 0, mn = kInf;
        for (const auto& [d, s] : sup)
          if (d >= 8 && d <= 64) {
            mx = std::max(mx, s[std::size_t(k)]);
            mn = std::min(mn, s[std::size_t(k)]);
          }
        if (mx > 0)
          rows.push_back(make_row("certify.ratio_drift", {{"body", b}, {"ratio", "r" + std::to_string(k + 1)}},
                                  mx / mn - 1, threshold_value("certify.ratio_drift")));
      }
    }
    const int mp = int(cfg.integer("certify", "minsum_points", 10000));
    require(mp >= 2, "certify: minsum_points must be at least 2");
    double mx = 0, eq = 0;
    for (int i = 0; i < mp; ++i) mx = std::max(mx, dyadic_min_sum(std::pow(10.0, -6 + 12.0 * i / (mp - 1))));
    for (int j = -20; j <= 20; ++j) eq = std::max(eq, std::fabs(dyadic_min_sum(std::ldexp(1.0, j)) - 3.0));
    rows.push_back(make_row("certify.minsum", {{"points", std::to_string(mp)}}, mx, threshold_value("certify.minsum")));
    rows.push_back(make_row("certify.minsum_equality", {{"j", "-20..20"}}, eq,
                            threshold_value("certify.minsum_equality")));
    const auto nr = cfg.integers("certify", "n_range", {-10, 10});
    const auto jr = cfg.integers("certify", "j_range", {-10, 10});
    require(nr.size() == 2 && jr.size() == 2, "certify: n_range and j_range are 'lo, hi'");
    double C = 0;
    const Symbol m = Symbol::ball2(2);
    for (int n = nr[0]; n <= nr[1]; ++n)
      for (int j = jr[0]; j <= jr[1]; ++j)
        for (int i = 0; i < 400; ++i) {
          const double x = std::pow(10.0, -8 + 16.0 * i / 399) / m.L();
          C = std::max(C, poisson_difference_decay(n, j, m.L(), x) * std::ldexp(1.0, std::abs(j)));
        }
    rows.push_back(make_row("certify.poisson_decay_constant",
                            {{"n", std::to_string(nr[0]) + ".." + std::to_string(nr[1])},
                             {"j", std::to_string(jr[0]) + ".." + std::to_string(jr[1])}},
                            C, threshold_value("certify.poisson_decay_constant")));
  }
  if (cfg.has_section("decay")) {
    auto more = run_decay_certification(cfg);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  require(!rows.empty(), "certify-multiplier: config has neither [certify] nor [decay]");
  return rows;
}

// ---------------------------------------------------------------------------------------
// Transference

std::vector<ReportRow> run_transference_demo(const Config& cfg) {
  const int d = int(cfg.integer("transfer", "d", 2));
  const std::string bname = cfg.str("transfer", "body", "B2");
  const std::string flows = cfg.str("transfer", "flows", "diagonal");
  const double R = cfg.number("transfer", "R", 1.0), eps = cfg.number("transfer", "eps", 0.5);
  const auto times = cfg.numbers("transfer", "times", {0.05, 0.1, 0.2});
  const int nx = int(cfg.integer("transfer", "x_points", 6)), nz = int(cfg.integer("transfer", "z_points", 6));
  const int K = int(cfg.integer("transfer", "band", 3)), order = int(cfg.integer("transfer", "order", 24));
  const int n = int(cfg.integer("transfer", "n", 32));
  const double r = cfg.number("transfer", "r", 3.0), p = cfg.number("transfer", "p", 2.0);
  const auto blocks = cfg.integers("transfer", "blocks", {-5, -4, -3, -2, -1, 0});
  const int L = int(cfg.integer("transfer", "L", 2));
  const std::uint64_t seed = std::uint64_t(cfg.integer("run", "seed", 1));
  require(d >= 1 && d <= 3, "transfer: oracle scale is d <= 3");
  require(R > 0 && eps > 0, "transfer: need R > 0 and eps > 0");
  require(flows == "shifts" || flows == "diagonal", "transfer: flows must be shifts or diagonal");
  require(std::isfinite(r) && r >= 1, "transfer: need finite r >= 1");
  for (double t : times)
    require(t > 0 && t < R * eps / d, "transfer: need 0 < t < R eps / d (t = " + fmt_num(t) + ", R eps / d = " +
                                          fmt_num(R * eps / d) + ")");

  const BodySpec body = normalized(body_from_name(bname, d));
  const Symbol m = Symbol::for_body(body);
  // flows T_i^s x = x + s v_i on the torus [0, 1)^d
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(d, d);  // columns v_i
  if (flows == "diagonal")
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) V(k, i) += (std::sqrt(2.0) - 1.0) * double(k + 1) / double(i + 2);

  CounterRng rng(seed, "transfer");
  const TrigPoly f = random_trig_poly(d, 1.0, K, rng);
  // A_t f(y) = sum_k c_k m(t zeta_k) e(k.y), zeta_k,i = <k, v_i>
  auto At = [&](double t, const Eigen::VectorXd& y) {
    cd s = 0;
    for (std::size_t q = 0; q < f.k.size(); ++q) {
      const Eigen::VectorXd kk = f.k[q].cast<double>();
      const Eigen::VectorXd zeta = V.transpose() * kk;
      s += f.c[q] * m(t * zeta) * std::polar(1.0, 2 * M_PI * kk.dot(y));
    }
    return s;
  };
  const BodySpec window = body.scaled(R * (1 + eps));
  std::vector<ReportRow> rows;
  double defect = 0;
  for (int ix = 0; ix < nx; ++ix) {
    Eigen::VectorXd x(d);
    for (int a = 0; a < d; ++a) x[a] = rng.uniform();
    // phi_x(u) = f(T^u x) 1[u in G_R(1+eps)]
    auto phi = [&](const Eigen::VectorXd& u) { return window.contains(u) ? f(x + V * u) : cd(0.0); };
    for (int iz = 0; iz < nz; ++iz) {
      Eigen::VectorXd z(d);
      sample_uniform(body.scaled(R), rng, z);
      for (double t : times) {
        const cd lhs = At(t, x + V * z);
        const cd rhs = average_direct(phi, body, t, z, order);
        defect = std::max(defect, std::abs(lhs - rhs));
      }
    }
  }
  const Params base{{"body", bname}, {"d", std::to_string(d)}, {"flows", flows}, {"R", fmt_num(R)},
                    {"eps", fmt_num(eps)}};
  rows.push_back(make_row("transfer.identity_defect", base, defect, threshold_value("transfer.identity_defect")));

  // A_t on the torus grid and its variation norm
  GridField fg = f.sample(n);
  const double P = fg.period();
  auto At_field = [&](double t) {
    return apply_symbol(fg, [&](const Eigen::VectorXd& xi) { return cd(m(t * (V.transpose() * (xi * P))), 0.0); });
  };
  if (flows == "shifts") {
    double sd = 0;
    for (double t : times) sd = std::max(sd, (At_field(t).data - average_mt(fg, m, t).data).cwiseAbs().maxCoeff());
    rows.push_back(make_row("transfer.shift_defect", base, sd, threshold_value("transfer.shift_defect")));
  }
  TimeGrid tg{blocks, L};
  const auto ts = tg.times();
  Eigen::MatrixXcd vals(Eigen::Index(ts.size()), fg.size());
  for (std::size_t i = 0; i < ts.size(); ++i) vals.row(Eigen::Index(i)) = At_field(ts[i]).data.transpose();
  GridField vf = GridField::zeros(d, n, fg.spacing);
  for (Eigen::Index j = 0; j < fg.size(); ++j) vf.data[j] = vr_exact(vals.col(j), r).value;
  Params q = base;
  q.emplace_back("p", fmt_num(p));
  q.emplace_back("r", fmt_num(r));
  rows.push_back(make_row("transfer.variation_ratio", q, lp_norm(vf, p) / lp_norm(fg, p), kInf));
  return rows;
}


// ---------------------------------------------------------------------------------------
// Small subcommands

SamplePath read_path_csv(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), "variation: cannot open " + path);
  std::string line;
  require(bool(std::getline(is, line)), "variation: " + path + " is empty");
  const auto head = split(line, ',');
  require((head.size() == 2 || head.size() == 3) && head[0] == "t",
          "variation: " + path + " needs a header t,re[,im]");
  std::vector<double> ts;
  std::vector<cd> vs;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    const std::string where = path + ":" + std::to_string(lineno);
    require(f.size() == head.size(), "variation: wrong column count at " + where);
    ts.push_back(to_double(f[0], where));
    vs.emplace_back(to_double(f[1], where), f.size() == 3 ? to_double(f[2], where) : 0.0);
    require(ts.size() < 2 || ts[ts.size() - 2] < ts.back(), "variation: times not ascending at " + where);
  }
  require(!ts.empty(), "variation: " + path + " has no samples");
  Eigen::VectorXcd v(Eigen::Index(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i) v[Eigen::Index(i)] = vs[i];
  return SamplePath(ts, v);
}

namespace {

std::vector<ReportRow> run_variation(const Config& cfg) {
  const std::string path = cfg.str("variation", "path", "");
  require(!path.empty(), "variation: [variation] path is required");
  const double r = cfg.number("variation", "r", 2.0);
  require(std::isfinite(r) && r >= 1, "variation: need finite r >= 1");
  const SamplePath sp = read_path_csv(path);
  const auto rep = vr_exact(sp, r);
  std::vector<ReportRow> rows;
  rows.push_back(make_row("variation.value", {{"r", fmt_num(r)}, {"samples", std::to_string(sp.size())}},
                          rep.value, kInf));
  if (cfg.flag("variation", "split", false)) {
    const auto ls = long_short_split(sp, r);
    const Params prm{{"r", fmt_num(r)}, {"long", fmt_num(ls.long_value)}, {"short", fmt_num(ls.short_value())}};
    rows.push_back(make_row("variation.long_short", prm, ls.value - 3 * (ls.long_value + ls.short_value()),
                            threshold_value("variation.long_short")));
  }
  return rows;
}

std::vector<ReportRow> run_decompose(const Config& cfg) {
  const int rho = int(cfg.integer("decompose", "rho", 20));
  require(cfg.has("decompose", "s") && cfg.has("decompose", "t") && cfg.has("decompose", "n"),
          "decompose: s, t and n are required");
  const Dyadic s = Dyadic::from_double(cfg.number("decompose", "s", 0), rho);
  const Dyadic t = Dyadic::from_double(cfg.number("decompose", "t", 0), rho);
  const int n = int(cfg.integer("decompose", "n", 0));
  const auto pieces = dyadic_decompose(s, t, n);
  std::vector<ReportRow> rows;
  std::map<int, int> per_len;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& iv = pieces[i];
    char idx[16];
    std::snprintf(idx, sizeof idx, "%04zu", i);
    rows.push_back(make_row("decompose.interval",
                            {{"index", idx}, {"m", std::to_string(iv.m)}, {"k", std::to_string(iv.k)}, {"left", fmt_num(iv.left())},
                             {"right", fmt_num(iv.right())}},
                            iv.length(), kInf));
    ++per_len[iv.m];
  }
  int mult = 0;
  for (const auto& [m, c] : per_len) mult = std::max(mult, c);
  // exact cover: consecutive pieces abut and the ends match, in ticks
  double gap = 0;
  if (pieces.empty()) {
    gap = s == t ? 0.0 : 1.0;
  } else {
    gap += std::fabs((pieces.front().left_at(rho).num - s.at_resolution(rho).num) * 1.0);
    gap += std::fabs((pieces.back().right_at(rho).num - t.at_resolution(rho).num) * 1.0);
    for (std::size_t i = 1; i < pieces.size(); ++i)
      gap += std::fabs(double(pieces[i].left_at(rho).num - pieces[i - 1].right_at(rho).num));
  }
  const Params prm{{"s", fmt_num(s.to_double())}, {"t", fmt_num(t.to_double())}, {"n", std::to_string(n)}};
  rows.push_back(make_row("decompose.multiplicity", prm, mult, threshold_value("decompose.multiplicity")));
  rows.push_back(make_row("decompose.cover", prm, gap, threshold_value("decompose.cover")));
  return rows;
}

std::vector<ReportRow> run_body_invariants(const Config& cfg) {
  const std::string name = cfg.str("body", "name", "B2");
  const int d = int(cfg.integer("body", "d", 2));
  const long samples = cfg.integer("body", "samples", 200000);
  const std::uint64_t seed = std::uint64_t(cfg.integer("run", "seed", 1));
  const BodySpec body = body_from_name(name, d);
  require(samples >= 1000, "body-invariants: need samples >= 1000");
  const IsotropicData iso = isotropic_normalize(body, samples, seed);
  const int ndir = int(cfg.integer("body", "directions", 64));
  const SigmaQ sq = invariants_sigma_q(normalized(body, samples, seed), direction_dictionary(d, ndir, seed), samples, seed);
  const Params prm{{"body", name}, {"d", std::to_string(d)}};
  auto with_se = [&](double se) {
    Params q = prm;
    q.emplace_back("stderr", fmt_num(se));
    return q;
  };
  std::vector<ReportRow> rows;
  rows.push_back(make_row("body.volume", with_se(iso.volume_stderr), iso.volume, kInf));
  rows.push_back(make_row("body.isotropic_constant", with_se(iso.L_stderr), iso.L, kInf));
  // of the volume-one dilate, maxima over the direction dictionary
  Params qs = with_se(sq.sigma_inv.se), qq = with_se(sq.Q.se);
  const char* lb = sq.lower_bound ? "lower" : "exact";
  qs.emplace_back("bound", lb);
  qq.emplace_back("bound", lb);
  rows.push_back(make_row("body.sigma_inv", qs, sq.sigma_inv.value, kInf));
  rows.push_back(make_row("body.Q", qq, sq.Q.value, kInf));
  return rows;
}

void dump_field_csv(const std::string& path, const GridField& f) {
  std::ofstream os(path);
  require(bool(os), "operator-run: cannot open " + path + " for writing");
  for (int a = 0; a < f.d; ++a) os << "x" << a << ',';
  os << "re,im\n";
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const Eigen::VectorXd x = f.point(i);
    for (int a = 0; a < f.d; ++a) os << fmt_num(x[a]) << ',';
    os << fmt_num(f.data[i].real()) << ',' << fmt_num(f.data[i].imag()) << "\n";
  }
  require(!os.fail(), "operator-run: write failed for " + path);
}

std::vector<ReportRow> run_operator(const Config& cfg) {
  const std::uint64_t seed = std::uint64_t(cfg.integer("run", "seed", 1));
  GridField f;
  std::string source;
  if (cfg.has("operator", "input")) {
    source = "file";
    f = read_field(cfg.str("operator", "input", ""));
  } else {
    const std::string gen = cfg.str("operator", "generate", "random");
    const int d = int(cfg.integer("operator", "d", 2)), n = int(cfg.integer("operator", "n", 32));
    const double spacing = cfg.number("operator", "spacing", 1.0);
    require(d >= 1 && n >= 2 && spacing > 0, "operator-run: need d >= 1, n >= 2, spacing > 0");
    CounterRng rng(seed, "operator-run");
    if (gen == "random") {
      const int K = int(cfg.integer("operator", "band", std::max(1, n / 4)));
      require(2 * K < n, "operator-run: band must be below n / 2");
      f = random_trig_poly(d, n * spacing, K, rng).sample(n);
    } else if (gen == "bump") {
      f = radial_bump(d, n, spacing, rng);
    } else if (gen == "indicator") {
      f = mollified_box(d, n, spacing, rng);
    } else {
      throw DomainError("operator-run: generate must be random, bump or indicator");
    }
    source = gen;
  }
  f.validate();
  const std::string op = cfg.str("operator", "op", "average");
  const int d = f.d;
  const std::string bname = cfg.str("operator", "body", "B2");
  const double t = cfg.number("operator", "t", 1.0);
  GridField g;
  bool contraction = true;
  Params prm{{"op", op}, {"source", source}, {"d", std::to_string(d)}, {"n", std::to_string(f.n)}};
  if (op == "average" || op == "lattice" || op == "oracle") {
    prm.emplace_back("body", bname);
    prm.emplace_back("t", fmt_num(t));
    const BodySpec body = normalized(body_from_name(bname, d));
    if (op == "average")
      g = average_mt(f, Symbol::for_body(body, cfg.integer("operator", "mc_samples", 20000), seed), t);
    else if (op == "lattice")
      g = average_mt_lattice(f, body, t);
    else
      g = spatial_convolve_oracle(f, body, t);
  } else if (op == "poisson") {
    prm.emplace_back("t", fmt_num(t));
    g = poisson_apply(f, t);
  } else if (op == "sphere") {
    prm.emplace_back("t", fmt_num(t));
    g = spherical_mean(f, t);
  } else if (op == "g") {
    contraction = false;
    g = g_function(f, default_log_grid(f));
  } else if (op == "variation") {
    contraction = false;
    const double r = cfg.number("operator", "r", 3.0);
    const TimeGrid tg{cfg.integers("operator", "blocks", {-2, -1, 0, 1, 2, 3, 4}),
                      int(cfg.integer("operator", "L", 2))};
    prm.emplace_back("body", bname);
    prm.emplace_back("r", fmt_num(r));
    const BodySpec body = normalized(body_from_name(bname, d));
    g = pointwise_variation_field(f, Symbol::for_body(body, cfg.integer("operator", "mc_samples", 20000), seed), tg,
                                  r);
  } else {
    throw DomainError("operator-run: unknown op '" + op + "'");
  }
  if (cfg.has("operator", "output")) write_field(cfg.str("operator", "output", ""), g);
  if (cfg.has("operator", "dump_csv")) dump_field_csv(cfg.str("operator", "dump_csv", ""), g);
  const double p = cfg.number("operator", "p", 2.0);
  require(p >= 1, "operator-run: need p >= 1");
  prm.emplace_back("p", fmt_num(p));
  const double ratio = lp_norm(g, p) / lp_norm(f, p);
  std::vector<ReportRow> rows;
  rows.push_back(make_row("operator.norm_ratio", prm, ratio,
                          contraction && p == 2.0 ? threshold_value("operator.contraction") : kInf));
  return rows;
}

}  // namespace

std::vector<ReportRow> run_command(const std::string& command, const Config& cfg) {
  cfg.check_schema(config_schema(command));
  std::vector<ReportRow> rows;
  if (command == "sweep") {
    const std::string kind = cfg.str("sweep", "kind", "both");
    if (kind == "full")
      rows = run_dimension_sweep(cfg);
    else if (kind == "lacunary")
      rows = run_lacunary_sweep(cfg);
    else if (kind == "both")
      rows = run_sweeps(cfg);
    else
      throw DomainError("sweep: kind must be full, lacunary or both");
  } else if (command == "certify-multiplier") {
    rows = run_multiplier_certification(cfg);
  } else if (command == "transfer") {
    rows = run_transference_demo(cfg);
  } else if (command == "variation") {
    rows = run_variation(cfg);
  } else if (command == "decompose") {
    rows = run_decompose(cfg);
  } else if (command == "body-invariants") {
    rows = run_body_invariants(cfg);
  } else if (command == "operator-run") {
    rows = run_operator(cfg);
  }
  require(!rows.empty(), command + ": no report rows");
  return rows;
}

}  // namespace dimvar
