// bcmoments: compute overlap-count moment bounds, verify them by simulation
// or exact enumeration, and run the deviation-count applications.

#include <CLI11.hpp>

#include <algorithm>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bcmoments/bcmoments.hpp"

namespace {

using namespace bcmoments;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitDomain = 2;
constexpr int kExitVerify = 3;
constexpr int kExitUsage = 64;

struct OptionSpec {
  std::string name;
  std::string fallback;
  std::string help;
};

// Echoed options: everything that can change the output bytes.
const std::vector<OptionSpec> kCommonOptions{
    {"format", "csv", "output format: csv, json or jsonl"},
    {"seed", "1", "64-bit seed for all Monte-Carlo streams"},
};

const std::vector<OptionSpec> kBoundOptions{
    {"decay", "", "decay model: powerlaw:c,q | geometric:c,b | explicit:p1,p2,..."},
    {"weights", "", "weight sequence: monomial:p | exponential:p"},
    {"tail", "", "tail function for the continuous rate-aware form: powerlaw:c,p | geometric:c,b"},
    {"growth", "", "VC growth function poly:d, m(x) = x^d + 1"},
    {"p", "", "moment order / rate (comma grid)"},
    {"r", "", "exponential rate r (comma grid)"},
    {"c1", "", "sum of event probabilities C1 (comma grid)"},
    {"k", "", "tail level k (comma grid)"},
    {"c", "", "tail constant c (comma grid)"},
    {"b", "", "geometric ratio b (comma grid)"},
    {"rate", "", "large-deviation rate (comma grid)"},
    {"C", "", "constant C (comma grid)"},
    {"ell", "", "VC sample size (comma grid)"},
    {"eps", "", "deviation level (comma grid)"},
    {"kt", "", "strong-error constant K_T (comma grid)"},
    {"T", "", "horizon T (comma grid)"},
    {"allow-divergent", "false", "report divergent series as inf instead of failing"},
};

const std::vector<OptionSpec> kVerifyOptions{
    {"decay", "", "decay model"},
    {"weights", "", "weight sequence for prop2.1 / thm2.2"},
    {"p", "", "moment order (comma grid)"},
    {"r", "", "exponential rate (comma grid)"},
    {"k", "", "tail level (comma grid)"},
    {"family", "", "families to simulate: independent,nested,union_dominated"},
    {"reps", "100000", "Monte-Carlo replications"},
    {"tail-tol", "1e-6", "truncation tolerance for the simulated tail mass"},
};

const std::vector<OptionSpec> kAppOptions{
    {"reps", "", "replications"},
    {"eps", "", "deviation levels (comma grid)"},
    {"eta", "0.1", "gc: exponential moment parameter eta < eps"},
    {"dist", "uniform", "gc: uniform | exponential[:rate]"},
    {"n-max", "", "horizon of the simulated sequence"},
    {"tested-n", "10,20,50,100,200,500,1000,2000", "gc: n at which P(D_n >= eps) is reported"},
    {"k-max", "5", "largest tail level k reported"},
    {"sampler", "rademacher", "slln: rademacher | normal | uniform | zero"},
    {"q", "3", "slln: moment index q"},
    {"p", "", "slln: order of E[O^p]; cramer: exponential rate for the LDP bound (comma grid)"},
    {"cgf", "gaussian", "cramer: gaussian[:mu,sigma] | rademacher | bernoulli:p"},
    {"mu", "", "sanov: distribution p1,p2,... (a single p means p,1-p); sde: drift [default 0.5]"},
    {"symbol", "0", "sanov: constrained symbol index"},
    {"t", "", "sanov: threshold (comma grid)"},
    {"alpha", "2", "lil: grid ratio (comma grid)"},
    {"p-head", "0.5", "segments: success probability"},
    {"threshold", "1", "segments: mean threshold of B = [t, 1]"},
    {"sigma", "0.1", "sde: volatility"},
    {"x0", "1", "sde: initial value"},
    {"T", "1", "sde: horizon"},
    {"sweep", "dyadic:4..9", "sde: step counts dyadic:lo..hi"},
};

// options read by each application (plus format and seed)
const std::map<std::string, std::set<std::string>> kAppUses{
    {"gc", {"reps", "eps", "eta", "dist", "n-max", "tested-n", "k-max"}},
    {"slln", {"reps", "eps", "n-max", "k-max", "sampler", "q", "p"}},
    {"lil", {"reps", "n-max", "k-max", "alpha"}},
    {"segments", {"reps", "eps", "n-max", "p-head", "threshold"}},
    {"cramer", {"eps", "p", "cgf"}},
    {"sanov", {"mu", "symbol", "t"}},
    {"sde", {"reps", "mu", "sigma", "x0", "T", "sweep"}},
};

const std::vector<OptionSpec> kExportOptions{
    {"decay", "", "decay model"},
    {"family", "independent", "independent | nested | union_dominated"},
    {"reps", "1000", "replications"},
    {"tail-tol", "1e-6", "truncation tolerance"},
};

const std::set<std::string> kFormulas{"prop2.1",     "thm2.2",      "cor2.3.poly", "cor2.3.exp", "lem2.6",   "thm2.7",
                                      "freedman.tail", "thm2.9",    "cor2.10",     "ex2.12.tail", "ex2.13.tail", "cor3.2",
                                      "cor3.4",      "cor3.5",      "thm3.16",     "vc.bound",   "sde.mdf"};
const std::set<std::string> kApps{"gc", "slln", "cramer", "sanov", "lil", "segments", "sde"};

[[noreturn]] void usage(const std::string& msg) { fail(ErrorKind::input, msg); }

/// Resolved option values (defaults < config file < flags).
class Params {
 public:
  std::map<std::string, std::string> values;

  bool has(const std::string& name) const {
    const auto it = values.find(name);
    return it != values.end() && !it->second.empty();
  }
  const std::string& str(const std::string& name) const {
    if (!has(name)) usage("missing required option --" + name);
    return values.at(name);
  }
  std::vector<double> grid(const std::string& name) const {
    const auto v = detail::parse_number_list(str(name));
    if (v.empty()) usage("option --" + name + " has no values");
    return v;
  }
  double num(const std::string& name) const {
    const auto v = grid(name);
    if (v.size() != 1) usage("option --" + name + " takes a single value");
    return v.front();
  }
  std::uint64_t count(const std::string& name) const {
    const std::string& s = str(name);
    try {
      std::size_t used = 0;
      if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
      const auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      usage("option --" + name + " must be a nonnegative integer (got '" + s + "')");
    }
  }
  bool flag(const std::string& name) const { return has(name) && (str(name) == "true" || str(name) == "1"); }
};

struct Run {
  std::string command;
  std::string target;
  Params params;
  std::string output = "-";
  bool deterministic = false;
  ExecutionOptions exec;

  json config() const {
    json opts = json::object();
    for (const auto& [k, v] : params.values) {
      if (!v.empty()) opts[k] = v;
    }
    json c{{"command", command}, {"options", opts}};
    if (!target.empty()) c["target"] = target;
    return c;
  }
  OutputFormat format() const { return parse_format(params.str("format")); }
};

// ---------------------------------------------------------------- output

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<json> records;  // one JSON object per row
  std::vector<std::string> notes;
  json extra = json::object();
};

std::string num_str(double v) { return detail::csv_number(v); }

void emit(const Run& run, const Table& t) {
  const json config = run.config();
  std::string out;
  switch (run.format()) {
    case OutputFormat::csv: {
      out = csv_preamble(config, run.deterministic);
      for (const auto& n : t.notes) out += "# " + n + "\n";
      for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
      out += "\n";
      for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_quote(row[i]);
        out += "\n";
      }
      break;
    }
    case OutputFormat::json: {
      json j{{"meta", meta_record(config, run.deterministic)}, {"results", t.records}};
      if (!t.extra.empty()) j["summary"] = t.extra;
      out = j.dump(2) + "\n";
      break;
    }
    case OutputFormat::jsonl: {
      json meta = meta_record(config, run.deterministic);
      if (!t.extra.empty()) meta["summary"] = t.extra;
      out = meta.dump() + "\n";
      for (const auto& r : t.records) out += r.dump() + "\n";
      break;
    }
  }
  write_output(run.output, out);
}

// ---------------------------------------------------------------- bound

using Point = std::map<std::string, double>;

std::vector<Point> cartesian(const Params& p, const std::vector<std::string>& names) {
  std::vector<Point> out{Point{}};
  for (const auto& n : names) {
    std::vector<Point> next;
    for (double v : p.grid(n)) {
      for (auto pt : out) {
        pt[n] = v;
        next.push_back(std::move(pt));
      }
    }
    out = std::move(next);
  }
  return out;
}

BoundResult from_tail(const std::string& id, const std::string& validity, json inputs, const TailBound& t) {
  BoundResult r;
  r.formula_id = id;
  r.validity = validity;
  r.inputs = std::move(inputs);
  r.value = t.value;
  r.minimizer = t.minimizer;
  r.extras["numeric"] = t.numeric;
  return r;
}

TailFunction parse_tail(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const auto args = colon == std::string::npos ? std::vector<double>{} : detail::parse_number_list(text.substr(colon + 1));
  if (kind == "powerlaw" && args.size() == 2) return power_tail(args[0], args[1]);
  if (kind == "geometric" && args.size() == 2) return geometric_tail(args[0], args[1]);
  usage("tail must be powerlaw:c,p or geometric:c,b (got '" + text + "')");
}

GrowthFunction parse_growth(const std::string& text) {
  if (text.rfind("poly:", 0) != 0) usage("growth must be poly:d (got '" + text + "')");
  const double d = std::stod(text.substr(5));
  return [d](double x) { return std::pow(x, d) + 1.0; };
}

struct FormulaDef {
  std::vector<std::string> text;
  std::vector<std::string> grid;
  std::function<BoundResult(const Params&, const Point&)> run;
};

FormulaDef formula(const std::string& id, const Params& params) {
  BoundOptions opts;
  opts.allow_divergent = params.flag("allow-divergent");
  const auto model = [&params] { return DecayModel::parse(params.str("decay")); };
  if (id == "prop2.1" || id == "thm2.2") {
    return {{"decay", "weights"}, {}, [=](const Params& p, const Point&) {
              const auto w = WeightSequence::parse(p.str("weights"));
              return id == "prop2.1" ? nested_moment_identity(w, model(), opts) : general_moment_bound(w, model(), opts);
            }};
  }
  if (id == "cor2.3.poly") return {{"decay"}, {"p"}, [=](const Params&, const Point& x) { return poly_moment_bound(x.at("p"), model(), opts); }};
  if (id == "cor2.3.exp") return {{"decay"}, {"p"}, [=](const Params&, const Point& x) { return exp_moment_bound(x.at("p"), model(), opts); }};
  if (id == "cor3.4") return {{"decay"}, {"p"}, [=](const Params&, const Point& x) { return mdf_polynomial(x.at("p"), model(), opts); }};
  if (id == "cor3.5") return {{"decay"}, {"p"}, [=](const Params&, const Point& x) { return mdf_exponential(x.at("p"), model(), opts); }};
  if (id == "cor3.2") return {{"decay"}, {}, [=](const Params&, const Point&) { return mdf_first_order(model(), opts); }};
  if (id == "lem2.6") {
    return {{}, {"c1"}, [](const Params&, const Point& x) {
              BoundResult r;
              r.formula_id = "lem2.6";
              r.validity = "independent events; bounds E[O^2]";
              r.inputs = json{{"C1", x.at("c1")}};
              r.value = second_moment_bound(x.at("c1"));
              return r;
            }};
  }
  if (id == "thm2.7") return {{}, {"c1", "r"}, [](const Params&, const Point& x) { return freedman_exp_bound(x.at("r"), x.at("c1")); }};
  if (id == "thm2.9") return {{}, {"c1", "r"}, [](const Params&, const Point& x) { return improved_exp_bound(x.at("r"), x.at("c1")); }};
  if (id == "freedman.tail") {
    return {{}, {"c1", "k"}, [](const Params&, const Point& x) {
              return from_tail("freedman.tail", "independent events; P(O >= k) <= inf_r exp(-kr + C1(e^r - 1))",
                               json{{"C1", x.at("c1")}, {"k", x.at("k")}}, freedman_tail_bound(x.at("k"), x.at("c1")));
            }};
  }
  if (id == "cor2.10") {
    if (params.has("tail")) {
      return {{"tail"}, {"r"}, [](const Params& p, const Point& x) { return rate_aware_exp_bound(x.at("r"), parse_tail(p.str("tail"))); }};
    }
    return {{"decay"}, {"r"}, [=](const Params&, const Point& x) { return rate_aware_exp_bound(x.at("r"), model()); }};
  }
  if (id == "ex2.12.tail") {
    return {{}, {"k", "c", "p"}, [](const Params&, const Point& x) {
              return from_tail("ex2.12.tail", "power-law tail L(m) = c/m^p, delta = 2, k >= 8",
                               json{{"k", x.at("k")}, {"c", x.at("c")}, {"p", x.at("p")}},
                               powerlaw_tail_asymptotic(x.at("k"), x.at("c"), x.at("p")));
            }};
  }
  if (id == "ex2.13.tail") {
    return {{}, {"k", "c", "b"}, [](const Params&, const Point& x) {
              return from_tail("ex2.13.tail", "geometric tail L(m) = c b^m, delta = 2",
                               json{{"k", x.at("k")}, {"c", x.at("c")}, {"b", x.at("b")}},
                               geometric_tail_bound(x.at("k"), x.at("c"), x.at("b")));
            }};
  }
  if (id == "thm3.16") {
    return {{}, {"rate", "p", "C"}, [](const Params&, const Point& x) { return ldp_mdf_bound(x.at("rate"), x.at("p"), x.at("C")); }};
  }
  if (id == "vc.bound") {
    return {{"growth"}, {"ell", "eps"}, [](const Params& p, const Point& x) {
              BoundResult r;
              r.formula_id = "vc.bound";
              r.validity = "ell >= 2/eps^2; P(sup deviation > eps) <= 4 m(2 ell) exp(-eps^2 ell / 8)";
              r.inputs = json{{"ell", x.at("ell")}, {"eps", x.at("eps")}, {"growth", p.str("growth")}};
              r.value = vc_bound(x.at("ell"), x.at("eps"), parse_growth(p.str("growth")));
              return r;
            }};
  }
  if (id == "sde.mdf") {
    return {{}, {"kt", "C", "T", "eps"}, [](const Params&, const Point& x) {
              return sde_mdf_bound(x.at("kt"), x.at("C"), x.at("T"), x.at("eps"));
            }};
  }
  usage("unknown formula '" + id + "'");
}

int cmd_bound(const Run& run) {
  const FormulaDef def = formula(run.target, run.params);
  Table t;
  t.columns = {"formula"};
  for (const auto& n : def.text) t.columns.push_back(n);
  for (const auto& n : def.grid) t.columns.push_back(n);
  for (const char* c : {"value", "minimizer", "numeric", "validity"}) t.columns.emplace_back(c);
  for (const auto& pt : cartesian(run.params, def.grid)) {
    const BoundResult r = def.run(run.params, pt);
    std::vector<std::string> row{run.target};
    for (const auto& n : def.text) row.push_back(run.params.str(n));
    for (const auto& n : def.grid) row.push_back(num_str(pt.at(n)));
    row.push_back(r.infinite ? "inf" : num_str(r.value));
    row.push_back(r.minimizer ? num_str(*r.minimizer) : "");
    row.push_back(r.extras.contains("numeric") ? num_str(r.extras["numeric"].get<double>()) : "");
    row.push_back(r.validity);
    t.rows.push_back(std::move(row));
    t.records.push_back(r.to_json());
  }
  emit(run, t);
  return kExitOk;
}

// ---------------------------------------------------------------- verify

struct Check {
  std::string family;
  std::string functional;
  double theoretical = 0.0;
  EmpiricalMoment empirical;
  bool equality = false;

  bool pass() const {
    const double slack = 4.0 * empirical.stderr_ + 1e-12 * std::abs(theoretical);
    return equality ? std::abs(empirical.estimate - theoretical) <= slack : empirical.estimate <= theoretical + slack;
  }
};

std::vector<FamilyKind> families(const Params& p, const std::vector<FamilyKind>& fallback,
                                 const std::vector<FamilyKind>& allowed, const std::string& id) {
  std::vector<FamilyKind> out;
  if (!p.has("family")) return fallback;
  std::string s = p.str("family");
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const auto item = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const FamilyKind k = parse_family(item);
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      usage("formula " + id + " cannot be verified on the " + to_string(k) + " family");
    }
    out.push_back(k);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int cmd_verify(const Run& run) {
  const Params& p = run.params;
  const std::string& id = run.target;
  if (!kFormulas.count(id)) usage("unknown formula '" + id + "'");
  const std::size_t reps = p.count("reps");
  if (reps == 0) usage("--reps must be >= 1");
  const std::uint64_t seed = p.count("seed");
  const double tol = p.num("tail-tol");
  const DecayModel model = DecayModel::parse(p.str("decay"));

  const std::vector<FamilyKind> all{FamilyKind::independent, FamilyKind::nested, FamilyKind::union_dominated};
  const std::vector<FamilyKind> indep{FamilyKind::independent};
  const std::vector<FamilyKind> marginal{FamilyKind::independent, FamilyKind::nested};

  // functional on the count, theoretical value, equality?, allowed families, default families, exp rate
  struct Item {
    std::string name;
    std::function<double(double)> f;
    double theory;
    bool equality;
  };
  std::vector<Item> items;
  std::vector<FamilyKind> fams;
  double exp_rate = 0.0;
  const double c1 = tail_sum(model, 1).value;

  if (id == "prop2.1" || id == "thm2.2") {
    const auto w = WeightSequence::parse(p.str("weights"));
    const bool nested = id == "prop2.1";
    const BoundResult b = nested ? nested_moment_identity(w, model) : general_moment_bound(w, model);
    items.push_back({"E[S(O)], S(N) = sum_{n<=N} " + w.describe(), [w](double c) { return w.partial_sum(static_cast<std::size_t>(c)); },
                     b.value, nested});
    fams = nested ? families(p, {FamilyKind::nested}, {FamilyKind::nested}, id) : families(p, all, all, id);
    if (const auto* e = std::get_if<WeightSequence::Exponential>(&w.variant())) exp_rate = e->rate;
  } else if (id == "cor2.3.poly" || id == "cor3.4") {
    for (double q : p.grid("p")) {
      const BoundResult b = id == "cor3.4" ? mdf_polynomial(q, model) : poly_moment_bound(q, model);
      const auto fn = Functional::power(q + 1.0);
      items.push_back({fn.describe(), fn, b.value, false});
    }
    fams = families(p, all, all, id);
  } else if (id == "cor2.3.exp" || id == "cor3.5") {
    for (double q : p.grid("p")) {
      const BoundResult b = id == "cor3.5" ? mdf_exponential(q, model) : exp_moment_bound(q, model);
      const auto fn = Functional::exp(q);
      items.push_back({fn.describe(), fn, b.value, false});
      exp_rate = std::max(exp_rate, q);
    }
    fams = families(p, all, all, id);
  } else if (id == "cor3.2") {
    const auto fn = Functional::power(1.0);
    items.push_back({fn.describe(), fn, mdf_first_order(model).value, true});
    fams = families(p, marginal, marginal, id);
  } else if (id == "thm2.7" || id == "thm2.9" || id == "cor2.10") {
    for (double r : p.grid("r")) {
      const BoundResult b = id == "thm2.7" ? freedman_exp_bound(r, c1)
                            : id == "thm2.9" ? improved_exp_bound(r, c1)
                                             : rate_aware_exp_bound(r, model);
      const auto fn = Functional::exp(r);
      items.push_back({fn.describe(), fn, b.value, false});
      exp_rate = std::max(exp_rate, r);
    }
    fams = families(p, indep, indep, id);
  } else if (id == "lem2.6") {
    const auto fn = Functional::power(2.0);
    items.push_back({fn.describe(), fn, second_moment_bound(c1), false});
    fams = families(p, indep, indep, id);
  } else if (id == "freedman.tail") {
    for (double k : p.grid("k")) {
      const auto fn = Functional::tail(k);
      items.push_back({fn.describe(), fn, freedman_tail_bound(k, c1).value, false});
    }
    fams = families(p, indep, indep, id);
  } else {
    usage("formula " + id + " has no verification route (it does not bound an overlap count of a decay model)");
  }

  std::vector<Check> checks;
  for (FamilyKind fam : fams) {
    const auto spec = EventFamilySpec::make(fam, model, tol, exp_rate);
    const OverlapSample sample = simulate_overlap(spec, reps, seed, run.exec);
    for (const auto& it : items) {
      std::vector<double> v(sample.counts.size());
      std::transform(sample.counts.begin(), sample.counts.end(), v.begin(), [&](std::uint32_t c) { return it.f(c); });
      checks.push_back({to_string(fam), it.name, it.theory, mean_with_stderr(v, it.name), it.equality});
    }
  }
  // exact route for independent families of an explicit model
  const auto* ex = model.get_if<DecayModel::Explicit>();
  if (ex && std::find(fams.begin(), fams.end(), FamilyKind::independent) != fams.end() &&
      ex->probabilities.size() <= 10000) {
    std::vector<double> probs;
    for (std::size_t n = 1; n <= ex->probabilities.size(); ++n) probs.push_back(eval_decay(model, n));
    const auto dist = sn_exact_distribution(probs);
    for (const auto& it : items) {
      EmpiricalMoment m;
      m.estimate = dist.expectation([&](std::size_t k) { return it.f(static_cast<double>(k)); });
      m.reps = 0;
      m.functional = it.name;
      checks.push_back({"exact", it.name, it.theory, m, it.equality && id != "prop2.1"});
    }
  }

  Table t;
  t.columns = {"formula", "family", "functional", "theoretical", "empirical", "stderr", "reps", "seed", "pass"};
  bool all_pass = true;
  for (const auto& c : checks) {
    const bool ok = c.pass();
    all_pass = all_pass && ok;
    t.rows.push_back({id, c.family, c.functional, num_str(c.theoretical), num_str(c.empirical.estimate),
                      num_str(c.empirical.stderr_), std::to_string(c.empirical.reps), std::to_string(seed),
                      ok ? "true" : "false"});
    t.records.push_back(json{{"formula", id},
                             {"family", c.family},
                             {"functional", c.functional},
                             {"theoretical", c.theoretical},
                             {"empirical", c.empirical.estimate},
                             {"stderr", c.empirical.stderr_},
                             {"reps", c.empirical.reps},
                             {"seed", seed},
                             {"criterion", c.equality ? "|empirical - theoretical| <= 4 stderr" : "empirical <= theoretical + 4 stderr"},
                             {"pass", ok}});
  }
  t.extra = json{{"pass", all_pass}};
  emit(run, t);
  return all_pass ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------- app

Table mdf_table(const MDFReport& report) {
  Table t;
  t.columns = {"application", "epsilon", "order", "theoretical", "empirical", "stderr", "reps", "seed"};
  const json j = to_json(report);
  for (const auto& r : report.rows) {
    t.rows.push_back({report.application, num_str(r.epsilon), r.order,
                      r.theoretical ? num_str(*r.theoretical) : std::string("NA"), num_str(r.empirical.estimate),
                      num_str(r.empirical.stderr_), std::to_string(r.empirical.reps), std::to_string(report.seed)});
  }
  for (const auto& row : j["rows"]) {
    json rec = row;
    rec["application"] = report.application;
    rec["seed"] = report.seed;
    t.records.push_back(std::move(rec));
  }
  t.extra = json{{"parameters", report.parameters}, {"consistent", report.consistent()}};
  if (!report.extras.empty()) t.extra["extras"] = report.extras;
  return t;
}

Cgf parse_cgf(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const auto args = colon == std::string::npos ? std::vector<double>{} : detail::parse_number_list(text.substr(colon + 1));
  if (kind == "gaussian" && args.empty()) return gaussian_cgf();
  if (kind == "gaussian" && args.size() == 2) return gaussian_cgf(args[0], args[1]);
  if (kind == "rademacher" && args.empty()) return rademacher_cgf();
  if (kind == "bernoulli" && args.size() == 1) return bernoulli_cgf(args[0]);
  usage("cgf must be gaussian[:mu,sigma], rademacher or bernoulli:p (got '" + text + "')");
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num_str(v[i]);
  return s;
}

int cmd_app(const Run& run) {
  const Params& p = run.params;
  const std::string& app = run.target;
  if (!kApps.count(app)) usage("unknown application '" + app + "' (gc, slln, cramer, sanov, lil, segments, sde)");
  const std::uint64_t seed = p.count("seed");
  const auto reps_or = [&](std::size_t fallback) { return p.has("reps") ? p.count("reps") : fallback; };
  const auto n_max_or = [&](std::size_t fallback) { return p.has("n-max") ? p.count("n-max") : fallback; };
  const auto eps_or = [&](std::vector<double> fallback) { return p.has("eps") ? p.grid("eps") : fallback; };
  Table t;
  bool consistent = true;

  if (app == "gc") {
    GcConfig cfg;
    cfg.dist = parse_distribution(p.str("dist"));
    cfg.eps = eps_or({0.2});
    cfg.eta = p.num("eta");
    cfg.n_max = n_max_or(2000);
    cfg.tested_n.clear();
    for (double n : p.grid("tested-n")) cfg.tested_n.push_back(static_cast<std::size_t>(n));
    cfg.reps = reps_or(10000);
    cfg.seed = seed;
    cfg.k_max = static_cast<int>(p.count("k-max"));
    const auto res = gc_simulate(cfg, run.exec);
    t = mdf_table(res.report);
    consistent = res.report.consistent();
  } else if (app == "slln") {
    SllnConfig cfg;
    cfg.sampler = parse_slln_sampler(p.str("sampler"));
    cfg.q = static_cast<int>(p.count("q"));
    cfg.p = p.has("p") ? p.num("p") : 1.0;
    cfg.eps = eps_or({0.5});
    cfg.n_max = n_max_or(10000);
    cfg.reps = reps_or(1000);
    cfg.seed = seed;
    cfg.k_max = static_cast<int>(p.count("k-max"));
    const auto res = slln_mdf_report(cfg, run.exec);
    t = mdf_table(res.report);
  } else if (app == "lil") {
    MDFReport merged;
    merged.application = "lil";
    merged.seed = seed;
    for (double alpha : p.grid("alpha")) {
      LilConfig cfg;
      cfg.alpha = alpha;
      cfg.n_max = static_cast<int>(n_max_or(40));
      cfg.reps = reps_or(1000);
      cfg.seed = seed;
      cfg.k_max = static_cast<int>(p.count("k-max"));
      const auto res = lil_simulate(cfg, run.exec);
      merged.reps = cfg.reps;
      for (const auto& r : res.report.rows) merged.rows.push_back(r);
      merged.parameters["alpha=" + num_str(alpha)] = res.report.parameters;
    }
    t = mdf_table(merged);
    consistent = merged.consistent();
  } else if (app == "segments") {
    SegmentsConfig cfg;
    cfg.p_head = p.num("p-head");
    cfg.threshold = p.num("threshold");
    cfg.eps = eps_or({0.1});
    cfg.n_max = n_max_or(100000);
    cfg.reps = reps_or(200);
    cfg.seed = seed;
    const auto res = rare_segments(cfg, run.exec);
    t = mdf_table(res.report);
  } else if (app == "cramer") {
    const Cgf cgf = parse_cgf(p.str("cgf"));
    const std::vector<double> ps = p.has("p") ? p.grid("p") : std::vector<double>{};
    t.columns = {"application", "cgf", "epsilon", "rate", "argmin", "tilt", "p", "ldp_bound"};
    for (double eps : eps_or({1.0})) {
      const auto r = cramer_rate(cgf, eps);
      json rec{{"application", "cramer"}, {"cgf", p.str("cgf")}, {"epsilon", eps}, {"rate", r.rate},
               {"argmin", r.argmin.front()}, {"tilt", r.tilt}, {"method", r.method}};
      if (ps.empty()) {
        t.rows.push_back({"cramer", p.str("cgf"), num_str(eps), num_str(r.rate), num_str(r.argmin.front()),
                          num_str(r.tilt), "", ""});
        t.records.push_back(rec);
      }
      for (double q : ps) {
        // two-sided Chernoff: P(|S_n/n - m| >= eps) <= 2 e^{-n rate}
        const BoundResult b = ldp_mdf_bound(r.rate, q, 2.0);
        t.rows.push_back({"cramer", p.str("cgf"), num_str(eps), num_str(r.rate), num_str(r.argmin.front()),
                          num_str(r.tilt), num_str(q), num_str(b.value)});
        json withp = rec;
        withp["p"] = q;
        withp["ldp_bound"] = b.to_json();
        t.records.push_back(withp);
      }
    }
  } else if (app == "sanov") {
    std::vector<double> mu = detail::parse_number_list(p.str("mu"));
    if (mu.size() == 1) mu.push_back(1.0 - mu[0]);
    const std::size_t a = p.count("symbol");
    t.columns = {"application", "mu", "symbol", "t", "rate", "argmin", "tilt"};
    for (double thr : p.grid("t")) {
      const auto r = sanov_rate(mu, a, thr);
      t.rows.push_back({"sanov", join(mu), std::to_string(a), num_str(thr), num_str(r.rate), join(r.argmin), num_str(r.tilt)});
      t.records.push_back(json{{"application", "sanov"}, {"mu", mu}, {"symbol", a}, {"t", thr}, {"rate", r.rate},
                               {"argmin", r.argmin}, {"tilt", std::isfinite(r.tilt) ? json(r.tilt) : json("inf")}});
    }
  } else if (app == "sde") {
    const auto problem = geometric_brownian_motion(p.has("mu") ? p.num("mu") : 0.5, p.num("sigma"), p.num("x0"), p.num("T"));
    const auto res = strong_error_estimate(problem, parse_sweep(p.str("sweep")), reps_or(10000), seed, run.exec);
    t.columns = {"delta", "mean_abs_error", "stderr", "reps"};
    for (const auto& row : res.rows) {
      t.rows.push_back({num_str(row.delta), num_str(row.error.estimate), num_str(row.error.stderr_), std::to_string(row.error.reps)});
      t.records.push_back(json{{"delta", row.delta}, {"mean_abs_error", row.error.estimate}, {"stderr", row.error.stderr_},
                               {"reps", row.error.reps}});
    }
    t.notes.push_back("regression slope=" + num_str(res.regression.slope) + " stderr=" + num_str(res.regression.slope_stderr));
    t.extra = json{{"problem", res.problem},
                   {"slope", res.regression.slope},
                   {"slope_stderr", res.regression.slope_stderr},
                   {"intercept", res.regression.intercept}};
  }
  emit(run, t);
  return consistent ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------- export

int cmd_export(const Run& run) {
  const Params& p = run.params;
  const std::size_t reps = p.count("reps");
  if (reps == 0) usage("--reps must be >= 1");
  const auto spec = EventFamilySpec::make(parse_family(p.str("family")), DecayModel::parse(p.str("decay")), p.num("tail-tol"));
  const OverlapSample s = simulate_overlap(spec, reps, p.count("seed"), run.exec);
  Table t;
  t.columns = {"rep", "count"};
  for (std::size_t i = 0; i < s.counts.size(); ++i) {
    t.rows.push_back({std::to_string(i), std::to_string(s.counts[i])});
    t.records.push_back(json{{"rep", i}, {"count", s.counts[i]}});
  }
  t.extra = json{{"spec", s.family}, {"seed", s.seed}, {"truncation", s.truncation}, {"reps", s.reps}};
  emit(run, t);
  return kExitOk;
}

// ---------------------------------------------------------------- main

struct Sub {
  CLI::App* app;
  std::vector<OptionSpec> specs;
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> opts;
  std::string target;
};

void add_options(Sub& s) {
  for (const auto& spec : s.specs) {
    if (spec.name == "allow-divergent") {
      s.opts[spec.name] = s.app->add_flag_callback("--allow-divergent", [&s] { s.raw["allow-divergent"] = "true"; }, spec.help);
      continue;
    }
    std::string help = spec.help;
    if (!spec.fallback.empty()) help += " [default " + spec.fallback + "]";
    s.opts[spec.name] = s.app->add_option("--" + spec.name, s.raw[spec.name], help);
  }
}

int real_main(int argc, char** argv) {
  CLI::App cli{"bcmoments: overlap-count moment bounds, verification and MDF applications"};
  cli.require_subcommand(0, 1);
  cli.fallthrough();
  std::string output = "-";
  std::string config_path;
  unsigned threads = 1;
  bool deterministic = false;
  cli.add_option("-o,--output", output, "output file, '-' for stdout")->capture_default_str();
  cli.add_option("--config", config_path, "JSON config, or a previous output file whose header is reused");
  cli.add_option("--threads", threads, "worker threads (0 = all cores); never changes results")->capture_default_str();
  cli.add_flag("--deterministic", deterministic, "omit the timestamp so outputs are byte-reproducible");

  std::map<std::string, Sub> subs;
  const auto make = [&](const std::string& name, const std::string& desc, std::vector<OptionSpec> specs,
                        const std::string& target_name) {
    Sub& s = subs[name];
    s.app = cli.add_subcommand(name, desc);
    s.specs = kCommonOptions;
    s.specs.insert(s.specs.end(), specs.begin(), specs.end());
    if (name == "export") s.specs.front().fallback = "jsonl";
    if (name == "bound") s.specs.erase(s.specs.begin() + 1);  // no seed
    if (!target_name.empty()) {
      s.app->add_option(target_name, s.target, target_name == "formula" ? "formula id" : "application name");
    }
    add_options(s);
  };
  make("bound", "evaluate a bound over parameter grids", kBoundOptions, "formula");
  make("verify", "check a bound against simulation or exact enumeration", kVerifyOptions, "formula");
  make("app", "run an MDF application", kAppOptions, "application");
  make("export", "export a simulated overlap sample", kExportOptions, "");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return kExitUsage;
  }

  json file_config = json::object();
  if (!config_path.empty()) file_config = extract_config(read_file(config_path));

  Run run;
  run.output = output;
  run.deterministic = deterministic;
  run.exec.threads = threads;
  const auto chosen = cli.get_subcommands();
  if (!chosen.empty()) {
    run.command = chosen.front()->get_name();
  } else if (file_config.contains("command")) {
    run.command = file_config["command"].get<std::string>();
  } else {
    std::cerr << cli.help();
    return kExitUsage;
  }
  if (file_config.contains("command") && file_config["command"] != run.command) {
    usage("config is for '" + file_config["command"].get<std::string>() + "', not '" + run.command + "'");
  }
  Sub& sub = subs.at(run.command);
  run.target = sub.target;
  if (run.target.empty() && file_config.contains("target")) run.target = file_config["target"].get<std::string>();
  if (run.target.empty() && run.command != "export") usage(run.command + " needs a " + (run.command == "app" ? "application" : "formula"));

  const json file_opts = file_config.value("options", json::object());
  for (const auto& [key, value] : file_opts.items()) {
    if (!sub.opts.count(key)) usage("config option '" + key + "' is not valid for " + run.command);
  }
  for (const auto& spec : sub.specs) {
    std::string v = spec.fallback;
    if (file_opts.contains(spec.name)) {
      const auto& fv = file_opts[spec.name];
      v = fv.is_string() ? fv.get<std::string>() : fv.dump();
    }
    if (sub.opts.at(spec.name)->count() > 0) v = sub.raw[spec.name];
    run.params.values[spec.name] = v;
  }

  if (run.command == "app") {
    const auto uses = kAppUses.find(run.target);
    if (uses == kAppUses.end()) usage("unknown application '" + run.target + "' (gc, slln, cramer, sanov, lil, segments, sde)");
    for (auto it = run.params.values.begin(); it != run.params.values.end();) {
      const bool common = it->first == "format" || it->first == "seed";
      if (common || uses->second.count(it->first)) {
        ++it;
        continue;
      }
      if (sub.opts.at(it->first)->count() > 0 || file_opts.contains(it->first)) {
        usage("option --" + it->first + " is not used by app " + run.target);
      }
      it = run.params.values.erase(it);
    }
  }
  if (run.command == "bound") {
    if (!kFormulas.count(run.target)) usage("unknown formula '" + run.target + "'");
    return cmd_bound(run);
  }
  if (run.command == "verify") return cmd_verify(run);
  if (run.command == "app") return cmd_app(run);
  return cmd_export(run);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return real_main(argc, argv);
  } catch (const bcmoments::Error& e) {
    std::cerr << "bcmoments: " << e.what() << "\n";
    switch (e.kind()) {
      case bcmoments::ErrorKind::io: return kExitIo;
      case bcmoments::ErrorKind::input: return kExitUsage;
      default: return kExitDomain;
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "bcmoments: config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "bcmoments: " << e.what() << "\n";
    return kExitUsage;
  }
}
