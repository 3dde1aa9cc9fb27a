#include "mediator/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mediator/errors.hpp"
#include "mediator/rng.hpp"

namespace mediator {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Expression builders and evaluation
// ---------------------------------------------------------------------------

namespace {
ExprPtr node(Expr::Kind k) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  return e;
}
}  // namespace

ExprPtr e_const(double v) {
  auto e = node(Expr::Kind::kConst);
  e->value = v;
  return e;
}
ExprPtr e_var(std::string name) {
  auto e = node(Expr::Kind::kVar);
  e->name = std::move(name);
  return e;
}
ExprPtr e_noise() { return node(Expr::Kind::kNoise); }
ExprPtr e_add(std::vector<ExprPtr> args) {
  auto e = node(Expr::Kind::kAdd);
  e->args = std::move(args);
  return e;
}
ExprPtr e_sub(ExprPtr a, ExprPtr b) {
  auto e = node(Expr::Kind::kSub);
  e->args = {std::move(a), std::move(b)};
  return e;
}
ExprPtr e_mul(std::vector<ExprPtr> args) {
  auto e = node(Expr::Kind::kMul);
  e->args = std::move(args);
  return e;
}
ExprPtr e_sigmoid(ExprPtr a) {
  auto e = node(Expr::Kind::kSigmoid);
  e->args = {std::move(a)};
  return e;
}
ExprPtr e_step(ExprPtr a) {
  auto e = node(Expr::Kind::kStep);
  e->args = {std::move(a)};
  return e;
}
ExprPtr e_min(ExprPtr a, ExprPtr b) {
  auto e = node(Expr::Kind::kMin);
  e->args = {std::move(a), std::move(b)};
  return e;
}
ExprPtr e_max(ExprPtr a, ExprPtr b) {
  auto e = node(Expr::Kind::kMax);
  e->args = {std::move(a), std::move(b)};
  return e;
}

ExprPtr e_lin(double intercept, std::vector<std::pair<double, std::string>> terms, bool plus_noise) {
  std::vector<ExprPtr> args;
  args.push_back(e_const(intercept));
  for (auto& [coef, name] : terms) args.push_back(e_mul({e_const(coef), e_var(std::move(name))}));
  if (plus_noise) args.push_back(e_noise());
  return e_add(std::move(args));
}

namespace {

double eval_expr(const Expr& e, const std::vector<double>& values, double noise) {
  switch (e.kind) {
    case Expr::Kind::kConst:
      return e.value;
    case Expr::Kind::kVar:
      return values[static_cast<std::size_t>(e.slot)];
    case Expr::Kind::kNoise:
      return noise;
    case Expr::Kind::kAdd: {
      double s = 0.0;
      for (const auto& a : e.args) s += eval_expr(*a, values, noise);
      return s;
    }
    case Expr::Kind::kSub:
      return eval_expr(*e.args[0], values, noise) - eval_expr(*e.args[1], values, noise);
    case Expr::Kind::kMul: {
      double s = 1.0;
      for (const auto& a : e.args) s *= eval_expr(*a, values, noise);
      return s;
    }
    case Expr::Kind::kSigmoid:
      return 1.0 / (1.0 + std::exp(-eval_expr(*e.args[0], values, noise)));
    case Expr::Kind::kStep:
      return eval_expr(*e.args[0], values, noise) >= 0.0 ? 1.0 : 0.0;
    case Expr::Kind::kMin:
      return std::min(eval_expr(*e.args[0], values, noise), eval_expr(*e.args[1], values, noise));
    case Expr::Kind::kMax:
      return std::max(eval_expr(*e.args[0], values, noise), eval_expr(*e.args[1], values, noise));
  }
  throw EquationEvalError("unknown expression node");
}

double sample_noise(const NoiseSpec& ns, Rng& rng) {
  switch (ns.dist) {
    case NoiseSpec::Dist::kNormal:
      return rng.normal(ns.a, ns.b);
    case NoiseSpec::Dist::kUniform:
      return rng.uniform(ns.a, ns.b);
    case NoiseSpec::Dist::kBernoulli:
      return rng.bernoulli(ns.a) ? 1.0 : 0.0;
  }
  throw EquationEvalError("unknown noise distribution");
}

int role_rank(VarRole r) {
  switch (r) {
    case VarRole::kW: return 0;
    case VarRole::kA: return 1;
    case VarRole::kZ: return 2;
    case VarRole::kM: return 3;
    case VarRole::kY: return 4;
  }
  return 5;
}

void resolve(Expr& e, const std::map<std::string, int>& slots) {
  if (e.kind == Expr::Kind::kVar) {
    auto it = slots.find(e.name);
    if (it == slots.end()) throw ValidationError("equation references unknown variable: " + e.name);
    e.slot = it->second;
  }
  for (auto& a : e.args) resolve(*a, slots);
}

}  // namespace

void Scm::compile() {
  if (equations.empty()) throw ValidationError("SCM has no equations");
  std::map<std::string, int> slots;
  int rank = 0;
  int n_a = 0, n_y = 0;
  for (std::size_t i = 0; i < equations.size(); ++i) {
    Equation& eq = equations[i];
    if (eq.name.empty()) throw ValidationError("SCM equation without a name");
    if (slots.count(eq.name)) throw ValidationError("duplicate SCM variable: " + eq.name);
    const int r = role_rank(eq.role);
    if (r < rank)
      throw ValidationError("SCM equations must follow the order W, A, Z, M, Y (violated at " +
                            eq.name + ")");
    rank = r;
    if (eq.role == VarRole::kA) ++n_a;
    if (eq.role == VarRole::kY) ++n_y;
    if (!eq.expr) throw ValidationError("SCM equation " + eq.name + " has no expression");
    resolve(*eq.expr, slots);  // only previously defined variables are visible
    slots[eq.name] = static_cast<int>(i);
  }
  if (n_a != 1) throw ValidationError("SCM needs exactly one treatment equation");
  if (n_y != 1) throw ValidationError("SCM needs exactly one outcome equation");
  if (block(VarRole::kM).empty()) throw ValidationError("SCM needs at least one mediator equation");
}

std::vector<std::size_t> Scm::block(VarRole role) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < equations.size(); ++i)
    if (equations[i].role == role) idx.push_back(i);
  return idx;
}

VariableRoles Scm::roles() const {
  VariableRoles r;
  for (const auto& eq : equations) {
    switch (eq.role) {
      case VarRole::kW: r.covariates.push_back(eq.name); break;
      case VarRole::kA: r.treatment = eq.name; break;
      case VarRole::kZ: r.moc.push_back(eq.name); break;
      case VarRole::kM: r.mediators.push_back(eq.name); break;
      case VarRole::kY: r.outcome = eq.name; break;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// JSON round trip
// ---------------------------------------------------------------------------

namespace {

json expr_to_json(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::kConst: return e.value;
    case Expr::Kind::kVar: return e.name;
    case Expr::Kind::kNoise: return "u";
    default: break;
  }
  const char* op = e.kind == Expr::Kind::kAdd       ? "add"
                   : e.kind == Expr::Kind::kSub     ? "sub"
                   : e.kind == Expr::Kind::kMul     ? "mul"
                   : e.kind == Expr::Kind::kSigmoid ? "sigmoid"
                   : e.kind == Expr::Kind::kStep    ? "step"
                   : e.kind == Expr::Kind::kMin     ? "min"
                                                    : "max";
  json arr = json::array();
  arr.push_back(op);
  for (const auto& a : e.args) arr.push_back(expr_to_json(*a));
  return arr;
}

ExprPtr expr_from_json(const json& j) {
  if (j.is_number()) return e_const(j.get<double>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    return s == "u" ? e_noise() : e_var(s);
  }
  if (!j.is_array() || j.empty() || !j[0].is_string())
    throw ValidationError("bad SCM expression: " + j.dump());
  const std::string op = j[0].get<std::string>();
  std::vector<ExprPtr> args;
  for (std::size_t i = 1; i < j.size(); ++i) args.push_back(expr_from_json(j[i]));
  if (op == "add") return e_add(std::move(args));
  if (op == "mul") return e_mul(std::move(args));
  auto need = [&](std::size_t k) {
    if (args.size() != k) throw ValidationError("operator " + op + " expects " + std::to_string(k) + " args");
  };
  if (op == "sub") { need(2); return e_sub(args[0], args[1]); }
  if (op == "sigmoid") { need(1); return e_sigmoid(args[0]); }
  if (op == "step") { need(1); return e_step(args[0]); }
  if (op == "min") { need(2); return e_min(args[0], args[1]); }
  if (op == "max") { need(2); return e_max(args[0], args[1]); }
  throw ValidationError("unknown SCM operator: " + op);
}

std::string role_to_string(VarRole r) {
  switch (r) {
    case VarRole::kW: return "W";
    case VarRole::kA: return "A";
    case VarRole::kZ: return "Z";
    case VarRole::kM: return "M";
    case VarRole::kY: return "Y";
  }
  return "?";
}

VarRole role_from_string(const std::string& s) {
  if (s == "W") return VarRole::kW;
  if (s == "A") return VarRole::kA;
  if (s == "Z") return VarRole::kZ;
  if (s == "M") return VarRole::kM;
  if (s == "Y") return VarRole::kY;
  throw ValidationError("unknown SCM role: " + s);
}

json noise_to_json(const NoiseSpec& ns) {
  json j;
  switch (ns.dist) {
    case NoiseSpec::Dist::kNormal:
      j["dist"] = "normal";
      j["mean"] = ns.a;
      j["sd"] = ns.b;
      break;
    case NoiseSpec::Dist::kUniform:
      j["dist"] = "uniform";
      j["lo"] = ns.a;
      j["hi"] = ns.b;
      break;
    case NoiseSpec::Dist::kBernoulli:
      j["dist"] = "bernoulli";
      j["p"] = ns.a;
      break;
  }
  return j;
}

NoiseSpec noise_from_json(const json& j) {
  NoiseSpec ns;
  const std::string d = j.at("dist").get<std::string>();
  if (d == "normal") {
    ns.dist = NoiseSpec::Dist::kNormal;
    ns.a = j.value("mean", 0.0);
    ns.b = j.value("sd", 1.0);
  } else if (d == "uniform") {
    ns.dist = NoiseSpec::Dist::kUniform;
    ns.a = j.value("lo", 0.0);
    ns.b = j.value("hi", 1.0);
  } else if (d == "bernoulli") {
    ns.dist = NoiseSpec::Dist::kBernoulli;
    ns.a = j.value("p", 0.5);
  } else {
    throw ValidationError("unknown noise distribution: " + d);
  }
  return ns;
}

}  // namespace

Scm scm_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("bad SCM JSON: ") + e.what());
  }
  Scm scm;
  scm.seed = j.value("seed", 0ULL);
  for (const auto& v : j.at("variables")) {
    Equation eq;
    eq.name = v.at("name").get<std::string>();
    eq.role = role_from_string(v.at("role").get<std::string>());
    eq.noise = noise_from_json(v.at("noise"));
    eq.expr = expr_from_json(v.at("expr"));
    scm.equations.push_back(std::move(eq));
  }
  scm.compile();
  return scm;
}

std::string scm_to_json_text(const Scm& scm) {
  json j;
  j["seed"] = scm.seed;
  j["variables"] = json::array();
  for (const auto& eq : scm.equations) {
    json v;
    v["name"] = eq.name;
    v["role"] = role_to_string(eq.role);
    v["noise"] = noise_to_json(eq.noise);
    v["expr"] = expr_to_json(*eq.expr);
    j["variables"].push_back(v);
  }
  return j.dump(2) + "\n";
}

Scm load_scm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open SCM file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scm_from_json_text(ss.str());
}

void save_scm(const Scm& scm, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write SCM file: " + path);
  out << scm_to_json_text(scm);
}

// ---------------------------------------------------------------------------
// Simulation and counterfactual evaluation
// ---------------------------------------------------------------------------

namespace {

/// One draw's exogenous noise bundle plus branch evaluators. Values are
/// indexed by equation slot.
struct Draw {
  const Scm* scm;
  std::vector<double> noise;    // natural noise per equation
  std::vector<double> natural;  // natural values per equation

  explicit Draw(const Scm& s, Rng& rng) : scm(&s) {
    noise.resize(s.equations.size());
    natural.resize(s.equations.size());
    for (std::size_t i = 0; i < s.equations.size(); ++i) {
      noise[i] = sample_noise(s.equations[i].noise, rng);
      natural[i] = eval_expr(*s.equations[i].expr, natural, noise[i]);
    }
  }

  double value_of(const std::string& name, const std::vector<double>& values) const {
    for (std::size_t i = 0; i < scm->equations.size(); ++i)
      if (scm->equations[i].name == name) return values[i];
    throw ValidationError("unknown SCM variable: " + name);
  }

  /// Policy lookup over natural (pre-intervention) values.
  ColumnLookup natural_lookup() const {
    return [this](const std::string& name) { return value_of(name, natural); };
  }

  double natural_treatment() const {
    const auto a = scm->block(VarRole::kA);
    return natural[a.front()];
  }

  /// Evaluates the Z block with A := a. `fresh` switches the Z noises to an
  /// independently drawn vector (twin / randomized draw).
  std::vector<double> z_branch(double a, const std::vector<double>* fresh_noise = nullptr) const {
    std::vector<double> values = natural;
    values[scm->block(VarRole::kA).front()] = a;
    std::vector<double> out;
    const auto zb = scm->block(VarRole::kZ);
    out.reserve(zb.size());
    for (std::size_t j = 0; j < zb.size(); ++j) {
      const std::size_t i = zb[j];
      const double u = fresh_noise ? (*fresh_noise)[j] : noise[i];
      values[i] = eval_expr(*scm->equations[i].expr, values, u);
      out.push_back(values[i]);
    }
    return out;
  }

  /// Evaluates the M block with A := a and the Z block set to zvals.
  std::vector<double> m_branch(double a, const std::vector<double>& zvals,
                               const std::vector<double>* fresh_noise = nullptr) const {
    std::vector<double> values = natural;
    values[scm->block(VarRole::kA).front()] = a;
    const auto zb = scm->block(VarRole::kZ);
    for (std::size_t j = 0; j < zb.size(); ++j) values[zb[j]] = zvals[j];
    std::vector<double> out;
    const auto mb = scm->block(VarRole::kM);
    out.reserve(mb.size());
    for (std::size_t j = 0; j < mb.size(); ++j) {
      const std::size_t i = mb[j];
      const double u = fresh_noise ? (*fresh_noise)[j] : noise[i];
      values[i] = eval_expr(*scm->equations[i].expr, values, u);
      out.push_back(values[i]);
    }
    return out;
  }

  double y_of(double a, const std::vector<double>& zvals, const std::vector<double>& mvals,
              const double* fresh_noise = nullptr) const {
    std::vector<double> values = natural;
    values[scm->block(VarRole::kA).front()] = a;
    const auto zb = scm->block(VarRole::kZ);
    for (std::size_t j = 0; j < zb.size(); ++j) values[zb[j]] = zvals[j];
    const auto mb = scm->block(VarRole::kM);
    for (std::size_t j = 0; j < mb.size(); ++j) values[mb[j]] = mvals[j];
    const std::size_t yi = scm->block(VarRole::kY).front();
    const double u = fresh_noise ? *fresh_noise : noise[yi];
    return eval_expr(*scm->equations[yi].expr, values, u);
  }

  std::vector<double> fresh_block_noise(VarRole role, Rng& rng) const {
    std::vector<double> out;
    for (std::size_t i : scm->block(role)) out.push_back(sample_noise(scm->equations[i].noise, rng));
    return out;
  }
};

TruthValue summarize(const std::vector<double>& draws_values) {
  TruthValue t;
  const double n = static_cast<double>(draws_values.size());
  double s = 0.0;
  for (double v : draws_values) s += v;
  t.value = s / n;
  double ss = 0.0;
  for (double v : draws_values) ss += (v - t.value) * (v - t.value);
  t.mc_se = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return t;
}

}  // namespace

MediationDataset simulate(const Scm& scm, std::size_t n, std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0x5c3u));
  std::vector<std::string> columns;
  for (const auto& eq : scm.equations) columns.push_back(eq.name);
  Mat values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(scm.equations.size()));
  for (std::size_t r = 0; r < n; ++r) {
    Draw d(scm, rng);
    for (std::size_t c = 0; c < scm.equations.size(); ++c)
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = d.natural[c];
  }
  return make_dataset(std::move(columns), std::move(values), scm.roles());
}

const TruthValue& TruthTable::at(const std::string& name) const {
  auto it = entries.find(name);
  if (it == entries.end()) throw ValidationError("truth table has no entry " + name);
  return it->second;
}

// Counterfactual twin evaluation for one draw. The twins S0..S4 couple the
// Z branch feeding Y and the Z branch feeding M through the same exogenous
// noise; the primed twins replace one branch with an independent draw.
namespace {

struct TwinEvaluator {
  const Scm* scm;
  const PolicyPair* policies;
  Rng* rng;

  double twin(const Draw& d, const std::string& name) const {
    const double a_nat = d.natural_treatment();
    const ColumnLookup look = d.natural_lookup();
    const double d1 = policies->d1.apply(a_nat, look);
    const double d0 = policies->d0.apply(a_nat, look);

    auto coupled = [&](double ay, double az, double am) {
      const auto z = d.z_branch(az);
      const auto m = d.m_branch(am, z);
      return d.y_of(ay, z, m);
    };

    if (name == "S0") return coupled(d1, d1, d1);
    if (name == "S1") return coupled(d0, d1, d1);
    if (name == "S3") return coupled(d0, d0, d1);
    if (name == "S4") return coupled(d0, d0, d0);
    if (name == "S2") {
      // Cross-world: Z(d0) feeds Y while Z(d1) feeds M, same noise.
      const auto zy = d.z_branch(d0);
      const auto zm = d.z_branch(d1);
      const auto m = d.m_branch(d1, zm);
      return d.y_of(d0, zy, m);
    }
    if (name == "S1p" || name == "S2p" || name == "S2pp" || name == "S3pp") {
      const auto fresh = d.fresh_block_noise(VarRole::kZ, *rng);
      if (name == "S1p") {  // Y(d0, Z(d1), M(d1, T(d1)))
        const auto zy = d.z_branch(d1);
        const auto t = d.z_branch(d1, &fresh);
        return d.y_of(d0, zy, d.m_branch(d1, t));
      }
      if (name == "S2p") {  // Y(d0, Z(d0), M(d1, T(d1)))
        const auto zy = d.z_branch(d0);
        const auto t = d.z_branch(d1, &fresh);
        return d.y_of(d0, zy, d.m_branch(d1, t));
      }
      if (name == "S2pp") {  // Y(d0, T(d0), M(d1, Z(d1)))
        const auto t = d.z_branch(d0, &fresh);
        const auto zm = d.z_branch(d1);
        return d.y_of(d0, t, d.m_branch(d1, zm));
      }
      // S3pp: Y(d0, T(d0), M(d1, Z(d0)))
      const auto t = d.z_branch(d0, &fresh);
      const auto zm = d.z_branch(d0);
      return d.y_of(d0, t, d.m_branch(d1, zm));
    }
    if (name == "G11" || name == "G10" || name == "G00") {
      // Y(da, G(da*)) with G(da*) ~ M(da*) | W: fresh Z and M noise.
      const double ay = name == "G00" ? d0 : d1;
      const double ag = name == "G11" ? d1 : d0;
      const auto fresh_z = d.fresh_block_noise(VarRole::kZ, *rng);
      const auto fresh_m = d.fresh_block_noise(VarRole::kM, *rng);
      const auto zg = d.z_branch(ag, &fresh_z);
      const auto g = d.m_branch(ag, zg, &fresh_m);
      const auto zy = d.z_branch(ay);
      return d.y_of(ay, zy, g);
    }
    throw UnknownTwinNameError("unknown twin quantity: " + name);
  }
};

}  // namespace

TruthValue truth_counterfactual_twin(const Scm& scm, const std::string& twin,
                                     const PolicyPair& policies, std::size_t draws,
                                     std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0x7247u));
  TwinEvaluator ev{&scm, &policies, &rng};
  std::vector<double> vals;
  vals.reserve(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    Draw d(scm, rng);
    vals.push_back(ev.twin(d, twin));
  }
  return summarize(vals);
}

TruthValue truth_counterfactual(const Scm& scm, const FunctionalSpec& spec, std::size_t draws,
                                std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0xcf47u));
  std::vector<double> vals;
  vals.reserve(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    Draw d(scm, rng);
    const double a_nat = d.natural_treatment();
    const ColumnLookup look = d.natural_lookup();
    auto dv = [&](int idx) { return spec.policies.at(idx).apply(a_nat, look); };

    if (spec.kind == FunctionalKind::kNatural2) {
      // With Z present the nested counterfactual carries Z(d_a1) into Y and
      // Z(d_a2) into M, sharing the unit's Z noise across both worlds.
      const auto z_y = d.z_branch(dv(spec.a[0]));
      const auto z_m = d.z_branch(dv(spec.a[1]));
      const auto m = d.m_branch(dv(spec.a[1]), z_m);
      vals.push_back(d.y_of(dv(spec.a[0]), z_y, m));
    } else if (spec.kind == FunctionalKind::kCoupled3) {
      const auto z = d.z_branch(dv(spec.a[1]));
      const auto m = d.m_branch(dv(spec.a[2]), z);
      vals.push_back(d.y_of(dv(spec.a[0]), z, m));
    } else {
      const auto zy = d.z_branch(dv(spec.a[1]));
      const auto fresh = d.fresh_block_noise(VarRole::kZ, rng);
      const auto zm = d.z_branch(dv(spec.a[3]), &fresh);
      const auto m = d.m_branch(dv(spec.a[2]), zm);
      vals.push_back(d.y_of(dv(spec.a[0]), zy, m));
    }
  }
  return summarize(vals);
}

TruthValue truth_statistical(const Scm& scm, const FunctionalSpec& spec, std::size_t draws,
                             std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0x57a7u));
  std::vector<double> vals;
  vals.reserve(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    Draw d(scm, rng);
    const double a_nat = d.natural_treatment();
    const ColumnLookup look = d.natural_lookup();
    auto dv = [&](int idx) { return spec.policies.at(idx).apply(a_nat, look); };
    const double y_noise = sample_noise(scm.equations[scm.block(VarRole::kY).front()].noise, rng);

    if (spec.kind == FunctionalKind::kNatural2) {
      // Exact for Z-free models, where P(m | a, w) is the law of
      // f_M(a, w, u). With Z equations present the Z branches are drawn at
      // the corresponding treatment levels.
      const auto fzm = d.fresh_block_noise(VarRole::kZ, rng);
      const auto fzy = d.fresh_block_noise(VarRole::kZ, rng);
      const auto fm = d.fresh_block_noise(VarRole::kM, rng);
      const auto z_m = d.z_branch(dv(spec.a[1]), &fzm);
      const auto z_y = d.z_branch(dv(spec.a[0]), &fzy);
      const auto m = d.m_branch(dv(spec.a[1]), z_m, &fm);
      vals.push_back(d.y_of(dv(spec.a[0]), z_y, m, &y_noise));
    } else if (spec.kind == FunctionalKind::kCoupled3) {
      const auto fz = d.fresh_block_noise(VarRole::kZ, rng);
      const auto fm = d.fresh_block_noise(VarRole::kM, rng);
      const auto z = d.z_branch(dv(spec.a[1]), &fz);
      const auto m = d.m_branch(dv(spec.a[2]), z, &fm);
      vals.push_back(d.y_of(dv(spec.a[0]), z, m, &y_noise));
    } else {
      const auto fzy = d.fresh_block_noise(VarRole::kZ, rng);
      const auto fzm = d.fresh_block_noise(VarRole::kZ, rng);
      const auto fm = d.fresh_block_noise(VarRole::kM, rng);
      const auto zy = d.z_branch(dv(spec.a[1]), &fzy);
      const auto zm = d.z_branch(dv(spec.a[3]), &fzm);
      const auto m = d.m_branch(dv(spec.a[2]), zm, &fm);
      vals.push_back(d.y_of(dv(spec.a[0]), zy, m, &y_noise));
    }
  }
  return summarize(vals);
}

TruthTable truth_table(const Scm& scm, EffectFamilyCode family, const PolicyPair& policies,
                       std::size_t draws, std::uint64_t seed) {
  Rng rng(Rng::mix(seed, 0x7ab1eu));
  TwinEvaluator ev{&scm, &policies, &rng};

  std::map<std::string, std::vector<double>> acc;
  auto push = [&acc, draws](const std::string& name, double v) {
    auto& vec = acc[name];
    if (vec.capacity() == 0) vec.reserve(draws);
    vec.push_back(v);
  };

  for (std::size_t i = 0; i < draws; ++i) {
    Draw d(scm, rng);
    switch (family) {
      case EffectFamilyCode::kNatural: {
        const double a_nat = d.natural_treatment();
        const ColumnLookup look = d.natural_lookup();
        const double d1 = policies.d1.apply(a_nat, look);
        const double d0 = policies.d0.apply(a_nat, look);
        const auto z1 = d.z_branch(d1);
        const auto z0 = d.z_branch(d0);
        const auto m1 = d.m_branch(d1, z1);
        const auto m0 = d.m_branch(d0, z0);
        const double y11 = d.y_of(d1, z1, m1);
        const double y10 = d.y_of(d1, z1, m0);
        const double y00 = d.y_of(d0, z0, m0);
        push("NDE", y10 - y00);
        push("NIE", y11 - y10);
        push("ATE", y11 - y00);
        break;
      }
      case EffectFamilyCode::kRandomizedInterventional: {
        const double g11 = ev.twin(d, "G11");
        const double g10 = ev.twin(d, "G10");
        const double g00 = ev.twin(d, "G00");
        push("RIDE", g10 - g00);
        push("RIIE", g11 - g10);
        push("Y(d1,G(d1))", g11);
        push("Y(d1,G(d0))", g10);
        push("Y(d0,G(d0))", g00);
        const double s0 = ev.twin(d, "S0");
        const double s4 = ev.twin(d, "S4");
        push("ATE", s0 - s4);
        break;
      }
      case EffectFamilyCode::kRecantingTwin: {
        const double s0 = ev.twin(d, "S0");
        const double s1 = ev.twin(d, "S1");
        const double s3 = ev.twin(d, "S3");
        const double s4 = ev.twin(d, "S4");
        const double s1p = ev.twin(d, "S1p");
        const double s2p = ev.twin(d, "S2p");
        const double s2pp = ev.twin(d, "S2pp");
        const double s3pp = ev.twin(d, "S3pp");
        push("P1", s0 - s1);
        push("P2", s1p - s2p);
        push("P3", s2pp - s3pp);
        push("P4", s3 - s4);
        push("R", s1 - s1p + s2p - s2pp + s3pp - s3);
        push("ATE", s0 - s4);
        push("S0", s0);
        push("S1", s1);
        push("S3", s3);
        push("S4", s4);
        push("S1p", s1p);
        push("S2p", s2p);
        push("S2pp", s2pp);
        push("S3pp", s3pp);
        break;
      }
    }
  }

  TruthTable t;
  t.draws = draws;
  for (const auto& [name, vals] : acc) t.entries[name] = summarize(vals);
  return t;
}

}  // namespace mediator
