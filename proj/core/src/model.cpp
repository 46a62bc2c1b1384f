#include "dsa/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

#include "dsa/errors.hpp"
#include "json_write.hpp"

namespace dsa {

using nlohmann::json;

GeneralConvexTerm make_piecewise_linear_max(DenseMatrix slopes, DenseVector offsets, DenseVector p) {
  if (slopes.rows() == 0) fail(ErrorKind::kValidation, "piecewise-linear max needs at least one piece");
  if (offsets.size() != slopes.rows()) fail(ErrorKind::kDimension, "piecewise-linear max: offsets length");
  if (p.empty()) p.assign(slopes.rows(), 0.0);
  if (p.size() != slopes.rows()) fail(ErrorKind::kDimension, "piecewise-linear max: parameter length");
  GeneralConvexTerm t;
  t.kind = TermKind::kPiecewiseLinearMax;
  double lip = 0.0;
  for (std::size_t i = 0; i < slopes.rows(); ++i) {
    DenseVector row(slopes.cols());
    for (std::size_t j = 0; j < slopes.cols(); ++j) row[j] = slopes(i, j);
    lip = std::max(lip, norm2(row));
  }
  t.slopes = std::move(slopes);
  t.offsets = std::move(offsets);
  t.p = std::move(p);
  t.lipschitz_bound = lip;
  return t;
}

namespace {

std::size_t argmax_piece(const GeneralConvexTerm& term, const DenseVector& x, double* value) {
  const DenseVector lin = matvec(term.slopes, x);
  std::size_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lin.size(); ++i) {
    const double v = lin[i] + term.offsets[i] + term.p[i];
    if (v > best_v) {  // strict: ties keep the lowest row
      best_v = v;
      best = i;
    }
  }
  if (value) *value = best_v;
  return best;
}

}  // namespace

double coupling_value(const GeneralConvexTerm& term, const DenseVector& x) {
  if (!term.present()) return 0.0;
  double v = 0.0;
  argmax_piece(term, x, &v);
  return v;
}

DenseVector coupling_subgradient(const GeneralConvexTerm& term, const DenseVector& x) {
  if (!term.present()) return DenseVector(x.size(), 0.0);
  const std::size_t i = argmax_piece(term, x, nullptr);
  DenseVector g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) g[j] = term.slopes(i, j);
  return g;
}

ValueAndSubgradient objective_value_and_subgradient(const StageObjective& obj, const DenseVector& x,
                                                    const FeasibleSet* domain) {
  if (x.size() != obj.c.size()) fail(ErrorKind::kDimension, "objective: dimension mismatch");
  if (domain && !set_contains(*domain, x, 1e-9)) fail(ErrorKind::kDomain, "objective: point outside the feasible set");
  ValueAndSubgradient out{dot(obj.c, x), obj.c};
  if (obj.kind == ObjectiveKind::kQuadPlusLinear) {
    const DenseVector d = sub(x, obj.center);
    const double r = norm2(d);
    out.value += 0.5 * obj.mu * r * r;
    axpy(obj.mu, d, out.subgradient);
  }
  if (obj.coupling.present()) {
    out.value += coupling_value(obj.coupling, x);
    axpy(1.0, coupling_subgradient(obj.coupling, x), out.subgradient);
  }
  return out;
}

double objective_lipschitz(const StageObjective& obj, const FeasibleSet& set) {
  double lip = norm2(obj.c);
  if (obj.kind == ObjectiveKind::kQuadPlusLinear) lip += obj.mu * max_distance_from(set, obj.center);
  if (obj.coupling.present()) lip += obj.coupling.lipschitz_bound;
  return lip;
}

const std::vector<Outcome>& ScenarioDistribution::support(int stage, std::optional<std::size_t> parent_index) const {
  if (stage < 2 || static_cast<std::size_t>(stage - 2) >= tables.size()) {
    fail(ErrorKind::kUsage, "support: stage " + std::to_string(stage) + " has no distribution");
  }
  const auto& table = tables[static_cast<std::size_t>(stage - 2)];
  if (dependence == Dependence::kStagewiseIndependent) return table.front();
  if (!parent_index) fail(ErrorKind::kUsage, "support: conditional dependence requires a parent index");
  if (*parent_index >= table.size()) {
    fail(ErrorKind::kUsage, "support: parent index " + std::to_string(*parent_index) + " out of range at stage " +
                                std::to_string(stage));
  }
  return table[*parent_index];
}

Outcome MultistageProblem::first_stage_outcome() const {
  Outcome o;
  o.A = first_stage.A;
  o.B = DenseMatrix(first_stage.A.rows(), 0);
  o.b = first_stage.b;
  o.c = first_stage.c;
  o.prob = 1.0;
  return o;
}

StageObjective MultistageProblem::objective_for(int t, const Outcome& outcome) const {
  StageObjective obj = stage(t).objective;
  obj.c = outcome.c;
  if (obj.coupling.present() && !outcome.p.empty()) obj.coupling.p = outcome.p;
  return obj;
}

std::size_t MultistageProblem::max_support_size(int t) const {
  std::size_t best = 0;
  for (const auto& list : distribution.tables.at(static_cast<std::size_t>(t - 2))) best = std::max(best, list.size());
  return best;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

[[noreturn]] void parse_error(const std::string& path, const std::string& what) {
  fail(ErrorKind::kParse, "parse error at " + path + ": " + what);
}

[[noreturn]] void invalid(const std::string& what) { fail(ErrorKind::kValidation, "validation error: " + what); }

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) parse_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) parse_error(path + "." + key, "missing required key");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) parse_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) parse_error(path, "non-finite number");
  return v;
}

std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) parse_error(path, "expected a nonnegative integer");
  return static_cast<std::size_t>(j.get<long long>());
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) parse_error(path, "expected a string");
  return j.get<std::string>();
}

DenseVector vector_of(const json& j, const std::string& path, std::optional<std::size_t> len = std::nullopt) {
  if (!j.is_array()) parse_error(path, "expected an array");
  DenseVector v;
  v.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  if (len && v.size() != *len) {
    parse_error(path, "expected length " + std::to_string(*len) + ", got " + std::to_string(v.size()));
  }
  return v;
}

DenseMatrix matrix_of(const json& j, const std::string& path, std::size_t rows, std::size_t cols) {
  if (!j.is_array()) parse_error(path, "expected a nested array");
  if (j.size() != rows) {
    parse_error(path, "expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
  }
  std::vector<double> entries;
  entries.reserve(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const DenseVector r = vector_of(j[i], path + "[" + std::to_string(i) + "]", cols);
    entries.insert(entries.end(), r.begin(), r.end());
  }
  return DenseMatrix(rows, cols, std::move(entries));
}

FeasibleSet parse_set(const json& j, const std::string& path, std::size_t n) {
  const std::string kind = text(field(j, "kind", path), path + ".kind");
  if (kind == "box") {
    return FeasibleSet::box(vector_of(field(j, "lower", path), path + ".lower", n),
                            vector_of(field(j, "upper", path), path + ".upper", n));
  }
  if (kind == "simplex") return FeasibleSet::simplex(n, number(field(j, "radius", path), path + ".radius"));
  if (kind == "ball") {
    return FeasibleSet::ball(vector_of(field(j, "center", path), path + ".center", n),
                             number(field(j, "radius", path), path + ".radius"));
  }
  parse_error(path + ".kind", "unknown set kind '" + kind + "'");
}

Cone parse_cone(const json& j, const std::string& path, std::size_t m) {
  const std::string kind = text(field(j, "kind", path), path + ".kind");
  const std::size_t dim = count(field(j, "dim", path), path + ".dim");
  if (dim != m) invalid(path + ": cone dim " + std::to_string(dim) + " != m " + std::to_string(m));
  if (kind == "zero") return Cone::zero(dim);
  if (dim == 0) invalid(path + ": only the zero cone may have dimension 0");
  if (kind == "nonneg") return Cone::orthant(dim);
  if (kind == "soc") return Cone::second_order(dim);
  parse_error(path + ".kind", "unknown cone kind '" + kind + "'");
}

StageObjective parse_objective(const json& j, const std::string& path, std::size_t n) {
  StageObjective obj;
  const std::string kind = text(field(j, "kind", path), path + ".kind");
  if (kind == "linear") {
    obj.kind = ObjectiveKind::kLinear;
  } else if (kind == "quadratic") {
    obj.kind = ObjectiveKind::kQuadPlusLinear;
    obj.mu = number(field(j, "mu", path), path + ".mu");
    if (!(obj.mu > 0.0)) invalid(path + ".mu must be positive");
  } else {
    parse_error(path + ".kind", "unknown objective kind '" + kind + "'");
  }
  if (auto it = j.find("coupling"); it != j.end()) {
    const std::string cp = path + ".coupling";
    const std::string ck = text(field(*it, "kind", cp), cp + ".kind");
    if (ck != "pwl_max") parse_error(cp + ".kind", "unknown coupling kind '" + ck + "'");
    const json& sj = field(*it, "slopes", cp);
    if (!sj.is_array()) parse_error(cp + ".slopes", "expected a nested array");
    DenseMatrix slopes = matrix_of(sj, cp + ".slopes", sj.size(), n);
    DenseVector offsets = vector_of(field(*it, "offsets", cp), cp + ".offsets", slopes.rows());
    DenseVector p;
    if (auto pj = it->find("p"); pj != it->end()) p = vector_of(*pj, cp + ".p", slopes.rows());
    obj.coupling = make_piecewise_linear_max(std::move(slopes), std::move(offsets), std::move(p));
  }
  return obj;
}

Outcome parse_outcome(const json& j, const std::string& path, const StageTemplate& st, std::size_t n_prev) {
  Outcome o;
  o.A = matrix_of(field(j, "A", path), path + ".A", st.m, st.n);
  o.B = matrix_of(field(j, "B", path), path + ".B", st.m, n_prev);
  o.b = vector_of(field(j, "b", path), path + ".b", st.m);
  o.c = vector_of(field(j, "c", path), path + ".c", st.n);
  o.prob = number(field(j, "prob", path), path + ".prob");
  if (!(o.prob > 0.0)) invalid(path + ".prob must be positive");
  if (auto it = j.find("p"); it != j.end()) {
    if (!st.objective.coupling.present()) invalid(path + ".p given but the stage has no coupling term");
    o.p = vector_of(*it, path + ".p", st.objective.coupling.slopes.rows());
  }
  return o;
}

std::vector<Outcome> parse_support(const json& j, const std::string& path, const StageTemplate& st,
                                   std::size_t n_prev) {
  if (!j.is_array() || j.empty()) parse_error(path, "expected a nonempty array of outcomes");
  std::vector<Outcome> out;
  double total = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(parse_outcome(j[i], path + "[" + std::to_string(i) + "]", st, n_prev));
    total += out.back().prob;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    invalid(path + ": probabilities must sum to 1 (sum is " + std::to_string(total) + ")");
  }
  return out;
}

}  // namespace

MultistageProblem parse_problem(const std::string& input) {
  json root;
  try {
    root = json::parse(input);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, std::string("parse error at $: malformed JSON: ") + e.what());
  }
  const std::string rp = "$";
  if (!root.is_object()) parse_error(rp, "expected an object");
  const std::size_t version = count(field(root, "version", rp), "$.version");
  if (version != 1) parse_error("$.version", "unsupported version " + std::to_string(version));

  MultistageProblem P;
  const std::size_t T = count(field(root, "T", rp), "$.T");
  if (T < 1) invalid("T must be >= 1");
  P.T = static_cast<int>(T);

  const json& stages = field(root, "stages", rp);
  if (!stages.is_array() || stages.size() != T) parse_error("$.stages", "expected an array of length T");
  for (std::size_t s = 0; s < T; ++s) {
    const std::string sp = "$.stages[" + std::to_string(s) + "]";
    const json& sj = stages[s];
    StageTemplate st;
    st.index = static_cast<int>(s + 1);
    st.n = count(field(sj, "n", sp), sp + ".n");
    st.m = count(field(sj, "m", sp), sp + ".m");
    if (st.n == 0) invalid(sp + ": n must be >= 1");
    const FeasibleSet set = parse_set(field(sj, "set", sp), sp + ".set", st.n);
    Dgf dgf = Dgf::kEuclidean;
    if (auto it = sj.find("dgf"); it != sj.end()) {
      const std::string d = text(*it, sp + ".dgf");
      if (d == "entropy") dgf = Dgf::kEntropy;
      else if (d != "euclidean") parse_error(sp + ".dgf", "unknown dgf '" + d + "'");
    }
    try {
      st.prox = make_prox_setup(set, dgf);
    } catch (const Error& e) {
      invalid(sp + ": " + e.what());
    }
    st.cone = parse_cone(field(sj, "cone", sp), sp + ".cone", st.m);
    st.objective = parse_objective(field(sj, "objective", sp), sp + ".objective", st.n);
    st.objective.center = st.prox.prox_center;
    if (st.objective.kind == ObjectiveKind::kQuadPlusLinear && dgf != Dgf::kEuclidean) {
      invalid(sp + ": quadratic objectives require the euclidean dgf");
    }
    if (st.objective.coupling.present() && (st.index == 1 || st.index == P.T)) {
      invalid(sp + ": a coupling term is only allowed on stages 2..T-1");
    }
    P.stages.push_back(std::move(st));
  }

  const json& fs = field(root, "first_stage", rp);
  const StageTemplate& s1 = P.stages.front();
  P.first_stage.A = matrix_of(field(fs, "A", "$.first_stage"), "$.first_stage.A", s1.m, s1.n);
  P.first_stage.b = vector_of(field(fs, "b", "$.first_stage"), "$.first_stage.b", s1.m);
  P.first_stage.c = vector_of(field(fs, "c", "$.first_stage"), "$.first_stage.c", s1.n);
  P.stages.front().objective.c = P.first_stage.c;

  if (T >= 2) {
    const json& sc = field(root, "scenarios", rp);
    const std::string dep = text(field(sc, "dependence", "$.scenarios"), "$.scenarios.dependence");
    if (dep == "independent") P.distribution.dependence = Dependence::kStagewiseIndependent;
    else if (dep == "conditional") P.distribution.dependence = Dependence::kConditionalOnParentIndex;
    else parse_error("$.scenarios.dependence", "unknown dependence '" + dep + "'");
    const json& ss = field(sc, "stages", "$.scenarios");
    if (!ss.is_array() || ss.size() != T - 1) parse_error("$.scenarios.stages", "expected an array of length T-1");
    for (std::size_t s = 0; s + 1 < T; ++s) {
      const std::string sp = "$.scenarios.stages[" + std::to_string(s) + "]";
      const StageTemplate& st = P.stages[s + 1];
      const std::size_t n_prev = P.stages[s].n;
      std::vector<std::vector<Outcome>> table;
      if (P.distribution.dependence == Dependence::kStagewiseIndependent) {
        table.push_back(parse_support(field(ss[s], "support", sp), sp + ".support", st, n_prev));
      } else {
        const json& tj = field(ss[s], "table", sp);
        if (!tj.is_array()) parse_error(sp + ".table", "expected an array of supports");
        const std::size_t parents = s == 0 ? 1 : P.max_support_size(static_cast<int>(s + 1));
        if (tj.size() != parents) {
          invalid(sp + ".table: expected " + std::to_string(parents) + " parent entries, got " +
                  std::to_string(tj.size()));
        }
        for (std::size_t k = 0; k < tj.size(); ++k) {
          table.push_back(parse_support(tj[k], sp + ".table[" + std::to_string(k) + "]", st, n_prev));
        }
      }
      P.distribution.tables.push_back(std::move(table));
    }
  }

  // Coupling bounds: given values must dominate every outcome, else they are computed.
  P.bound_B.assign(T, 0.0);
  const json* bounds = nullptr;
  if (auto it = root.find("bounds"); it != root.end()) bounds = &*it;
  DenseVector given;
  if (bounds) {
    given = vector_of(field(*bounds, "B_norm", "$.bounds"), "$.bounds.B_norm", T);
    P.bounds_given = true;
  }
  for (int t = 2; t <= P.T; ++t) {
    double worst = 0.0;
    for (const auto& list : P.distribution.tables[static_cast<std::size_t>(t - 2)])
      for (const auto& o : list)
        if (!o.B.empty()) worst = std::max(worst, spectral_norm(o.B));
    const auto ti = static_cast<std::size_t>(t - 1);
    if (bounds) {
      if (given[ti] < worst * (1.0 - 1e-12)) {
        invalid("$.bounds.B_norm[" + std::to_string(ti) + "] = " + std::to_string(given[ti]) +
                " is below the largest ||B|| " + std::to_string(worst));
      }
      P.bound_B[ti] = given[ti];
    } else {
      P.bound_B[ti] = worst;
    }
  }
  return P;
}

MultistageProblem load_problem_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::kUsage, "cannot open problem file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_problem(ss.str());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json vec_json(const DenseVector& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

json mat_json(const DenseMatrix& m) {
  json a = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    a.push_back(std::move(r));
  }
  return a;
}

json outcome_json(const Outcome& o) {
  json j = {{"A", mat_json(o.A)}, {"B", mat_json(o.B)}, {"b", vec_json(o.b)}, {"c", vec_json(o.c)}, {"prob", o.prob}};
  if (!o.p.empty()) j["p"] = vec_json(o.p);
  return j;
}

}  // namespace

std::string serialize_problem(const MultistageProblem& P) {
  json root;
  root["version"] = 1;
  root["T"] = P.T;
  json stages = json::array();
  for (const auto& st : P.stages) {
    json set;
    const FeasibleSet& fs = st.prox.set;
    set["kind"] = to_string(fs.kind);
    switch (fs.kind) {
      case SetKind::kBox:
        set["lower"] = vec_json(fs.lower);
        set["upper"] = vec_json(fs.upper);
        break;
      case SetKind::kSimplex: set["radius"] = fs.radius; break;
      case SetKind::kBall:
        set["center"] = vec_json(fs.center);
        set["radius"] = fs.radius;
        break;
    }
    json obj;
    if (st.objective.kind == ObjectiveKind::kLinear) {
      obj["kind"] = "linear";
    } else {
      obj["kind"] = "quadratic";
      obj["mu"] = st.objective.mu;
    }
    if (st.objective.coupling.present()) {
      obj["coupling"] = {{"kind", "pwl_max"},
                         {"slopes", mat_json(st.objective.coupling.slopes)},
                         {"offsets", vec_json(st.objective.coupling.offsets)},
                         {"p", vec_json(st.objective.coupling.p)}};
    }
    stages.push_back({{"n", st.n},
                      {"m", st.m},
                      {"set", set},
                      {"dgf", to_string(st.prox.dgf)},
                      {"cone", {{"kind", to_string(st.cone.kind)}, {"dim", st.cone.dim}}},
                      {"objective", obj}});
  }
  root["stages"] = stages;
  root["first_stage"] = {{"A", mat_json(P.first_stage.A)}, {"b", vec_json(P.first_stage.b)},
                         {"c", vec_json(P.first_stage.c)}};
  if (P.T >= 2) {
    json sc;
    const bool indep = P.distribution.dependence == Dependence::kStagewiseIndependent;
    sc["dependence"] = indep ? "independent" : "conditional";
    json ss = json::array();
    for (const auto& table : P.distribution.tables) {
      if (indep) {
        json sup = json::array();
        for (const auto& o : table.front()) sup.push_back(outcome_json(o));
        ss.push_back({{"support", sup}});
      } else {
        json tab = json::array();
        for (const auto& list : table) {
          json sup = json::array();
          for (const auto& o : list) sup.push_back(outcome_json(o));
          tab.push_back(sup);
        }
        ss.push_back({{"table", tab}});
      }
    }
    sc["stages"] = ss;
    root["scenarios"] = sc;
  }
  if (P.bounds_given) root["bounds"] = {{"B_norm", vec_json(P.bound_B)}};
  return detail::dump_json(root);
}

// ---------------------------------------------------------------------------
// Streams

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(seed ^ mix64(a)) ^ mix64(b + 0x632be59bd9b4e019ULL));
}

SeededStream::SeededStream(std::uint64_t root_seed) : root_seed_(root_seed), seed_(mix64(root_seed)) {}

SeededStream SeededStream::child(int stage, std::uint64_t outer_index) const {
  SeededStream c(*this);
  c.seed_ = derive_seed(seed_, static_cast<std::uint64_t>(stage), outer_index);
  c.counter_ = 0;
  c.path_.emplace_back(stage, outer_index);
  return c;
}

std::uint64_t SeededStream::next_u64() { return mix64(seed_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

double SeededStream::next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

SampledOutcome sample_outcome(const ScenarioDistribution& dist, int stage, std::optional<std::size_t> parent_index,
                              SeededStream& stream) {
  if (dist.dependence == Dependence::kConditionalOnParentIndex && !parent_index) {
    fail(ErrorKind::kUsage, "sample_outcome: conditional dependence requires a parent index");
  }
  const auto& list = dist.support(stage, parent_index);
  if (list.size() == 1) return {0, &list.front()};
  const double u = stream.next_uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < list.size(); ++i) {
    cumulative += list[i].prob;
    if (u < cumulative) return {i, &list[i]};
  }
  return {list.size() - 1, &list.back()};
}

}  // namespace dsa
