#pragma once

// Batch execution of problem documents. Commands are validated as a whole
// before anything is computed; each then produces one entry of the report.
//
// Exit codes: 0 when every verification passed, 1 when some mathematical
// verification failed, 2 for input or validation errors.

#include <chrono>
#include <functional>
#include <set>

#include "courant/io.hpp"
#include "courant/random.hpp"

namespace courant {

struct RunOptions {
  std::optional<unsigned> truncation;  // probe depth / membership cap override
  std::uint64_t seed = 1;
  bool timings = false;
};

struct RunResult {
  Json report;
  int exit_code = 0;
};

namespace detail {

// Allowed fields and element references of each command.
struct OpSpec {
  std::vector<const char*> fields;
  std::vector<const char*> refs;  // fields naming a single element
  std::vector<const char*> ref_lists;  // fields holding arrays of element names
  bool stores = false;  // accepts "as"
};

inline const std::map<std::string, OpSpec>& op_specs() {
  static const std::map<std::string, OpSpec> specs{
      {"verify-courant", {{"element", "depth"}, {"element"}, {}, false}},
      {"cmap-verify", {{"element", "depth"}, {"element"}, {}, false}},
      {"bracket", {{"lhs", "rhs", "side"}, {"lhs", "rhs"}, {}, true}},
      {"wedge", {{"lhs", "rhs", "mode", "side"}, {"lhs", "rhs"}, {}, true}},
      {"symbol-tower", {{"element"}, {"element"}, {}, false}},
      {"j-map", {{"element", "degree"}, {"element"}, {}, true}},
      {"j-invert", {{"element", "degree"}, {"element"}, {}, true}},
      {"chat-membership", {{"element", "cap", "expect"}, {"element"}, {}, false}},
      {"cohomology", {{"structure", "r", "d"}, {"structure"}, {}, false}},
      {"mc-extend", {{"structure", "series", "candidate", "xi", "order"}, {"structure", "candidate", "xi"}, {"series"}, false}},
      {"counterexample-sder", {{"cap"}, {}, {}, false}},
      {"property-check", {{"property", "count", "degree"}, {}, {}, false}},
  };
  return specs;
}

inline std::pair<int, int> parse_range(const Json& j, const std::string& where, int lo, int hi) {
  if (j.is_number_integer()) {
    int v = expect_int(j, where, lo, hi);
    return {v, v};
  }
  if (j.is_array() && j.size() == 2) {
    int a = expect_int(j[0], where + "/0", lo, hi);
    int b = expect_int(j[1], where + "/1", lo, hi);
    if (a > b) throw DocumentError(where, "empty range");
    return {a, b};
  }
  if (j.is_string()) {
    // "0..3"
    const std::string& s = j.get_ref<const std::string&>();
    auto dots = s.find("..");
    try {
      if (dots == std::string::npos) {
        int v = std::stoi(s);
        if (v < lo || v > hi) throw std::out_of_range("range");
        return {v, v};
      }
      int a = std::stoi(s.substr(0, dots)), b = std::stoi(s.substr(dots + 2));
      if (a < lo || b > hi || a > b) throw std::out_of_range("range");
      return {a, b};
    } catch (const std::exception&) {
      throw DocumentError(where, "expected a range like \"0..3\" within [" + std::to_string(lo) + ", " +
                                     std::to_string(hi) + "]");
    }
  }
  throw DocumentError(where, "expected an integer, [lo, hi] or \"lo..hi\"");
}

/// Checks every command's shape and that all references resolve, including
/// names introduced by earlier "as" fields.
inline void validate_commands(const Document& doc) {
  std::set<std::string> known(doc.order.begin(), doc.order.end());
  for (std::size_t i = 0; i < doc.commands.size(); ++i) {
    std::string where = "/commands/" + std::to_string(i);
    const Json& c = doc.commands[i];
    if (!c.is_object()) throw DocumentError(where, "expected an object");
    if (!c.contains("op")) throw DocumentError(where, "missing field 'op'");
    const std::string& op = expect_string(c["op"], where + "/op");
    auto it = op_specs().find(op);
    if (it == op_specs().end()) throw DocumentError(where + "/op", "unknown command '" + op + "'");
    const OpSpec& spec = it->second;
    for (const auto& [k, v] : c.items()) {
      if (k == "op" || (k == "as" && spec.stores)) continue;
      bool ok = false;
      for (const char* f : spec.fields) ok = ok || k == f;
      if (!ok) throw DocumentError(pointer_join(where, k), "unknown field for " + op);
    }
    for (const char* f : spec.refs) {
      if (!c.contains(f)) continue;
      const std::string& name = expect_string(c[f], pointer_join(where, f));
      if (!known.count(name)) throw DocumentError(pointer_join(where, f), "unresolved reference '" + name + "'");
    }
    for (const char* f : spec.ref_lists) {
      if (!c.contains(f)) continue;
      std::string at = pointer_join(where, f);
      if (!c[f].is_array()) throw DocumentError(at, "expected an array of element names");
      for (std::size_t k = 0; k < c[f].size(); ++k) {
        const std::string& name = expect_string(c[f][k], at + "/" + std::to_string(k));
        if (!known.count(name)) throw DocumentError(at + "/" + std::to_string(k), "unresolved reference '" + name + "'");
      }
    }
    auto require = [&](const char* f) {
      if (!c.contains(f)) throw DocumentError(where, op + " needs field '" + f + "'");
    };
    if (op == "verify-courant" || op == "cmap-verify" || op == "symbol-tower" || op == "j-map" || op == "j-invert" ||
        op == "chat-membership")
      require("element");
    if (op == "bracket" || op == "wedge") {
      require("lhs");
      require("rhs");
    }
    if (op == "cohomology" || op == "mc-extend") require("structure");
    if (op == "property-check") require("property");
    if (c.contains("depth")) expect_int(c["depth"], where + "/depth", 0, 8);
    if (c.contains("cap")) expect_int(c["cap"], where + "/cap", 0, 6);
    if (c.contains("degree")) expect_int(c["degree"], where + "/degree", 0, kMaxCDegree);
    if (c.contains("count")) expect_int(c["count"], where + "/count", 1, 10000);
    if (c.contains("order")) expect_int(c["order"], where + "/order", 1, 6);
    if (c.contains("r")) parse_range(c["r"], where + "/r", 0, 8);
    if (c.contains("d")) parse_range(c["d"], where + "/d", -8, 8);
    if (c.contains("side")) {
      const std::string& s = expect_string(c["side"], where + "/side");
      if (s != "auto" && s != "roth" && s != "cmap") throw DocumentError(where + "/side", "expected auto, roth or cmap");
    }
    if (c.contains("mode")) {
      const std::string& s = expect_string(c["mode"], where + "/mode");
      if (s != "recursive" && s != "shuffle" && s != "both")
        throw DocumentError(where + "/mode", "expected recursive, shuffle or both");
    }
    if (c.contains("expect")) {
      const std::string& s = expect_string(c["expect"], where + "/expect");
      if (s != "member" && s != "non-member") throw DocumentError(where + "/expect", "expected member or non-member");
    }
    if (op == "mc-extend") {
      bool trivial = c.contains("xi") || c.contains("order");
      if (trivial && (c.contains("series") || c.contains("candidate")))
        throw DocumentError(where, "give either series/candidate or xi/order");
      if (trivial && !(c.contains("xi") && c.contains("order")))
        throw DocumentError(where, "a trivial deformation needs both xi and order");
      if (!trivial && !c.contains("series")) throw DocumentError(where, "mc-extend needs series or xi/order");
    }
    if (op == "property-check") {
      const std::string& p = expect_string(c["property"], where + "/property");
      if (p != "jacobi-cmap" && p != "jacobi-roth" && p != "wedge-modes" && p != "j-homomorphism")
        throw DocumentError(where + "/property", "unknown property '" + p +
                                                     "' (expected jacobi-cmap, jacobi-roth, wedge-modes, j-homomorphism)");
    }
    if (c.contains("as")) {
      const std::string& name = expect_string(c["as"], where + "/as");
      if (name.empty()) throw DocumentError(where + "/as", "empty name");
      known.insert(name);
    }
  }
}

// Failed verifications mark the command "failed"; a thrown exception marks
// it "error" (and the run exits with 2).
class CommandContext {
 public:
  CommandContext(Document& doc, const Json& cmd, const RunOptions& opt, std::size_t index)
      : doc_(doc), cmd_(cmd), opt_(opt), index_(index) {}

  Document& doc() { return doc_; }
  const Json& cmd() const { return cmd_; }
  const RunOptions& options() const { return opt_; }
  std::size_t index() const { return index_; }

  std::string str(const char* f, const std::string& dflt = "") const {
    return cmd_.contains(f) ? cmd_[f].get<std::string>() : dflt;
  }
  std::optional<int> num(const char* f) const {
    if (cmd_.contains(f)) return cmd_[f].get<int>();
    return std::nullopt;
  }
  const NamedElement& ref(const char* f) const { return doc_.element(str(f), std::string("/commands/") + std::to_string(index_) + "/" + f); }

  unsigned depth_or(unsigned dflt) const {
    if (auto d = num("depth")) return unsigned(*d);
    if (opt_.truncation) return *opt_.truncation;
    return dflt;
  }
  unsigned cap_or(unsigned dflt) const {
    if (auto d = num("cap")) return unsigned(*d);
    if (opt_.truncation) return *opt_.truncation;
    return dflt;
  }

  void store(const NamedElement& e) {
    if (!cmd_.contains("as")) return;
    std::string name = str("as");
    if (!doc_.elements.count(name)) doc_.order.push_back(name);
    doc_.elements.insert_or_assign(name, e);
  }

  // a verification outcome; the command fails if any is false
  void verdict(Json& out, bool ok) {
    out["verdict"] = ok;
    failed_ = failed_ || !ok;
  }
  bool failed() const { return failed_; }

 private:
  Document& doc_;
  const Json& cmd_;
  const RunOptions& opt_;
  std::size_t index_;
  bool failed_ = false;
};

inline Json element_json(const NamedElement& e) {
  Json j;
  if (e.is_roth()) {
    j["side"] = "roth";
    j["degree"] = e.roth().is_zero() ? Json(nullptr) : Json(e.roth().degree());
    j["value"] = e.roth().to_string();
  } else {
    j["side"] = "cmap";
    j["degree"] = e.cmap().degree();
    j["value"] = cmap_to_json(e.cmap());
  }
  return j;
}

inline CourantStructure structure_of(CommandContext& ctx) {
  const NamedElement& e = ctx.ref("structure");
  CMap m = ctx.doc().as_cmap(e);
  if (m.degree() != 3) throw std::invalid_argument("a Courant structure has degree 3, got " + std::to_string(m.degree()));
  CourantStructure s = make_courant(m, ctx.doc().connection());
  RothBracket br(s.conn);
  if (!br(s.theta, s.theta).is_zero()) throw std::invalid_argument("structure does not satisfy {Theta, Theta} = 0");
  return s;
}

inline Json run_verify_courant(CommandContext& ctx) {
  CMap m = ctx.doc().as_cmap(ctx.ref("element"));
  unsigned depth = ctx.depth_or(2);
  CourantReport rep = verify_courant(m, int(depth));
  Json out;
  ctx.verdict(out, rep.ok() && rep.agree);
  out["axioms_ok"] = rep.axioms_ok;
  out["bracket_ok"] = rep.bracket_ok;
  out["routes_agree"] = rep.agree;
  out["probe_depth"] = rep.depth;
  out["probes"] = rep.probes;
  if (!rep.axiom_message.empty()) out["axiom_message"] = rep.axiom_message;
  if (!rep.bracket_message.empty()) out["bracket_message"] = rep.bracket_message;
  return out;
}

inline Json run_cmap_verify(CommandContext& ctx) {
  CMap c = ctx.doc().as_cmap(ctx.ref("element"));
  unsigned depth = ctx.depth_or(default_probe_depth(c));
  CMapReport rep = cmap_verify(c, int(depth));
  Json out;
  ctx.verdict(out, rep.ok);
  out["degree"] = c.degree();
  out["probe_depth"] = rep.depth;
  out["probes"] = rep.probes;
  if (!rep.message.empty()) out["message"] = rep.message;
  return out;
}

inline bool use_roth(CommandContext& ctx, const NamedElement& a, const NamedElement& b) {
  std::string side = ctx.str("side", "auto");
  if (side == "roth") return true;
  if (side == "cmap") return false;
  return a.is_roth() && b.is_roth();
}

inline Json run_product(CommandContext& ctx, bool bracket) {
  const NamedElement& a = ctx.ref("lhs");
  const NamedElement& b = ctx.ref("rhs");
  Document& doc = ctx.doc();
  Json out;
  NamedElement result{RothElement()};
  if (use_roth(ctx, a, b)) {
    RothElement x = doc.as_roth(a), y = doc.as_roth(b);
    result = NamedElement{bracket ? RothBracket(doc.connection())(x, y) : wedge(x, y)};
  } else {
    CMap x = doc.as_cmap(a), y = doc.as_cmap(b);
    if (bracket) {
      result = NamedElement{cmap_bracket(x, y)};
    } else {
      std::string mode = ctx.str("mode", "recursive");
      CMap r = cmap_wedge(x, y, mode == "shuffle" ? WedgeMode::Shuffle : WedgeMode::Recursive);
      if (mode == "both") ctx.verdict(out, cmap_wedge(x, y, WedgeMode::Shuffle) == r);
      result = NamedElement{r};
    }
  }
  out["result"] = element_json(result);
  out["is_zero"] = result.is_roth() ? result.roth().is_zero() : result.cmap().is_zero();
  ctx.store(result);
  return out;
}

inline Json form_json(const CForm& f) {
  const MetricModule& m = *f.mod;
  Json entries = Json::object();
  std::vector<std::size_t> t(f.r, 0);
  for (std::size_t i = 0; i < f.table.size(); ++i) {
    if (!f.table[i].is_zero()) {
      std::string key;
      for (std::size_t k = 0; k < t.size(); ++k) key += (k ? "," : "") + m.names()[t[k]];
      entries[key] = f.table[i].to_string();
    }
    for (std::size_t k = t.size(); k-- > 0;) {
      if (++t[k] < m.rank()) break;
      t[k] = 0;
    }
  }
  return entries;
}

inline Json run_symbol_tower(CommandContext& ctx) {
  CMap c = ctx.doc().as_cmap(ctx.ref("element"));
  Json out;
  out["degree"] = c.degree();
  try {
    SymbolTower tw = symbol_tower(to_form(c));
    Json levels = Json::array();
    const Backend& b = c.backend();
    for (std::size_t p = 0; p < tw.levels.size(); ++p) {
      Json lv = Json::array();
      for (const auto& [gens, f] : tw.levels[p]) {
        if (p > 0 && f.is_zero()) continue;
        std::string g;
        for (std::size_t k = 0; k < gens.size(); ++k) g += (k ? "," : "") + b.var(gens[k]);
        lv.push_back(Json{{"generators", g}, {"form_degree", f.r}, {"entries", form_json(f)}});
      }
      levels.push_back(Json{{"p", p}, {"symbols", lv}});
    }
    ctx.verdict(out, true);
    out["levels"] = levels;
  } catch (const std::runtime_error& e) {
    ctx.verdict(out, false);
    out["message"] = e.what();
  }
  return out;
}

inline Json run_j_map(CommandContext& ctx) {
  const NamedElement& e = ctx.ref("element");
  if (!e.is_roth()) throw std::invalid_argument("j-map takes a Rothstein element");
  int degree = ctx.num("degree").value_or(-1);
  CMap c = apply_J(e.roth(), ctx.doc().connection(), degree);
  Json out;
  // wedge-generated J against the nested-bracket description
  bool agree = apply_J_nested(e.roth(), RothBracket(ctx.doc().connection()), c.degree()) == c;
  ctx.verdict(out, agree);
  out["routes_agree"] = agree;
  NamedElement r{c};
  out["result"] = element_json(r);
  ctx.store(r);
  return out;
}

inline Json run_j_invert(CommandContext& ctx) {
  CMap c = ctx.doc().as_cmap(ctx.ref("element"));
  if (auto d = ctx.num("degree"); d && *d != c.degree())
    throw std::invalid_argument("element has degree " + std::to_string(c.degree()) + ", not " + std::to_string(*d));
  RothElement phi = invert_J(c, ctx.doc().connection());
  Json out;
  bool round = apply_J(phi, ctx.doc().connection(), c.degree()) == c;
  ctx.verdict(out, round);
  out["round_trip"] = round;
  NamedElement r{phi};
  out["result"] = element_json(r);
  ctx.store(r);
  return out;
}

inline Json membership_json(const MembershipResult& res) {
  Json out;
  out["membership"] = to_string(res.status);
  out["cap"] = res.cap;
  out["unknowns"] = res.unknowns;
  out["equations"] = res.equations;
  if (res.preimage) out["preimage"] = res.preimage->to_string();
  if (!res.certificate.empty()) {
    Json cert = Json::array();
    for (const auto& [d, v] : res.certificate) cert.push_back(Json{{"coordinate", d}, {"weight", v.get_str()}});
    out["certificate"] = cert;
    out["certificate_pairing"] = res.pairing.get_str();
    out["witness"] = res.witness;
  }
  return out;
}

inline Json run_chat_membership(CommandContext& ctx) {
  CMap c = ctx.doc().as_cmap(ctx.ref("element"));
  unsigned cap = ctx.cap_or(std::max(1u, c.max_coeff_degree()));
  MembershipResult res = chat_membership(c, ctx.doc().connection(), cap);
  Json out = membership_json(res);
  out["degree"] = c.degree();
  if (ctx.cmd().contains("expect")) ctx.verdict(out, ctx.str("expect") == to_string(res.status));
  return out;
}

inline Json run_cohomology(CommandContext& ctx) {
  CourantStructure s = structure_of(ctx);
  auto [rlo, rhi] = ctx.cmd().contains("r") ? parse_range(ctx.cmd()["r"], "r", 0, 8) : std::pair<int, int>{0, 3};
  auto [dlo, dhi] = ctx.cmd().contains("d") ? parse_range(ctx.cmd()["d"], "d", -8, 8) : std::pair<int, int>{0, 0};
  CohomologyTable tab = cohomology_dims(s, rhi, dlo, dhi);
  Json out;
  ctx.verdict(out, tab.delta_squared_zero && tab.euler_ok && tab.counts_ok);
  out["delta_squared_zero"] = tab.delta_squared_zero;
  out["euler_ok"] = tab.euler_ok;
  out["counts_ok"] = tab.counts_ok;
  if (!tab.message.empty()) out["message"] = tab.message;
  Json cells = Json::array();
  for (const auto& c : tab.cells) {
    if (c.r < rlo) continue;
    cells.push_back(Json{{"r", c.r}, {"d", c.d}, {"chain_dim", c.chain_dim}, {"rank_out", c.rank_out}, {"dim", c.dim}});
  }
  out["cells"] = cells;
  return out;
}

inline Json run_mc_extend(CommandContext& ctx) {
  CourantStructure s = structure_of(ctx);
  Document& doc = ctx.doc();
  std::vector<RothElement> series;
  std::optional<RothElement> cand;
  Json out;
  if (ctx.cmd().contains("xi")) {
    RothElement xi = doc.as_roth(ctx.ref("xi"));
    int k = *ctx.num("order");
    series = trivial_deformation(s, xi, std::size_t(k) + 1);
    cand = series.back();
    series.pop_back();
    Json terms = Json::array();
    for (const auto& t : series) terms.push_back(t.to_string());
    out["series"] = terms;
    out["candidate"] = cand->to_string();
  } else {
    const Json& names = ctx.cmd()["series"];
    for (std::size_t i = 0; i < names.size(); ++i)
      series.push_back(doc.as_roth(doc.element(names[i].get<std::string>(), "series")));
    if (ctx.cmd().contains("candidate")) cand = doc.as_roth(ctx.ref("candidate"));
  }
  McReport rep = mc_extend(s, series, cand);
  out["series_length"] = series.size();
  out["series_valid"] = rep.valid;
  if (!rep.valid) {
    out["failed_order"] = rep.failed_order;
    out["residual"] = rep.residuals[std::size_t(rep.failed_order) - 1].to_string();
    ctx.verdict(out, false);
    return out;
  }
  out["obstruction"] = rep.obstruction.to_string();
  out["obstruction_is_cocycle"] = rep.obstruction_is_cocycle;
  bool ok = rep.obstruction_is_cocycle;
  if (cand) {
    out["accepted"] = rep.accepted;
    std::vector<RothElement> ext = series;
    ext.push_back(*cand);
    bool brute = mc_bruteforce_coefficient(s, ext, ext.size()).is_zero();
    out["bruteforce_agrees"] = brute == rep.accepted;
    ok = ok && brute == rep.accepted;
  }
  ctx.verdict(out, ok);
  return out;
}

inline Json run_counterexample(CommandContext& ctx) {
  SderCounterexample ex = sder_counterexample();
  Json out;
  out["backend"] = ex.mod->backend().describe();
  out["element"] = cmap_to_json(ex.c);
  unsigned depth = ctx.depth_or(default_probe_depth(ex.c));
  CMapReport rep = cmap_verify(ex.c, int(depth));
  out["in_C4"] = rep.ok;
  out["probe_depth"] = rep.depth;
  out["probes"] = rep.probes;
  if (!rep.ok) out["message"] = rep.message;
  MembershipResult mem = chat_membership(ex.c, ex.conn, ctx.cap_or(1));
  out["image_of_J"] = membership_json(mem);
  ctx.verdict(out, rep.ok && mem.status == Membership::NonMember);
  return out;
}

inline Json run_property_check(CommandContext& ctx) {
  std::string prop = ctx.str("property");
  int count = ctx.num("count").value_or(20);
  int maxdeg = ctx.num("degree").value_or(3);
  const Connection& conn = ctx.doc().connection();
  const MetricModule& m = conn.module();
  // independent stream per command so inserting commands does not shift others
  Sampler rng(ctx.options().seed * 1000003u + ctx.index());
  RothBracket br(conn);
  int failures = 0;
  std::string first;
  auto deg = [&](int lo) { return rng.uniform(lo, std::max(lo, maxdeg)); };
  for (int t = 0; t < count; ++t) {
    bool ok = true;
    std::string what;
    if (prop == "jacobi-cmap") {
      int r1 = deg(1), r2 = deg(1), r3 = deg(1);
      CMap a = rng.cmap(conn, r1, 1), b = rng.cmap(conn, r2, 1), c = rng.cmap(conn, r3, 1);
      if (r1 + r2 + r3 - 4 < 0 || r1 + r2 + r3 > kMaxCDegree + 2) continue;
      bool sb = (r2 % 2) != 0;
      CMap lhs = cmap_bracket(a, cmap_bracket(b, c));
      CMap rhs = cmap_bracket(cmap_bracket(a, b), c);
      CMap swap = cmap_bracket(b, cmap_bracket(a, c));
      ok = lhs == rhs + ((r1 % 2 && sb) ? -swap : swap);
      what = "degrees " + std::to_string(r1) + "," + std::to_string(r2) + "," + std::to_string(r3);
    } else if (prop == "jacobi-roth") {
      int r1 = deg(0), r2 = deg(0), r3 = deg(0);
      RothElement a = rng.roth(m, r1, 1), b = rng.roth(m, r2, 1), c = rng.roth(m, r3, 1);
      RothElement lhs = br(a, br(b, c));
      RothElement rhs = br(br(a, b), c);
      RothElement swap = br(b, br(a, c));
      ok = lhs == rhs + ((r1 % 2 && r2 % 2) ? -swap : swap);
      what = "degrees " + std::to_string(r1) + "," + std::to_string(r2) + "," + std::to_string(r3);
    } else if (prop == "wedge-modes") {
      int r1 = deg(0), r2 = deg(0);
      if (r1 + r2 > kMaxBracketInput) continue;
      CMap a = rng.cmap(conn, r1, 1), b = rng.cmap(conn, r2, 1);
      ok = cmap_wedge(a, b, WedgeMode::Recursive) == cmap_wedge(a, b, WedgeMode::Shuffle);
      what = "degrees " + std::to_string(r1) + "," + std::to_string(r2);
    } else {
      int r1 = deg(0), r2 = deg(0);
      if (r1 + r2 > kMaxBracketInput) continue;
      RothElement a = rng.roth(m, r1, 1), b = rng.roth(m, r2, 1);
      CMap ja = apply_J(a, conn, r1), jb = apply_J(b, conn, r2);
      ok = apply_J(wedge(a, b), conn, r1 + r2) == cmap_wedge(ja, jb);
      if (r1 + r2 >= 2) ok = ok && apply_J(br(a, b), conn, r1 + r2 - 2) == cmap_bracket(ja, jb);
      what = "degrees " + std::to_string(r1) + "," + std::to_string(r2);
    }
    if (!ok) {
      ++failures;
      if (first.empty()) first = "trial " + std::to_string(t) + " (" + what + ")";
    }
  }
  Json out;
  ctx.verdict(out, failures == 0);
  out["property"] = prop;
  out["trials"] = count;
  out["failures"] = failures;
  out["seed"] = ctx.options().seed;
  if (!first.empty()) out["first_failure"] = first;
  return out;
}

inline Json dispatch(CommandContext& ctx, const std::string& op) {
  if (op == "verify-courant") return run_verify_courant(ctx);
  if (op == "cmap-verify") return run_cmap_verify(ctx);
  if (op == "bracket") return run_product(ctx, true);
  if (op == "wedge") return run_product(ctx, false);
  if (op == "symbol-tower") return run_symbol_tower(ctx);
  if (op == "j-map") return run_j_map(ctx);
  if (op == "j-invert") return run_j_invert(ctx);
  if (op == "chat-membership") return run_chat_membership(ctx);
  if (op == "cohomology") return run_cohomology(ctx);
  if (op == "mc-extend") return run_mc_extend(ctx);
  if (op == "counterexample-sder") return run_counterexample(ctx);
  return run_property_check(ctx);
}

inline Json module_json(const MetricModule& m) {
  Json j;
  j["backend"] = m.backend().describe();
  j["names"] = m.names();
  Json g = Json::array();
  for (const auto& row : m.gram()) {
    Json r = Json::array();
    for (const auto& p : row) r.push_back(p.to_string());
    g.push_back(r);
  }
  j["gram"] = g;
  return j;
}

}  // namespace detail

/// Runs a validated document. Throws DocumentError on validation failure.
inline RunResult run_document(Document doc, const RunOptions& opt) {
  detail::validate_commands(doc);
  RunResult res;
  Json& rep = res.report;
  rep["schema"] = kReportSchema;
  rep["module"] = detail::module_json(doc.module());
  Json o;
  o["truncation"] = opt.truncation ? Json(*opt.truncation) : Json(nullptr);
  o["seed"] = opt.seed;
  rep["options"] = o;
  Json cmds = Json::array();
  int failed = 0, errors = 0;
  for (std::size_t i = 0; i < doc.commands.size(); ++i) {
    const Json& c = doc.commands[i];
    std::string op = c["op"].get<std::string>();
    detail::CommandContext ctx(doc, c, opt, i);
    Json entry;
    entry["index"] = i;
    entry["op"] = op;
    for (const auto& [k, v] : c.items())
      if (k != "op") entry[k] = v;
    auto t0 = std::chrono::steady_clock::now();
    try {
      Json out = detail::dispatch(ctx, op);
      entry["status"] = ctx.failed() ? "failed" : "ok";
      for (const auto& [k, v] : out.items()) entry[k] = v;
      if (ctx.failed()) ++failed;
    } catch (const std::exception& e) {
      entry["status"] = "error";
      entry["error"] = e.what();
      ++errors;
    }
    if (opt.timings) {
      auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0).count();
      entry["runtime_us"] = us;
    }
    cmds.push_back(entry);
  }
  rep["commands"] = cmds;
  res.exit_code = errors ? 2 : failed ? 1 : 0;
  rep["summary"] = Json{{"commands", doc.commands.size()},
                        {"failed", failed},
                        {"errors", errors},
                        {"exit_code", res.exit_code}};
  return res;
}

/// Plain-text rendering of a report.
inline std::string render_human(const Json& rep) {
  std::string s;
  s += "module " + rep["module"]["backend"].get<std::string>() + ", basis";
  for (const auto& n : rep["module"]["names"]) s += " " + n.get<std::string>();
  s += "\n";
  auto scalar = [](const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (const auto& c : rep["commands"]) {
    s += "[" + std::to_string(c["index"].get<std::size_t>() + 1) + "] " + c["op"].get<std::string>() + ": " +
         c["status"].get<std::string>() + "\n";
    for (const auto& [k, v] : c.items()) {
      if (k == "index" || k == "op" || k == "status") continue;
      if (v.is_array() && !v.empty() && v[0].is_object()) {
        s += "    " + k + ":\n";
        for (const auto& row : v) {
          s += "      ";
          bool first = true;
          for (const auto& [rk, rv] : row.items()) {
            s += (first ? "" : ", ") + rk + "=" + scalar(rv);
            first = false;
          }
          s += "\n";
        }
      } else {
        s += "    " + k + ": " + scalar(v) + "\n";
      }
    }
  }
  const Json& sum = rep["summary"];
  s += std::to_string(sum["commands"].get<int>()) + " commands, " + std::to_string(sum["failed"].get<int>()) +
       " failed, " + std::to_string(sum["errors"].get<int>()) + " errors\n";
  return s;
}

}  // namespace courant
