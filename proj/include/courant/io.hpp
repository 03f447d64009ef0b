#pragma once

// Text and JSON forms for the CLI: the Rothstein element grammar, table
// literals for C(E), and the problem document ("courant-doc/1").
//
// Element grammar (whitespace is ignored):
//
//   sum     := ['+'|'-'] term (('+'|'-') term)*
//   term    := power (sep power)*          sep is one of  *  ∧  ∨  ⊗
//   power   := factor ['^' digits]
//   factor  := number ['/' number] | 'd(' var ')' | var | basis | '(' sum ')'
//
// All products are the graded commutative product of the Rothstein algebra,
// so `x^2 * d(x)∨d(x) ⊗ e1∧e2` and `e1 * x^2 * e2 * d(x)^2` denote the same
// element. RothElement::to_string output parses back to the same element.

#include <json.hpp>

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>

#include "courant/courant.hpp"
#include "courant/symbol_map.hpp"

namespace courant {

using Json = nlohmann::ordered_json;

namespace detail {

class RothParser {
 public:
  RothParser(const MetricModule& m, std::string_view text) : m_(m), b_(m.backend()), s_(text) {}

  RothElement parse_all() {
    RothElement r = parse_sum();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected '" + peek_char() + "'");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  std::string peek_char() const {
    // a whole UTF-8 sequence, so error messages stay readable
    std::size_t n = 1;
    unsigned char c = static_cast<unsigned char>(s_[pos_]);
    if (c >= 0xF0) n = 4;
    else if (c >= 0xE0) n = 3;
    else if (c >= 0xC0) n = 2;
    return std::string(s_.substr(pos_, n));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(std::string_view tok) {
    skip_ws();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  RothElement parse_sum() {
    RothElement acc(m_);
    bool neg = false;
    if (eat("-")) neg = true;
    else eat("+");
    for (;;) {
      RothElement t = parse_term();
      if (neg) acc -= t;
      else acc += t;
      if (eat("+")) neg = false;
      else if (eat("-")) neg = true;
      else break;
    }
    return acc;
  }

  RothElement parse_term() {
    RothElement acc = parse_power();
    while (eat("*") || eat("∧") || eat("∨") || eat("⊗")) acc = wedge(acc, parse_power());
    return acc;
  }

  RothElement parse_power() {
    RothElement base = parse_factor();
    if (!eat("^")) return base;
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected exponent");
    if (pos_ - start > 3) fail("exponent too large");
    int e = std::stoi(std::string(s_.substr(start, pos_ - start)));
    RothElement r = RothElement::scalar(m_, Poly(b_, 1));
    for (int k = 0; k < e; ++k) r = wedge(r, base);
    return r;
  }

  RothElement parse_factor() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of element");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      RothElement r = parse_sum();
      if (!eat(")")) fail("expected ')'");
      return r;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '/')) ++pos_;
      Rational q;
      try {
        q = parse_rational(s_.substr(start, pos_ - start));
      } catch (const ParseError& e) {
        throw ParseError(e.what(), start);
      }
      return RothElement::scalar(m_, Poly(b_, q));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      std::string name = ident();
      if (name == "d") {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '(') {
          ++pos_;
          skip_ws();
          std::size_t vstart = pos_;
          std::string v = ident();
          int g = b_.var_index(v);
          if (g < 0) {
            pos_ = vstart;
            fail("d(" + v + "): '" + v + "' is not a variable of " + b_.describe());
          }
          if (!eat(")")) fail("expected ')' after d(" + v);
          return RothElement::monomial(m_, Poly(b_, 1), {std::uint8_t(g)}, {});
        }
      }
      int a = m_.basis_index(name);
      if (a >= 0) return RothElement::vector(ModuleElement::basis(m_, std::size_t(a)));
      int v = b_.var_index(name);
      if (v >= 0) return RothElement::scalar(m_, Poly::variable(b_, std::size_t(v)));
      pos_ = start;
      fail("unknown name '" + name + "'");
    }
    fail("unexpected '" + peek_char() + "'");
  }

  std::string ident() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }

  const MetricModule& m_;
  const Backend& b_;
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline RothElement parse_roth(const MetricModule& m, std::string_view text) {
  return detail::RothParser(m, text).parse_all();
}

/// A degree 1 literal such as `x*e1 + (1 - y)*f`.
inline ModuleElement parse_vector(const MetricModule& m, std::string_view text) {
  RothElement r = parse_roth(m, text);
  ModuleElement x(m);
  for (const auto& [k, c] : r.terms()) {
    if (!k.sym.empty() || k.ext.size() != 1) throw ParseError("expected a module element, got '" + r.to_string() + "'", 0);
    x[k.ext[0]] += c;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Errors

/// Input or validation error, located by a JSON pointer into the document.
class DocumentError : public std::runtime_error {
 public:
  DocumentError(const std::string& where, const std::string& what)
      : std::runtime_error((where.empty() ? "" : where + ": ") + what) {}
};

// ---------------------------------------------------------------------------
// JSON forms of elements
//
// C(E) elements of degree >= 2:
//   {"degree": 3, "values": {"e1,e2": "e3", ...}, "symbol": {"x": {...}}}
// with absent values and symbol entries zero. Degrees 0 and 1 use
//   {"degree": 0, "value": "<poly>"} and {"degree": 1, "value": "<vector>"}.

inline Json cmap_to_json(const CMap& c) {
  Json j;
  j["degree"] = c.degree();
  if (c.degree() == 0) {
    j["value"] = c.scalar_value().to_string();
    return j;
  }
  if (c.degree() == 1) {
    j["value"] = c.vector_value().to_string();
    return j;
  }
  Json values = Json::object();
  std::vector<std::size_t> t(c.degree() - 1, 0);
  for (std::size_t i = 0; i < c.values().size(); ++i) {
    if (!c.values()[i].is_zero()) values[c.tuple_name(t)] = c.values()[i].to_string();
    c.bump(t);
  }
  j["values"] = values;
  Json sym = Json::object();
  for (std::size_t g = 0; g < c.dterms().size(); ++g)
    if (!c.dterm(g).is_zero()) sym[c.backend().var(g)] = cmap_to_json(c.dterm(g));
  j["symbol"] = sym;
  return j;
}

namespace detail {

inline std::string pointer_join(const std::string& base, const std::string& key) {
  std::string k;
  for (char ch : key) {
    if (ch == '~') k += "~0";
    else if (ch == '/') k += "~1";
    else k += ch;
  }
  return base + "/" + k;
}

template <class F>
auto located(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DocumentError&) {
    throw;
  } catch (const std::exception& e) {
    throw DocumentError(where, e.what());
  }
}

inline const std::string& expect_string(const Json& j, const std::string& where) {
  if (!j.is_string()) throw DocumentError(where, "expected a string");
  return j.get_ref<const std::string&>();
}

inline int expect_int(const Json& j, const std::string& where, int lo, int hi) {
  if (!j.is_number_integer()) throw DocumentError(where, "expected an integer");
  long long v = j.get<long long>();
  if (v < lo || v > hi) throw DocumentError(where, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                                                       std::to_string(hi) + "]");
  return int(v);
}

inline void allow_keys(const Json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw DocumentError(where, "expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) throw DocumentError(detail::pointer_join(where, k), "unknown field");
  }
}

inline std::vector<std::size_t> parse_tuple(const MetricModule& m, const std::string& key, const std::string& where) {
  std::vector<std::size_t> t;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = key.find(',', start);
    std::string name = key.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    auto b = name.find_first_not_of(" \t");
    auto e = name.find_last_not_of(" \t");
    name = b == std::string::npos ? "" : name.substr(b, e - b + 1);
    int a = m.basis_index(name);
    if (a < 0) throw DocumentError(where, "unknown basis element '" + name + "' in tuple '" + key + "'");
    t.push_back(std::size_t(a));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return t;
}

}  // namespace detail

inline CMap cmap_from_json(const MetricModule& m, const Json& j, const std::string& where = "") {
  detail::allow_keys(j, where, {"degree", "value", "values", "symbol"});
  if (!j.contains("degree")) throw DocumentError(where, "missing field 'degree'");
  int r = detail::expect_int(j["degree"], detail::pointer_join(where, "degree"), 0, kMaxCDegree);
  if (r <= 1) {
    if (j.contains("values") || j.contains("symbol"))
      throw DocumentError(where, "degree " + std::to_string(r) + " elements take a single 'value'");
    if (!j.contains("value")) return CMap::zero(m, r);
    std::string at = detail::pointer_join(where, "value");
    const std::string& text = detail::expect_string(j["value"], at);
    return detail::located(at, [&] {
      return r == 0 ? CMap::scalar(m, parse_poly(m.backend(), text)) : CMap::vector(parse_vector(m, text));
    });
  }
  if (j.contains("value")) throw DocumentError(where, "degree >= 2 elements use 'values' and 'symbol'");
  CMap c = CMap::zero(m, r);
  if (j.contains("values")) {
    std::string at = detail::pointer_join(where, "values");
    if (!j["values"].is_object()) throw DocumentError(at, "expected an object of tuple -> value entries");
    for (const auto& [key, v] : j["values"].items()) {
      std::string here = detail::pointer_join(at, key);
      auto t = detail::parse_tuple(m, key, here);
      if (int(t.size()) != r - 1)
        throw DocumentError(here, "tuple has " + std::to_string(t.size()) + " entries, degree " + std::to_string(r) +
                                      " needs " + std::to_string(r - 1));
      const std::string& text = detail::expect_string(v, here);
      c.value(t) = detail::located(here, [&] { return parse_vector(m, text); });
    }
  }
  if (j.contains("symbol")) {
    std::string at = detail::pointer_join(where, "symbol");
    if (!j["symbol"].is_object()) throw DocumentError(at, "expected an object keyed by variable");
    for (const auto& [var, v] : j["symbol"].items()) {
      std::string here = detail::pointer_join(at, var);
      int g = m.backend().var_index(var);
      if (g < 0) throw DocumentError(here, "'" + var + "' is not a variable of " + m.backend().describe());
      CMap k = cmap_from_json(m, v, here);
      if (k.degree() != r - 2)
        throw DocumentError(here, "symbol entry must have degree " + std::to_string(r - 2));
      c.dterm(std::size_t(g)) = k;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Problem documents

inline constexpr const char* kDocumentSchema = "courant-doc/1";
inline constexpr const char* kReportSchema = "courant-report/1";

/// A named element: either side of J. Rothstein elements are mapped through
/// J when a command needs a C(E) element; C(E) elements of degree <= 3 are
/// mapped back when a command needs the Rothstein side.
struct NamedElement {
  std::variant<RothElement, CMap> value;

  bool is_roth() const { return value.index() == 0; }
  const RothElement& roth() const { return std::get<0>(value); }
  const CMap& cmap() const { return std::get<1>(value); }
};

struct Document {
  const MetricModule* mod = nullptr;
  std::optional<Connection> conn;
  std::map<std::string, NamedElement> elements;
  std::vector<std::string> order;  // declaration order of elements
  Json commands = Json::array();

  const MetricModule& module() const { return *mod; }
  const Connection& connection() const { return *conn; }

  bool has(const std::string& name) const { return elements.count(name) != 0; }

  const NamedElement& element(const std::string& name, const std::string& where) const {
    auto it = elements.find(name);
    if (it == elements.end()) throw DocumentError(where, "unresolved reference '" + name + "'");
    return it->second;
  }

  CMap as_cmap(const NamedElement& e) const {
    if (!e.is_roth()) return e.cmap();
    return apply_J(e.roth(), connection(), e.roth().is_zero() ? 0 : -1);
  }

  RothElement as_roth(const NamedElement& e) const {
    if (e.is_roth()) return e.roth();
    if (e.cmap().degree() > 3)
      throw std::invalid_argument("only elements of degree <= 3 can be pulled back through J automatically");
    return invert_J(e.cmap(), connection());
  }
};

namespace detail {

inline const Backend& backend_from_json(const Json& j, const std::string& where) {
  allow_keys(j, where, {"kind", "vars", "var"});
  if (!j.contains("kind")) throw DocumentError(where, "missing field 'kind'");
  const std::string& kind = expect_string(j["kind"], pointer_join(where, "kind"));
  if (kind == "free") {
    std::vector<std::string> vars;
    if (j.contains("vars")) {
      if (!j["vars"].is_array()) throw DocumentError(pointer_join(where, "vars"), "expected an array of names");
      for (std::size_t i = 0; i < j["vars"].size(); ++i)
        vars.push_back(expect_string(j["vars"][i], pointer_join(pointer_join(where, "vars"), std::to_string(i))));
    }
    return located(where, [&]() -> const Backend& { return Backend::free_poly(vars); });
  }
  if (kind == "dual") {
    std::string var = j.contains("var") ? expect_string(j["var"], pointer_join(where, "var")) : "eps";
    return Backend::dual_numbers(var);
  }
  throw DocumentError(pointer_join(where, "kind"), "unsupported backend '" + kind + "' (expected free or dual)");
}

inline const MetricModule& module_from_json(const Backend& b, const Json& j, const std::string& where) {
  allow_keys(j, where, {"names", "gram", "weights"});
  if (!j.contains("names") || !j["names"].is_array())
    throw DocumentError(where, "missing array 'names'");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < j["names"].size(); ++i) {
    std::string at = pointer_join(pointer_join(where, "names"), std::to_string(i));
    const std::string& n = expect_string(j["names"][i], at);
    bool ident = !n.empty() && (std::isalpha(static_cast<unsigned char>(n[0])) || n[0] == '_');
    for (char ch : n) ident = ident && (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_');
    if (!ident) throw DocumentError(at, "basis name '" + n + "' is not an identifier");
    if (n == "d") throw DocumentError(at, "'d' is reserved");
    if (b.var_index(n) >= 0) throw DocumentError(at, "basis name '" + n + "' clashes with a variable");
    for (const auto& o : names)
      if (o == n) throw DocumentError(at, "duplicate basis name '" + n + "'");
    names.push_back(n);
  }
  const std::size_t k = names.size();
  std::string gat = pointer_join(where, "gram");
  if (!j.contains("gram") || !j["gram"].is_array()) throw DocumentError(where, "missing matrix 'gram'");
  if (j["gram"].size() != k) throw DocumentError(gat, "gram needs " + std::to_string(k) + " rows");
  PolyMatrix g(k, std::vector<Poly>(k, Poly(b)));
  for (std::size_t a = 0; a < k; ++a) {
    std::string rat = pointer_join(gat, std::to_string(a));
    const Json& row = j["gram"][a];
    if (!row.is_array() || row.size() != k) throw DocumentError(rat, "gram row needs " + std::to_string(k) + " entries");
    for (std::size_t c = 0; c < k; ++c) {
      std::string at = pointer_join(rat, std::to_string(c));
      const std::string& text = expect_string(row[c], at);
      g[a][c] = located(at, [&] { return parse_poly(b, text); });
    }
  }
  std::vector<int> weights;
  if (j.contains("weights")) {
    std::string wat = pointer_join(where, "weights");
    if (!j["weights"].is_array() || j["weights"].size() != k)
      throw DocumentError(wat, "weights needs " + std::to_string(k) + " integers");
    for (std::size_t a = 0; a < k; ++a)
      weights.push_back(expect_int(j["weights"][a], pointer_join(wat, std::to_string(a)), -16, 16));
  }
  return located(where, [&]() -> const MetricModule& { return MetricModule::make(b, names, g, weights); });
}

inline Connection christoffel_from_json(const MetricModule& m, const Json& j, const std::string& where) {
  const Backend& b = m.backend();
  if (!j.is_array() || j.size() != b.ngens())
    throw DocumentError(where, "Christoffel table needs one row per variable (" + std::to_string(b.ngens()) + ")");
  std::vector<std::vector<ModuleElement>> gamma;
  for (std::size_t i = 0; i < b.ngens(); ++i) {
    std::string rat = pointer_join(where, std::to_string(i));
    const Json& row = j[i];
    if (!row.is_array() || row.size() != m.rank())
      throw DocumentError(rat, "row needs one entry per basis element (" + std::to_string(m.rank()) + ")");
    std::vector<ModuleElement> r;
    for (std::size_t a = 0; a < m.rank(); ++a) {
      std::string at = pointer_join(rat, std::to_string(a));
      const std::string& text = expect_string(row[a], at);
      r.push_back(located(at, [&] { return parse_vector(m, text); }));
    }
    gamma.push_back(std::move(r));
  }
  return located(where, [&] { return Connection(m, std::move(gamma)); });
}

inline Connection connection_from_json(const MetricModule& m, const Json& j, const std::string& where) {
  if (j.is_string()) {
    if (j.get<std::string>() != "flat") throw DocumentError(where, "expected \"flat\" or an object");
    return Connection::flat(m);
  }
  allow_keys(j, where, {"christoffel", "metrize-of"});
  if (j.size() != 1) throw DocumentError(where, "give exactly one of 'christoffel' and 'metrize-of'");
  if (j.contains("christoffel")) {
    std::string at = pointer_join(where, "christoffel");
    Connection c = christoffel_from_json(m, j["christoffel"], at);
    if (auto v = c.metricity_violation()) {
      const auto& n = m.names();
      throw DocumentError(at, "connection is not metric: d_" + m.backend().var((*v)[0]) + "<" + n[(*v)[1]] + "," +
                                  n[(*v)[2]] + "> differs from the covariant expression (use metrize-of)");
    }
    return c;
  }
  std::string at = pointer_join(where, "metrize-of");
  return metrize(christoffel_from_json(m, j["metrize-of"], at));
}

inline NamedElement element_from_json(const Document& doc, const Json& j, const std::string& where) {
  const MetricModule& m = doc.module();
  if (j.is_string()) {
    return NamedElement{located(where, [&] { return parse_roth(m, j.get<std::string>()); })};
  }
  if (!j.is_object()) throw DocumentError(where, "expected an element literal");
  if (j.contains("roth")) {
    allow_keys(j, where, {"roth"});
    std::string at = pointer_join(where, "roth");
    const std::string& text = expect_string(j["roth"], at);
    return NamedElement{located(at, [&] { return parse_roth(m, text); })};
  }
  if (j.contains("cmap")) {
    allow_keys(j, where, {"cmap"});
    std::string at = pointer_join(where, "cmap");
    return NamedElement{located(at, [&] { return cmap_from_json(m, j["cmap"], at); })};
  }
  throw DocumentError(where, "an element is a string, {\"roth\": ...} or {\"cmap\": ...}");
}

inline void standard_preset(Document& doc, const Json& j, const std::string& where) {
  allow_keys(j, where, {"preset", "n"});
  int n = j.contains("n") ? expect_int(j["n"], pointer_join(where, "n"), 1, 4) : 1;
  CourantStructure s = make_standard_courant(std::size_t(n));
  doc.mod = s.mod;
  doc.conn = s.conn;
}

}  // namespace detail

/// Parses and validates a document. Only the shapes of the commands are
/// checked here; see validate_commands in runner.hpp.
inline Document parse_document(const Json& j) {
  using namespace detail;
  allow_keys(j, "", {"schema", "backend", "module", "connection", "elements", "commands", "comment"});
  if (!j.contains("schema")) throw DocumentError("/schema", "missing schema field");
  const std::string& schema = expect_string(j["schema"], "/schema");
  if (schema != kDocumentSchema)
    throw DocumentError("/schema", "unsupported schema '" + schema + "' (expected " + kDocumentSchema + ")");
  Document doc;
  if (!j.contains("module")) throw DocumentError("/module", "missing module");
  const Json& mj = j["module"];
  if (mj.is_object() && mj.contains("preset")) {
    const std::string& p = expect_string(mj["preset"], "/module/preset");
    if (p != "standard") throw DocumentError("/module/preset", "unknown preset '" + p + "' (expected standard)");
    if (j.contains("backend")) throw DocumentError("/backend", "the standard preset fixes the backend");
    if (j.contains("connection")) throw DocumentError("/connection", "the standard preset fixes the connection");
    standard_preset(doc, mj, "/module");
  } else {
    if (!j.contains("backend")) throw DocumentError("/backend", "missing backend");
    const Backend& b = backend_from_json(j["backend"], "/backend");
    doc.mod = &module_from_json(b, mj, "/module");
    doc.conn = j.contains("connection") ? connection_from_json(*doc.mod, j["connection"], "/connection")
                                        : Connection::flat(*doc.mod);
  }
  if (j.contains("elements")) {
    const Json& ej = j["elements"];
    if (!ej.is_object()) throw DocumentError("/elements", "expected an object of named elements");
    for (const auto& [name, v] : ej.items()) {
      std::string at = pointer_join("/elements", name);
      doc.elements.emplace(name, element_from_json(doc, v, at));
      doc.order.push_back(name);
    }
  }
  if (j.contains("commands")) {
    if (!j["commands"].is_array()) throw DocumentError("/commands", "expected an array");
    doc.commands = j["commands"];
  }
  return doc;
}

/// Parses document text; JSON syntax errors carry their byte offset.
inline Document parse_document_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DocumentError("", "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return parse_document(j);
}

}  // namespace courant
