// courant: batch front end for problem documents.
//
//   courant run doc.json [--format json] [--truncation d] [--seed n] [--timings]
//   courant verify-courant doc.json --element m
//   courant bracket doc.json --lhs m --rhs m
//   courant counterexample-sder
//
// Single-command subcommands ignore the document's own command list.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "courant/runner.hpp"

using courant::Json;

namespace {

struct Flags {
  std::string document;
  std::string format = "human";
  std::optional<unsigned> truncation;
  std::uint64_t seed = 1;
  bool timings = false;

  // fields forwarded into the synthesized command
  std::map<std::string, std::string> strings;
  std::map<std::string, int> ints;
  std::vector<std::string> series;
};

void emit_error(const Flags& f, const std::string& msg) {
  if (f.format == "json") {
    Json j{{"schema", courant::kReportSchema}, {"error", msg}, {"summary", Json{{"exit_code", 2}}}};
    std::cout << j.dump(2) << "\n";
  }
  std::cerr << "error: " << msg << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw courant::DocumentError("", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json synthesize(const std::string& op, const Flags& f) {
  Json c;
  c["op"] = op;
  for (const auto& [k, v] : f.strings) c[k] = v;
  for (const auto& [k, v] : f.ints) c[k] = v;
  if (!f.series.empty()) c["series"] = f.series;
  return c;
}

int execute(const std::string& op, Flags& f) {
  try {
    courant::Document doc;
    if (op == "counterexample-sder" && f.document.empty()) {
      // the example carries its own module; any valid document will do
      doc = courant::parse_document(Json{{"schema", courant::kDocumentSchema},
                                         {"backend", Json{{"kind", "dual"}}},
                                         {"module", Json{{"names", {"e"}}, {"gram", {{"1"}}}}}});
    } else {
      doc = courant::parse_document_text(read_file(f.document));
    }
    if (op != "run") doc.commands = Json::array({synthesize(op, f)});
    courant::RunOptions opt;
    opt.truncation = f.truncation;
    opt.seed = f.seed;
    opt.timings = f.timings;
    courant::RunResult res = courant::run_document(std::move(doc), opt);
    if (f.format == "json") {
      std::cout << res.report.dump(2) << "\n";
    } else {
      std::cout << courant::render_human(res.report);
    }
    return res.exit_code;
  } catch (const courant::DocumentError& e) {
    emit_error(f, e.what());
  } catch (const courant::ParseError& e) {
    emit_error(f, e.what());
  } catch (const std::exception& e) {
    emit_error(f, e.what());
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-Courant brackets, Rothstein algebras and Courant algebroid deformations"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--format", f.format, "Report format")->check(CLI::IsMember({"human", "json"}));
  app.add_option("--truncation", f.truncation, "Probe depth for verifications and degree cap for membership");
  app.add_option("--seed", f.seed, "Seed for randomized property commands");
  app.add_flag("--timings", f.timings, "Add wall-clock runtimes to the report (breaks byte-identical output)");

  std::string chosen;
  auto sub = [&](const std::string& name, const std::string& help, bool needs_doc = true) {
    CLI::App* s = app.add_subcommand(name, help);
    auto* d = s->add_option("document", f.document, "Problem document (JSON)");
    if (needs_doc) d->required();
    s->callback([&chosen, name] { chosen = name; });
    return s;
  };
  auto str = [&](CLI::App* s, const std::string& flag, const std::string& key, const std::string& help,
                  bool required = false) {
    auto* o = s->add_option_function<std::string>(flag, [&f, key](const std::string& v) { f.strings[key] = v; }, help);
    if (required) o->required();
  };
  auto num = [&](CLI::App* s, const std::string& flag, const std::string& key, const std::string& help) {
    s->add_option_function<int>(flag, [&f, key](const int& v) { f.ints[key] = v; }, help);
  };

  sub("run", "Run every command of a document");
  auto* vc = sub("verify-courant", "Check the Courant axioms and [m,m] = 0 for a degree 3 element");
  str(vc, "--element", "element", "Element name", true);
  num(vc, "--depth", "depth", "Probe depth");
  auto* cv = sub("cmap-verify", "Check that an element lies in C(E)");
  str(cv, "--element", "element", "Element name", true);
  num(cv, "--depth", "depth", "Probe depth");
  for (const char* name : {"bracket", "wedge"}) {
    auto* s = sub(name, std::string(name) == "bracket" ? "Poisson bracket of two elements" : "Product of two elements");
    str(s, "--lhs", "lhs", "Left element", true);
    str(s, "--rhs", "rhs", "Right element", true);
    str(s, "--side", "side", "auto, roth or cmap");
    if (std::string(name) == "wedge") str(s, "--mode", "mode", "recursive, shuffle or both");
  }
  auto* st = sub("symbol-tower", "Iterated symbols of an element of C(E)");
  str(st, "--element", "element", "Element name", true);
  auto* jm = sub("j-map", "Image of a Rothstein element under J");
  str(jm, "--element", "element", "Element name", true);
  num(jm, "--degree", "degree", "Degree (needed for zero elements)");
  auto* ji = sub("j-invert", "Rothstein preimage of an element of degree <= 3");
  str(ji, "--element", "element", "Element name", true);
  num(ji, "--degree", "degree", "Expected degree");
  auto* cm = sub("chat-membership", "Decide membership in the image of J");
  str(cm, "--element", "element", "Element name", true);
  num(cm, "--cap", "cap", "Coefficient degree cap");
  str(cm, "--expect", "expect", "member or non-member");
  auto* co = sub("cohomology", "Deformation cohomology dimensions by block");
  str(co, "--structure", "structure", "Degree 3 structure element", true);
  str(co, "--r", "r", "Cohomological degrees, e.g. 0..3");
  str(co, "--d", "d", "Internal degrees, e.g. -1..1");
  auto* mc = sub("mc-extend", "Maurer-Cartan obstruction and extension test");
  str(mc, "--structure", "structure", "Degree 3 structure element", true);
  mc->add_option("--series", f.series, "Series terms Theta_1..Theta_k")->delimiter(',');
  str(mc, "--candidate", "candidate", "Candidate Theta_{k+1}");
  str(mc, "--xi", "xi", "Generator of a trivial deformation");
  num(mc, "--order", "order", "Order of the trivial deformation");
  auto* ce = sub("counterexample-sder", "The degree 4 element of C(E) outside the image of J", false);
  num(ce, "--cap", "cap", "Coefficient degree cap");
  auto* pc = sub("property-check", "Randomized identity checks driven by --seed");
  str(pc, "--property", "property", "jacobi-cmap, jacobi-roth, wedge-modes or j-homomorphism", true);
  num(pc, "--count", "count", "Number of trials");
  num(pc, "--degree", "degree", "Maximal degree");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return execute(chosen, f);
}
