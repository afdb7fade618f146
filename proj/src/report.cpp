#include <charconv>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "obsopt/model_io.hpp"

namespace obsopt::io {

namespace {

std::string mask_ids(game::PredicateMask m) {
  std::string out;
  for (std::size_t p : opt::members_of(m)) {
    if (!out.empty()) out += ",";
    out += std::to_string(p);
  }
  return out.empty() ? "-" : out;
}

[[noreturn]] void malformed(const std::string& what) {
  throw std::invalid_argument("malformed report: " + what);
}

std::uint64_t to_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    malformed("expected a number, got '" + std::string(s) + "'");
  return v;
}

game::PredicateMask parse_ids(std::string_view s) {
  game::PredicateMask m = 0;
  if (s == "-") return m;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    const auto id = to_u64(s.substr(start, end - start));
    if (id >= 64) malformed("predicate id out of range");
    m |= game::PredicateMask{1} << id;
    start = end + 1;
  }
  return m;
}

bool parse_bool(std::string_view s) {
  if (s == "true") return true;
  if (s == "false") return false;
  malformed("expected true or false, got '" + std::string(s) + "'");
}

}  // namespace

opt::CostFunction Report::costs() const {
  opt::CostFunction w;
  for (const auto& p : predicates) w.costs.push_back(p.cost);
  if (safety < w.costs.size()) w.costs[safety] = 0;
  return w;
}

std::string write_report(const Report& r) {
  std::ostringstream out;
  out << kReportHeader << "\n";
  out << "command " << r.command << "\n";
  out << "model " << r.model << "\n";
  out << "oracle " << r.oracle << "\n";
  for (std::size_t i = 0; i < r.predicates.size(); ++i)
    out << "predicate " << i << " " << format_cost(r.predicates[i].cost) << " "
        << r.predicates[i].name << "\n";
  out << "safety " << r.safety << "\n";
  if (r.command == "solve") {
    out << "obs " << mask_ids(r.obs) << "\n";
    out << "verdict " << (r.verdict ? "win" : "lose") << "\n";
  } else {
    out << "heuristic " << r.heuristic << "\n";
    out << "reuse " << (r.reuse ? "true" : "false") << "\n";
    out << "seed " << r.seed << "\n";
    out << "best " << (r.best ? mask_ids(*r.best) : "none") << "\n";
    out << "best-cost " << format_cost(r.best_cost) << "\n";
    out << "from-scratch " << r.from_scratch << "\n";
    out << "reused " << r.reused << "\n";
  }
  out << "iterations " << r.iterations.size() << "\n";
  std::size_t n = 0;
  for (const auto& it : r.iterations) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.6f", it.seconds);
    out << "iter " << ++n << " obs=" << mask_ids(it.obs)
        << " verdict=" << (it.verdict ? "win" : "lose")
        << " reused-from=" << (it.reused_from ? mask_ids(*it.reused_from) : "none")
        << " beliefs=" << it.beliefs << " symbolic=" << it.symbolic_states
        << " complete=" << (it.complete ? "true" : "false") << " seconds=" << secs
        << "\n";
  }
  return out.str();
}

Report parse_report(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) malformed("missing header");
  Report r;
  std::size_t declared_iterations = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string val = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "command") {
      if (val != "solve" && val != "optimize") malformed("unknown command");
      r.command = val;
    } else if (key == "model") {
      r.model = val;
    } else if (key == "oracle") {
      r.oracle = val;
    } else if (key == "predicate") {
      std::istringstream ps(val);
      std::size_t id;
      std::string cost, name;
      if (!(ps >> id >> cost) || id != r.predicates.size()) malformed("predicate line");
      std::getline(ps >> std::ws, name);
      if (name.empty()) malformed("predicate without a name");
      try {
        r.predicates.push_back({name, parse_cost(cost)});
      } catch (const std::invalid_argument&) {
        malformed("predicate cost");
      }
    } else if (key == "safety") {
      r.safety = to_u64(val);
    } else if (key == "obs") {
      r.obs = parse_ids(val);
    } else if (key == "verdict") {
      if (val != "win" && val != "lose") malformed("verdict");
      r.verdict = val == "win";
    } else if (key == "heuristic") {
      r.heuristic = val;
    } else if (key == "reuse") {
      r.reuse = parse_bool(val);
    } else if (key == "seed") {
      r.seed = to_u64(val);
    } else if (key == "best") {
      if (val == "none")
        r.best.reset();
      else
        r.best = parse_ids(val);
    } else if (key == "best-cost") {
      try {
        r.best_cost = parse_cost(val);
      } catch (const std::invalid_argument&) {
        malformed("best-cost");
      }
    } else if (key == "from-scratch") {
      r.from_scratch = to_u64(val);
    } else if (key == "reused") {
      r.reused = to_u64(val);
    } else if (key == "iterations") {
      declared_iterations = to_u64(val);
    } else if (key == "iter") {
      std::istringstream is(val);
      std::size_t n;
      if (!(is >> n) || n != r.iterations.size() + 1) malformed("iteration number");
      opt::Iteration it;
      std::string field;
      int seen = 0;
      while (is >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) malformed("iteration field");
        const std::string k = field.substr(0, eq), v = field.substr(eq + 1);
        ++seen;
        if (k == "obs") {
          it.obs = parse_ids(v);
        } else if (k == "verdict") {
          if (v != "win" && v != "lose") malformed("iteration verdict");
          it.verdict = v == "win";
        } else if (k == "reused-from") {
          if (v != "none") it.reused_from = parse_ids(v);
        } else if (k == "beliefs") {
          it.beliefs = to_u64(v);
        } else if (k == "symbolic") {
          it.symbolic_states = to_u64(v);
        } else if (k == "complete") {
          it.complete = parse_bool(v);
        } else if (k == "seconds") {
          try {
            it.seconds = std::stod(v);
          } catch (const std::exception&) {
            malformed("seconds");
          }
        } else {
          malformed("unknown iteration field '" + k + "'");
        }
      }
      if (seen != 7) malformed("iteration line needs 7 fields");
      r.iterations.push_back(it);
    } else {
      malformed("unknown key '" + key + "'");
    }
  }
  if (r.command.empty()) malformed("missing command");
  if (declared_iterations != r.iterations.size()) malformed("iteration count");
  if (!r.predicates.empty() && r.safety >= r.predicates.size())
    malformed("safety id out of range");
  return r;
}

}  // namespace obsopt::io
