// Text model format and run reports.
//
// Models are line oriented; `#` starts a comment. Statements:
//
//   const NAME = EXPR
//   clock NAME {, NAME}
//   var NAME : EXPR .. EXPR = EXPR
//   location NAME [initial] [invariant CLOCKS]
//   invariant CLOCKS [at LOCS] [when COND]
//   edge SRC -> DST : controllable|uncontrollable ACTION
//        [when COND] [guard CLOCKS] [do NAME = EXPR {, NAME = EXPR}]
//        [reset CLOCK {, CLOCK}]
//   predicate NAME cost Q [at LOCS] [except LOCS] [when COND] [clock CLOCKS]
//   safety NAME [at LOCS] [except LOCS] [when COND]
//
// Integer variables are compiled away: every reachable (location, valuation)
// pair becomes a location of the timed game automaton. NAME may be a quoted
// string wherever a predicate is named.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "obsopt/optimizer.hpp"
#include "obsopt/tga.hpp"

namespace obsopt::io {

struct ParseOptions {
  std::map<std::string, std::int64_t, std::less<>> overrides;  // const values
};

// Throws tga::ModelError with "source:line:col: message" diagnostics.
tga::TgaModel parse_model(std::string_view text, const ParseOptions& options = {},
                          std::string_view source = "<model>");
tga::TgaModel load_model(const std::filesystem::path& path,
                         const ParseOptions& options = {});

tga::Cost parse_cost(std::string_view s);
std::string format_cost(const tga::Cost& c);

struct ReportPredicate {
  std::string name;
  tga::Cost cost{0};
};

struct Report {
  std::string command;  // solve or optimize
  std::string model;
  std::string oracle = "zone";
  std::vector<ReportPredicate> predicates;
  std::size_t safety = 0;

  // solve
  game::PredicateMask obs = 0;
  bool verdict = false;

  // optimize
  std::string heuristic;
  bool reuse = false;
  std::uint64_t seed = 0;
  std::optional<game::PredicateMask> best;
  tga::Cost best_cost{0};
  std::size_t from_scratch = 0;
  std::size_t reused = 0;
  std::vector<opt::Iteration> iterations;

  opt::CostFunction costs() const;
};

constexpr std::string_view kReportHeader = "obsopt-report 1";

std::string write_report(const Report& r);
// Throws std::invalid_argument on malformed input.
Report parse_report(std::string_view text);

}  // namespace obsopt::io
