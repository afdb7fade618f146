#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "obsopt/model_io.hpp"

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(OBSOPT_BIN) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string model(const char* name) {
  return std::string(OBSOPT_MODELS_DIR) + "/" + name;
}

std::string strip_seconds(const std::string& s) {
  return std::regex_replace(s, std::regex("seconds=[0-9.]+"), "seconds=");
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_CASE("solve") {
  const auto lose = run("solve " + model("traingate.tga") + " --obs safety");
  CHECK(lose.code == 1);
  CHECK(lose.out.find("verdict lose") != std::string::npos);

  const auto win = run("solve " + model("traingate.tga") +
                       " --obs 'pos1>=2' --obs 'pos2>=2' --obs 'y<2'");
  CHECK(win.code == 0);
  const auto r = obsopt::io::parse_report(win.out);
  CHECK(r.command == "solve");
  CHECK(r.verdict);
  CHECK(r.obs == 0b111100);

  const auto region = run("solve " + model("lightheavy.tga") +
                          " --oracle region --obs pos=0 --obs heavy=true --obs 'y<3'");
  CHECK(region.code == 0);
}

TEST_CASE("optimize") {
  const auto r = run("optimize " + model("lightheavy.tga") + " --set N=3");
  CHECK(r.code == 0);
  const auto rep = obsopt::io::parse_report(r.out);
  CHECK(rep.best == obsopt::game::PredicateMask{0b110011});
  CHECK(rep.best_cost == obsopt::tga::Cost(3));
  CHECK(rep.reuse);
  CHECK(rep.heuristic == "expensive-first");

  const auto out = std::filesystem::temp_directory_path() / "obsopt_cli_report.txt";
  std::filesystem::remove(out);
  const auto f = run("optimize " + model("lightheavy.tga") +
                     " --heuristic midpoint --no-reuse --output " + out.string());
  CHECK(f.code == 0);
  CHECK(f.out.empty());
  std::stringstream text;
  text << std::ifstream(out).rdbuf();
  CHECK(obsopt::io::parse_report(text.str()).heuristic == "midpoint");
}

TEST_CASE("reports are reproducible") {
  for (const char* h : {"random", "midpoint", "cheap-first"}) {
    const std::string args = "optimize " + model("traingate.tga") + " --heuristic " + h +
                             " --seed 3";
    const auto a = run(args), b = run(args);
    CHECK(strip_seconds(a.out) == strip_seconds(b.out));
    CHECK_FALSE(a.out.empty());
  }
}

TEST_CASE("exit codes") {
  const auto unsafe = temp_file("obsopt_cli_lose.tga", R"(
clock x
location A initial
location BAD
edge A -> BAD : uncontrollable u
safety s except BAD
)");
  CHECK(run("optimize " + unsafe.string()).code == 1);
  const auto broken = temp_file("obsopt_cli_broken.tga", "clock x\nlocation A\n");
  CHECK(run("solve " + broken.string()).code == 3);
  CHECK(run("solve /nonexistent.tga").code == 3);
  CHECK(run("").code == 2);
  CHECK(run("solve").code == 2);
  CHECK(run("frobnicate x").code == 2);
  CHECK(run("solve " + model("traingate.tga") + " --obs nope").code == 2);
  CHECK(run("optimize " + model("traingate.tga") + " --heuristic best").code == 2);
  CHECK(run("optimize " + model("traingate.tga") + " --jobs 2").code == 2);
  CHECK(run("optimize " + model("traingate.tga") + " --max-obs 3").code == 2);
  CHECK(run("solve " + model("traingate.tga") + " --set N").code == 2);
  CHECK(run("solve " + model("traingate.tga") + " --oracle region --set X=1").code == 3);
  CHECK(run("--help").code == 0);
}
