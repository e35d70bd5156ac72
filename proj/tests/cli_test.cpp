#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fsmre/cli.hpp"
#include "fsmre/fixtures.hpp"
#include "fsmre/kiss2.hpp"
#include "json.hpp"

using namespace fsmre;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fsmre");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("fsmre_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write(const std::string& name, std::string_view text) {
  fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("convert turns Mealy lion into a complete Moore file") {
  Run r = cli({"convert", "--in", "builtin:lion"});
  REQUIRE(r.status == kExitOk);
  MooreFsm m = load_moore(r.out);
  CHECK(m.state_count() == 4);
  CHECK(transition_count(m) == 16);
  std::string path = write("lion_moore.kiss2", r.out);
  Run again = cli({"convert", "--in", path});
  CHECK(again.status == kExitOk);
  CHECK(again.out == r.out);
}

TEST_CASE("convert reports malformed input with its line") {
  std::string path = write("bad.kiss2", ".i 1\n.o 1\n0 a a 0\n1 a\n");
  Run r = cli({"convert", "--in", path});
  CHECK(r.status == kExitUsage);
  CHECK(r.err.find(":4:") != std::string::npos);
  CHECK(cli({"convert", "--in", (scratch() / "missing.kiss2").string()}).status == kExitUsage);
}

TEST_CASE("verify exit statuses") {
  std::string a = write("train4.kiss2", serialize_kiss2(fixtures::load("train4")));
  CHECK(cli({"verify", a, "builtin:train4"}).status == kExitOk);
  std::string text = serialize_kiss2(fixtures::load("train4"));
  // flip the output of the first transition line into st1
  std::istringstream lines(text);
  std::string line;
  std::string faulty;
  bool done = false;
  while (std::getline(lines, line)) {
    if (!done && !line.empty() && (line[0] == '0' || line[0] == '1')) {
      std::istringstream f(line);
      std::string in, from, to, out;
      f >> in >> from >> to >> out;
      if (from == to) {
        out[0] = out[0] == '0' ? '1' : '0';
        line = in + " " + from + " " + to + " " + out;
        done = true;
      }
    }
    faulty += line + "\n";
  }
  REQUIRE(done);
  std::string b = write("faulty.kiss2", faulty);
  Run bad = cli({"verify", b, "builtin:train4"});
  CHECK(bad.status == kExitNotEquivalent);
  auto report = nlohmann::json::parse(bad.out);
  CHECK(report["verdict"]["equivalent"] == false);
  CHECK(report["verdict"]["counterexample"].is_object());
  CHECK(cli({"verify", "builtin:train4", "builtin:dk27"}).status == kExitUsage);
}

TEST_CASE("attack end to end on lion with an exact channel") {
  std::string report = (scratch() / "lion.json").string();
  std::string recovered = (scratch() / "lion_rec.kiss2").string();
  Run r = cli({"attack", "--target", "builtin:lion", "--noise", "exact", "--goal", "1.0", "--seed", "7", "--report",
               report, "--recovered", recovered, "--deterministic"});
  REQUIRE(r.status == kExitOk);
  auto j = nlohmann::json::parse(slurp(report));
  CHECK(j["fraction"] == 1.0);
  CHECK(j["goal_met"] == true);
  CHECK(j["verification"]["equivalent"] == true);
  CHECK_FALSE(j.contains("seconds"));
  CHECK(cli({"verify", recovered, "builtin:lion"}).status == kExitOk);
}

TEST_CASE("attack with no rounds exits with the goal unmet") {
  Run r = cli({"attack", "--target", "builtin:lion", "--rounds-max", "0", "--seed", "1", "--deterministic"});
  CHECK(r.status == kExitGoalNotMet);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["fraction"] == 0.0);
  CHECK(j["rounds"].empty());
}

TEST_CASE("attack reports are byte-identical for identical seeds") {
  std::vector<std::string> args{"attack", "--target", "builtin:dk27", "--noise", "table3", "--seed", "99",
                                "--deterministic"};
  Run a = cli(args);
  Run b = cli(args);
  CHECK(a.status == b.status);
  CHECK(a.out == b.out);
  auto j = nlohmann::json::parse(a.out);
  CHECK(j["config"]["seed"] == 99);
}

TEST_CASE("DIMACS dumps are written for every solver call") {
  fs::path dir = scratch() / "dumps";
  Run r = cli({"attack", "--target", "builtin:train4", "--noise", "exact", "--seed", "2", "--deterministic",
               "--dimacs-dump", dir.string()});
  CHECK(r.status == kExitOk);
  std::size_t cnf = 0;
  std::size_t map = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    cnf += e.path().extension() == ".cnf";
    map += e.path().extension() == ".map";
  }
  CHECK(cnf > 0);
  CHECK(cnf == map);
  auto j = nlohmann::json::parse(r.out);
  std::size_t attempts = 0;
  for (const auto& round : j["rounds"]) attempts += round["solver"].size();
  CHECK(attempts == cnf);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).status == kExitUsage);
  CHECK(cli({"frobnicate"}).status == kExitUsage);
  CHECK(cli({"attack", "--target", "builtin:lion", "--multiplier", "1.5"}).status == kExitUsage);
  CHECK(cli({"attack", "--target", "builtin:lion", "--noise", "pink"}).status == kExitUsage);
  CHECK(cli({"attack", "--target", "builtin:nope"}).status == kExitUsage);
  CHECK(cli({"calibrate", "--samples", "50"}).status == kExitUsage);
  CHECK(cli({"--help"}).status == kExitOk);
}

TEST_CASE("calibration reports correlation and the error histogram") {
  Run r = cli({"calibrate", "--samples", "1000", "--sigma", "0", "--noise", "gaussian", "--seed", "4"});
  REQUIRE(r.status == kExitOk);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["pearson"].get<double>() >= 0.99);
  CHECK(j["zero_exact_rate"] == 1.0);
  Run t = cli({"calibrate", "--samples", "20000", "--noise", "table3", "--seed", "4"});
  auto h = nlohmann::json::parse(t.out)["error_histogram"];
  CHECK(std::abs(h["0"].get<double>() - 0.852) < 0.03);
  CHECK(std::abs(h["+1"].get<double>() - 0.120) < 0.03);
  CHECK(std::abs(h["-1"].get<double>() - 0.028) < 0.03);
  CHECK(cli({"calibrate", "--seed", "4"}).out == cli({"calibrate", "--seed", "4"}).out);
}
