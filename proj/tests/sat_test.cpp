#include <random>
#include <sstream>

#include "doctest.h"
#include "fsmre/sat.hpp"

using namespace fsmre;
using namespace std::chrono_literals;

namespace {

bool brute_force(const sat::Cnf& cnf) {
  const int n = cnf.num_vars();
  for (std::uint32_t x = 0; x < (1U << n); ++x) {
    bool all = true;
    for (std::size_t c = 0; c < cnf.num_clauses() && all; ++c) {
      bool any = false;
      for (int lit : cnf.clause(c)) {
        const bool v = (x >> (std::abs(lit) - 1)) & 1;
        if (v == (lit > 0)) any = true;
      }
      all = any;
    }
    if (all) return true;
  }
  return false;
}

sat::Cnf random_cnf(std::mt19937_64& rng, int vars, int clauses, int width) {
  sat::Cnf cnf;
  cnf.reserve_vars(vars);
  for (int c = 0; c < clauses; ++c) {
    std::vector<int> lits;
    const int w = 1 + static_cast<int>(rng() % width);
    for (int k = 0; k < w; ++k) {
      int v = 1 + static_cast<int>(rng() % vars);
      lits.push_back(rng() & 1 ? v : -v);
    }
    cnf.add_clause(lits);
  }
  return cnf;
}

sat::Cnf pigeonhole(int holes) {
  sat::Cnf cnf;
  const int pigeons = holes + 1;
  auto var = [&](int p, int h) { return p * holes + h + 1; };
  cnf.reserve_vars(pigeons * holes);
  for (int p = 0; p < pigeons; ++p) {
    std::vector<int> lits;
    for (int h = 0; h < holes; ++h) lits.push_back(var(p, h));
    cnf.add_clause(lits);
  }
  for (int h = 0; h < holes; ++h) {
    for (int p = 0; p < pigeons; ++p) {
      for (int q = p + 1; q < pigeons; ++q) cnf.add_clause({-var(p, h), -var(q, h)});
    }
  }
  return cnf;
}

}  // namespace

TEST_CASE("solver agrees with enumeration on random formulas") {
  std::mt19937_64 rng(17);
  int sat_count = 0;
  for (int k = 0; k < 600; ++k) {
    const int vars = 1 + static_cast<int>(rng() % 12);
    sat::Cnf cnf = random_cnf(rng, vars, 1 + static_cast<int>(rng() % (5 * vars)), 3);
    sat::Result r = sat::solve(cnf, 10s);
    REQUIRE(r.status != sat::Status::timeout);
    CHECK((r.status == sat::Status::sat) == brute_force(cnf));
    if (r.status == sat::Status::sat) {
      ++sat_count;
      CHECK(sat::check_model(cnf, r.model));
    }
    sat::SolverConfig ordered;
    ordered.ordered_prefix = vars / 2;
    CHECK(sat::solve(cnf, 10s, ordered).status == r.status);
  }
  CHECK(sat_count > 50);
  CHECK(sat_count < 550);
}

TEST_CASE("pigeonhole formulas are refuted") {
  for (int holes = 1; holes <= 6; ++holes) CHECK(sat::solve(pigeonhole(holes), 60s).status == sat::Status::unsat);
}

TEST_CASE("empty clause and empty formula") {
  sat::Cnf none;
  CHECK(sat::solve(none, 1s).status == sat::Status::sat);
  sat::Cnf empty_clause;
  empty_clause.reserve_vars(2);
  empty_clause.add_clause(std::vector<int>{});
  CHECK(sat::solve(empty_clause, 1s).status == sat::Status::unsat);
  sat::Cnf units;
  units.add_clause({1});
  units.add_clause({-1});
  CHECK(sat::solve(units, 1s).status == sat::Status::unsat);
}

TEST_CASE("a zero budget times out on a hard formula") {
  CHECK(sat::solve(pigeonhole(11), 0ms).status == sat::Status::timeout);
}

TEST_CASE("solving is deterministic") {
  std::mt19937_64 rng(3);
  sat::Cnf cnf = random_cnf(rng, 60, 250, 3);
  sat::Result a = sat::solve(cnf, 30s);
  sat::Result b = sat::solve(cnf, 30s);
  CHECK(a.status == b.status);
  CHECK(a.model == b.model);
  CHECK(a.stats.conflicts == b.stats.conflicts);
  CHECK(a.stats.decisions == b.stats.decisions);
}

TEST_CASE("DIMACS round trip") {
  std::mt19937_64 rng(5);
  sat::Cnf cnf = random_cnf(rng, 9, 30, 4);
  std::stringstream ss;
  sat::write_dimacs(ss, cnf);
  CHECK(ss.str().rfind("p cnf 9 30\n", 0) == 0);
  sat::Cnf back = sat::read_dimacs(ss);
  REQUIRE(back.num_clauses() == cnf.num_clauses());
  CHECK(back.num_vars() == cnf.num_vars());
  for (std::size_t c = 0; c < cnf.num_clauses(); ++c) {
    auto x = cnf.clause(c);
    auto y = back.clause(c);
    CHECK(std::vector<int>(x.begin(), x.end()) == std::vector<int>(y.begin(), y.end()));
  }
  std::istringstream comments("c hello\np cnf 2 1\n1 -2 0\n");
  CHECK(sat::read_dimacs(comments).num_clauses() == 1);
  std::istringstream bad("p cnf 2 1\n1 3 0\n");
  CHECK_THROWS(sat::read_dimacs(bad));
}

TEST_CASE("model checking catches a falsified clause") {
  sat::Cnf cnf;
  cnf.add_clause({1, 2});
  cnf.add_clause({-1});
  CHECK(sat::check_model(cnf, {false, false, true}));
  CHECK_FALSE(sat::check_model(cnf, {false, true, false}));
}
