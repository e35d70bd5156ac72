#include <variant>

#include "doctest.h"
#include "fsmre/fixtures.hpp"
#include "fsmre/kiss2.hpp"
#include "fsmre/verify.hpp"

using namespace fsmre;

namespace {

constexpr const char* kSmall =
    "# two states\n"
    ".i 2\n.o 1\n.p 4\n.s 2\n.r a\n"
    "0- a a 0\n"
    "1- a b 1\n"
    "-1 b a 0\n"
    "-0 b b 1\n"
    ".e\n";

}  // namespace

TEST_CASE("don't-care inputs expand to every concrete vector") {
  Kiss2File f = read_kiss2(kSmall);
  const MealyFsm& m = f.machine;
  CHECK(m.input_bits == 2);
  CHECK(m.output_bits == 1);
  CHECK(m.states == std::vector<std::string>{"a", "b"});
  CHECK(m.transitions.size() == 8);
  CHECK(m.complete());
  CHECK(m.transitions.at({0, 0b01}).next == 0);
  CHECK(m.transitions.at({0, 0b11}).next == 1);
  CHECK(m.transitions.at({1, 0b10}).next == 1);
  CHECK(is_moore_style(m));
}

TEST_CASE("Moore-style files load as Moore machines") {
  ParsedMachine p = parse_kiss2(kSmall);
  REQUIRE(std::holds_alternative<MooreFsm>(p));
  const MooreFsm& m = std::get<MooreFsm>(p);
  CHECK(m.output(0).to_string() == "0");
  CHECK(m.output(1).to_string() == "1");
}

TEST_CASE("Mealy files are reported as such") {
  ParsedMachine p = parse_kiss2(fixtures::kiss2("mealy3"));
  CHECK(std::holds_alternative<MealyFsm>(p));
  CHECK_NOTHROW(load_moore(fixtures::kiss2("mealy3"), MoorifyStrategy::majority_incoming));
}

TEST_CASE("reset defaults to the first state") {
  Kiss2File f = read_kiss2(".i 1\n.o 1\n0 x y 1\n1 x x 0\n- y x 0\n");
  CHECK(f.machine.reset == 0);
  CHECK(f.machine.states[0] == "x");
}

TEST_CASE("malformed input reports the offending line") {
  SUBCASE("bad character") {
    try {
      read_kiss2(".i 1\n.o 1\n2 a a 0\n");
      FAIL("expected a syntax error");
    } catch (const Kiss2SyntaxError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("wrong field width") { CHECK_THROWS_AS(read_kiss2(".i 2\n.o 1\n0 a a 0\n"), Kiss2SyntaxError); }
  SUBCASE("missing field") { CHECK_THROWS_AS(read_kiss2(".i 1\n.o 1\n0 a a\n"), Kiss2SyntaxError); }
  SUBCASE("transition before header") { CHECK_THROWS_AS(read_kiss2("0 a a 0\n.i 1\n.o 1\n"), Kiss2SyntaxError); }
  SUBCASE("unknown directive") { CHECK_THROWS_AS(read_kiss2(".i 1\n.o 1\n.q 3\n0 a a 0\n"), Kiss2SyntaxError); }
  SUBCASE("overlapping cubes disagree") {
    try {
      read_kiss2(".i 2\n.o 1\n0- a a 0\n00 a b 0\n");
      FAIL("expected nondeterminism");
    } catch (const Kiss2NondeterminismError& e) {
      CHECK(e.line() == 4);
    }
  }
  SUBCASE("dangling reset") { CHECK_THROWS_AS(read_kiss2(".i 1\n.o 1\n.r z\n0 a a 0\n"), Kiss2DanglingStateError); }
}

TEST_CASE("overlapping cubes that agree are accepted") {
  Kiss2File f = read_kiss2(".i 2\n.o 1\n0- a a 0\n00 a a 0\n1- a a 0\n");
  CHECK(f.machine.transitions.size() == 4);
}

TEST_CASE("serialization round-trips every embedded benchmark") {
  for (const auto& name : fixtures::names()) {
    CAPTURE(name);
    MooreFsm m = fixtures::load(name);
    std::string text = serialize_kiss2(m);
    MooreFsm back = load_moore(text);
    CHECK(back == m);
    CHECK(serialize_kiss2(back) == text);
    CHECK(equivalent(m, back).equivalent);
  }
}

TEST_CASE("serialized rows follow state order then input order") {
  MooreFsm m = fixtures::load("train4");
  std::string text = serialize_kiss2(m);
  std::size_t rows = 0;
  std::size_t pos = 0;
  while ((pos = text.find('\n', pos)) != std::string::npos) {
    ++pos;
    if (pos < text.size() && (text[pos] == '0' || text[pos] == '1')) ++rows;
  }
  CHECK(rows == transition_count(m));
}
