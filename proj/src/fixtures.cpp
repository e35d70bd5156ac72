#include "fsmre/fixtures.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <stdexcept>
#include <utility>

#include "fsmre/kiss2.hpp"
#include "fsmre/verify.hpp"

namespace fsmre::fixtures {

namespace {

// 4 states, 2 inputs. st3 leaves input 10 unspecified.
constexpr std::string_view kLion = R"(# lion
.i 2
.o 1
.p 11
.s 4
.r st0
-0 st0 st0 0
11 st0 st0 0
01 st0 st1 -
0- st1 st1 1
11 st1 st0 0
10 st1 st2 1
1- st2 st2 1
00 st2 st1 1
01 st2 st3 1
0- st3 st3 1
11 st3 st2 1
.e
)";

// 4 states, 2 inputs, mostly self-loops.
constexpr std::string_view kTrain4 = R"(# train4
.i 2
.o 1
.p 16
.s 4
.r st0
00 st0 st0 0
01 st0 st1 1
10 st0 st3 0
11 st0 st0 0
00 st1 st1 1
01 st1 st1 1
10 st1 st2 1
11 st1 st0 0
00 st2 st2 1
01 st2 st3 0
10 st2 st2 1
11 st2 st2 1
00 st3 st3 0
01 st3 st0 0
10 st3 st3 0
11 st3 st2 1
.e
)";

// 7 states, 1 input, 2 outputs, no self-loops.
constexpr std::string_view kDk27 = R"(# dk27
.i 1
.o 2
.p 14
.s 7
.r s0
0 s0 s1 01
1 s0 s2 10
0 s1 s3 00
1 s1 s4 11
0 s2 s5 01
1 s2 s6 10
0 s3 s0 00
1 s3 s5 01
0 s4 s2 10
1 s4 s0 00
0 s5 s6 10
1 s5 s3 00
0 s6 s4 11
1 s6 s1 01
.e
)";

// 3-bit shift register; the output is the oldest bit.
constexpr std::string_view kShiftreg = R"(# shiftreg
.i 1
.o 1
.p 16
.s 8
.r s0
0 s0 s0 0
1 s0 s1 0
0 s1 s2 0
1 s1 s3 0
0 s2 s4 1
1 s2 s5 1
0 s3 s6 1
1 s3 s7 1
0 s4 s0 0
1 s4 s1 0
0 s5 s2 0
1 s5 s3 0
0 s6 s4 1
1 s6 s5 1
0 s7 s6 1
1 s7 s7 1
.e
)";

// Mealy: the output depends on the input as well as the state.
constexpr std::string_view kMealy = R"(# mealy3
.i 1
.o 1
.s 3
.r a
0 a a 0
1 a b 1
0 b c 0
1 b a 0
0 c c 1
1 c b 1
.e
)";

const std::vector<std::pair<std::string_view, std::string_view>>& table() {
  static const std::vector<std::pair<std::string_view, std::string_view>> t{
      {"lion", kLion}, {"train4", kTrain4}, {"dk27", kDk27}, {"shiftreg", kShiftreg}, {"mealy3", kMealy}};
  return t;
}

std::size_t reached_from(const MooreFsm& m, StateId start, bool reverse) {
  std::vector<std::vector<StateId>> adj(m.state_count());
  for (StateId s = 0; s < m.state_count(); ++s) {
    for (InputVector v = 0; v < m.input_count(); ++v) {
      StateId t = m.next(s, v);
      if (reverse) adj[t].push_back(s);
      else adj[s].push_back(t);
    }
  }
  std::vector<bool> seen(m.state_count(), false);
  std::deque<StateId> queue{start};
  seen[start] = true;
  std::size_t count = 1;
  while (!queue.empty()) {
    StateId s = queue.front();
    queue.pop_front();
    for (StateId t : adj[s]) {
      if (!seen[t]) {
        seen[t] = true;
        ++count;
        queue.push_back(t);
      }
    }
  }
  return count;
}

}  // namespace

std::vector<std::string> names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : table()) out.emplace_back(name);
  return out;
}

std::string_view kiss2(std::string_view name) {
  for (const auto& [n, text] : table()) {
    if (n == name) return text;
  }
  throw std::out_of_range("no embedded benchmark named " + std::string(name));
}

MooreFsm load(std::string_view name) { return load_moore(kiss2(name)); }

bool strongly_connected(const MooreFsm& m) {
  if (m.state_count() == 0) return false;
  return reached_from(m, 0, false) == m.state_count() && reached_from(m, 0, true) == m.state_count();
}

MooreFsm random_moore(std::size_t states, unsigned input_bits, unsigned output_bits, std::uint64_t seed) {
  if (states == 0 || input_bits == 0 || input_bits > 16 || output_bits == 0 || output_bits > 32) {
    throw std::invalid_argument("random machine parameters out of range");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<StateId> pick(0, static_cast<StateId>(states - 1));
  std::vector<std::string> names;
  for (std::size_t s = 0; s < states; ++s) names.push_back("s" + std::to_string(s));
  const std::size_t inputs = std::size_t{1} << input_bits;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<StateId> delta(states * inputs);
    for (auto& d : delta) d = pick(rng);
    std::vector<BitVec> lambda;
    for (std::size_t s = 0; s < states; ++s) {
      lambda.push_back(BitVec::from_uint(rng() >> (64 - output_bits), output_bits));
    }
    MooreFsm m(input_bits, output_bits, names, 0, std::move(delta), std::move(lambda));
    if (strongly_connected(m) && distinguishable_states(m) == states) return m;
  }
  throw std::runtime_error("no strongly connected minimal machine found");
}

}  // namespace fsmre::fixtures
