#include <memory>
#include <set>

#include "doctest.h"
#include "fsmre/fixtures.hpp"
#include "fsmre/stg.hpp"
#include "fsmre/verify.hpp"

using namespace fsmre;
using namespace std::chrono_literals;

namespace {

EncodingAssignment codes(unsigned width, std::initializer_list<unsigned> values) {
  EncodingAssignment a;
  a.width = width;
  for (unsigned v : values) a.vectors.push_back(BitVec::from_uint(v, width));
  return a;
}

Trace walk(const MooreFsm& m, const std::vector<InputVector>& inputs, NoiseModel noise = NoiseModel::exact()) {
  BlackBoxDevice dev(std::make_shared<const EncodedFsm>(assign_binary_encoding(m)), noise, 1);
  return run_trace(dev, inputs);
}

// The true encodings along a walk, as the solver would ideally return them.
EncodingAssignment true_codes(const MooreFsm& m, const std::vector<InputVector>& inputs) {
  EncodedFsm e = assign_binary_encoding(m);
  EncodingAssignment a;
  a.width = static_cast<unsigned>(e.width());
  StateId s = m.reset();
  a.vectors.push_back(e.encoding[s]);
  for (InputVector v : inputs) {
    s = m.next(s, v);
    a.vectors.push_back(e.encoding[s]);
  }
  return a;
}

// Every (state, input) pair of m, in a sequence of walks from reset.
std::vector<InputVector> covering_walk(const MooreFsm& m) {
  std::vector<InputVector> inputs;
  std::vector<InputVector> all = gen_stimulus(4000, m.input_bits(), 5);
  std::set<std::pair<StateId, InputVector>> seen;
  StateId s = m.reset();
  for (InputVector v : all) {
    seen.insert({s, v});
    inputs.push_back(v);
    s = m.next(s, v);
    if (seen.size() == transition_count(m)) break;
  }
  return inputs;
}

}  // namespace

TEST_CASE("folding numbers codes by first appearance") {
  CHECK(fold_states(codes(2, {0, 1, 0})) == std::vector<StateId>{0, 1, 0});
  CHECK(fold_states(codes(2, {3, 3, 3})) == std::vector<StateId>{0, 0, 0});
  auto ids = fold_states(codes(3, {5, 2, 7, 2, 5, 1}));
  CHECK(ids == std::vector<StateId>{0, 1, 2, 1, 0, 3});
  CHECK(std::set<StateId>(ids.begin(), ids.end()).size() == codes(3, {5, 2, 7, 2, 5, 1}).distinct_codes());
}

TEST_CASE("partial graph from a short trace") {
  MooreFsm m = fixtures::load("train4");
  std::vector<InputVector> in{1, 2};
  Trace t = walk(m, in);
  PartialStg p = build_partial_stg(t, true_codes(m, in), 3);
  CHECK(p.edge_count() == 2);
  CHECK(p.state_count() <= 3);
  for (const auto& [key, edge] : p.edges()) CHECK(edge.round == 3);
  CHECK_NOTHROW(p.check_invariants());
}

TEST_CASE("a repeated transition is stored once") {
  MooreFsm m = fixtures::load("lion");
  InputVector stay = 0;
  while (m.next(m.reset(), stay) != m.reset()) ++stay;
  std::vector<InputVector> in{stay, stay, stay};
  PartialStg p = build_partial_stg(walk(m, in), true_codes(m, in), 0);
  CHECK(p.edge_count() == 1);
  CHECK(p.state_count() == 1);
}

TEST_CASE("a full-coverage walk rebuilds the machine") {
  for (const char* name : {"train4", "lion", "dk27", "shiftreg"}) {
    CAPTURE(name);
    MooreFsm m = fixtures::load(name);
    auto in = covering_walk(m);
    PartialStg p = build_partial_stg(walk(m, in), true_codes(m, in), 0);
    CHECK(p.edge_count() == transition_count(m));
    CHECK(recovery_percentage(p, m.state_count(), m.input_bits()) == 1.0);
    EquivalenceVerdict v = equivalent(p, m);
    CHECK(v.equivalent);
  }
}

TEST_CASE("folding errors are reported as inconsistent rounds") {
  MooreFsm m = fixtures::load("train4");
  std::vector<InputVector> in{1, 2, 3};
  Trace t = walk(m, in);
  // two positions with different outputs forced onto one code
  EncodingAssignment merged = codes(2, {0, 0, 0, 0});
  bool outputs_differ = false;
  for (const auto& o : t.outputs) outputs_differ |= o != t.outputs[0];
  if (outputs_differ) CHECK_THROWS_AS(build_partial_stg(t, merged, 0), InconsistentRound);
  // one state, same input, two successors
  Trace loop = walk(m, {0, 0});
  EncodingAssignment split = codes(2, {0, 0, 1});
  if (loop.outputs[2] == loop.outputs[0]) {
    loop.outputs[2] = loop.outputs[0];
    CHECK_THROWS_AS(build_partial_stg(loop, split, 0), InconsistentRound);
  }
  CHECK_THROWS_AS(build_partial_stg(t, codes(2, {0, 1}), 0), std::invalid_argument);
}

TEST_CASE("merging is idempotent and keeps the accumulator on an empty round") {
  MooreFsm m = fixtures::load("dk27");
  auto in = gen_stimulus(20, m.input_bits(), 2);
  PartialStg acc = build_partial_stg(walk(m, in), true_codes(m, in), 0);
  PartialStg same = merge_rounds(acc, acc);
  CHECK(same.edges() == acc.edges());
  CHECK(same.state_count() == acc.state_count());
  PartialStg empty(acc.input_bits(), acc.output_bits());
  CHECK(merge_rounds(acc, empty).edges() == acc.edges());
  CHECK(merge_rounds(empty, acc).edge_count() == acc.edge_count());
}

TEST_CASE("a replayable round fills the missing edges") {
  MooreFsm m = fixtures::load("train4");
  PartialStg full = partial_from_moore(m);
  // drop two edges leaving a graph that still reaches every state
  PartialStg acc(m.input_bits(), m.output_bits());
  for (StateId s = 0; s < m.state_count(); ++s) acc.add_state(m.output(s));
  std::vector<std::pair<StateId, InputVector>> dropped;
  for (const auto& [key, edge] : full.edges()) {
    if (dropped.size() < 2 && key.first != m.reset() && key.second == 3) {
      dropped.push_back(key);
      continue;
    }
    acc.add_edge(key.first, key.second, edge.target, 0);
  }
  REQUIRE(dropped.size() == 2);
  CHECK(acc.edge_count() == 14);
  PartialStg merged = merge_rounds(acc, full);
  CHECK(merged.edge_count() == 16);
  CHECK(equivalent(merged, m).equivalent);
  for (const auto& key : dropped) CHECK(merged.edges().at(key).round == 0);
}

TEST_CASE("merging graphs that disagree on an output throws") {
  PartialStg a(1, 1);
  a.add_state(BitVec::parse("0"));
  a.add_state(BitVec::parse("1"));
  a.add_edge(0, 0, 1, 0);
  PartialStg b(1, 1);
  b.add_state(BitVec::parse("0"));
  b.add_state(BitVec::parse("0"));
  b.add_edge(0, 0, 1, 1);
  CHECK_THROWS_AS(merge_rounds(a, b), MergeConflict);
  PartialStg c(1, 1);
  c.add_state(BitVec::parse("1"));
  CHECK_THROWS_AS(merge_rounds(a, c), MergeConflict);
}

TEST_CASE("recovery percentage arithmetic") {
  PartialStg p(2, 1);
  CHECK(recovery_percentage(p, 8, 2) == 0.0);
  for (int s = 0; s < 8; ++s) p.add_state(BitVec(1));
  int added = 0;
  for (StateId s = 0; s < 8 && added < 29; ++s) {
    for (InputVector v = 0; v < 4 && added < 29; ++v, ++added) p.add_edge(s, v, s, 0);
  }
  CHECK(recovery_percentage(p, 8, 2) == doctest::Approx(0.90625));
  CHECK(recovery_percentage(partial_from_moore(fixtures::load("dk27")), 7, 1) == 1.0);
  CHECK(recovery_percentage(partial_from_moore(fixtures::load("dk27")), 5, 1) == 1.0);
}

TEST_CASE("recovered graphs round-trip through KISS2") {
  MooreFsm m = fixtures::load("dk27");
  auto in = gen_stimulus(9, m.input_bits(), 1);
  PartialStg p = build_partial_stg(walk(m, in), true_codes(m, in), 0);
  std::string text = to_kiss2(p);
  PartialStg back = partial_from_kiss2(text);
  CHECK(back.state_count() == p.state_count());
  CHECK(back.reset() == p.reset());
  for (const auto& [key, edge] : p.edges()) CHECK(back.next(key.first, key.second) == edge.target);
  for (StateId s = 0; s < p.state_count(); ++s) CHECK(back.output(s) == p.output(s));
  CHECK(to_kiss2(back) == text);
}

TEST_CASE("graph invariants") {
  PartialStg p(1, 1);
  p.add_state(BitVec(1));
  CHECK(p.add_edge(0, 1, 0, 0));
  CHECK_FALSE(p.add_edge(0, 1, 0, 3));
  CHECK(p.edges().at({0, 1}).round == 0);
  p.add_state(BitVec(1));
  CHECK_THROWS_AS(p.add_edge(0, 1, 1, 0), InconsistentRound);
  CHECK_THROWS_AS(p.add_edge(0, 2, 1, 0), std::out_of_range);
  CHECK_THROWS_AS(p.add_edge(0, 0, 5, 0), std::out_of_range);
  CHECK_THROWS(p.add_state(BitVec(2)));
}

TEST_CASE("round seeds are distinct and reproducible") {
  std::set<std::uint64_t> seen;
  for (std::size_t k = 0; k < 100; ++k) seen.insert(round_seed(7, k));
  CHECK(seen.size() == 100);
  CHECK(round_seed(7, 3) == round_seed(7, 3));
  CHECK(round_seed(7, 3) != round_seed(8, 3));
}

TEST_CASE("attack on an exact channel recovers lion completely") {
  MooreFsm m = fixtures::load("lion");
  BlackBoxDevice dev(std::make_shared<const EncodedFsm>(assign_binary_encoding(m)), NoiseModel::exact(), 1);
  AttackConfig cfg;
  cfg.states = 4;
  cfg.input_bits = 2;
  cfg.goal = 1.0;
  cfg.seed = 11;
  AttackResult r = attack(dev, cfg);
  CHECK(r.vectors_per_round == 32);
  CHECK(r.goal_met);
  CHECK(r.fraction == 1.0);
  CHECK(r.rounds.size() <= 10);
  CHECK(equivalent(r.recovered, m).equivalent);
  CHECK(replay_consistency(r.recovered, r.accepted_traces).consistent);
  // the goal needs a round the previous graph already predicted
  CHECK(r.rounds.back().predicted);
}

TEST_CASE("attack with no rounds") {
  MooreFsm m = fixtures::load("lion");
  BlackBoxDevice dev(std::make_shared<const EncodedFsm>(assign_binary_encoding(m)), NoiseModel::exact(), 1);
  AttackConfig cfg;
  cfg.states = 4;
  cfg.input_bits = 2;
  cfg.max_rounds = 0;
  AttackResult r = attack(dev, cfg);
  CHECK(r.rounds.empty());
  CHECK(r.recovered.empty());
  CHECK(r.fraction == 0.0);
  CHECK_FALSE(r.goal_met);
}

TEST_CASE("attack configuration is validated") {
  MooreFsm m = fixtures::load("lion");
  BlackBoxDevice dev(std::make_shared<const EncodedFsm>(assign_binary_encoding(m)), NoiseModel::exact(), 1);
  AttackConfig cfg;
  cfg.states = 4;
  cfg.input_bits = 3;
  CHECK_THROWS_AS(attack(dev, cfg), std::invalid_argument);
  cfg.input_bits = 2;
  cfg.goal = 1.5;
  CHECK_THROWS_AS(attack(dev, cfg), std::invalid_argument);
  cfg.goal = 0.9;
  cfg.multiplier = 1.0;
  CHECK_THROWS_AS(attack(dev, cfg), std::invalid_argument);
  cfg.multiplier = 2.0;
  cfg.states = 0;
  CHECK_THROWS_AS(attack(dev, cfg), std::invalid_argument);
}

TEST_CASE("per-round solving with graph merging still recovers small machines") {
  MooreFsm m = fixtures::load("train4");
  BlackBoxDevice dev(std::make_shared<const EncodedFsm>(assign_binary_encoding(m)), NoiseModel::exact(), 1);
  AttackConfig cfg;
  cfg.states = 4;
  cfg.input_bits = 2;
  cfg.goal = 0.9;
  cfg.seed = 3;
  cfg.joint = false;
  AttackResult r = attack(dev, cfg);
  for (const auto& round : r.rounds) {
    if (round.status == RoundRecord::Status::accepted) CHECK(round.fraction > 0.0);
  }
  if (!r.recovered.empty()) CHECK(replay_consistency(r.recovered, r.accepted_traces).consistent);
}

TEST_CASE("table3 attack on train4 reaches the goal with a sound graph") {
  MooreFsm m = fixtures::load("train4");
  BlackBoxDevice dev(std::make_shared<const EncodedFsm>(assign_binary_encoding(m)), NoiseModel::table3(), 9);
  AttackConfig cfg;
  cfg.states = 4;
  cfg.input_bits = 2;
  cfg.seed = 5;
  AttackResult r = attack(dev, cfg);
  CHECK(r.goal_met);
  CHECK(r.fraction >= 0.9);
  CHECK(equivalent(r.recovered, m).equivalent);
}
