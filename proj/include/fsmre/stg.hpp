#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fsmre/capture.hpp"
#include "fsmre/fsm.hpp"
#include "fsmre/recovery.hpp"

namespace fsmre {

/// A round whose folding breaks determinism or Moore consistency.
class InconsistentRound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two graphs disagree on a matched (state, input) key.
class MergeConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StgEdge {
  StateId target = 0;
  std::size_t round = 0;  // round that first observed the edge
  friend bool operator==(const StgEdge&, const StgEdge&) = default;
};

/// Recovered state transition graph. Outputs live on states, so every edge
/// into a state carries that state's output. Deterministic by construction:
/// at most one edge per (state, input).
class PartialStg {
 public:
  using EdgeMap = std::map<std::pair<StateId, InputVector>, StgEdge>;

  PartialStg() = default;
  PartialStg(unsigned input_bits, unsigned output_bits) : input_bits_(input_bits), output_bits_(output_bits) {}

  unsigned input_bits() const noexcept { return input_bits_; }
  unsigned output_bits() const noexcept { return output_bits_; }
  std::size_t state_count() const noexcept { return outputs_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool empty() const noexcept { return outputs_.empty(); }
  StateId reset() const noexcept { return reset_; }
  const BitVec& output(StateId s) const { return outputs_.at(s); }
  const EdgeMap& edges() const noexcept { return edges_; }
  std::optional<StateId> next(StateId s, InputVector v) const;

  /// The first state added becomes the reset state.
  StateId add_state(BitVec output);
  void set_reset(StateId s);
  /// Returns false when the identical edge already exists; throws
  /// InconsistentRound when the key maps elsewhere.
  bool add_edge(StateId from, InputVector v, StateId to, std::size_t round);

  /// Throws std::logic_error if any invariant is broken.
  void check_invariants() const;

 private:
  unsigned input_bits_ = 0;
  unsigned output_bits_ = 0;
  StateId reset_ = 0;
  std::vector<BitVec> outputs_;
  EdgeMap edges_;
};

/// Bit-identical vectors share an id; ids are dense in order of first
/// appearance, so position 0 (the reset state) gets id 0.
std::vector<StateId> fold_states(const EncodingAssignment& a);

/// One edge (class(i-1), I_i) -> class(i) per step of the trace.
PartialStg build_partial_stg(const Trace& trace, const EncodingAssignment& a, std::size_t round = 0);
/// Same over the concatenated positions of a joint solve; every trace must
/// start in the reset state.
PartialStg build_partial_stg(const std::vector<Trace>& traces, const EncodingAssignment& a,
                             const std::vector<std::size_t>& rounds);

/// Replay alignment from the shared reset: states reached by the same input
/// word are matched and unified, edges missing from `acc` are appended at the
/// matched source. Throws MergeConflict on an output disagreement.
PartialStg merge_rounds(const PartialStg& acc, const PartialStg& round);

/// |edges| / (X * 2^I), capped at 1.
double recovery_percentage(const PartialStg& p, std::size_t states, unsigned input_bits);

/// Moore-annotated KISS2 with states named s0, s1, ...
std::string to_kiss2(const PartialStg& p);
/// Reads a Moore-style KISS2 file without completing missing transitions.
PartialStg partial_from_kiss2(std::string_view text);
/// Every transition of a complete Moore machine, as a graph.
PartialStg partial_from_moore(const MooreFsm& m);

struct AttackConfig {
  std::size_t states = 0;   // X, an upper bound supplied by the operator
  unsigned input_bits = 0;  // I
  std::size_t vectors = 0;  // N per round; 0 picks choose_vector_count()
  double multiplier = 2.0;
  double goal = 0.90;
  std::size_t max_rounds = 10;
  std::uint64_t seed = 0;
  RecoveryOptions recovery;
  /// Re-solve every trace captured so far as one joint constraint set and
  /// rebuild the graph from that solution. Otherwise each round is solved
  /// alone and merged into the accumulated graph.
  bool joint = true;
  /// The goal only counts in a round whose fresh trace replays on the graph
  /// recovered before it without an output mismatch.
  bool confirm = true;
  /// Solutions may use at most `states` distinct codes.
  bool bound_codes = true;
  /// Wall-clock budget for the whole attack. Solver calls are cut to the
  /// time left and no round starts once it is spent.
  std::optional<std::chrono::milliseconds> time_budget;
  /// Keep every round's trace and solver assignment in the result.
  bool keep_rounds = false;
  /// Called before each round's solves with the round index.
  std::function<void(std::size_t)> on_round;
};

/// Throws std::invalid_argument when the configuration is unusable.
void validate(const AttackConfig& cfg);

struct RoundRecord {
  enum class Status { accepted, solver_timeout, width_cap, inconsistent, merge_conflict };

  std::size_t index = 0;
  std::uint64_t seed = 0;
  Status status = Status::accepted;
  std::string detail;
  unsigned width = 0;
  std::size_t codes = 0;
  std::vector<SolveAttempt> attempts;
  std::size_t new_transitions = 0;
  /// The trace replayed on the previous graph without an output mismatch.
  bool predicted = false;
  double fraction = 0.0;  // after this round
  double seconds = 0.0;
};

const char* to_string(RoundRecord::Status s);

struct AttackResult {
  PartialStg recovered;
  std::vector<RoundRecord> rounds;
  std::size_t vectors_per_round = 0;
  double fraction = 0.0;
  bool goal_met = false;
  double seconds = 0.0;
  /// Traces of accepted rounds, in round order.
  std::vector<Trace> accepted_traces;
  /// Filled when AttackConfig::keep_rounds is set; one entry per round. A
  /// joint assignment covers every trace up to and including its round.
  std::vector<Trace> traces;
  std::vector<std::optional<EncodingAssignment>> assignments;
};

/// Seed of round `index` derived from the attack seed.
std::uint64_t round_seed(std::uint64_t base, std::size_t index);

/// Random stimulus rounds until the goal fraction or the round cap is reached.
AttackResult attack(BlackBoxDevice& device, const AttackConfig& cfg);

}  // namespace fsmre
