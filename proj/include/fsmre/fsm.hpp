#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fsmre/bitvec.hpp"

namespace fsmre {

using StateId = std::uint32_t;

/// A concrete input vector of I bits, stored as its unsigned value with the
/// first KISS2 character as the most significant bit.
using InputVector = std::uint32_t;

/// Largest supported input width; 2^I vectors are enumerated explicitly.
inline constexpr unsigned kMaxInputBits = 24;

std::string input_to_string(InputVector v, unsigned input_bits);

class FsmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MealyTransition {
  StateId next = 0;
  BitVec output;
  friend bool operator==(const MealyTransition&, const MealyTransition&) = default;
};

/// Mealy machine with explicit (don't-care expanded) transitions. May be
/// incompletely specified.
struct MealyFsm {
  unsigned input_bits = 0;
  unsigned output_bits = 0;
  std::vector<std::string> states;
  StateId reset = 0;
  std::map<std::pair<StateId, InputVector>, MealyTransition> transitions;

  std::size_t input_count() const { return std::size_t{1} << input_bits; }
  bool complete() const { return transitions.size() == states.size() * input_count(); }
};

/// Completely specified Moore machine M = (I, O, S, delta, lambda, s0).
/// Immutable once constructed.
class MooreFsm {
 public:
  MooreFsm() = default;
  /// `delta` is row-major: delta[s * 2^I + v]. Throws FsmError when any
  /// invariant is broken.
  MooreFsm(unsigned input_bits, unsigned output_bits, std::vector<std::string> states,
           StateId reset, std::vector<StateId> delta, std::vector<BitVec> lambda);

  unsigned input_bits() const noexcept { return input_bits_; }
  unsigned output_bits() const noexcept { return output_bits_; }
  std::size_t state_count() const noexcept { return states_.size(); }
  std::size_t input_count() const noexcept { return std::size_t{1} << input_bits_; }
  StateId reset() const noexcept { return reset_; }

  const std::vector<std::string>& state_names() const noexcept { return states_; }
  const std::string& name(StateId s) const { return states_.at(s); }
  std::optional<StateId> find(const std::string& name) const;

  StateId next(StateId s, InputVector v) const;
  const BitVec& output(StateId s) const { return lambda_.at(s); }

  friend bool operator==(const MooreFsm&, const MooreFsm&) = default;

 private:
  unsigned input_bits_ = 0;
  unsigned output_bits_ = 0;
  std::vector<std::string> states_;
  StateId reset_ = 0;
  std::vector<StateId> delta_;
  std::vector<BitVec> lambda_;
};

/// Rule used by moorify() to pick lambda(s) from the outputs of the
/// transitions entering s.
enum class MoorifyStrategy {
  /// Output of the first incoming transition ordered by (source index, input).
  first_incoming,
  /// Most frequent incoming output; ties go to the earliest by the same order.
  majority_incoming,
};

/// Converts a Mealy machine to Moore style over the same states and delta.
/// States without incoming transitions get the all-zero output. Unspecified
/// (state, input) pairs become self-loops.
MooreFsm moorify(const MealyFsm& m, MoorifyStrategy strategy = MoorifyStrategy::first_incoming);

/// T = X * 2^I.
std::size_t transition_count(const MooreFsm& m);

struct EncodedFsm {
  MooreFsm fsm;
  std::vector<BitVec> encoding;  // indexed by StateId, all the same width

  std::size_t width() const { return encoding.empty() ? 0 : encoding.front().width(); }
};

/// Declaration-order binary encoding of width max(1, ceil(log2 |S|)).
EncodedFsm assign_binary_encoding(const MooreFsm& m);

/// Checks width uniformity and injectivity; throws FsmError.
void validate_encoding(const EncodedFsm& e);

struct StepResult {
  StateId next = 0;
  BitVec output;
  std::size_t hd = 0;
  friend bool operator==(const StepResult&, const StepResult&) = default;
};

/// One clock of the encoded machine. Moore semantics: the reported output is
/// lambda of the state entered. Throws FsmError on an unknown state or an input
/// outside [0, 2^I).
StepResult step(const EncodedFsm& e, StateId s, InputVector v);
/// Same, with the input given as a bit vector that must be exactly I wide.
StepResult step(const EncodedFsm& e, StateId s, const BitVec& v);

}  // namespace fsmre
