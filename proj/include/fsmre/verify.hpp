#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fsmre/bitvec.hpp"
#include "fsmre/capture.hpp"
#include "fsmre/fsm.hpp"
#include "fsmre/recovery.hpp"
#include "fsmre/stg.hpp"

namespace fsmre {

enum class Coverage { full, partial };

const char* to_string(Coverage c);

/// Shortest input word on which two machines emit different outputs. The
/// outputs are those after the last input (the reset output when empty).
struct Counterexample {
  std::vector<InputVector> inputs;
  BitVec output_a;
  BitVec output_b;
};

struct EquivalenceVerdict {
  bool equivalent = true;
  Coverage coverage = Coverage::full;
  std::optional<Counterexample> counterexample;  // present iff !equivalent
  std::size_t pairs_visited = 0;
};

/// Breadth-first product traversal from the two reset states. Throws
/// std::invalid_argument on an input or output arity mismatch.
EquivalenceVerdict equivalent(const MooreFsm& a, const MooreFsm& b);
/// Transitions missing from `a` are skipped and the verdict is partial.
EquivalenceVerdict equivalent(const PartialStg& a, const MooreFsm& b);

/// Outputs along `inputs` from reset, including the reset output.
std::vector<BitVec> simulate(const MooreFsm& m, const std::vector<InputVector>& inputs);

struct ReplayVerdict {
  bool consistent = true;
  std::size_t trace = 0;  // first failing trace
  std::size_t step = 0;   // 0 is the reset output, k the output after input k
  std::size_t steps_checked = 0;
  std::size_t steps_skipped = 0;
};

/// Walks each trace through `p` from reset. Once a transition is absent the
/// rest of that trace cannot be placed and is skipped.
ReplayVerdict replay_consistency(const PartialStg& p, const std::vector<Trace>& traces);

/// Human-readable description of every violated constraint.
std::vector<std::string> violations(const ConstraintSet& cs, const EncodingAssignment& a);
inline bool satisfies(const ConstraintSet& cs, const EncodingAssignment& a) { return violations(cs, a).empty(); }

/// Smallest R in 1..cap for which some assignment satisfies `cs` (its own
/// width is ignored), by exhaustive enumeration. Throws std::invalid_argument
/// when positions * cap exceeds 24.
std::optional<unsigned> brute_force_min_width(const ConstraintSet& cs, unsigned cap);

/// Whether any assignment at exactly cs.width satisfies `cs`.
bool brute_force_satisfiable(const ConstraintSet& cs);

/// Number of classes of behaviorally equivalent states.
std::size_t distinguishable_states(const MooreFsm& m);

/// Every state reachable from reset.
bool all_reachable(const MooreFsm& m);

}  // namespace fsmre
