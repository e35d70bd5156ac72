#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "fsmre/bitvec.hpp"
#include "fsmre/capture.hpp"
#include "fsmre/fsm.hpp"
#include "fsmre/sat.hpp"

namespace fsmre {

/// Step label for the last position of a segment in a joint constraint set.
inline constexpr InputVector kNoStep = ~InputVector{0};

/// One relation between the encodings of two trace positions.
struct Constraint {
  enum class Kind : std::uint8_t { identical, hd_range, distinct };

  Kind kind = Kind::identical;
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  unsigned lo = 0;  // hd_range only
  unsigned hi = 0;  // hd_range only

  static Constraint identical(std::uint32_t i, std::uint32_t j) { return {Kind::identical, i, j, 0, 0}; }
  static Constraint hd_range(std::uint32_t i, std::uint32_t j, unsigned lo, unsigned hi) {
    return {Kind::hd_range, i, j, lo, hi};
  }
  static Constraint distinct(std::uint32_t i, std::uint32_t j) {
    return {Kind::distinct, std::min(i, j), std::max(i, j), 0, 0};
  }

  friend bool operator==(const Constraint&, const Constraint&) = default;
  friend auto operator<=>(const Constraint&, const Constraint&) = default;
};

/// Constraints over the encodings of `positions` trace positions at width R.
///
/// Besides the explicit list, two implicit families keep long traces linear in
/// size:
///  - `distinct_classes`: positions with different labels must get different
///    encodings, i.e. one Distinct per differing pair.
///  - `steps`: the encoding is a machine state, so equal encodings at k and l
///    with steps[k] == steps[l] force equal encodings at k+1 and l+1. A step of
///    kNoStep relates nothing (segment boundary of a joint set).
struct ConstraintSet {
  unsigned width = 1;
  std::size_t positions = 0;
  std::vector<Constraint> constraints{};
  std::vector<std::uint32_t> distinct_classes{};
  std::vector<InputVector> steps{};
  /// At most this many distinct encodings may be used.
  std::optional<std::size_t> max_codes{};
  /// Set when some window cannot fit in `width` bits.
  bool trivially_unsat = false;

  /// Explicit constraints plus one Distinct per pair of differing class labels.
  std::vector<Constraint> materialized() const;
  std::size_t class_count() const;

  /// Copy at another width, re-checking that every window still fits.
  ConstraintSet with_width(unsigned r) const;
};

/// Throws std::invalid_argument on out-of-range positions, i == j, lo > hi or
/// malformed implicit families.
void validate(const ConstraintSet& cs);

/// Per-position encodings found by the solver; vectors[0] is the reset state.
struct EncodingAssignment {
  unsigned width = 0;
  std::vector<BitVec> vectors;

  std::size_t distinct_codes() const;
};

/// Identical for zero readings, HdRange [max(1, c-1), min(R, c+1)] otherwise,
/// Distinct (via class labels) for every pair of differing outputs. With
/// `functional` set, the stimulus is attached as `steps`.
ConstraintSet build_constraints(const Trace& trace, unsigned width, bool functional = false);

/// Several traces captured from reset, concatenated. Every segment start is
/// Identical to position 0; no HdRange crosses a boundary and the boundary
/// step is kNoStep.
ConstraintSet build_joint_constraints(const std::vector<Trace>& traces, unsigned width, bool functional = false);

/// max(1, ceil(log2 U)) for U distinct output vectors in the trace.
unsigned r_min(const Trace& trace);
unsigned r_min(const std::vector<Trace>& traces);

enum class FamilyEncoding { automatic, pairwise, table };

struct EncodeOptions {
  /// Pin position 0 to the all-zero code. Every constraint kind is invariant
  /// under xor with a constant, so satisfiability is unchanged.
  bool symmetry_breaking = false;
  FamilyEncoding distinct_classes = FamilyEncoding::automatic;
  FamilyEncoding functional = FamilyEncoding::automatic;
};

/// CNF plus the map from (position, bit) to propositional variable.
struct EncodedCnf {
  sat::Cnf cnf;
  unsigned width = 0;
  std::size_t positions = 0;

  /// Bit 0 is the most significant bit of the encoding.
  int var(std::size_t position, unsigned bit) const {
    return static_cast<int>(position * width + bit + 1);
  }
};

EncodedCnf encode_cnf(const ConstraintSet& cs, const EncodeOptions& options = {});

/// Sidecar for DIMACS exports: one `position bit variable` line per pair.
void write_variable_map(std::ostream& os, const EncodedCnf& encoded);

EncodingAssignment decode(const EncodedCnf& encoded, const sat::Result& result);

/// Single solve of one constraint set.
struct SolveOutcome {
  sat::Result sat;
  std::optional<EncodingAssignment> assignment;  // present iff SAT
  std::size_t variables = 0;
  std::size_t clauses = 0;
};

SolveOutcome solve(const ConstraintSet& cs, std::chrono::milliseconds timeout,
                   const EncodeOptions& options = {});

struct RecoveryOptions {
  /// Budget for each solver call of the width search.
  std::chrono::milliseconds timeout{1'000'000};
  /// Widths tried are start .. start + width_margin.
  unsigned width_margin = 16;
  /// Attach the stimulus so folded positions form a deterministic machine.
  bool functional_consistency = true;
  /// After the width is fixed, shrink the number of distinct codes while the
  /// instance stays satisfiable.
  bool minimize_codes = true;
  /// Bound on distinct codes applied at every width.
  std::optional<std::size_t> max_codes{};
  std::chrono::milliseconds minimize_timeout{30'000};
  /// No solver call runs past this instant.
  std::optional<std::chrono::steady_clock::time_point> deadline;
  EncodeOptions encode{true};
  sat::SolverConfig solver;
  /// Branch on position bits in trace order before anything else, so that
  /// determinism propagates codes forward along the trace.
  bool trace_order = true;
  /// Called with every formula before it is solved (DIMACS dumps).
  std::function<void(const EncodedCnf&, const ConstraintSet&)> on_cnf;
};

struct SolveAttempt {
  unsigned width = 0;
  std::optional<std::size_t> code_bound;
  sat::Status status = sat::Status::unsat;
  sat::Stats stats;
  std::size_t variables = 0;
  std::size_t clauses = 0;
};

struct RecoveryResult {
  enum class Outcome { solved, timeout, cap_exceeded };

  Outcome outcome = Outcome::cap_exceeded;
  /// Satisfying width, or the width reached when the search stopped.
  unsigned width = 0;
  std::optional<EncodingAssignment> assignment;
  std::vector<SolveAttempt> attempts;
  double seconds = 0.0;

  bool ok() const { return outcome == Outcome::solved; }
};

const char* to_string(RecoveryResult::Outcome o);

/// Width search: R = start, start + 1, ... until `make(R)` is satisfiable.
RecoveryResult recover_min_width(const std::function<ConstraintSet(unsigned)>& make, unsigned start,
                                 const RecoveryOptions& options);

/// Starts at r_min(trace) and grows the width one bit at a time.
RecoveryResult recover_encodings(const Trace& trace, const RecoveryOptions& options = {});

/// Width search over build_joint_constraints(traces); the assignment covers the
/// concatenated positions.
RecoveryResult recover_joint(const std::vector<Trace>& traces, const RecoveryOptions& options = {});

}  // namespace fsmre
