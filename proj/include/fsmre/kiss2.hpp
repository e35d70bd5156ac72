#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fsmre/fsm.hpp"

namespace fsmre {

/// Base of every KISS2 ingestion failure.
class Kiss2Error : public std::runtime_error {
 public:
  Kiss2Error(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class Kiss2SyntaxError : public Kiss2Error {
 public:
  using Kiss2Error::Kiss2Error;
};

/// Two transition lines disagree on the same (state, input) after expansion.
class Kiss2NondeterminismError : public Kiss2Error {
 public:
  using Kiss2Error::Kiss2Error;
};

/// A directive names a state that no transition line mentions.
class Kiss2DanglingStateError : public Kiss2Error {
 public:
  using Kiss2Error::Kiss2Error;
};

/// Raw contents of a KISS2 file: the expanded transition relation plus the
/// `#@state-output` annotations written by serialize_kiss2 for states that
/// have no incoming transition.
struct Kiss2File {
  MealyFsm machine;
  std::map<StateId, BitVec> state_outputs;
};

/// Grammar: '#' comment lines; directives .i .o .p .s .r .e; transition lines
/// `<inputs 0/1/-> <current> <next> <outputs 0/1/->`. Don't-care inputs are
/// expanded, don't-care outputs read as 0. States are numbered by first
/// appearance in the current-state column, then by first appearance as a next
/// state. Without .r the reset is state 0.
Kiss2File read_kiss2(std::string_view text);

/// True iff every transition entering a state carries the same output.
bool is_moore_style(const MealyFsm& m);

using ParsedMachine = std::variant<MealyFsm, MooreFsm>;

/// Returns a MooreFsm when the file is Moore style (see is_moore_style), a
/// MealyFsm otherwise. Unspecified transitions of a Moore-style file become
/// self-loops.
ParsedMachine parse_kiss2(std::string_view text);

/// Moore-style machine, converting Mealy files with `strategy`.
MooreFsm load_moore(std::string_view text, MoorifyStrategy strategy = MoorifyStrategy::first_incoming);

struct Kiss2Row {
  InputVector input = 0;
  StateId from = 0;
  StateId to = 0;
  BitVec output;
};

/// Low-level writer shared by the Moore and partial-graph serializers.
/// `state_outputs` are emitted as `#@state-output` annotation comments.
std::string write_kiss2(unsigned input_bits, unsigned output_bits,
                        const std::vector<std::string>& state_names, StateId reset,
                        const std::vector<Kiss2Row>& rows,
                        const std::map<StateId, BitVec>& state_outputs);

/// Moore-annotated KISS2: each transition line carries lambda of its target.
/// Emits one line per (state, input) in state order, then input order.
std::string serialize_kiss2(const MooreFsm& m);

}  // namespace fsmre
