#include "fsmre/fsm.hpp"

#include <algorithm>
#include <set>

namespace fsmre {

std::string input_to_string(InputVector v, unsigned input_bits) {
  std::string s(input_bits, '0');
  for (unsigned i = 0; i < input_bits; ++i) {
    if ((v >> (input_bits - 1 - i)) & 1U) s[i] = '1';
  }
  return s;
}

MooreFsm::MooreFsm(unsigned input_bits, unsigned output_bits, std::vector<std::string> states,
                   StateId reset, std::vector<StateId> delta, std::vector<BitVec> lambda)
    : input_bits_(input_bits),
      output_bits_(output_bits),
      states_(std::move(states)),
      reset_(reset),
      delta_(std::move(delta)),
      lambda_(std::move(lambda)) {
  if (input_bits_ > kMaxInputBits) throw FsmError("too many input bits");
  if (states_.empty()) throw FsmError("machine has no states");
  if (reset_ >= states_.size()) throw FsmError("reset state does not exist");
  if (delta_.size() != states_.size() * input_count()) {
    throw FsmError("transition table is not completely specified");
  }
  if (lambda_.size() != states_.size()) throw FsmError("output function size mismatch");
  for (auto t : delta_) {
    if (t >= states_.size()) throw FsmError("transition to an undeclared state");
  }
  for (const auto& o : lambda_) {
    if (o.width() != output_bits_) throw FsmError("output vector width mismatch");
  }
  std::set<std::string> names(states_.begin(), states_.end());
  if (names.size() != states_.size()) throw FsmError("duplicate state name");
}

std::optional<StateId> MooreFsm::find(const std::string& name) const {
  auto it = std::find(states_.begin(), states_.end(), name);
  if (it == states_.end()) return std::nullopt;
  return static_cast<StateId>(it - states_.begin());
}

StateId MooreFsm::next(StateId s, InputVector v) const {
  if (s >= states_.size()) throw FsmError("unknown state " + std::to_string(s));
  if (v >= input_count()) throw FsmError("input vector out of range");
  return delta_[s * input_count() + v];
}

MooreFsm moorify(const MealyFsm& m, MoorifyStrategy strategy) {
  const std::size_t n = m.states.size();
  // transitions is ordered by (source, input), which is the tie-break order.
  std::vector<std::vector<BitVec>> incoming(n);
  for (const auto& [key, t] : m.transitions) incoming.at(t.next).push_back(t.output);

  std::vector<BitVec> lambda(n, BitVec(m.output_bits));
  for (std::size_t s = 0; s < n; ++s) {
    const auto& in = incoming[s];
    if (in.empty()) continue;
    if (strategy == MoorifyStrategy::first_incoming) {
      lambda[s] = in.front();
      continue;
    }
    std::size_t best = 0;
    std::size_t best_count = 0;
    for (std::size_t k = 0; k < in.size(); ++k) {
      auto c = static_cast<std::size_t>(std::count(in.begin(), in.end(), in[k]));
      if (c > best_count) {
        best = k;
        best_count = c;
      }
    }
    lambda[s] = in[best];
  }

  const std::size_t inputs = m.input_count();
  std::vector<StateId> delta(n * inputs);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t v = 0; v < inputs; ++v) {
      auto it = m.transitions.find({static_cast<StateId>(s), static_cast<InputVector>(v)});
      delta[s * inputs + v] = it == m.transitions.end() ? static_cast<StateId>(s) : it->second.next;
    }
  }
  return MooreFsm(m.input_bits, m.output_bits, m.states, m.reset, std::move(delta), std::move(lambda));
}

std::size_t transition_count(const MooreFsm& m) { return m.state_count() * m.input_count(); }

EncodedFsm assign_binary_encoding(const MooreFsm& m) {
  std::size_t width = 1;
  while ((std::size_t{1} << width) < m.state_count()) ++width;
  EncodedFsm e{m, {}};
  e.encoding.reserve(m.state_count());
  for (std::size_t k = 0; k < m.state_count(); ++k) e.encoding.push_back(BitVec::from_uint(k, width));
  return e;
}

void validate_encoding(const EncodedFsm& e) {
  if (e.encoding.size() != e.fsm.state_count()) throw FsmError("encoding does not cover every state");
  std::set<BitVec> seen;
  for (const auto& b : e.encoding) {
    if (b.width() == 0 || b.width() != e.encoding.front().width()) {
      throw FsmError("encoding widths are not uniform");
    }
    if (!seen.insert(b).second) throw FsmError("encoding is not injective");
  }
}

StepResult step(const EncodedFsm& e, StateId s, InputVector v) {
  if (s >= e.fsm.state_count()) throw FsmError("unknown state " + std::to_string(s));
  if (v >= e.fsm.input_count()) {
    throw FsmError("input vector does not fit in " + std::to_string(e.fsm.input_bits()) + " bits");
  }
  StateId next = e.fsm.next(s, v);
  return {next, e.fsm.output(next), hamming(e.encoding[s], e.encoding[next])};
}

StepResult step(const EncodedFsm& e, StateId s, const BitVec& v) {
  if (v.width() != e.fsm.input_bits()) {
    throw FsmError("input vector has " + std::to_string(v.width()) + " bits, expected " +
                   std::to_string(e.fsm.input_bits()));
  }
  return step(e, s, static_cast<InputVector>(v.to_uint()));
}

}  // namespace fsmre
