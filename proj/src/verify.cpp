#include "fsmre/verify.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <functional>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace fsmre {

const char* to_string(Coverage c) { return c == Coverage::full ? "full" : "partial"; }

namespace {

struct MachineView {
  unsigned input_bits = 0;
  unsigned output_bits = 0;
  StateId reset = 0;
  std::function<std::optional<StateId>(StateId, InputVector)> next;
  std::function<const BitVec&(StateId)> output;
};

MachineView view(const MooreFsm& m) {
  return {m.input_bits(), m.output_bits(), m.reset(),
          [&m](StateId s, InputVector v) -> std::optional<StateId> { return m.next(s, v); },
          [&m](StateId s) -> const BitVec& { return m.output(s); }};
}

MachineView view(const PartialStg& p) {
  return {p.input_bits(), p.output_bits(), p.reset(), [&p](StateId s, InputVector v) { return p.next(s, v); },
          [&p](StateId s) -> const BitVec& { return p.output(s); }};
}

EquivalenceVerdict product_bfs(const MachineView& a, const MachineView& b, Coverage coverage) {
  if (a.input_bits != b.input_bits || a.output_bits != b.output_bits) {
    throw std::invalid_argument("machines have different input/output arities");
  }
  using Pair = std::pair<StateId, StateId>;
  struct Seen {
    Pair parent;
    InputVector via = 0;
  };
  auto key = [](Pair p) { return (static_cast<std::uint64_t>(p.first) << 32) | p.second; };
  std::unordered_map<std::uint64_t, Seen> seen;
  std::deque<Pair> queue;
  EquivalenceVerdict verdict;
  verdict.coverage = coverage;

  const Pair start{a.reset, b.reset};
  seen.emplace(key(start), Seen{start, 0});
  queue.push_back(start);
  const InputVector inputs = InputVector{1} << a.input_bits;
  while (!queue.empty()) {
    Pair cur = queue.front();
    queue.pop_front();
    ++verdict.pairs_visited;
    if (a.output(cur.first) != b.output(cur.second)) {
      Counterexample cx{{}, a.output(cur.first), b.output(cur.second)};
      for (Pair p = cur; p != start;) {
        const Seen& s = seen.at(key(p));
        cx.inputs.push_back(s.via);
        p = s.parent;
      }
      std::reverse(cx.inputs.begin(), cx.inputs.end());
      verdict.equivalent = false;
      verdict.counterexample = std::move(cx);
      return verdict;
    }
    for (InputVector v = 0; v < inputs; ++v) {
      auto na = a.next(cur.first, v);
      auto nb = b.next(cur.second, v);
      if (!na || !nb) continue;
      Pair nxt{*na, *nb};
      if (seen.emplace(key(nxt), Seen{cur, v}).second) queue.push_back(nxt);
    }
  }
  return verdict;
}

}  // namespace

EquivalenceVerdict equivalent(const MooreFsm& a, const MooreFsm& b) {
  return product_bfs(view(a), view(b), Coverage::full);
}

EquivalenceVerdict equivalent(const PartialStg& a, const MooreFsm& b) {
  if (a.empty()) throw std::invalid_argument("recovered graph is empty");
  return product_bfs(view(a), view(b), Coverage::partial);
}

std::vector<BitVec> simulate(const MooreFsm& m, const std::vector<InputVector>& inputs) {
  std::vector<BitVec> out{m.output(m.reset())};
  StateId s = m.reset();
  for (InputVector v : inputs) {
    s = m.next(s, v);
    out.push_back(m.output(s));
  }
  return out;
}

ReplayVerdict replay_consistency(const PartialStg& p, const std::vector<Trace>& traces) {
  ReplayVerdict verdict;
  if (p.empty()) throw std::invalid_argument("recovered graph is empty");
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const Trace& trace = traces[t];
    auto fail = [&](std::size_t step) {
      verdict.consistent = false;
      verdict.trace = t;
      verdict.step = step;
      return verdict;
    };
    if (trace.input_bits != p.input_bits() || trace.output_bits != p.output_bits()) return fail(0);
    ++verdict.steps_checked;
    if (trace.outputs[0] != p.output(p.reset())) return fail(0);
    StateId s = p.reset();
    for (std::size_t k = 0; k < trace.stimulus.size(); ++k) {
      auto n = p.next(s, trace.stimulus[k]);
      if (!n) {
        verdict.steps_skipped += trace.stimulus.size() - k;
        break;
      }
      ++verdict.steps_checked;
      s = *n;
      if (p.output(s) != trace.outputs[k + 1]) return fail(k + 1);
    }
  }
  return verdict;
}

std::vector<std::string> violations(const ConstraintSet& cs, const EncodingAssignment& a) {
  std::vector<std::string> out;
  if (a.vectors.size() != cs.positions) {
    out.push_back("assignment covers " + std::to_string(a.vectors.size()) + " of " +
                  std::to_string(cs.positions) + " positions");
    return out;
  }
  for (std::size_t p = 0; p < a.vectors.size(); ++p) {
    if (a.vectors[p].width() != cs.width) {
      out.push_back("position " + std::to_string(p) + " has width " + std::to_string(a.vectors[p].width()));
      return out;
    }
  }
  auto pair_name = [](const Constraint& c) { return std::to_string(c.i) + "," + std::to_string(c.j); };
  for (const auto& c : cs.constraints) {
    const std::size_t hd = hamming(a.vectors[c.i], a.vectors[c.j]);
    switch (c.kind) {
      case Constraint::Kind::identical:
        if (hd != 0) out.push_back("identical(" + pair_name(c) + ") has distance " + std::to_string(hd));
        break;
      case Constraint::Kind::distinct:
        if (hd == 0) out.push_back("distinct(" + pair_name(c) + ") violated");
        break;
      case Constraint::Kind::hd_range:
        if (hd < c.lo || hd > c.hi) {
          out.push_back("hd_range(" + pair_name(c) + ") has distance " + std::to_string(hd) + " outside [" +
                        std::to_string(c.lo) + "," + std::to_string(c.hi) + "]");
        }
        break;
    }
  }
  if (!cs.distinct_classes.empty()) {
    std::map<BitVec, std::uint32_t> owner;
    for (std::size_t p = 0; p < a.vectors.size(); ++p) {
      auto [it, inserted] = owner.emplace(a.vectors[p], cs.distinct_classes[p]);
      if (!inserted && it->second != cs.distinct_classes[p]) {
        out.push_back("code " + a.vectors[p].to_string() + " shared by two output classes");
      }
    }
  }
  if (!cs.steps.empty()) {
    std::map<std::pair<BitVec, InputVector>, BitVec> next;
    for (std::size_t k = 0; k + 1 < a.vectors.size(); ++k) {
      if (cs.steps[k] == kNoStep) continue;
      auto [it, inserted] = next.emplace(std::make_pair(a.vectors[k], cs.steps[k]), a.vectors[k + 1]);
      if (!inserted && it->second != a.vectors[k + 1]) {
        out.push_back("code " + a.vectors[k].to_string() + " on input " + std::to_string(cs.steps[k]) +
                      " reaches two codes");
      }
    }
  }
  if (cs.max_codes && a.distinct_codes() > *cs.max_codes) {
    out.push_back("uses " + std::to_string(a.distinct_codes()) + " codes, bound " + std::to_string(*cs.max_codes));
  }
  return out;
}

namespace {

// Codes are packed R bits per position into one integer.
bool any_assignment(const ConstraintSet& cs, unsigned r) {
  const std::size_t n = cs.positions;
  const std::uint64_t mask = (std::uint64_t{1} << r) - 1;
  const std::uint64_t total = std::uint64_t{1} << (r * n);
  auto code = [&](std::uint64_t x, std::size_t p) { return (x >> (p * r)) & mask; };
  for (std::uint64_t x = 0; x < total; ++x) {
    bool ok = true;
    for (const auto& c : cs.constraints) {
      const int hd = std::popcount(code(x, c.i) ^ code(x, c.j));
      if (c.kind == Constraint::Kind::identical) ok = hd == 0;
      else if (c.kind == Constraint::Kind::distinct) ok = hd != 0;
      else ok = hd >= static_cast<int>(c.lo) && hd <= static_cast<int>(c.hi);
      if (!ok) break;
    }
    for (std::size_t i = 0; ok && i < cs.distinct_classes.size(); ++i) {
      for (std::size_t j = i + 1; ok && j < cs.distinct_classes.size(); ++j) {
        if (cs.distinct_classes[i] != cs.distinct_classes[j] && code(x, i) == code(x, j)) ok = false;
      }
    }
    for (std::size_t k = 0; ok && k < cs.steps.size(); ++k) {
      for (std::size_t l = k + 1; ok && l < cs.steps.size(); ++l) {
        if (cs.steps[k] == kNoStep || cs.steps[k] != cs.steps[l]) continue;
        if (code(x, k) == code(x, l) && code(x, k + 1) != code(x, l + 1)) ok = false;
      }
    }
    if (ok && cs.max_codes) {
      std::vector<std::uint64_t> codes;
      for (std::size_t p = 0; p < n; ++p) codes.push_back(code(x, p));
      std::sort(codes.begin(), codes.end());
      ok = static_cast<std::size_t>(std::unique(codes.begin(), codes.end()) - codes.begin()) <= *cs.max_codes;
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace

std::optional<unsigned> brute_force_min_width(const ConstraintSet& cs, unsigned cap) {
  if (cs.positions * cap > 24) throw std::invalid_argument("enumeration bound exceeded");
  for (unsigned r = 1; r <= cap; ++r) {
    if (any_assignment(cs, r)) return r;
  }
  return std::nullopt;
}

bool brute_force_satisfiable(const ConstraintSet& cs) {
  if (cs.positions * cs.width > 24) throw std::invalid_argument("enumeration bound exceeded");
  return any_assignment(cs, cs.width);
}

std::size_t distinguishable_states(const MooreFsm& m) {
  // Moore partition refinement starting from output classes.
  const std::size_t n = m.state_count();
  std::vector<std::size_t> block(n);
  {
    std::map<BitVec, std::size_t> ids;
    for (StateId s = 0; s < n; ++s) block[s] = ids.emplace(m.output(s), ids.size()).first->second;
  }
  std::size_t count = 0;
  for (;;) {
    std::map<std::vector<std::size_t>, std::size_t> ids;
    std::vector<std::size_t> refined(n);
    for (StateId s = 0; s < n; ++s) {
      std::vector<std::size_t> sig{block[s]};
      for (InputVector v = 0; v < m.input_count(); ++v) sig.push_back(block[m.next(s, v)]);
      refined[s] = ids.emplace(std::move(sig), ids.size()).first->second;
    }
    block = std::move(refined);
    if (ids.size() == count) return count;
    count = ids.size();
  }
}

bool all_reachable(const MooreFsm& m) {
  std::vector<bool> seen(m.state_count(), false);
  std::deque<StateId> queue{m.reset()};
  seen[m.reset()] = true;
  std::size_t reached = 1;
  while (!queue.empty()) {
    StateId s = queue.front();
    queue.pop_front();
    for (InputVector v = 0; v < m.input_count(); ++v) {
      StateId t = m.next(s, v);
      if (!seen[t]) {
        seen[t] = true;
        ++reached;
        queue.push_back(t);
      }
    }
  }
  return reached == m.state_count();
}

}  // namespace fsmre
