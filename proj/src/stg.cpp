#include "fsmre/stg.hpp"
#include "fsmre/verify.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <numeric>

#include "fsmre/kiss2.hpp"

namespace fsmre {

std::optional<StateId> PartialStg::next(StateId s, InputVector v) const {
  auto it = edges_.find({s, v});
  if (it == edges_.end()) return std::nullopt;
  return it->second.target;
}

StateId PartialStg::add_state(BitVec output) {
  if (output.width() != output_bits_) throw std::invalid_argument("state output has the wrong width");
  outputs_.push_back(std::move(output));
  return static_cast<StateId>(outputs_.size() - 1);
}

void PartialStg::set_reset(StateId s) {
  if (s >= outputs_.size()) throw std::out_of_range("reset state does not exist");
  reset_ = s;
}

bool PartialStg::add_edge(StateId from, InputVector v, StateId to, std::size_t round) {
  if (from >= outputs_.size() || to >= outputs_.size()) throw std::out_of_range("edge endpoint does not exist");
  if (v >= (std::size_t{1} << input_bits_)) throw std::out_of_range("edge input out of range");
  auto [it, inserted] = edges_.emplace(std::make_pair(from, v), StgEdge{to, round});
  if (inserted) return true;
  if (it->second.target != to) {
    throw InconsistentRound("state s" + std::to_string(from) + " on input " + input_to_string(v, input_bits_) +
                            " leads to both s" + std::to_string(it->second.target) + " and s" +
                            std::to_string(to));
  }
  return false;
}

void PartialStg::check_invariants() const {
  if (outputs_.empty()) {
    if (!edges_.empty()) throw std::logic_error("edges without states");
    return;
  }
  if (reset_ >= outputs_.size()) throw std::logic_error("reset state missing");
  for (const auto& o : outputs_) {
    if (o.width() != output_bits_) throw std::logic_error("state output width mismatch");
  }
  for (const auto& [key, e] : edges_) {
    if (key.first >= outputs_.size() || e.target >= outputs_.size()) {
      throw std::logic_error("edge endpoint missing");
    }
  }
}

std::vector<StateId> fold_states(const EncodingAssignment& a) {
  if (a.vectors.empty()) throw std::invalid_argument("assignment is empty");
  std::map<BitVec, StateId> ids;
  std::vector<StateId> out;
  out.reserve(a.vectors.size());
  for (const auto& v : a.vectors) {
    auto [it, inserted] = ids.emplace(v, static_cast<StateId>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

PartialStg build_partial_stg(const Trace& trace, const EncodingAssignment& a, std::size_t round) {
  return build_partial_stg(std::vector<Trace>{trace}, a, std::vector<std::size_t>{round});
}

PartialStg build_partial_stg(const std::vector<Trace>& traces, const EncodingAssignment& a,
                             const std::vector<std::size_t>& rounds) {
  if (traces.empty() || rounds.size() != traces.size()) throw std::invalid_argument("one round index per trace");
  std::size_t total = 0;
  for (const Trace& t : traces) total += t.outputs.size();
  if (a.vectors.size() != total) throw std::invalid_argument("assignment does not cover the trace");
  auto classes = fold_states(a);
  const std::size_t k = *std::max_element(classes.begin(), classes.end()) + std::size_t{1};
  std::vector<std::optional<BitVec>> outputs(k);
  std::size_t offset = 0;
  for (const Trace& t : traces) {
    for (std::size_t i = 0; i < t.outputs.size(); ++i) {
      auto& slot = outputs[classes[offset + i]];
      if (!slot) {
        slot = t.outputs[i];
      } else if (*slot != t.outputs[i]) {
        throw InconsistentRound("folded state s" + std::to_string(classes[offset + i]) + " shows outputs " +
                                slot->to_string() + " and " + t.outputs[i].to_string());
      }
    }
    if (classes[offset] != classes[0]) throw InconsistentRound("trace does not start in the reset state");
    offset += t.outputs.size();
  }
  PartialStg p(traces[0].input_bits, traces[0].output_bits);
  for (auto& o : outputs) p.add_state(std::move(*o));
  p.set_reset(classes[0]);
  offset = 0;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    for (std::size_t i = 1; i < traces[t].outputs.size(); ++i) {
      p.add_edge(classes[offset + i - 1], traces[t].stimulus[i - 1], classes[offset + i], rounds[t]);
    }
    offset += traces[t].outputs.size();
  }
  p.check_invariants();
  return p;
}

namespace {

// Union-find working copy used while aligning a round onto the accumulator.
class MergeWorkspace {
 public:
  explicit MergeWorkspace(const PartialStg& acc) {
    for (StateId s = 0; s < acc.state_count(); ++s) add_state(acc.output(s));
    for (const auto& [key, e] : acc.edges()) edges_[key.first].emplace(key.second, e);
  }

  StateId add_state(const BitVec& output) {
    outputs_.push_back(output);
    parent_.push_back(static_cast<StateId>(parent_.size()));
    edges_.emplace_back();
    return parent_.back();
  }

  StateId find(StateId s) {
    while (parent_[s] != s) {
      parent_[s] = parent_[parent_[s]];
      s = parent_[s];
    }
    return s;
  }

  const BitVec& output(StateId s) { return outputs_[find(s)]; }

  std::optional<StgEdge> edge(StateId s, InputVector v) {
    auto& m = edges_[find(s)];
    auto it = m.find(v);
    if (it == m.end()) return std::nullopt;
    return StgEdge{find(it->second.target), it->second.round};
  }

  void set_edge(StateId s, InputVector v, StgEdge e) { edges_[find(s)][v] = e; }

  void unify(StateId a, StateId b) {
    std::deque<std::pair<StateId, StateId>> work{{a, b}};
    while (!work.empty()) {
      auto [x, y] = work.front();
      work.pop_front();
      x = find(x);
      y = find(y);
      if (x == y) continue;
      if (outputs_[x] != outputs_[y]) {
        throw MergeConflict("replay matches states with outputs " + outputs_[x].to_string() + " and " +
                            outputs_[y].to_string());
      }
      if (y < x) std::swap(x, y);
      parent_[y] = x;
      auto moved = std::move(edges_[y]);
      edges_[y].clear();
      for (auto& [v, e] : moved) {
        auto it = edges_[x].find(v);
        if (it == edges_[x].end()) {
          edges_[x].emplace(v, e);
        } else {
          it->second.round = std::min(it->second.round, e.round);
          work.emplace_back(it->second.target, e.target);
        }
      }
    }
  }

  PartialStg build(unsigned input_bits, unsigned output_bits, StateId reset) {
    std::vector<StateId> renumber(parent_.size(), 0);
    PartialStg out(input_bits, output_bits);
    for (StateId s = 0; s < parent_.size(); ++s) {
      if (find(s) == s) renumber[s] = out.add_state(outputs_[s]);
    }
    out.set_reset(renumber[find(reset)]);
    for (StateId s = 0; s < parent_.size(); ++s) {
      if (find(s) != s) continue;
      for (const auto& [v, e] : edges_[s]) out.add_edge(renumber[s], v, renumber[find(e.target)], e.round);
    }
    return out;
  }

 private:
  std::vector<BitVec> outputs_;
  std::vector<StateId> parent_;
  std::vector<std::map<InputVector, StgEdge>> edges_;
};

}  // namespace

PartialStg merge_rounds(const PartialStg& acc, const PartialStg& round) {
  if (round.empty()) return acc;
  if (acc.empty()) return round;
  if (acc.input_bits() != round.input_bits() || acc.output_bits() != round.output_bits()) {
    throw MergeConflict("graphs have different input/output widths");
  }
  if (acc.output(acc.reset()) != round.output(round.reset())) {
    throw MergeConflict("reset states disagree on their output");
  }

  MergeWorkspace ws(acc);
  std::vector<std::optional<StateId>> match(round.state_count());
  std::deque<StateId> queue;
  match[round.reset()] = acc.reset();
  queue.push_back(round.reset());

  while (!queue.empty()) {
    StateId r = queue.front();
    queue.pop_front();
    auto first = round.edges().lower_bound({r, 0});
    for (auto it = first; it != round.edges().end() && it->first.first == r; ++it) {
      const InputVector v = it->first.second;
      const StateId r2 = it->second.target;
      const StateId a = ws.find(*match[r]);
      if (auto existing = ws.edge(a, v)) {
        const StateId t = existing->target;
        if (ws.output(t) != round.output(r2)) {
          throw MergeConflict("state s" + std::to_string(a) + " on input " + input_to_string(v, acc.input_bits()) +
                              " outputs " + ws.output(t).to_string() + " but the round saw " +
                              round.output(r2).to_string());
        }
        if (!match[r2]) {
          match[r2] = t;
          queue.push_back(r2);
        } else if (ws.find(*match[r2]) != t) {
          ws.unify(*match[r2], t);
        }
      } else {
        StateId target = 0;
        if (match[r2]) {
          target = ws.find(*match[r2]);
        } else {
          target = ws.add_state(round.output(r2));
          match[r2] = target;
          queue.push_back(r2);
        }
        ws.set_edge(a, v, {target, it->second.round});
      }
    }
  }

  PartialStg merged = ws.build(acc.input_bits(), acc.output_bits(), acc.reset());
  merged.check_invariants();
  return merged;
}

double recovery_percentage(const PartialStg& p, std::size_t states, unsigned input_bits) {
  if (states == 0) throw std::invalid_argument("state count must be at least 1");
  double total = static_cast<double>(states) * static_cast<double>(std::size_t{1} << input_bits);
  return std::min(1.0, static_cast<double>(p.edge_count()) / total);
}

std::string to_kiss2(const PartialStg& p) {
  if (p.empty()) throw std::invalid_argument("cannot serialize an empty graph");
  std::vector<std::string> names;
  for (StateId s = 0; s < p.state_count(); ++s) names.push_back("s" + std::to_string(s));
  std::vector<Kiss2Row> rows;
  std::vector<bool> has_incoming(p.state_count(), false);
  for (const auto& [key, e] : p.edges()) {
    rows.push_back({key.second, key.first, e.target, p.output(e.target)});
    has_incoming[e.target] = true;
  }
  std::map<StateId, BitVec> annotations;
  for (StateId s = 0; s < p.state_count(); ++s) {
    if (!has_incoming[s]) annotations[s] = p.output(s);
  }
  return write_kiss2(p.input_bits(), p.output_bits(), names, p.reset(), rows, annotations);
}

PartialStg partial_from_kiss2(std::string_view text) {
  Kiss2File file = read_kiss2(text);
  const MealyFsm& m = file.machine;
  if (!is_moore_style(m)) throw InconsistentRound("KISS2 file is not Moore style");
  std::vector<std::optional<BitVec>> outputs(m.states.size());
  for (const auto& [key, t] : m.transitions) outputs[t.next] = t.output;
  for (const auto& [s, bits] : file.state_outputs) {
    if (!outputs[s]) outputs[s] = bits;
  }
  PartialStg p(m.input_bits, m.output_bits);
  for (auto& o : outputs) p.add_state(o ? std::move(*o) : BitVec(m.output_bits));
  p.set_reset(m.reset);
  for (const auto& [key, t] : m.transitions) p.add_edge(key.first, key.second, t.next, 0);
  return p;
}

PartialStg partial_from_moore(const MooreFsm& m) {
  PartialStg p(m.input_bits(), m.output_bits());
  for (StateId s = 0; s < m.state_count(); ++s) p.add_state(m.output(s));
  p.set_reset(m.reset());
  for (StateId s = 0; s < m.state_count(); ++s) {
    for (InputVector v = 0; v < m.input_count(); ++v) p.add_edge(s, v, m.next(s, v), 0);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Attack loop

const char* to_string(RoundRecord::Status s) {
  switch (s) {
    case RoundRecord::Status::accepted:
      return "accepted";
    case RoundRecord::Status::solver_timeout:
      return "solver_timeout";
    case RoundRecord::Status::width_cap:
      return "width_cap";
    case RoundRecord::Status::inconsistent:
      return "inconsistent";
    case RoundRecord::Status::merge_conflict:
      return "merge_conflict";
  }
  return "?";
}

void validate(const AttackConfig& cfg) {
  if (cfg.states == 0) throw std::invalid_argument("state-count guess must be at least 1");
  if (cfg.input_bits == 0 || cfg.input_bits > kMaxInputBits) throw std::invalid_argument("bad input width");
  if (!(cfg.goal > 0.0 && cfg.goal <= 1.0)) throw std::invalid_argument("goal must lie in (0, 1]");
  if (cfg.vectors == 0 && !(cfg.multiplier >= 2.0)) throw std::invalid_argument("multiplier must be >= 2");
}

std::uint64_t round_seed(std::uint64_t base, std::size_t index) {
  // splitmix64 of (base, index)
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

AttackResult attack(BlackBoxDevice& device, const AttackConfig& cfg) {
  validate(cfg);
  if (device.input_bits() != cfg.input_bits) throw std::invalid_argument("config input width differs from device");
  auto t0 = std::chrono::steady_clock::now();
  AttackResult result;
  result.vectors_per_round =
      cfg.vectors ? cfg.vectors : choose_vector_count(cfg.states, cfg.input_bits, cfg.multiplier);
  PartialStg acc(device.input_bits(), device.output_bits());
  std::vector<Trace> pool;
  RecoveryOptions options = cfg.recovery;
  if (cfg.bound_codes) options.max_codes = cfg.states;
  if (cfg.time_budget) options.deadline = t0 + *cfg.time_budget;
  std::vector<std::size_t> pool_rounds;

  for (std::size_t round = 0; round < cfg.max_rounds; ++round) {
    auto r0 = std::chrono::steady_clock::now();
    if (cfg.time_budget && r0 - t0 >= *cfg.time_budget) break;
    if (cfg.on_round) cfg.on_round(round);
    RoundRecord rec;
    rec.index = round;
    rec.seed = round_seed(cfg.seed, round);
    auto stimulus = gen_stimulus(result.vectors_per_round, cfg.input_bits, rec.seed);
    Trace trace = run_trace(device, stimulus, rec.seed);

    rec.predicted = !acc.empty() && replay_consistency(acc, {trace}).consistent;
    pool.push_back(trace);
    pool_rounds.push_back(round);
    RecoveryResult recovery = cfg.joint ? recover_joint(pool, options) : recover_encodings(trace, options);
    rec.width = recovery.width;
    rec.attempts = recovery.attempts;
    if (recovery.assignment) rec.codes = recovery.assignment->distinct_codes();

    if (!recovery.ok()) {
      rec.status = recovery.outcome == RecoveryResult::Outcome::timeout ? RoundRecord::Status::solver_timeout
                                                                         : RoundRecord::Status::width_cap;
      rec.detail = to_string(recovery.outcome);
    } else {
      try {
        PartialStg next;
        if (cfg.joint) {
          next = build_partial_stg(pool, *recovery.assignment, pool_rounds);
        } else {
          next = merge_rounds(acc, build_partial_stg(trace, *recovery.assignment, round));
          if (next.edge_count() < acc.edge_count()) {
            throw MergeConflict("round folds previously distinct states of the recovered graph");
          }
        }
        rec.new_transitions = next.edge_count() > acc.edge_count() ? next.edge_count() - acc.edge_count() : 0;
        acc = std::move(next);
        if (cfg.joint) {
          result.accepted_traces = pool;
        } else {
          result.accepted_traces.push_back(trace);
        }
      } catch (const InconsistentRound& e) {
        rec.status = RoundRecord::Status::inconsistent;
        rec.detail = e.what();
      } catch (const MergeConflict& e) {
        rec.status = RoundRecord::Status::merge_conflict;
        rec.detail = e.what();
      }
    }
    if (!cfg.joint) {
      pool.clear();
      pool_rounds.clear();
    }

    rec.fraction = recovery_percentage(acc, cfg.states, cfg.input_bits);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - r0).count();
    result.fraction = rec.fraction;
    const bool rec_predicted = rec.predicted;
    result.rounds.push_back(std::move(rec));
    if (cfg.keep_rounds) {
      result.traces.push_back(std::move(trace));
      result.assignments.push_back(std::move(recovery.assignment));
    }
    if (result.fraction >= cfg.goal && (rec_predicted || !cfg.confirm)) {
      result.goal_met = true;
      break;
    }
  }

  result.recovered = std::move(acc);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace fsmre
