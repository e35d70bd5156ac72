#include "fsmre/recovery.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace fsmre {

// ---------------------------------------------------------------------------
// Constraint sets

std::vector<Constraint> ConstraintSet::materialized() const {
  std::vector<Constraint> out = constraints;
  std::set<std::pair<std::uint32_t, std::uint32_t>> present;
  for (const auto& c : constraints) {
    if (c.kind == Constraint::Kind::distinct) present.insert({c.i, c.j});
  }
  for (std::uint32_t i = 0; i < distinct_classes.size(); ++i) {
    for (std::uint32_t j = i + 1; j < distinct_classes.size(); ++j) {
      if (distinct_classes[i] != distinct_classes[j] && !present.count({i, j})) {
        out.push_back(Constraint::distinct(i, j));
      }
    }
  }
  return out;
}

std::size_t ConstraintSet::class_count() const {
  return std::set<std::uint32_t>(distinct_classes.begin(), distinct_classes.end()).size();
}

ConstraintSet ConstraintSet::with_width(unsigned r) const {
  ConstraintSet copy = *this;
  copy.width = r;
  copy.trivially_unsat = false;
  for (const auto& c : constraints) {
    if (c.kind == Constraint::Kind::hd_range && c.lo > r) copy.trivially_unsat = true;
  }
  return copy;
}

void validate(const ConstraintSet& cs) {
  if (cs.width == 0) throw std::invalid_argument("constraint width must be at least 1");
  for (const auto& c : cs.constraints) {
    if (c.i >= cs.positions || c.j >= cs.positions) {
      throw std::invalid_argument("constraint references a position past the trace");
    }
    if (c.i == c.j) throw std::invalid_argument("constraint relates a position to itself");
    if (c.kind == Constraint::Kind::hd_range && (c.lo > c.hi || c.lo == 0)) {
      throw std::invalid_argument("hd_range needs 1 <= lo <= hi");
    }
  }
  if (!cs.distinct_classes.empty() && cs.distinct_classes.size() != cs.positions) {
    throw std::invalid_argument("distinct_classes must label every position");
  }
  if (!cs.steps.empty() && cs.steps.size() + 1 != cs.positions) {
    throw std::invalid_argument("steps must hold one input per transition");
  }
}

std::size_t EncodingAssignment::distinct_codes() const {
  return std::set<BitVec>(vectors.begin(), vectors.end()).size();
}

namespace {

std::vector<std::uint32_t> output_classes(const Trace& trace) {
  std::map<BitVec, std::uint32_t> ids;
  std::vector<std::uint32_t> labels;
  labels.reserve(trace.outputs.size());
  for (const auto& o : trace.outputs) {
    auto [it, inserted] = ids.emplace(o, static_cast<std::uint32_t>(ids.size()));
    labels.push_back(it->second);
  }
  return labels;
}

}  // namespace

ConstraintSet build_constraints(const Trace& trace, unsigned width, bool functional) {
  if (width == 0) throw std::invalid_argument("width must be at least 1");
  if (trace.outputs.size() != trace.stimulus.size() + 1 || trace.inferred.size() != trace.stimulus.size()) {
    throw std::invalid_argument("trace lengths are inconsistent");
  }
  ConstraintSet cs;
  cs.width = width;
  cs.positions = trace.outputs.size();
  for (std::uint32_t i = 1; i < cs.positions; ++i) {
    unsigned center = trace.inferred[i - 1].center;
    if (center == 0) {
      cs.constraints.push_back(Constraint::identical(i - 1, i));
      continue;
    }
    unsigned lo = std::max(1U, center - 1);
    unsigned hi = std::min(width, center + 1);
    if (lo > hi) {
      cs.trivially_unsat = true;
      continue;
    }
    cs.constraints.push_back(Constraint::hd_range(i - 1, i, lo, hi));
  }
  cs.distinct_classes = output_classes(trace);
  if (functional) cs.steps = trace.stimulus;
  return cs;
}

ConstraintSet build_joint_constraints(const std::vector<Trace>& traces, unsigned width, bool functional) {
  if (traces.empty()) throw std::invalid_argument("no traces");
  ConstraintSet cs;
  cs.width = width;
  std::map<BitVec, std::uint32_t> ids;
  for (const Trace& trace : traces) {
    ConstraintSet part = build_constraints(trace, width, functional);
    const auto offset = static_cast<std::uint32_t>(cs.positions);
    if (offset > 0) {
      cs.constraints.push_back(Constraint::identical(0, offset));
      if (functional) cs.steps.push_back(kNoStep);
    }
    for (Constraint c : part.constraints) {
      c.i += offset;
      c.j += offset;
      cs.constraints.push_back(c);
    }
    for (const auto& o : trace.outputs) {
      cs.distinct_classes.push_back(ids.emplace(o, static_cast<std::uint32_t>(ids.size())).first->second);
    }
    cs.steps.insert(cs.steps.end(), part.steps.begin(), part.steps.end());
    cs.trivially_unsat = cs.trivially_unsat || part.trivially_unsat;
    cs.positions += part.positions;
  }
  return cs;
}

unsigned r_min(const Trace& trace) { return r_min(std::vector<Trace>{trace}); }

unsigned r_min(const std::vector<Trace>& traces) {
  std::set<BitVec> unique;
  for (const Trace& t : traces) unique.insert(t.outputs.begin(), t.outputs.end());
  if (unique.empty()) throw std::invalid_argument("trace has no outputs");
  unsigned r = 0;
  while ((std::size_t{1} << r) < unique.size()) ++r;
  return std::max(1U, r);
}

// ---------------------------------------------------------------------------
// CNF encoding

namespace {

constexpr int kTrue = INT_MAX;
constexpr int kFalse = -INT_MAX;

class Encoder {
 public:
  Encoder(const ConstraintSet& cs, const EncodeOptions& options) : cs_(cs), options_(options) {
    out_.width = cs.width;
    out_.positions = cs.positions;
    out_.cnf.reserve_vars(static_cast<int>(cs.positions * cs.width));
  }

  EncodedCnf run() && {
    if (cs_.trivially_unsat) out_.cnf.add_clause(std::span<const int>{});
    if (options_.symmetry_breaking && cs_.positions > 0) {
      for (unsigned b = 0; b < cs_.width; ++b) emit({-x(0, b)});
    }
    for (const auto& c : cs_.constraints) encode(c);
    encode_classes();
    encode_functional();
    encode_code_bound();
    return std::move(out_);
  }

 private:
  int x(std::size_t p, unsigned b) const { return out_.var(p, b); }
  unsigned r() const { return cs_.width; }

  void emit(std::initializer_list<int> lits) { emit(std::vector<int>(lits)); }

  void emit(std::vector<int> lits) {
    std::size_t j = 0;
    for (int l : lits) {
      if (l == kTrue) return;
      if (l != kFalse) lits[j++] = l;
    }
    lits.resize(j);
    out_.cnf.add_clause(lits);
  }

  int fresh() { return out_.cnf.new_var(); }

  // d_b <-> x_{i,b} xor x_{j,b}; cached per unordered pair.
  const std::vector<int>& diff(std::uint32_t i, std::uint32_t j) {
    auto key = std::minmax(i, j);
    auto [it, inserted] = diffs_.try_emplace(key);
    if (!inserted) return it->second;
    auto& d = it->second;
    for (unsigned b = 0; b < r(); ++b) {
      int v = fresh();
      int a = x(i, b);
      int c = x(j, b);
      emit({-v, a, c});
      emit({-v, -a, -c});
      emit({v, -a, c});
      emit({v, a, -c});
      d.push_back(v);
    }
    return d;
  }

  // e <-> (code_i == code_j); cached.
  int equal(std::uint32_t i, std::uint32_t j) {
    auto key = std::minmax(i, j);
    auto it = equals_.find(key);
    if (it != equals_.end()) return it->second;
    const auto d = diff(i, j);
    int e = fresh();
    std::vector<int> any{e};
    for (int v : d) {
      emit({-e, -v});
      any.push_back(v);
    }
    emit(any);
    equals_.emplace(key, e);
    return e;
  }

  // Sequential counter over `inputs` asserting lo <= sum <= hi.
  void cardinality(const std::vector<int>& inputs, unsigned lo, unsigned hi) {
    const unsigned n = static_cast<unsigned>(inputs.size());
    if (lo > n) {
      emit(std::vector<int>{});
      return;
    }
    if (lo == 0 && hi >= n) return;
    if (lo == 1 && hi >= n) {
      emit(inputs);
      return;
    }
    if (hi == 0) {
      for (int v : inputs) emit({-v});
      return;
    }
    const unsigned m = std::min(n, std::max(lo, hi + 1));
    // reg[k][j]: at least j of the first k inputs are true (k, j 1-based).
    std::vector<std::vector<int>> reg(n + 1, std::vector<int>(m + 1, kFalse));
    for (unsigned k = 0; k <= n; ++k) reg[k][0] = kTrue;
    for (unsigned k = 1; k <= n; ++k) {
      for (unsigned j = 1; j <= std::min(k, m); ++j) reg[k][j] = fresh();
    }
    for (unsigned k = 1; k <= n; ++k) {
      int in = inputs[k - 1];
      for (unsigned j = 1; j <= std::min(k, m); ++j) {
        int s = reg[k][j];
        int prev_same = reg[k - 1][j];
        int prev_less = reg[k - 1][j - 1];
        emit({-prev_same, s});
        emit({-in, -prev_less, s});
        emit({-s, prev_same, in});
        emit({-s, prev_less});
      }
    }
    if (lo >= 1) emit({reg[n][lo]});
    if (hi < n) emit({-reg[n][hi + 1]});
  }

  void encode(const Constraint& c) {
    switch (c.kind) {
      case Constraint::Kind::identical:
        for (unsigned b = 0; b < r(); ++b) {
          emit({-x(c.i, b), x(c.j, b)});
          emit({x(c.i, b), -x(c.j, b)});
        }
        break;
      case Constraint::Kind::distinct:
        emit(diff(c.i, c.j));
        break;
      case Constraint::Kind::hd_range:
        cardinality(diff(c.i, c.j), c.lo, c.hi);
        break;
    }
  }

  // Literals of the clause fragment "code at p differs from c".
  std::vector<int> not_code(std::size_t p, std::uint64_t code) const {
    std::vector<int> lits;
    lits.reserve(r());
    for (unsigned b = 0; b < r(); ++b) {
      bool bit = (code >> (r() - 1 - b)) & 1U;
      lits.push_back(bit ? -x(p, b) : x(p, b));
    }
    return lits;
  }

  bool table_feasible() const { return r() <= 20; }

  std::uint64_t code_count() const { return std::uint64_t{1} << r(); }

  void encode_classes() {
    const auto& labels = cs_.distinct_classes;
    if (labels.empty()) return;
    std::map<std::uint32_t, std::size_t> sizes;
    for (auto l : labels) ++sizes[l];
    std::uint64_t same = 0;
    for (const auto& [l, n] : sizes) same += static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t total = static_cast<std::uint64_t>(labels.size()) * (labels.size() - 1) / 2;
    const std::uint64_t pairs = total - same;
    if (pairs == 0) return;

    FamilyEncoding mode = options_.distinct_classes;
    if (mode == FamilyEncoding::automatic) {
      const std::uint64_t pairwise_cost = pairs * (4ULL * r() + 1);
      const std::uint64_t u = sizes.size();
      const std::uint64_t table_cost = table_feasible()
                                           ? code_count() * (labels.size() + u * (u - 1) / 2)
                                           : UINT64_MAX;
      mode = table_cost < pairwise_cost ? FamilyEncoding::table : FamilyEncoding::pairwise;
    }
    if (mode == FamilyEncoding::pairwise) {
      for (std::uint32_t i = 0; i < labels.size(); ++i) {
        for (std::uint32_t j = i + 1; j < labels.size(); ++j) {
          if (labels[i] != labels[j]) emit(diff(i, j));
        }
      }
      return;
    }
    if (!table_feasible()) throw std::invalid_argument("width too large for the table encoding");
    // owner[c][l]: code c is used by a position labelled l. One label per code.
    std::map<std::uint32_t, std::size_t> slot;
    for (const auto& [l, n] : sizes) slot.emplace(l, slot.size());
    const std::size_t u = slot.size();
    const int base = out_.cnf.new_vars(static_cast<int>(code_count() * u));
    auto owner = [&](std::uint64_t c, std::size_t l) { return base + static_cast<int>(c * u + l); };
    for (std::size_t p = 0; p < labels.size(); ++p) {
      const std::size_t l = slot.at(labels[p]);
      for (std::uint64_t c = 0; c < code_count(); ++c) {
        auto lits = not_code(p, c);
        lits.push_back(owner(c, l));
        emit(std::move(lits));
      }
    }
    for (std::uint64_t c = 0; c < code_count(); ++c) {
      for (std::size_t a = 0; a < u; ++a) {
        for (std::size_t b = a + 1; b < u; ++b) emit({-owner(c, a), -owner(c, b)});
      }
    }
  }

  void encode_functional() {
    const auto& steps = cs_.steps;
    if (steps.empty()) return;
    std::map<InputVector, std::vector<std::uint32_t>> by_input;
    for (std::uint32_t k = 0; k < steps.size(); ++k) {
      if (steps[k] != kNoStep) by_input[steps[k]].push_back(k);
    }
    std::uint64_t pairs = 0;
    for (const auto& [v, ks] : by_input) pairs += static_cast<std::uint64_t>(ks.size()) * (ks.size() - 1) / 2;
    if (pairs == 0) return;

    FamilyEncoding mode = options_.functional;
    if (mode == FamilyEncoding::automatic) {
      const std::uint64_t pairwise_cost = pairs * (10ULL * r() + 5);
      const std::uint64_t table_cost =
          table_feasible() ? steps.size() * code_count() * 2ULL * r() : UINT64_MAX;
      mode = table_cost < pairwise_cost ? FamilyEncoding::table : FamilyEncoding::pairwise;
    }
    if (mode == FamilyEncoding::pairwise) {
      for (const auto& [v, ks] : by_input) {
        for (std::size_t a = 0; a < ks.size(); ++a) {
          for (std::size_t b = a + 1; b < ks.size(); ++b) {
            emit({-equal(ks[a], ks[b]), equal(ks[a] + 1, ks[b] + 1)});
          }
        }
      }
      return;
    }
    if (!table_feasible()) throw std::invalid_argument("width too large for the table encoding");
    // next[c][v][b]: bit b of the code entered from code c under input v.
    std::map<InputVector, int> base;
    for (const auto& [v, ks] : by_input) {
      if (ks.size() > 1) base.emplace(v, out_.cnf.new_vars(static_cast<int>(code_count() * r())));
    }
    for (std::uint32_t k = 0; k < steps.size(); ++k) {
      auto it = base.find(steps[k]);
      if (it == base.end()) continue;
      for (std::uint64_t c = 0; c < code_count(); ++c) {
        auto guard = not_code(k, c);
        for (unsigned b = 0; b < r(); ++b) {
          int z = it->second + static_cast<int>(c * r() + b);
          auto pos = guard;
          pos.push_back(-z);
          pos.push_back(x(k + 1, b));
          emit(std::move(pos));
          auto negc = guard;
          negc.push_back(z);
          negc.push_back(-x(k + 1, b));
          emit(std::move(negc));
        }
      }
    }
  }

  void encode_code_bound() {
    if (!cs_.max_codes || cs_.positions == 0) return;
    if (!table_feasible()) throw std::invalid_argument("width too large to bound the code count");
    const std::size_t k = *cs_.max_codes;
    if (k >= code_count()) return;
    if (k == 0) {
      emit(std::vector<int>{});
      return;
    }
    std::vector<int> used;
    const int base = out_.cnf.new_vars(static_cast<int>(code_count()));
    for (std::uint64_t c = 0; c < code_count(); ++c) used.push_back(base + static_cast<int>(c));
    for (std::size_t p = 0; p < cs_.positions; ++p) {
      for (std::uint64_t c = 0; c < code_count(); ++c) {
        auto lits = not_code(p, c);
        lits.push_back(used[c]);
        emit(std::move(lits));
      }
    }
    cardinality(used, 0, static_cast<unsigned>(k));
  }

  const ConstraintSet& cs_;
  EncodeOptions options_;
  EncodedCnf out_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<int>> diffs_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> equals_;
};

}  // namespace

EncodedCnf encode_cnf(const ConstraintSet& cs, const EncodeOptions& options) {
  validate(cs);
  return Encoder(cs, options).run();
}

void write_variable_map(std::ostream& os, const EncodedCnf& encoded) {
  for (std::size_t p = 0; p < encoded.positions; ++p) {
    for (unsigned b = 0; b < encoded.width; ++b) os << p << ' ' << b << ' ' << encoded.var(p, b) << '\n';
  }
}

EncodingAssignment decode(const EncodedCnf& encoded, const sat::Result& result) {
  if (result.status != sat::Status::sat) throw std::logic_error("decode needs a satisfying model");
  EncodingAssignment a;
  a.width = encoded.width;
  a.vectors.reserve(encoded.positions);
  for (std::size_t p = 0; p < encoded.positions; ++p) {
    BitVec v(encoded.width);
    for (unsigned b = 0; b < encoded.width; ++b) v.set(b, result.value(encoded.var(p, b)));
    a.vectors.push_back(std::move(v));
  }
  return a;
}

SolveOutcome solve(const ConstraintSet& cs, std::chrono::milliseconds timeout, const EncodeOptions& options) {
  EncodedCnf encoded = encode_cnf(cs, options);
  SolveOutcome out;
  out.variables = static_cast<std::size_t>(encoded.cnf.num_vars());
  out.clauses = encoded.cnf.num_clauses();
  out.sat = sat::solve(encoded.cnf, timeout);
  if (out.sat.status == sat::Status::sat) out.assignment = decode(encoded, out.sat);
  return out;
}

// ---------------------------------------------------------------------------
// Width search

const char* to_string(RecoveryResult::Outcome o) {
  switch (o) {
    case RecoveryResult::Outcome::solved:
      return "solved";
    case RecoveryResult::Outcome::timeout:
      return "timeout";
    case RecoveryResult::Outcome::cap_exceeded:
      return "cap_exceeded";
  }
  return "?";
}

namespace {

SolveOutcome attempt(const ConstraintSet& cs, std::chrono::milliseconds timeout, const RecoveryOptions& options,
                     RecoveryResult& result) {
  EncodedCnf encoded = encode_cnf(cs, options.encode);
  if (options.on_cnf) options.on_cnf(encoded, cs);
  SolveOutcome out;
  out.variables = static_cast<std::size_t>(encoded.cnf.num_vars());
  out.clauses = encoded.cnf.num_clauses();
  sat::SolverConfig config = options.solver;
  if (options.trace_order) config.ordered_prefix = static_cast<int>(cs.positions * cs.width);
  if (options.deadline) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*options.deadline -
                                                                      std::chrono::steady_clock::now());
    timeout = std::clamp(left, std::chrono::milliseconds::zero(), timeout);
  }
  out.sat = sat::solve(encoded.cnf, timeout, config);
  if (out.sat.status == sat::Status::sat) out.assignment = decode(encoded, out.sat);
  result.attempts.push_back({cs.width, cs.max_codes, out.sat.status, out.sat.stats, out.variables, out.clauses});
  return out;
}

}  // namespace

RecoveryResult recover_min_width(const std::function<ConstraintSet(unsigned)>& make, unsigned start,
                                 const RecoveryOptions& options) {
  auto t0 = std::chrono::steady_clock::now();
  RecoveryResult result;
  start = std::max(1U, start);
  const unsigned cap = start + options.width_margin;
  for (unsigned r = start; r <= cap; ++r) {
    result.width = r;
    ConstraintSet cs = make(r);
    if (options.max_codes) cs.max_codes = options.max_codes;
    SolveOutcome out = attempt(cs, options.timeout, options, result);
    if (out.sat.status == sat::Status::timeout) {
      result.outcome = RecoveryResult::Outcome::timeout;
      break;
    }
    if (out.sat.status == sat::Status::unsat) continue;

    result.outcome = RecoveryResult::Outcome::solved;
    result.assignment = std::move(out.assignment);
    if (options.minimize_codes) {
      const std::size_t floor = std::max<std::size_t>(1, cs.class_count());
      std::size_t codes = result.assignment->distinct_codes();
      while (codes > floor) {
        ConstraintSet bounded = cs;
        bounded.max_codes = codes - 1;
        SolveOutcome tighter = attempt(bounded, options.minimize_timeout, options, result);
        if (tighter.sat.status != sat::Status::sat) break;
        result.assignment = std::move(tighter.assignment);
        codes = result.assignment->distinct_codes();
      }
    }
    break;
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

RecoveryResult recover_encodings(const Trace& trace, const RecoveryOptions& options) {
  if (trace.outputs.empty()) throw std::invalid_argument("trace has no outputs");
  const bool functional = options.functional_consistency;
  return recover_min_width([&](unsigned r) { return build_constraints(trace, r, functional); }, r_min(trace),
                           options);
}

RecoveryResult recover_joint(const std::vector<Trace>& traces, const RecoveryOptions& options) {
  const bool functional = options.functional_consistency;
  return recover_min_width([&](unsigned r) { return build_joint_constraints(traces, r, functional); },
                           r_min(traces), options);
}

}  // namespace fsmre
