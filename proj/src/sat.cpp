#include "fsmre/sat.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fsmre::sat {

int Cnf::new_vars(int n) {
  int first = num_vars_ + 1;
  num_vars_ += n;
  return first;
}

void Cnf::reserve_vars(int n) { num_vars_ = std::max(num_vars_, n); }

void Cnf::add_clause(std::span<const int> lits) {
  starts_.push_back(lits_.size());
  for (int l : lits) {
    if (l == 0) throw std::invalid_argument("literal 0 is not a variable");
    num_vars_ = std::max(num_vars_, std::abs(l));
    lits_.push_back(l);
  }
}

std::span<const int> Cnf::clause(std::size_t k) const {
  std::size_t begin = starts_.at(k);
  std::size_t end = k + 1 < starts_.size() ? starts_[k + 1] : lits_.size();
  return {lits_.data() + begin, end - begin};
}

void write_dimacs(std::ostream& os, const Cnf& cnf) {
  os << "p cnf " << cnf.num_vars() << ' ' << cnf.num_clauses() << '\n';
  for (std::size_t k = 0; k < cnf.num_clauses(); ++k) {
    for (int l : cnf.clause(k)) os << l << ' ';
    os << "0\n";
  }
}

Cnf read_dimacs(std::istream& is) {
  Cnf cnf;
  std::string line;
  bool header = false;
  std::size_t expected = 0;
  int declared = 0;
  std::vector<int> current;
  while (std::getline(is, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == 'c' || line[first] == '%') continue;
    std::istringstream fields(line);
    if (line[first] == 'p') {
      std::string p;
      std::string fmt;
      int vars = 0;
      if (!(fields >> p >> fmt >> vars >> expected) || fmt != "cnf") {
        throw std::runtime_error("malformed DIMACS header: " + line);
      }
      cnf.reserve_vars(vars);
      declared = vars;
      header = true;
      continue;
    }
    if (!header) throw std::runtime_error("DIMACS clause before header");
    int lit = 0;
    while (fields >> lit) {
      if (lit == 0) {
        cnf.add_clause(current);
        current.clear();
      } else {
        if (std::abs(lit) > declared) throw std::runtime_error("DIMACS literal past the declared variables");
        current.push_back(lit);
      }
    }
  }
  if (!current.empty()) cnf.add_clause(current);
  if (header && cnf.num_clauses() != expected) {
    throw std::runtime_error("DIMACS header announces " + std::to_string(expected) + " clauses, found " +
                             std::to_string(cnf.num_clauses()));
  }
  return cnf;
}

const char* to_string(Status s) {
  switch (s) {
    case Status::sat:
      return "SAT";
    case Status::unsat:
      return "UNSAT";
    case Status::timeout:
      return "TIMEOUT";
  }
  return "?";
}

bool check_model(const Cnf& cnf, const std::vector<bool>& model) {
  for (std::size_t k = 0; k < cnf.num_clauses(); ++k) {
    bool satisfied = false;
    for (int l : cnf.clause(k)) {
      auto v = static_cast<std::size_t>(std::abs(l));
      if (v < model.size() && model[v] == (l > 0)) {
        satisfied = true;
        break;
      }
    }
    if (!satisfied) return false;
  }
  return true;
}

namespace {

using Lit = std::uint32_t;  // 2 * var + negated, var 0-based
using Var = std::uint32_t;
using CRef = std::uint32_t;
constexpr CRef kNoReason = 0xFFFFFFFFU;

inline Lit make_lit(Var v, bool negated) { return 2 * v + (negated ? 1U : 0U); }
inline Lit neg(Lit l) { return l ^ 1U; }
inline Var var_of(Lit l) { return l >> 1; }
inline bool is_negated(Lit l) { return (l & 1U) != 0; }

Lit from_dimacs(int l) { return make_lit(static_cast<Var>(std::abs(l) - 1), l < 0); }

// Luby sequence 1 1 2 1 1 2 4 ... (0-based index).
double luby(std::uint64_t x) {
  std::uint64_t size = 1;
  int seq = 0;
  while (size < x + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != x) {
    size = (size - 1) >> 1;
    --seq;
    x = x % size;
  }
  return static_cast<double>(std::uint64_t{1} << seq);
}

struct ClauseHeader {
  std::uint32_t start = 0;
  std::uint32_t size = 0;
  bool learnt = false;
  bool deleted = false;
  std::uint32_t lbd = 0;
  float activity = 0;
};

struct Watcher {
  CRef cref;
  Lit blocker;
};

class VarHeap {
 public:
  explicit VarHeap(const std::vector<double>& activity) : activity_(activity) {}

  void resize(std::size_t n) { index_.assign(n, -1); }
  bool contains(Var v) const { return index_[v] >= 0; }
  bool empty() const { return heap_.empty(); }

  void insert(Var v) {
    if (contains(v)) return;
    index_[v] = static_cast<int>(heap_.size());
    heap_.push_back(v);
    up(heap_.size() - 1);
  }

  void increased(Var v) {
    if (contains(v)) up(static_cast<std::size_t>(index_[v]));
  }

  Var pop() {
    Var top = heap_.front();
    Var last = heap_.back();
    heap_.pop_back();
    index_[top] = -1;
    if (!heap_.empty()) {
      heap_[0] = last;
      index_[last] = 0;
      down(0);
    }
    return top;
  }

 private:
  // Ties break toward the smaller variable index so the order is total.
  bool before(Var a, Var b) const {
    return activity_[a] > activity_[b] || (activity_[a] == activity_[b] && a < b);
  }

  void up(std::size_t i) {
    Var v = heap_[i];
    while (i > 0) {
      std::size_t parent = (i - 1) / 2;
      if (!before(v, heap_[parent])) break;
      heap_[i] = heap_[parent];
      index_[heap_[i]] = static_cast<int>(i);
      i = parent;
    }
    heap_[i] = v;
    index_[v] = static_cast<int>(i);
  }

  void down(std::size_t i) {
    Var v = heap_[i];
    for (;;) {
      std::size_t child = 2 * i + 1;
      if (child >= heap_.size()) break;
      if (child + 1 < heap_.size() && before(heap_[child + 1], heap_[child])) ++child;
      if (!before(heap_[child], v)) break;
      heap_[i] = heap_[child];
      index_[heap_[i]] = static_cast<int>(i);
      i = child;
    }
    heap_[i] = v;
    index_[v] = static_cast<int>(i);
  }

  const std::vector<double>& activity_;
  std::vector<Var> heap_;
  std::vector<int> index_;
};

class Solver {
 public:
  Solver(const Cnf& cnf, const SolverConfig& config) : config_(config), heap_(activity_) {
    const auto n = static_cast<std::size_t>(cnf.num_vars());
    assigns_.assign(n, 0);
    level_.assign(n, 0);
    reason_.assign(n, kNoReason);
    phase_.assign(n, 0);
    seen_.assign(n, 0);
    activity_.assign(n, 0.0);
    watches_.assign(2 * n, {});
    heap_.resize(n);
    for (Var v = 0; v < n; ++v) heap_.insert(v);
    ordered_ = static_cast<Var>(std::min<std::size_t>(n, static_cast<std::size_t>(std::max(0, config.ordered_prefix))));

    std::vector<Lit> lits;
    for (std::size_t k = 0; k < cnf.num_clauses() && ok_; ++k) {
      lits.clear();
      for (int l : cnf.clause(k)) lits.push_back(from_dimacs(l));
      add_problem_clause(lits);
    }
    original_clauses_ = clauses_.size();
    max_learnts_ = std::max(2000.0, static_cast<double>(original_clauses_) * config_.learnt_fraction);
  }

  Result run(std::chrono::milliseconds timeout) {
    auto start = std::chrono::steady_clock::now();
    deadline_ = start + timeout;
    Result result;
    Status status = Status::unsat;
    if (ok_ && propagate() != kNoReason) ok_ = false;
    if (ok_) status = search_loop();
    stats_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.status = status;
    result.stats = stats_;
    if (status == Status::sat) {
      result.model.assign(assigns_.size() + 1, false);
      for (Var v = 0; v < assigns_.size(); ++v) result.model[v + 1] = assigns_[v] > 0;
    }
    return result;
  }

 private:
  int value(Lit l) const {
    int a = assigns_[var_of(l)];
    return is_negated(l) ? -a : a;
  }

  int decision_level() const { return static_cast<int>(trail_lim_.size()); }

  std::span<Lit> lits_of(CRef c) { return {arena_.data() + clauses_[c].start, clauses_[c].size}; }

  void add_problem_clause(std::vector<Lit>& lits) {
    std::sort(lits.begin(), lits.end());
    lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
    std::size_t j = 0;
    for (std::size_t i = 0; i < lits.size(); ++i) {
      if (i + 1 < lits.size() && lits[i + 1] == neg(lits[i])) return;  // tautology
      int v = value(lits[i]);
      if (v > 0) return;  // already satisfied at level 0
      if (v == 0) lits[j++] = lits[i];
    }
    lits.resize(j);
    if (lits.empty()) {
      ok_ = false;
    } else if (lits.size() == 1) {
      enqueue(lits[0], kNoReason);
      if (propagate() != kNoReason) ok_ = false;
    } else {
      attach(store(lits, false, 0));
    }
  }

  CRef store(const std::vector<Lit>& lits, bool learnt, std::uint32_t lbd) {
    ClauseHeader h;
    h.start = static_cast<std::uint32_t>(arena_.size());
    h.size = static_cast<std::uint32_t>(lits.size());
    h.learnt = learnt;
    h.lbd = lbd;
    arena_.insert(arena_.end(), lits.begin(), lits.end());
    clauses_.push_back(h);
    return static_cast<CRef>(clauses_.size() - 1);
  }

  void attach(CRef c) {
    auto lits = lits_of(c);
    watches_[lits[0]].push_back({c, lits[1]});
    watches_[lits[1]].push_back({c, lits[0]});
  }

  void enqueue(Lit l, CRef reason) {
    Var v = var_of(l);
    assigns_[v] = is_negated(l) ? -1 : 1;
    level_[v] = decision_level();
    reason_[v] = reason;
    trail_.push_back(l);
  }

  CRef propagate() {
    CRef conflict = kNoReason;
    while (qhead_ < trail_.size()) {
      Lit p = trail_[qhead_++];
      Lit false_lit = neg(p);
      auto& ws = watches_[false_lit];
      ++stats_.propagations;
      std::size_t i = 0;
      std::size_t j = 0;
      const std::size_t end = ws.size();
      while (i < end) {
        Watcher w = ws[i++];
        if (value(w.blocker) > 0) {
          ws[j++] = w;
          continue;
        }
        auto lits = lits_of(w.cref);
        if (lits[0] == false_lit) std::swap(lits[0], lits[1]);
        Lit first = lits[0];
        Watcher keep{w.cref, first};
        if (first != w.blocker && value(first) > 0) {
          ws[j++] = keep;
          continue;
        }
        bool moved = false;
        for (std::size_t k = 2; k < lits.size(); ++k) {
          if (value(lits[k]) >= 0) {
            std::swap(lits[1], lits[k]);
            watches_[lits[1]].push_back(keep);
            moved = true;
            break;
          }
        }
        if (moved) continue;
        ws[j++] = keep;
        if (value(first) < 0) {
          conflict = w.cref;
          qhead_ = trail_.size();
          while (i < end) ws[j++] = ws[i++];
        } else {
          enqueue(first, w.cref);
        }
      }
      ws.resize(j);
      if (conflict != kNoReason) break;
    }
    return conflict;
  }

  void bump_var(Var v) {
    if ((activity_[v] += var_inc_) > 1e100) {
      for (auto& a : activity_) a *= 1e-100;
      var_inc_ *= 1e-100;
    }
    heap_.increased(v);
  }

  void bump_clause(CRef c) {
    auto& h = clauses_[c];
    if ((h.activity += static_cast<float>(clause_inc_)) > 1e20F) {
      for (auto& other : clauses_) {
        if (other.learnt) other.activity *= 1e-20F;
      }
      clause_inc_ *= 1e-20;
    }
  }

  // First-UIP learning with local minimization. Returns the backjump level.
  int analyze(CRef conflict, std::vector<Lit>& learnt) {
    learnt.clear();
    learnt.push_back(0);
    int path_count = 0;
    Lit p = 0;
    bool have_p = false;
    std::size_t index = trail_.size();
    CRef c = conflict;
    do {
      if (clauses_[c].learnt) bump_clause(c);
      auto lits = lits_of(c);
      for (std::size_t k = have_p ? 1 : 0; k < lits.size(); ++k) {
        Lit q = lits[k];
        Var v = var_of(q);
        if (seen_[v] || level_[v] == 0) continue;
        seen_[v] = 1;
        bump_var(v);
        if (level_[v] >= decision_level()) {
          ++path_count;
        } else {
          learnt.push_back(q);
        }
      }
      while (!seen_[var_of(trail_[--index])]) {
      }
      p = trail_[index];
      have_p = true;
      c = reason_[var_of(p)];
      seen_[var_of(p)] = 0;
      --path_count;
    } while (path_count > 0);
    learnt[0] = neg(p);

    // Drop literals implied by the rest of the clause.
    to_clear_.assign(learnt.begin(), learnt.end());
    std::size_t j = 1;
    for (std::size_t i = 1; i < learnt.size(); ++i) {
      Var v = var_of(learnt[i]);
      CRef r = reason_[v];
      bool redundant = r != kNoReason;
      if (redundant) {
        auto rl = lits_of(r);
        for (std::size_t k = 1; k < rl.size(); ++k) {
          Var u = var_of(rl[k]);
          if (!seen_[u] && level_[u] > 0) {
            redundant = false;
            break;
          }
        }
      }
      if (!redundant) learnt[j++] = learnt[i];
    }
    learnt.resize(j);
    for (Lit l : to_clear_) seen_[var_of(l)] = 0;

    int back_level = 0;
    if (learnt.size() > 1) {
      std::size_t max_i = 1;
      for (std::size_t i = 2; i < learnt.size(); ++i) {
        if (level_[var_of(learnt[i])] > level_[var_of(learnt[max_i])]) max_i = i;
      }
      std::swap(learnt[1], learnt[max_i]);
      back_level = level_[var_of(learnt[1])];
    }
    return back_level;
  }

  std::uint32_t compute_lbd(const std::vector<Lit>& lits) {
    ++lbd_stamp_;
    std::uint32_t n = 0;
    for (Lit l : lits) {
      auto lv = static_cast<std::size_t>(level_[var_of(l)]);
      if (lv >= level_stamp_.size()) level_stamp_.resize(lv + 1, 0);
      if (level_stamp_[lv] != lbd_stamp_) {
        level_stamp_[lv] = lbd_stamp_;
        ++n;
      }
    }
    return n;
  }

  void backtrack(int level) {
    if (decision_level() <= level) return;
    for (std::size_t k = trail_.size(); k-- > trail_lim_[static_cast<std::size_t>(level)];) {
      Var v = var_of(trail_[k]);
      phase_[v] = assigns_[v];
      assigns_[v] = 0;
      reason_[v] = kNoReason;
      heap_.insert(v);
      if (v < ordered_) cursor_ = std::min(cursor_, v);
    }
    trail_.resize(trail_lim_[static_cast<std::size_t>(level)]);
    trail_lim_.resize(static_cast<std::size_t>(level));
    qhead_ = trail_.size();
  }

  // Called at decision level 0 only, so no clause is locked as a reason.
  void reduce_db() {
    for (Lit l : trail_) reason_[var_of(l)] = kNoReason;
    std::vector<CRef> learnts;
    for (CRef c = 0; c < clauses_.size(); ++c) {
      if (clauses_[c].learnt && !clauses_[c].deleted && clauses_[c].lbd > 2 && clauses_[c].size > 2) {
        learnts.push_back(c);
      }
    }
    std::sort(learnts.begin(), learnts.end(), [&](CRef a, CRef b) {
      const auto& x = clauses_[a];
      const auto& y = clauses_[b];
      if (x.lbd != y.lbd) return x.lbd > y.lbd;
      if (x.activity != y.activity) return x.activity < y.activity;
      return a < b;
    });
    for (std::size_t k = 0; k < learnts.size() / 2; ++k) clauses_[learnts[k]].deleted = true;

    std::vector<Lit> arena;
    std::vector<ClauseHeader> clauses;
    arena.reserve(arena_.size());
    std::size_t learnt_count = 0;
    for (const auto& h : clauses_) {
      if (h.deleted) continue;
      ClauseHeader copy = h;
      copy.start = static_cast<std::uint32_t>(arena.size());
      arena.insert(arena.end(), arena_.begin() + h.start, arena_.begin() + h.start + h.size);
      clauses.push_back(copy);
      if (h.learnt) ++learnt_count;
    }
    arena_ = std::move(arena);
    clauses_ = std::move(clauses);
    learnt_count_ = learnt_count;
    for (auto& ws : watches_) ws.clear();
    for (CRef c = 0; c < clauses_.size(); ++c) attach(c);
  }

  bool out_of_time() const { return std::chrono::steady_clock::now() >= deadline_; }

  Status search_loop() {
    std::vector<Lit> learnt;
    std::uint64_t restart_index = 0;
    std::uint64_t conflicts_until_restart =
        static_cast<std::uint64_t>(luby(restart_index) * static_cast<double>(config_.restart_unit));
    std::uint64_t conflicts_this_restart = 0;
    std::uint64_t ticks = 0;

    for (;;) {
      CRef conflict = propagate();
      if (conflict != kNoReason) {
        ++stats_.conflicts;
        ++conflicts_this_restart;
        if (decision_level() == 0) return Status::unsat;
        int back = analyze(conflict, learnt);
        backtrack(back);
        if (learnt.size() == 1) {
          enqueue(learnt[0], kNoReason);
        } else {
          CRef c = store(learnt, true, compute_lbd(learnt));
          attach(c);
          bump_clause(c);
          ++learnt_count_;
          ++stats_.learnt_clauses;
          enqueue(learnt[0], c);
        }
        var_inc_ /= config_.var_decay;
        clause_inc_ /= config_.clause_decay;
        if ((stats_.conflicts & 255U) == 0 && out_of_time()) return Status::timeout;
        continue;
      }

      if (conflicts_this_restart >= conflicts_until_restart) {
        backtrack(0);
        ++stats_.restarts;
        conflicts_this_restart = 0;
        conflicts_until_restart =
            static_cast<std::uint64_t>(luby(++restart_index) * static_cast<double>(config_.restart_unit));
        if (static_cast<double>(learnt_count_) >= max_learnts_) {
          reduce_db();
          max_learnts_ *= 1.1;
        }
        if (out_of_time()) return Status::timeout;
        continue;
      }

      if ((++ticks & 1023U) == 0 && out_of_time()) return Status::timeout;

      Var next = 0;
      bool found = false;
      while (cursor_ < ordered_ && assigns_[cursor_] != 0) ++cursor_;
      if (cursor_ < ordered_) {
        next = cursor_;
        found = true;
      }
      while (!found && !heap_.empty()) {
        Var v = heap_.pop();
        if (assigns_[v] == 0) {
          next = v;
          found = true;
          break;
        }
      }
      if (!found) return Status::sat;
      ++stats_.decisions;
      trail_lim_.push_back(trail_.size());
      enqueue(make_lit(next, phase_[next] <= 0), kNoReason);
    }
  }

  SolverConfig config_;
  Var ordered_ = 0;  // variables below this are decided in index order
  Var cursor_ = 0;
  bool ok_ = true;
  std::vector<int> assigns_;  // +1 true, -1 false, 0 unassigned
  std::vector<int> level_;
  std::vector<CRef> reason_;
  std::vector<int> phase_;
  std::vector<char> seen_;
  std::vector<double> activity_;
  VarHeap heap_;
  std::vector<std::vector<Watcher>> watches_;
  std::vector<Lit> arena_;
  std::vector<ClauseHeader> clauses_;
  std::vector<Lit> trail_;
  std::vector<std::size_t> trail_lim_;
  std::vector<Lit> to_clear_;
  std::vector<std::uint32_t> level_stamp_;
  std::uint32_t lbd_stamp_ = 0;
  std::size_t qhead_ = 0;
  std::size_t original_clauses_ = 0;
  std::size_t learnt_count_ = 0;
  double max_learnts_ = 0;
  double var_inc_ = 1.0;
  double clause_inc_ = 1.0;
  std::chrono::steady_clock::time_point deadline_;
  Stats stats_;
};

}  // namespace

Result solve(const Cnf& cnf, std::chrono::milliseconds timeout, const SolverConfig& config) {
  Solver solver(cnf, config);
  return solver.run(timeout);
}

}  // namespace fsmre::sat
