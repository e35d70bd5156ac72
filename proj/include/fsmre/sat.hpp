#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace fsmre::sat {

/// Propositional formula in conjunctive normal form. Variables are 1-based and
/// literals use the DIMACS sign convention.
class Cnf {
 public:
  int num_vars() const noexcept { return num_vars_; }
  std::size_t num_clauses() const noexcept { return starts_.size(); }
  std::size_t num_literals() const noexcept { return lits_.size(); }

  int new_var() { return ++num_vars_; }
  /// Allocates `n` consecutive variables and returns the first.
  int new_vars(int n);
  /// Ensures variables 1..n exist.
  void reserve_vars(int n);

  void add_clause(std::span<const int> lits);
  void add_clause(std::initializer_list<int> lits) { add_clause(std::span<const int>(lits.begin(), lits.size())); }

  std::span<const int> clause(std::size_t k) const;

 private:
  int num_vars_ = 0;
  std::vector<int> lits_;
  std::vector<std::size_t> starts_;
};

/// `p cnf <vars> <clauses>` followed by zero-terminated clause lines.
void write_dimacs(std::ostream& os, const Cnf& cnf);
Cnf read_dimacs(std::istream& is);

enum class Status { sat, unsat, timeout };

const char* to_string(Status s);

struct Stats {
  std::uint64_t decisions = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t propagations = 0;
  std::uint64_t restarts = 0;
  std::uint64_t learnt_clauses = 0;
  double seconds = 0.0;
};

struct Result {
  Status status = Status::unsat;
  /// model[v] for v in 1..num_vars; index 0 unused. Empty unless SAT.
  std::vector<bool> model;
  Stats stats;

  bool value(int var) const { return model.at(static_cast<std::size_t>(var)); }
};

struct SolverConfig {
  double var_decay = 0.95;
  double clause_decay = 0.999;
  std::uint64_t restart_unit = 100;  // conflicts per Luby step
  double learnt_fraction = 0.5;      // initial learnt limit relative to problem clauses
  /// Variables 1..ordered_prefix are branched on first, lowest index first.
  int ordered_prefix = 0;
};

/// Conflict-driven clause learning with two watched literals, VSIDS decisions,
/// phase saving and Luby restarts. Deterministic for a given formula and
/// configuration; only the wall-clock budget can change the outcome.
Result solve(const Cnf& cnf, std::chrono::milliseconds timeout, const SolverConfig& config = {});

/// Checks a model against every clause.
bool check_model(const Cnf& cnf, const std::vector<bool>& model);

}  // namespace fsmre::sat
