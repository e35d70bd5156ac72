#include "fsmre/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fsmre/capture.hpp"
#include "fsmre/fixtures.hpp"
#include "fsmre/kiss2.hpp"
#include "fsmre/recovery.hpp"
#include "fsmre/side_channel.hpp"
#include "fsmre/stg.hpp"
#include "fsmre/verify.hpp"

namespace fsmre {

namespace {

using json = nlohmann::json;

constexpr const char* kVersion = "fsmre 1.0.0";
constexpr std::string_view kBuiltinPrefix = "builtin:";
constexpr std::string_view kRandomPrefix = "random:";

// Input that cannot be used; reported with exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  if (path.rfind(kBuiltinPrefix, 0) == 0) {
    try {
      return std::string(fixtures::kiss2(path.substr(kBuiltinPrefix.size())));
    } catch (const std::out_of_range& e) {
      throw UsageError(e.what());
    }
  }
  if (path.rfind(kRandomPrefix, 0) == 0) {
    std::istringstream spec(path.substr(kRandomPrefix.size()));
    std::size_t states = 0;
    unsigned inputs = 0;
    unsigned outputs = 0;
    std::uint64_t seed = 0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(spec >> states >> c1 >> inputs >> c2 >> outputs >> c3 >> seed) || c1 != ':' || c2 != ':' || c3 != ':' ||
        !spec.eof()) {
      throw UsageError("expected random:<states>:<input bits>:<output bits>:<seed>");
    }
    try {
      return serialize_kiss2(fixtures::random_moore(states, inputs, outputs, seed));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
  if (!out) throw UsageError("failed writing " + path);
}

MooreFsm load_machine(const std::string& path, MoorifyStrategy strategy = MoorifyStrategy::first_incoming) {
  std::string text = read_text(path);
  try {
    return load_moore(text, strategy);
  } catch (const Kiss2Error& e) {
    throw UsageError(path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " + e.what());
  } catch (const FsmError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

json noise_json(const NoiseModel& m) {
  json j{{"kind", to_string(m.kind)}};
  if (m.kind == NoiseKind::table3) {
    j["p_plus"] = m.p_plus;
    j["p_minus"] = m.p_minus;
  }
  if (m.kind == NoiseKind::gaussian) j["sigma"] = m.sigma;
  return j;
}

json counterexample_json(const std::optional<Counterexample>& cx, unsigned input_bits) {
  if (!cx) return nullptr;
  json inputs = json::array();
  for (InputVector v : cx->inputs) inputs.push_back(input_to_string(v, input_bits));
  return {{"inputs", inputs}, {"output_a", cx->output_a.to_string()}, {"output_b", cx->output_b.to_string()}};
}

json verdict_json(const EquivalenceVerdict& v, unsigned input_bits) {
  return {{"equivalent", v.equivalent},
          {"coverage", to_string(v.coverage)},
          {"pairs_visited", v.pairs_visited},
          {"counterexample", counterexample_json(v.counterexample, input_bits)}};
}

void emit_report(const json& report, const std::string& path, std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_text(path, text);
  }
}

// ---------------------------------------------------------------------------
// convert

struct ConvertArgs {
  std::string in;
  std::string out;
  std::string strategy = "first";
};

int cmd_convert(const ConvertArgs& a, std::ostream& out) {
  const auto strategy = a.strategy == "majority" ? MoorifyStrategy::majority_incoming : MoorifyStrategy::first_incoming;
  MooreFsm m = load_machine(a.in, strategy);
  const std::string text = serialize_kiss2(m);
  if (a.out.empty() || a.out == "-") {
    out << text;
  } else {
    write_text(a.out, text);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// attack

struct AttackArgs {
  std::string target;
  std::optional<std::size_t> states;
  std::size_t vectors = 0;
  double multiplier = 2.0;
  std::size_t rounds_max = 10;
  double goal = 0.90;
  std::optional<std::uint64_t> seed;
  std::string noise = "table3";
  double sigma = 10.0;
  std::int64_t timeout_ms = 1'000'000;
  std::int64_t minimize_timeout_ms = 30'000;
  bool no_functional = false;
  bool no_minimize = false;
  bool no_joint = false;
  bool no_confirm = false;
  bool no_code_bound = false;
  std::optional<double> time_budget_s;
  std::string report;
  std::string recovered;
  std::string dimacs_dump;
  std::string calibration;
  bool deterministic = false;
};

CalibrationTable load_calibration(const std::string& path) {
  if (path.empty()) return default_calibration();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return CalibrationTable::load(in);
  } catch (const std::invalid_argument& e) {
    throw UsageError(path + ": " + e.what());
  }
}

NoiseModel make_noise(const std::string& kind, double sigma) {
  NoiseModel model;
  try {
    model.kind = parse_noise_kind(kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  model.sigma = sigma;
  try {
    validate(model);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return model;
}

json round_json(const RoundRecord& r, bool deterministic) {
  json attempts = json::array();
  for (const auto& a : r.attempts) {
    json j{{"width", a.width},
           {"code_bound", a.code_bound ? json(*a.code_bound) : json(nullptr)},
           {"status", sat::to_string(a.status)},
           {"variables", a.variables},
           {"clauses", a.clauses},
           {"decisions", a.stats.decisions},
           {"conflicts", a.stats.conflicts},
           {"propagations", a.stats.propagations},
           {"restarts", a.stats.restarts}};
    if (!deterministic) j["seconds"] = a.stats.seconds;
    attempts.push_back(std::move(j));
  }
  json j{{"index", r.index},
         {"seed", r.seed},
         {"status", to_string(r.status)},
         {"width", r.width},
         {"codes", r.codes},
         {"new_transitions", r.new_transitions},
         {"predicted", r.predicted},
         {"fraction", r.fraction},
         {"solver", attempts}};
  if (!r.detail.empty()) j["detail"] = r.detail;
  if (!deterministic) j["seconds"] = r.seconds;
  return j;
}

int cmd_attack(const AttackArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  auto t0 = std::chrono::steady_clock::now();
  MooreFsm target = load_machine(a.target);
  const NoiseModel noise = make_noise(a.noise, a.sigma);
  const CalibrationTable calibration = load_calibration(a.calibration);
  const std::uint64_t seed = a.seed ? *a.seed : entropy_seed();
  const std::uint64_t noise_seed = round_seed(~seed, 0);

  AttackConfig cfg;
  cfg.states = a.states ? *a.states : target.state_count();
  cfg.input_bits = target.input_bits();
  cfg.vectors = a.vectors;
  cfg.multiplier = a.multiplier;
  cfg.goal = a.goal;
  cfg.max_rounds = a.rounds_max;
  cfg.seed = seed;
  cfg.recovery.timeout = std::chrono::milliseconds(a.timeout_ms);
  cfg.recovery.minimize_timeout = std::chrono::milliseconds(std::min(a.minimize_timeout_ms, a.timeout_ms));
  cfg.recovery.functional_consistency = !a.no_functional;
  cfg.recovery.minimize_codes = !a.no_minimize;
  cfg.joint = !a.no_joint;
  cfg.confirm = !a.no_confirm;
  cfg.bound_codes = !a.no_code_bound;
  if (a.time_budget_s) {
    cfg.time_budget = std::chrono::milliseconds(static_cast<std::int64_t>(*a.time_budget_s * 1000.0));
  }
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::size_t dump_round = 0;
  std::size_t dump_attempt = 0;
  if (!a.dimacs_dump.empty()) {
    std::filesystem::create_directories(a.dimacs_dump);
    cfg.on_round = [&](std::size_t r) {
      dump_round = r;
      dump_attempt = 0;
    };
    cfg.recovery.on_cnf = [&](const EncodedCnf& enc, const ConstraintSet& cs) {
      std::ostringstream stem;
      stem << a.dimacs_dump << "/round" << dump_round << "_attempt" << dump_attempt++ << "_w" << cs.width;
      if (cs.max_codes) stem << "_k" << *cs.max_codes;
      std::ofstream cnf(stem.str() + ".cnf");
      sat::write_dimacs(cnf, enc.cnf);
      std::ofstream map(stem.str() + ".map");
      write_variable_map(map, enc);
    };
  }

  auto machine = std::make_shared<const EncodedFsm>(assign_binary_encoding(target));
  BlackBoxDevice device(machine, noise, noise_seed, calibration);
  AttackResult result = attack(device, cfg);

  json rounds = json::array();
  for (const auto& r : result.rounds) rounds.push_back(round_json(r, a.deterministic));

  json report{{"command", "attack"},
              {"argv", argv},
              {"version", kVersion},
              {"config",
               {{"target", a.target},
                {"states", cfg.states},
                {"input_bits", cfg.input_bits},
                {"output_bits", target.output_bits()},
                {"vectors", result.vectors_per_round},
                {"multiplier", cfg.multiplier},
                {"goal", cfg.goal},
                {"rounds_max", cfg.max_rounds},
                {"seed", seed},
                {"noise_seed", noise_seed},
                {"noise", noise_json(noise)},
                {"calibration", a.calibration.empty() ? "default" : a.calibration},
                {"timeout_ms", a.timeout_ms},
                {"functional_consistency", cfg.recovery.functional_consistency},
                {"minimize_codes", cfg.recovery.minimize_codes},
                {"joint", cfg.joint},
                {"confirm", cfg.confirm},
                {"bound_codes", cfg.bound_codes},
                {"time_budget_s", a.time_budget_s ? json(*a.time_budget_s) : json(nullptr)}}},
              {"rounds", rounds},
              {"rounds_executed", result.rounds.size()},
              {"fraction", result.fraction},
              {"goal_met", result.goal_met},
              {"total_transitions", cfg.states * (std::size_t{1} << cfg.input_bits)}};

  if (!result.recovered.empty()) {
    report["recovered"] = {{"states", result.recovered.state_count()},
                           {"transitions", result.recovered.edge_count()}};
    report["verification"] = verdict_json(equivalent(result.recovered, target), target.input_bits());
    ReplayVerdict replay = replay_consistency(result.recovered, result.accepted_traces);
    report["replay"] = {{"consistent", replay.consistent},
                        {"steps_checked", replay.steps_checked},
                        {"steps_skipped", replay.steps_skipped}};
    if (!a.recovered.empty()) write_text(a.recovered, to_kiss2(result.recovered));
  } else {
    report["recovered"] = {{"states", 0}, {"transitions", 0}};
  }

  json artifacts = json::object();
  if (!a.report.empty()) artifacts["report"] = a.report;
  if (!a.recovered.empty() && !result.recovered.empty()) artifacts["recovered"] = a.recovered;
  if (!a.dimacs_dump.empty()) artifacts["dimacs_dump"] = a.dimacs_dump;
  report["artifacts"] = artifacts;

  const int status = result.goal_met ? kExitOk : kExitGoalNotMet;
  report["exit_status"] = status;
  if (!a.deterministic) {
    report["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  emit_report(report, a.report, out);
  if (!a.report.empty()) {
    out << "fraction " << result.fraction << " after " << result.rounds.size() << " rounds, goal "
        << (result.goal_met ? "met" : "not met") << "\n";
  }
  return status;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string a;
  std::string b;
  bool partial = false;
  std::string report;
};

int cmd_verify(const VerifyArgs& args, const std::vector<std::string>& argv, std::ostream& out) {
  MooreFsm b = load_machine(args.b);
  EquivalenceVerdict verdict;
  unsigned input_bits = b.input_bits();
  try {
    if (args.partial) {
      PartialStg a;
      try {
        a = partial_from_kiss2(read_text(args.a));
      } catch (const Kiss2Error& e) {
        throw UsageError(args.a + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                         e.what());
      } catch (const InconsistentRound& e) {
        throw UsageError(args.a + ": " + e.what());
      }
      verdict = equivalent(a, b);
    } else {
      verdict = equivalent(load_machine(args.a), b);
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  json report{{"command", "verify"},
              {"argv", argv},
              {"version", kVersion},
              {"a", args.a},
              {"b", args.b},
              {"verdict", verdict_json(verdict, input_bits)}};
  const int status = verdict.equivalent ? kExitOk : kExitNotEquivalent;
  report["exit_status"] = status;
  emit_report(report, args.report, out);
  return status;
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
  std::size_t samples = 1000;
  double sigma = 10.0;
  std::string noise = "gaussian";
  std::optional<std::uint64_t> seed;
  std::size_t states = 8;
  unsigned input_bits = 2;
  std::string calibration;
  std::string report;
};

int cmd_calibrate(const CalibrateArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  if (a.samples < 100) throw UsageError("calibration needs at least 100 samples");
  const NoiseModel noise = make_noise(a.noise, a.sigma);
  const CalibrationTable calibration = load_calibration(a.calibration);
  const std::uint64_t seed = a.seed ? *a.seed : entropy_seed();

  MooreFsm machine = fixtures::random_moore(a.states, a.input_bits, 1, seed);
  const EncodedFsm encoded = assign_binary_encoding(machine);
  Rng rng(round_seed(seed, 1));
  auto stimulus = gen_stimulus(a.samples, a.input_bits, round_seed(seed, 2));

  std::vector<double> hds;
  std::vector<double> currents;
  std::map<int, std::size_t> errors;  // inferred - actual, nonzero actual only
  std::size_t nonzero = 0;
  std::size_t zero = 0;
  std::size_t zero_exact = 0;
  StateId s = machine.reset();
  for (InputVector v : stimulus) {
    StepResult r = step(encoded, s, v);
    s = r.next;
    CurrentSample c = synthesize_current(static_cast<unsigned>(r.hd), noise, rng, calibration);
    const unsigned inferred = infer_hd(c, calibration).center;
    hds.push_back(static_cast<double>(r.hd));
    currents.push_back(c.microamps);
    if (r.hd == 0) {
      ++zero;
      if (inferred == 0) ++zero_exact;
    } else {
      ++nonzero;
      ++errors[static_cast<int>(inferred) - static_cast<int>(r.hd)];
    }
  }

  json histogram = json::object();
  for (const auto& [e, n] : errors) {
    histogram[(e > 0 ? "+" : "") + std::to_string(e)] = static_cast<double>(n) / static_cast<double>(nonzero);
  }
  json report{{"command", "calibrate"},
              {"argv", argv},
              {"version", kVersion},
              {"config",
               {{"samples", a.samples},
                {"seed", seed},
                {"noise", noise_json(noise)},
                {"states", a.states},
                {"input_bits", a.input_bits},
                {"width", encoded.width()},
                {"calibration", a.calibration.empty() ? "default" : a.calibration}}},
              {"nonzero_samples", nonzero},
              {"zero_samples", zero},
              {"zero_exact_rate",
               zero ? json(static_cast<double>(zero_exact) / static_cast<double>(zero)) : json(nullptr)},
              {"error_histogram", histogram}};
  try {
    report["pearson"] = pearson(hds, currents);
  } catch (const std::invalid_argument& e) {
    report["pearson"] = nullptr;
    report["pearson_error"] = e.what();
  }
  report["exit_status"] = kExitOk;
  emit_report(report, a.report, out);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reverse engineering of Moore machines from outputs and supply current"};
  app.name("fsmre");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::vector<std::string> echo;
  for (int i = 1; i < argc; ++i) echo.emplace_back(argv[i]);

  ConvertArgs convert;
  auto* c = app.add_subcommand("convert", "Parse KISS2 and write its Moore-style form");
  c->add_option("--in,input", convert.in, "KISS2 file or builtin:<name>")->required();
  c->add_option("--out,output", convert.out, "Output path, stdout when omitted");
  c->add_option("--strategy", convert.strategy, "Mealy to Moore output rule")
      ->check(CLI::IsMember({"first", "majority"}));

  AttackArgs atk;
  auto* t = app.add_subcommand("attack", "Simulate the device and recover its transition graph");
  t->add_option("--target", atk.target, "Moore KISS2 file or builtin:<name>")->required();
  t->add_option("--states", atk.states, "State-count guess X (default: the target's)")->check(CLI::PositiveNumber);
  t->add_option("--vectors", atk.vectors, "Input vectors per round (default: multiplier * X * 2^I)");
  t->add_option("--multiplier", atk.multiplier, "Vector-count multiplier, at least 2");
  t->add_option("--rounds-max", atk.rounds_max, "Round cap");
  t->add_option("--goal", atk.goal, "Recovery fraction that ends the attack");
  t->add_option("--seed", atk.seed, "Seed of the whole pipeline (default: OS entropy)");
  t->add_option("--noise", atk.noise, "Current noise model")->check(CLI::IsMember({"exact", "table3", "gaussian"}));
  t->add_option("--sigma", atk.sigma, "Gaussian noise in microamps");
  t->add_option("--timeout-ms", atk.timeout_ms, "Budget per solver call")->check(CLI::PositiveNumber);
  t->add_option("--minimize-timeout-ms", atk.minimize_timeout_ms, "Budget per code-count tightening call")
      ->check(CLI::PositiveNumber);
  t->add_flag("--no-functional", atk.no_functional, "Drop the determinism constraints over equal codes");
  t->add_flag("--no-minimize", atk.no_minimize, "Keep the first satisfying assignment");
  t->add_flag("--no-joint", atk.no_joint, "Solve each round alone and merge graphs");
  t->add_flag("--no-confirm", atk.no_confirm, "Accept the goal without a confirming round");
  t->add_flag("--no-code-bound", atk.no_code_bound, "Allow more codes than the state-count guess");
  t->add_option("--time-budget-s", atk.time_budget_s, "Wall-clock budget of the whole attack")
      ->check(CLI::PositiveNumber);
  t->add_option("--report", atk.report, "JSON report path, stdout when omitted");
  t->add_option("--recovered", atk.recovered, "KISS2 path for the recovered graph");
  t->add_option("--dimacs-dump", atk.dimacs_dump, "Directory receiving every solved formula");
  t->add_option("--calibration", atk.calibration, "Current-to-HD band file");
  t->add_flag("--deterministic", atk.deterministic, "Omit timings from the report");

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "Check behavioral equivalence of two machines");
  v->add_option("a", ver.a, "Machine or recovered graph")->required();
  v->add_option("b", ver.b, "Reference machine")->required();
  v->add_flag("--partial", ver.partial, "Treat the first file as an incomplete recovered graph");
  v->add_option("--report", ver.report, "JSON report path, stdout when omitted");

  CalibrateArgs cal;
  auto* k = app.add_subcommand("calibrate", "Correlation and HD error statistics of the current model");
  k->add_option("--samples", cal.samples, "Number of clocked samples");
  k->add_option("--sigma", cal.sigma, "Gaussian noise in microamps");
  k->add_option("--noise", cal.noise, "Current noise model")->check(CLI::IsMember({"exact", "table3", "gaussian"}));
  k->add_option("--seed", cal.seed, "Seed (default: OS entropy)");
  k->add_option("--states", cal.states, "States of the random machine")->check(CLI::PositiveNumber);
  k->add_option("--input-bits", cal.input_bits, "Input width of the random machine")->check(CLI::Range(1, 16));
  k->add_option("--calibration", cal.calibration, "Current-to-HD band file");
  k->add_option("--report", cal.report, "JSON report path, stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c->parsed()) return cmd_convert(convert, out);
    if (t->parsed()) return cmd_attack(atk, echo, out);
    if (v->parsed()) return cmd_verify(ver, echo, out);
    if (k->parsed()) return cmd_calibrate(cal, echo, out);
  } catch (const UsageError& e) {
    err << "fsmre: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "fsmre: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace fsmre
