#include "fsmre/kiss2.hpp"

#include <charconv>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace fsmre {

Kiss2Error::Kiss2Error(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                         what),
      line_(line),
      column_(column) {}

namespace {

constexpr std::string_view kStateOutputTag = "#@state-output";

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

struct RawRow {
  std::string input;
  std::string current;
  std::string next;
  BitVec output;
  std::size_t line;
  std::size_t column;
};

unsigned parse_count(const Token& tok, std::size_t line) {
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), value);
  if (ec != std::errc{} || ptr != tok.text.data() + tok.text.size()) {
    throw Kiss2SyntaxError("expected a non-negative integer, got '" + std::string(tok.text) + "'", line,
                           tok.column);
  }
  return value;
}

BitVec parse_output(const Token& tok, unsigned width, std::size_t line) {
  if (tok.text.size() != width) {
    throw Kiss2SyntaxError("output field has " + std::to_string(tok.text.size()) + " bits, expected " +
                               std::to_string(width),
                           line, tok.column);
  }
  BitVec out(width);
  for (std::size_t k = 0; k < tok.text.size(); ++k) {
    char c = tok.text[k];
    if (c == '1') {
      out.set(k, true);
    } else if (c != '0' && c != '-') {
      throw Kiss2SyntaxError(std::string("invalid output character '") + c + "'", line, tok.column + k);
    }
  }
  return out;
}

void expand_inputs(const std::string& pattern, std::size_t pos, InputVector acc,
                   std::vector<InputVector>& out) {
  if (pos == pattern.size()) {
    out.push_back(acc);
    return;
  }
  char c = pattern[pos];
  if (c == '0' || c == '-') expand_inputs(pattern, pos + 1, acc << 1, out);
  if (c == '1' || c == '-') expand_inputs(pattern, pos + 1, (acc << 1) | 1U, out);
}

}  // namespace

Kiss2File read_kiss2(std::string_view text) {
  std::optional<unsigned> in_bits;
  std::optional<unsigned> out_bits;
  std::optional<unsigned> declared_states;
  std::optional<std::pair<std::string, std::size_t>> reset_name;  // name, line
  std::vector<RawRow> rows;
  std::vector<std::pair<std::string, std::pair<std::string, std::size_t>>> annotations;
  std::size_t states_line = 0;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    auto toks = tokenize(line);
    if (toks.empty()) {
      if (eol == text.size()) break;
      continue;
    }
    const auto& head = toks.front();
    if (head.text.front() == '#') {
      if (head.text == kStateOutputTag) {
        if (toks.size() != 3) {
          throw Kiss2SyntaxError("state-output annotation needs a state and a bit string", line_no,
                                 head.column);
        }
        annotations.push_back({std::string(toks[1].text), {std::string(toks[2].text), line_no}});
      }
      continue;
    }
    if (head.text.front() == '.') {
      auto need_arg = [&] {
        if (toks.size() != 2) {
          throw Kiss2SyntaxError("directive " + std::string(head.text) + " takes one argument", line_no,
                                 head.column);
        }
      };
      if (head.text == ".e" || head.text == ".end") break;
      if (head.text == ".i") {
        need_arg();
        in_bits = parse_count(toks[1], line_no);
        if (*in_bits == 0 || *in_bits > kMaxInputBits) {
          throw Kiss2SyntaxError("input width must be in 1.." + std::to_string(kMaxInputBits), line_no,
                                 toks[1].column);
        }
      } else if (head.text == ".o") {
        need_arg();
        out_bits = parse_count(toks[1], line_no);
      } else if (head.text == ".p") {
        need_arg();
        parse_count(toks[1], line_no);  // informational only
      } else if (head.text == ".s") {
        need_arg();
        declared_states = parse_count(toks[1], line_no);
        states_line = line_no;
      } else if (head.text == ".r") {
        need_arg();
        reset_name = {std::string(toks[1].text), line_no};
      } else {
        throw Kiss2SyntaxError("unknown directive '" + std::string(head.text) + "'", line_no, head.column);
      }
      continue;
    }

    if (!in_bits || !out_bits) {
      throw Kiss2SyntaxError("transition line before .i and .o", line_no, head.column);
    }
    if (toks.size() != 4) {
      throw Kiss2SyntaxError("transition line needs 4 fields, found " + std::to_string(toks.size()),
                             line_no, toks.size() > 4 ? toks[4].column : line.size() + 1);
    }
    if (head.text.size() != *in_bits) {
      throw Kiss2SyntaxError("input field has " + std::to_string(head.text.size()) + " bits, expected " +
                                 std::to_string(*in_bits),
                             line_no, head.column);
    }
    for (std::size_t k = 0; k < head.text.size(); ++k) {
      char c = head.text[k];
      if (c != '0' && c != '1' && c != '-') {
        throw Kiss2SyntaxError(std::string("invalid input character '") + c + "'", line_no, head.column + k);
      }
    }
    rows.push_back({std::string(head.text), std::string(toks[1].text), std::string(toks[2].text),
                    parse_output(toks[3], *out_bits, line_no), line_no, head.column});
    if (eol == text.size()) break;
  }

  if (!in_bits || !out_bits) throw Kiss2SyntaxError("missing .i or .o directive", line_no, 1);

  Kiss2File file;
  MealyFsm& m = file.machine;
  m.input_bits = *in_bits;
  m.output_bits = *out_bits;

  std::unordered_map<std::string, StateId> ids;
  auto intern = [&](const std::string& name) {
    auto [it, inserted] = ids.emplace(name, static_cast<StateId>(m.states.size()));
    if (inserted) m.states.push_back(name);
    return it->second;
  };
  for (const auto& r : rows) intern(r.current);
  for (const auto& r : rows) intern(r.next);
  for (const auto& [name, value] : annotations) intern(name);

  if (declared_states && *declared_states != m.states.size()) {
    throw Kiss2SyntaxError(".s declares " + std::to_string(*declared_states) + " states but " +
                               std::to_string(m.states.size()) + " are used",
                           states_line, 1);
  }
  if (m.states.empty()) throw Kiss2SyntaxError("machine has no states", line_no, 1);

  if (reset_name) {
    auto it = ids.find(reset_name->first);
    if (it == ids.end()) {
      throw Kiss2DanglingStateError("reset state '" + reset_name->first + "' is never used",
                                    reset_name->second, 4);
    }
    m.reset = it->second;
  }

  std::vector<InputVector> expanded;
  for (const auto& r : rows) {
    expanded.clear();
    expand_inputs(r.input, 0, 0, expanded);
    StateId from = ids.at(r.current);
    MealyTransition t{ids.at(r.next), r.output};
    for (auto v : expanded) {
      auto [it, inserted] = m.transitions.emplace(std::make_pair(from, v), t);
      if (!inserted && !(it->second == t)) {
        throw Kiss2NondeterminismError("conflicting transition for state '" + r.current + "' on input " +
                                           input_to_string(v, m.input_bits),
                                       r.line, r.column);
      }
    }
  }

  for (const auto& [name, value] : annotations) {
    try {
      BitVec bits = BitVec::parse(value.first);
      if (bits.width() != m.output_bits) throw std::invalid_argument("width");
      file.state_outputs[ids.at(name)] = bits;
    } catch (const std::invalid_argument&) {
      throw Kiss2SyntaxError("bad state-output annotation for '" + name + "'", value.second, 1);
    }
  }
  return file;
}

bool is_moore_style(const MealyFsm& m) {
  std::vector<std::optional<BitVec>> seen(m.states.size());
  for (const auto& [key, t] : m.transitions) {
    auto& slot = seen[t.next];
    if (!slot) {
      slot = t.output;
    } else if (*slot != t.output) {
      return false;
    }
  }
  return true;
}

namespace {

MooreFsm moore_from_file(const Kiss2File& file, MoorifyStrategy strategy) {
  MooreFsm base = moorify(file.machine, strategy);
  if (file.state_outputs.empty()) return base;

  std::vector<bool> has_incoming(base.state_count(), false);
  for (const auto& [key, t] : file.machine.transitions) has_incoming[t.next] = true;
  std::vector<BitVec> lambda;
  std::vector<StateId> delta;
  for (StateId s = 0; s < base.state_count(); ++s) {
    auto it = file.state_outputs.find(s);
    lambda.push_back(!has_incoming[s] && it != file.state_outputs.end() ? it->second : base.output(s));
    for (InputVector v = 0; v < base.input_count(); ++v) delta.push_back(base.next(s, v));
  }
  return MooreFsm(base.input_bits(), base.output_bits(), base.state_names(), base.reset(),
                  std::move(delta), std::move(lambda));
}

}  // namespace

ParsedMachine parse_kiss2(std::string_view text) {
  Kiss2File file = read_kiss2(text);
  if (!is_moore_style(file.machine)) return std::move(file.machine);
  return moore_from_file(file, MoorifyStrategy::first_incoming);
}

MooreFsm load_moore(std::string_view text, MoorifyStrategy strategy) {
  Kiss2File file = read_kiss2(text);
  if (is_moore_style(file.machine)) return moore_from_file(file, MoorifyStrategy::first_incoming);
  return moorify(file.machine, strategy);
}

std::string write_kiss2(unsigned input_bits, unsigned output_bits,
                        const std::vector<std::string>& state_names, StateId reset,
                        const std::vector<Kiss2Row>& rows,
                        const std::map<StateId, BitVec>& state_outputs) {
  std::ostringstream os;
  os << ".i " << input_bits << '\n'
     << ".o " << output_bits << '\n'
     << ".p " << rows.size() << '\n'
     << ".s " << state_names.size() << '\n'
     << ".r " << state_names.at(reset) << '\n';
  for (const auto& [s, bits] : state_outputs) {
    os << kStateOutputTag << ' ' << state_names.at(s) << ' ' << bits.to_string() << '\n';
  }
  for (const auto& r : rows) {
    os << input_to_string(r.input, input_bits) << ' ' << state_names.at(r.from) << ' '
       << state_names.at(r.to) << ' ' << r.output.to_string() << '\n';
  }
  os << ".e\n";
  return os.str();
}

std::string serialize_kiss2(const MooreFsm& m) {
  std::vector<Kiss2Row> rows;
  rows.reserve(transition_count(m));
  std::vector<bool> has_incoming(m.state_count(), false);
  for (StateId s = 0; s < m.state_count(); ++s) {
    for (InputVector v = 0; v < m.input_count(); ++v) {
      StateId t = m.next(s, v);
      has_incoming[t] = true;
      rows.push_back({v, s, t, m.output(t)});
    }
  }
  std::map<StateId, BitVec> annotations;
  for (StateId s = 0; s < m.state_count(); ++s) {
    if (!has_incoming[s] && m.output(s).popcount() != 0) annotations[s] = m.output(s);
  }
  return write_kiss2(m.input_bits(), m.output_bits(), m.state_names(), m.reset(), rows, annotations);
}

}  // namespace fsmre
