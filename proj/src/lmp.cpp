// Copyright 2026 The lmpdrive Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lmpdrive/lmp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lmpdrive/text.hpp"

namespace lmpdrive
{

bool same_program(const Lmp & a, const Lmp & b)
{
  return a.engage == b.engage && a.follower == b.follower;
}

namespace
{

struct Command
{
  std::string text;
  std::size_t line{0};
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

/// Whitespace-delimited cursor over one logical command.
class Cursor
{
public:
  explicit Cursor(std::string_view text) : text_(text) {}

  void skip_space()
  {
    while (pos_ < text_.size() && is_space(text_[pos_])) {
      ++pos_;
    }
  }

  std::string_view peek_word()
  {
    skip_space();
    std::size_t end = pos_;
    while (end < text_.size() && !is_space(text_[end])) {
      ++end;
    }
    return text_.substr(pos_, end - pos_);
  }

  std::string_view next_word()
  {
    const std::string_view w = peek_word();
    pos_ += w.size();
    return w;
  }

  std::string rest()
  {
    skip_space();
    return trim(text_.substr(pos_));
  }

private:
  std::string_view text_;
  std::size_t pos_{0};
};

std::string_view strip_prompt(std::string_view t)
{
  if (!t.empty() && t.front() == '$') {
    t.remove_prefix(1);
    while (!t.empty() && is_space(t.front())) {
      t.remove_prefix(1);
    }
  }
  return t;
}

std::string first_word(std::string_view t)
{
  std::size_t end = 0;
  while (end < t.size() && !is_space(t[end])) {
    ++end;
  }
  return std::string(t.substr(0, end));
}

bool is_elision(const std::string & t) { return t == "..." || t == "\xE2\x80\xA6"; }

/// Strips one level of matching shell quotes; nullopt when unquoted.
std::optional<std::string> unquote(const std::string & s)
{
  if (s.size() < 2) {
    return std::nullopt;
  }
  const char q = s.front();
  if ((q != '"' && q != '\'') || s.back() != q) {
    return std::nullopt;
  }
  std::string inner = s.substr(1, s.size() - 2);
  if (q == '"') {
    std::string out;
    out.reserve(inner.size());
    for (std::size_t i = 0; i < inner.size(); ++i) {
      if (inner[i] == '\\' && i + 1 < inner.size() && (inner[i + 1] == '"' || inner[i + 1] == '\\')) {
        out.push_back(inner[i + 1]);
        ++i;
      } else {
        out.push_back(inner[i]);
      }
    }
    return out;
  }
  return inner;
}

bool valid_duration(std::string_view w)
{
  if (w.size() < 2 || w.back() != 's') {
    return false;
  }
  const auto v = parse_double(w.substr(0, w.size() - 1));
  return v && std::isfinite(*v) && *v > 0.0;
}

FormatError error_at(std::size_t line, std::string message)
{
  FormatError e;
  e.message = std::move(message);
  e.line = line;
  return e;
}

std::variant<bool, FormatError> parse_engage_payload(const std::string & rest, std::size_t line)
{
  const auto inner = unquote(rest);
  if (!inner) {
    return error_at(line, "engage payload must be a quoted \"data: true|false\"");
  }
  const std::string body = trim(*inner);
  if (body.rfind("data:", 0) != 0) {
    return error_at(line, "engage payload must start with 'data:'");
  }
  const std::string value = trim(body.substr(5));
  if (value == "true") {
    return true;
  }
  if (value == "false") {
    return false;
  }
  return error_at(line, "engage data must be true or false");
}

std::variant<FollowerConfig, FormatError> parse_follower_payload(std::string rest, std::size_t line)
{
  if (!rest.empty() && rest.front() != '"' && rest.front() != '\'' && rest.front() != '{') {
    Cursor c(rest);
    const std::string type(c.next_word());
    if (type != lmp_grammar::kFollowerType) {
      return error_at(line, "unexpected token '" + type + "' before follower payload");
    }
    rest = c.rest();
  }
  std::string body;
  if (auto inner = unquote(rest)) {
    body = *inner;
  } else if (!rest.empty() && rest.front() == '{') {
    body = rest;
  } else {
    return error_at(line, "follower payload must be a quoted JSON object");
  }
  const nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return error_at(line, "follower payload is not a JSON object");
  }
  FormatError schema = error_at(line, "");
  std::set<std::string> expected;
  for (const auto & f : lmp_grammar::kFollowerFields) {
    expected.insert(std::string(f.name));
    if (!j.contains(std::string(f.name))) {
      schema.missing_keys.emplace_back(f.name);
    }
  }
  for (const auto & item : j.items()) {
    if (!expected.count(item.key())) {
      schema.unexpected_keys.push_back(item.key());
    }
  }
  if (!schema.missing_keys.empty() || !schema.unexpected_keys.empty()) {
    std::string msg = "follower object keys mismatch";
    for (const auto & k : schema.missing_keys) {
      msg += "; missing key '" + k + "'";
    }
    for (const auto & k : schema.unexpected_keys) {
      msg += "; unexpected key '" + k + "'";
    }
    schema.message = msg;
    return schema;
  }
  FollowerConfig cfg;
  for (const auto & f : lmp_grammar::kFollowerFields) {
    const auto & v = j.at(std::string(f.name));
    if (f.kind == lmp_grammar::FieldKind::kInteger) {
      if (!v.is_number_integer()) {
        return error_at(line, std::string(f.name) + " must be an integer");
      }
      // Out-of-int range values are a format problem, not a parameter one.
      const long long raw = v.is_number_unsigned() ? static_cast<long long>(std::min<std::uint64_t>(
                                                       v.get<std::uint64_t>(), static_cast<std::uint64_t>(1) << 40))
                                                   : v.get<long long>();
      if (raw < -(1LL << 30) || raw > (1LL << 30)) {
        return error_at(line, std::string(f.name) + " integer out of range");
      }
      cfg.param_flag = static_cast<int>(raw);
      continue;
    }
    if (!v.is_number()) {
      return error_at(line, std::string(f.name) + " must be a number");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      return error_at(line, std::string(f.name) + " must be finite");
    }
    if (f.name == "velocity") {
      cfg.target_velocity = d;
    } else if (f.name == "lookahead_distance") {
      cfg.lookahead_distance = d;
    } else {
      cfg.lookahead_ratio = d;
    }
  }
  return cfg;
}

}  // namespace

ParseResult parse_lmp(std::string_view text)
{
  Lmp lmp;
  std::vector<Command> commands;
  bool open = false;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    lmp.source_lines.push_back(lines[i]);
    const std::string t = trim(lines[i]);
    if (t.empty() || t.front() == '#' || is_elision(t)) {
      open = false;
      continue;
    }
    const std::string_view body = strip_prompt(t);
    const std::string head = first_word(body);
    if (head == "timeout" || head == "rostopic") {
      commands.push_back({std::string(body), line_no});
      open = true;
    } else if (open && t.front() != '$') {
      commands.back().text += " ";
      commands.back().text += t;
    } else {
      return error_at(line_no, "unrecognized line: '" + t.substr(0, 80) + "'");
    }
  }
  if (commands.empty()) {
    return error_at(0, "no LMP commands found");
  }

  for (const auto & cmd : commands) {
    Cursor c(cmd.text);
    std::optional<double> timeout;
    if (c.peek_word() == "timeout") {
      c.next_word();
      const std::string_view dur = c.next_word();
      if (!valid_duration(dur)) {
        return error_at(cmd.line, "timeout must be a positive duration like 1s");
      }
      timeout = *parse_double(dur.substr(0, dur.size() - 1));
    }
    if (c.next_word() != "rostopic" || c.next_word() != "pub") {
      return error_at(cmd.line, "expected 'rostopic pub'");
    }
    std::string topic(c.next_word());
    if (topic.empty() || topic.front() != '/') {
      return error_at(cmd.line, "expected a topic name");
    }
    // Topic names may be wrapped across lines: glue adjacent '/...' fragments.
    while (true) {
      const std::string_view next = c.peek_word();
      if (next.empty() || next.front() != '/') {
        break;
      }
      topic += std::string(c.next_word());
    }
    if (topic == lmp_grammar::kEngageTopic) {
      if (c.next_word() != lmp_grammar::kEngageType) {
        return error_at(cmd.line, "engage topic requires message type std_msgs/Bool");
      }
      auto parsed = parse_engage_payload(c.rest(), cmd.line);
      if (auto * err = std::get_if<FormatError>(&parsed)) {
        return *err;
      }
      if (lmp.engage) {
        lmp.warnings.push_back("duplicate engage command on line " + std::to_string(cmd.line) + "; last wins");
      }
      lmp.engage = std::get<bool>(parsed);
      lmp.engage_timeout = timeout;
    } else if (topic == lmp_grammar::kFollowerTopic) {
      if (timeout) {
        return error_at(cmd.line, "timeout prefix is only valid on the engage command");
      }
      auto parsed = parse_follower_payload(c.rest(), cmd.line);
      if (auto * err = std::get_if<FormatError>(&parsed)) {
        return *err;
      }
      if (lmp.follower) {
        lmp.warnings.push_back("duplicate follower config on line " + std::to_string(cmd.line) + "; last wins");
      }
      lmp.follower = std::get<FollowerConfig>(parsed);
    } else {
      return error_at(cmd.line, "unsupported topic '" + topic.substr(0, 80) + "'");
    }
  }
  return lmp;
}

namespace
{

std::string json_number(double v)
{
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::ostringstream out;
    out << static_cast<long long>(v);
    return out.str();
  }
  return format_double(v);
}

}  // namespace

std::string serialize_lmp(const Lmp & lmp)
{
  std::string out;
  if (lmp.engage) {
    if (lmp.engage_timeout) {
      out += "timeout " + json_number(*lmp.engage_timeout) + "s ";
    }
    out += "rostopic pub ";
    out += lmp_grammar::kEngageTopic;
    out += " ";
    out += lmp_grammar::kEngageType;
    out += *lmp.engage ? " \"data: true\"\n" : " \"data: false\"\n";
  }
  if (lmp.follower) {
    const auto & f = *lmp.follower;
    out += "rostopic pub ";
    out += lmp_grammar::kFollowerTopic;
    out += " \"{\\\"param_flag\\\": " + std::to_string(f.param_flag);
    out += ", \\\"velocity\\\": " + json_number(f.target_velocity);
    out += ", \\\"lookahead_distance\\\": " + json_number(f.lookahead_distance);
    out += ", \\\"lookahead_ratio\\\": " + format_double(f.lookahead_ratio) + "}\"\n";
  }
  return out;
}

void SafetyLimits::validate() const
{
  if (!(speed_limit > 0.0)) {
    throw std::invalid_argument("speed_limit must be positive");
  }
  if (!(lookahead_distance.lo <= lookahead_distance.hi) || !(lookahead_ratio.lo <= lookahead_ratio.hi) ||
      param_flags.empty()) {
    throw std::invalid_argument("safety ranges must be nonempty");
  }
}

SafetyLimits limits_for_speed_limit(double speed_limit_kmh)
{
  SafetyLimits limits;
  limits.speed_limit = speed_limit_kmh;
  limits.validate();
  return limits;
}

std::string to_string(Outcome outcome)
{
  switch (outcome) {
    case Outcome::kAccepted:
      return "accepted";
    case Outcome::kFormatRejected:
      return "format_rejected";
    case Outcome::kParameterRejected:
      return "parameter_rejected";
  }
  return "format_rejected";
}

namespace
{

void check_range(std::vector<Violation> & out, const char * field, double value, Range r)
{
  if (r.contains(value)) {
    return;
  }
  std::string bound;
  if (!(value >= r.lo)) {
    bound = ">= " + format_double(r.lo);
  } else {
    bound = "<= " + format_double(r.hi);
  }
  out.push_back({field, value, bound});
}

}  // namespace

Verdict verify(const Lmp & lmp, const SafetyLimits & limits)
{
  Verdict verdict;
  if (!lmp.engage && !lmp.follower) {
    verdict.outcome = Outcome::kFormatRejected;
    verdict.detail = "empty program";
    return verdict;
  }
  if (lmp.follower) {
    const auto & f = *lmp.follower;
    check_range(verdict.violations, "velocity", f.target_velocity, limits.velocity());
    check_range(verdict.violations, "lookahead_distance", f.lookahead_distance, limits.lookahead_distance);
    check_range(verdict.violations, "lookahead_ratio", f.lookahead_ratio, limits.lookahead_ratio);
    const auto & flags = limits.param_flags;
    if (std::find(flags.begin(), flags.end(), f.param_flag) == flags.end()) {
      std::string bound = "in {";
      for (std::size_t i = 0; i < flags.size(); ++i) {
        bound += (i ? ", " : "") + std::to_string(flags[i]);
      }
      verdict.violations.push_back({"param_flag", static_cast<double>(f.param_flag), bound + "}"});
    }
  }
  verdict.outcome = verdict.violations.empty() ? Outcome::kAccepted : Outcome::kParameterRejected;
  return verdict;
}

Verdict format_rejection(const FormatError & error)
{
  Verdict v;
  v.outcome = Outcome::kFormatRejected;
  v.detail = error.line ? "line " + std::to_string(error.line) + ": " + error.message : error.message;
  return v;
}

GateResult gate(std::string_view text, const SafetyLimits & limits)
{
  ParseResult parsed = parse_lmp(text);
  if (auto * err = std::get_if<FormatError>(&parsed)) {
    return {std::nullopt, format_rejection(*err)};
  }
  Lmp lmp = std::get<Lmp>(std::move(parsed));
  Verdict verdict = verify(lmp, limits);
  return {std::move(lmp), std::move(verdict)};
}

std::string output_format_contract(const SafetyLimits & limits)
{
  std::ostringstream out;
  out << "Output format: reply with LMP lines only, no prose. Two line forms are accepted.\n";
  out << "1. Engage or disengage the autonomous mode:\n";
  out << "   timeout 1s rostopic pub " << lmp_grammar::kEngageTopic << " " << lmp_grammar::kEngageType
      << " \"data: true\"\n";
  out << "2. Configure the waypoint follower:\n";
  out << "   rostopic pub " << lmp_grammar::kFollowerTopic << " \"{";
  for (std::size_t i = 0; i < lmp_grammar::kFollowerFields.size(); ++i) {
    const auto & f = lmp_grammar::kFollowerFields[i];
    out << (i ? ", " : "") << "\\\"" << f.name << "\\\": <"
        << (f.kind == lmp_grammar::FieldKind::kInteger ? "integer" : "number") << ">";
  }
  out << "}\"\n";
  out << "The JSON object must contain exactly these keys:\n";
  for (const auto & f : lmp_grammar::kFollowerFields) {
    out << "- " << f.name << ": " << f.meaning;
    if (f.name == "velocity") {
      out << ", between " << format_double(limits.velocity().lo) << " and the speed limit ("
          << format_double(limits.velocity().hi) << " km/h)";
    } else if (f.name == "lookahead_distance") {
      out << ", between " << format_double(limits.lookahead_distance.lo) << " and "
          << format_double(limits.lookahead_distance.hi);
    } else if (f.name == "lookahead_ratio") {
      out << ", between " << format_double(limits.lookahead_ratio.lo) << " and "
          << format_double(limits.lookahead_ratio.hi);
    } else if (f.name == "param_flag") {
      out << ", one of {";
      for (std::size_t i = 0; i < limits.param_flags.size(); ++i) {
        out << (i ? ", " : "") << limits.param_flags[i];
      }
      out << "}";
    }
    out << "\n";
  }
  out << "Programs that break this format or exceed the speed limit are not executed.";
  return out.str();
}

}  // namespace lmpdrive
