/* Copyright 2026 The karel-search Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// The Karel DSL: AST, canonical token text, structural measures, the
// size-constrained probabilistic grammar and its rejection sampler.

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "karel/rng.hpp"

namespace karel {

enum class Action : std::uint8_t { Move, TurnLeft, TurnRight, PutMarker, PickMarker };
enum class Percept : std::uint8_t {
  FrontIsClear,
  LeftIsClear,
  RightIsClear,
  MarkersPresent,
  NoMarkersPresent
};

inline constexpr int kNumActions = 5;
inline constexpr int kNumPercepts = 5;
inline constexpr int kMaxRepeat = 19;

inline constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "move", "turnLeft", "turnRight", "putMarker", "pickMarker"};
inline constexpr std::array<std::string_view, kNumPercepts> kPerceptNames = {
    "frontIsClear", "leftIsClear", "rightIsClear", "markersPresent", "noMarkersPresent"};

constexpr std::string_view to_string(Action a) { return kActionNames[static_cast<int>(a)]; }
constexpr std::string_view to_string(Percept h) { return kPerceptNames[static_cast<int>(h)]; }

inline std::optional<Action> action_from_string(std::string_view s) {
  for (int i = 0; i < kNumActions; ++i)
    if (kActionNames[i] == s) return static_cast<Action>(i);
  return std::nullopt;
}

inline std::optional<Percept> percept_from_string(std::string_view s) {
  for (int i = 0; i < kNumPercepts; ++i)
    if (kPerceptNames[i] == s) return static_cast<Percept>(i);
  return std::nullopt;
}

/// b := h | not( h )
struct Cond {
  Percept percept = Percept::FrontIsClear;
  bool negated = false;

  friend bool operator==(const Cond&, const Cond&) = default;
  int tokens() const { return negated ? 3 : 1; }
};

enum class StmtKind : std::uint8_t { While, If, IfElse, Repeat, Seq, Act };
inline constexpr int kNumStmtKinds = 6;

constexpr bool is_control(StmtKind k) {
  return k == StmtKind::While || k == StmtKind::If || k == StmtKind::IfElse ||
         k == StmtKind::Repeat;
}
constexpr bool has_cond(StmtKind k) {
  return k == StmtKind::While || k == StmtKind::If || k == StmtKind::IfElse;
}

struct StmtNode;

/// Immutable statement tree with value semantics. Subtrees are shared, so
/// copying a Stmt is O(1) and rebuilding one path is O(depth).
///
/// Seq is binary but always left-leaning: the second child of a Seq is never a
/// Seq. Every constructor re-associates, so two chains with the same flattened
/// statement list are the same tree.
class Stmt {
 public:
  /// Empty handle; only valid as a placeholder to be assigned over.
  Stmt() = default;

  static Stmt act(Action a);
  static Stmt while_loop(Cond c, Stmt body);
  static Stmt if_then(Cond c, Stmt body);
  static Stmt if_else(Cond c, Stmt then_body, Stmt else_body);
  static Stmt repeat(int count, Stmt body);
  static Stmt seq(Stmt first, Stmt second);
  /// Left-folds a nonempty statement list into Seq nodes.
  static Stmt chain(const std::vector<Stmt>& stmts);

  StmtKind kind() const;
  Cond cond() const;
  Action action() const;
  int count() const;
  const Stmt& body() const;       // While, If, Repeat; the then-branch of IfElse
  const Stmt& else_body() const;  // IfElse
  const Stmt& first() const;      // Seq
  const Stmt& second() const;     // Seq

  int tokens() const;
  /// Control-flow nesting depth; Seq is transparent.
  int depth() const;
  /// Statements in this node's flattened block (1 unless this is a Seq).
  int chain_len() const;
  /// Largest flattened block anywhere in the subtree.
  int max_chain() const;
  std::uint64_t hash() const;

  /// Flattened statement list of this block (the node itself if not a Seq).
  std::vector<Stmt> flatten() const;

  const StmtNode* node() const { return node_.get(); }

  friend bool operator==(const Stmt& a, const Stmt& b);

 private:
  explicit Stmt(std::shared_ptr<const StmtNode> n) : node_(std::move(n)) {}
  static Stmt make(StmtNode n);
  std::shared_ptr<const StmtNode> node_;
};

struct StmtNode {
  StmtKind kind = StmtKind::Act;
  Cond cond{};
  Action action = Action::Move;
  int count = 0;
  Stmt a;  // body / then / first
  Stmt b;  // else / second
  int tokens = 0;
  int depth = 0;
  int chain_len = 1;
  int max_chain = 1;
  std::uint64_t hash = 0;
};

/// DEF run m( s m)
struct Program {
  Stmt body;

  int tokens() const { return body.tokens() + 4; }
  std::uint64_t hash() const { return body.hash(); }
  friend bool operator==(const Program& a, const Program& b) { return a.body == b.body; }
};

struct ProgramHash {
  std::size_t operator()(const Program& p) const noexcept { return static_cast<std::size_t>(p.hash()); }
};

// ---------------------------------------------------------------------------
// Stmt implementation

namespace detail {

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  return mix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

}  // namespace detail

inline Stmt Stmt::make(StmtNode n) {
  std::uint64_t h = detail::hash_combine(static_cast<std::uint64_t>(n.kind) + 1, 0);
  switch (n.kind) {
    case StmtKind::Act:
      n.tokens = 1;
      n.depth = 0;
      n.chain_len = 1;
      n.max_chain = 1;
      h = detail::hash_combine(h, static_cast<std::uint64_t>(n.action));
      break;
    case StmtKind::Seq:
      n.tokens = n.a.tokens() + n.b.tokens();
      n.depth = std::max(n.a.depth(), n.b.depth());
      n.chain_len = n.a.chain_len() + 1;  // left-leaning: second is a single statement
      n.max_chain = std::max({n.chain_len, n.a.max_chain(), n.b.max_chain()});
      h = detail::hash_combine(detail::hash_combine(h, n.a.hash()), n.b.hash());
      break;
    case StmtKind::Repeat:
      n.tokens = 4 + n.a.tokens();
      n.depth = 1 + n.a.depth();
      n.chain_len = 1;
      n.max_chain = n.a.max_chain();
      h = detail::hash_combine(detail::hash_combine(h, static_cast<std::uint64_t>(n.count)), n.a.hash());
      break;
    case StmtKind::While:
    case StmtKind::If:
      n.tokens = 5 + n.cond.tokens() + n.a.tokens();
      n.depth = 1 + n.a.depth();
      n.chain_len = 1;
      n.max_chain = n.a.max_chain();
      h = detail::hash_combine(h, static_cast<std::uint64_t>(n.cond.percept) * 2 + n.cond.negated);
      h = detail::hash_combine(h, n.a.hash());
      break;
    case StmtKind::IfElse:
      n.tokens = 8 + n.cond.tokens() + n.a.tokens() + n.b.tokens();
      n.depth = 1 + std::max(n.a.depth(), n.b.depth());
      n.chain_len = 1;
      n.max_chain = std::max(n.a.max_chain(), n.b.max_chain());
      h = detail::hash_combine(h, static_cast<std::uint64_t>(n.cond.percept) * 2 + n.cond.negated);
      h = detail::hash_combine(detail::hash_combine(h, n.a.hash()), n.b.hash());
      break;
  }
  n.hash = h;
  return Stmt(std::make_shared<const StmtNode>(std::move(n)));
}

inline Stmt Stmt::act(Action a) {
  StmtNode n;
  n.kind = StmtKind::Act;
  n.action = a;
  return make(std::move(n));
}

inline Stmt Stmt::while_loop(Cond c, Stmt body) {
  StmtNode n;
  n.kind = StmtKind::While;
  n.cond = c;
  n.a = std::move(body);
  return make(std::move(n));
}

inline Stmt Stmt::if_then(Cond c, Stmt body) {
  StmtNode n;
  n.kind = StmtKind::If;
  n.cond = c;
  n.a = std::move(body);
  return make(std::move(n));
}

inline Stmt Stmt::if_else(Cond c, Stmt then_body, Stmt else_body) {
  StmtNode n;
  n.kind = StmtKind::IfElse;
  n.cond = c;
  n.a = std::move(then_body);
  n.b = std::move(else_body);
  return make(std::move(n));
}

inline Stmt Stmt::repeat(int count, Stmt body) {
  if (count < 0 || count > kMaxRepeat) throw std::invalid_argument("repeat count out of range 0..19");
  StmtNode n;
  n.kind = StmtKind::Repeat;
  n.count = count;
  n.a = std::move(body);
  return make(std::move(n));
}

inline Stmt Stmt::seq(Stmt first, Stmt second) {
  if (second.kind() == StmtKind::Seq) {
    // (x ; (y1 ; y2)) == ((x ; y1) ; y2)
    Stmt left = seq(std::move(first), second.first());
    return seq(std::move(left), second.second());
  }
  StmtNode n;
  n.kind = StmtKind::Seq;
  n.a = std::move(first);
  n.b = std::move(second);
  return make(std::move(n));
}

inline Stmt Stmt::chain(const std::vector<Stmt>& stmts) {
  if (stmts.empty()) throw std::invalid_argument("empty statement block");
  Stmt acc = stmts.front();
  for (std::size_t i = 1; i < stmts.size(); ++i) acc = seq(std::move(acc), stmts[i]);
  return acc;
}

inline StmtKind Stmt::kind() const { return node_->kind; }
inline Cond Stmt::cond() const { return node_->cond; }
inline Action Stmt::action() const { return node_->action; }
inline int Stmt::count() const { return node_->count; }
inline const Stmt& Stmt::body() const { return node_->a; }
inline const Stmt& Stmt::else_body() const { return node_->b; }
inline const Stmt& Stmt::first() const { return node_->a; }
inline const Stmt& Stmt::second() const { return node_->b; }
inline int Stmt::tokens() const { return node_->tokens; }
inline int Stmt::depth() const { return node_->depth; }
inline int Stmt::chain_len() const { return node_->chain_len; }
inline int Stmt::max_chain() const { return node_->max_chain; }
inline std::uint64_t Stmt::hash() const { return node_->hash; }

inline std::vector<Stmt> Stmt::flatten() const {
  std::vector<Stmt> out;
  const Stmt* cur = this;
  while (cur->kind() == StmtKind::Seq) {
    out.push_back(cur->second());
    cur = &cur->first();
  }
  out.push_back(*cur);
  std::reverse(out.begin(), out.end());
  return out;
}

inline bool operator==(const Stmt& x, const Stmt& y) {
  if (x.node_ == y.node_) return true;
  if (!x.node_ || !y.node_) return false;
  const StmtNode& a = *x.node_;
  const StmtNode& b = *y.node_;
  if (a.hash != b.hash || a.kind != b.kind || a.tokens != b.tokens) return false;
  switch (a.kind) {
    case StmtKind::Act: return a.action == b.action;
    case StmtKind::Seq: return a.a == b.a && a.b == b.b;
    case StmtKind::Repeat: return a.count == b.count && a.a == b.a;
    case StmtKind::While:
    case StmtKind::If: return a.cond == b.cond && a.a == b.a;
    case StmtKind::IfElse: return a.cond == b.cond && a.a == b.a && a.b == b.b;
  }
  return false;
}

inline bool equals(const Program& p, const Program& q) { return p == q; }

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline void print_cond(const Cond& c, std::string& out) {
  if (c.negated) {
    out += "not( ";
    out += to_string(c.percept);
    out += " )";
  } else {
    out += to_string(c.percept);
  }
}

inline void print_stmt(const Stmt& s, std::string& out) {
  switch (s.kind()) {
    case StmtKind::Act:
      out += to_string(s.action());
      break;
    case StmtKind::Seq:
      print_stmt(s.first(), out);
      out += ' ';
      print_stmt(s.second(), out);
      break;
    case StmtKind::While:
      out += "WHILE c( ";
      print_cond(s.cond(), out);
      out += " c) w( ";
      print_stmt(s.body(), out);
      out += " w)";
      break;
    case StmtKind::If:
      out += "IF c( ";
      print_cond(s.cond(), out);
      out += " c) i( ";
      print_stmt(s.body(), out);
      out += " i)";
      break;
    case StmtKind::IfElse:
      out += "IFELSE c( ";
      print_cond(s.cond(), out);
      out += " c) i( ";
      print_stmt(s.body(), out);
      out += " i) ELSE e( ";
      print_stmt(s.else_body(), out);
      out += " e)";
      break;
    case StmtKind::Repeat:
      out += "REPEAT R=";
      out += std::to_string(s.count());
      out += " r( ";
      print_stmt(s.body(), out);
      out += " r)";
      break;
  }
}

}  // namespace detail

inline std::string print(const Stmt& s) {
  std::string out;
  detail::print_stmt(s, out);
  return out;
}

/// Canonical one-line token text, single-space separated.
inline std::string print(const Program& p) {
  std::string out = "DEF run m( ";
  out.reserve(static_cast<std::size_t>(p.tokens()) * 8);
  detail::print_stmt(p.body, out);
  out += " m)";
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(std::size_t position, std::vector<std::string> expected, std::string found)
      : std::runtime_error(format(position, expected, found)),
        position_(position),
        expected_(std::move(expected)),
        found_(std::move(found)) {}

  /// Zero-based token index at which parsing failed.
  std::size_t position() const { return position_; }
  const std::vector<std::string>& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  static std::string format(std::size_t pos, const std::vector<std::string>& expected,
                            const std::string& found) {
    std::string msg = "syntax error at token " + std::to_string(pos) + ": expected one of {";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += ", ";
      msg += expected[i];
    }
    msg += "}, found " + (found.empty() ? std::string("end of input") : "'" + found + "'");
    return msg;
  }

  std::size_t position_;
  std::vector<std::string> expected_;
  std::string found_;
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_space(text[i])) ++i;
      std::size_t j = i;
      while (j < text.size() && !is_space(text[j])) ++j;
      if (j > i) tokens_.emplace_back(text.substr(i, j - i));
      i = j;
    }
  }

  Program program() {
    expect("DEF");
    expect("run");
    expect("m(");
    Stmt body = block("m)");
    if (pos_ != tokens_.size()) fail({"end of input"});
    return Program{std::move(body)};
  }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

  std::string_view peek() const { return pos_ < tokens_.size() ? tokens_[pos_] : std::string_view{}; }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw SyntaxError(pos_, std::move(expected), std::string(peek()));
  }

  void expect(std::string_view tok) {
    if (peek() != tok) fail({std::string(tok)});
    ++pos_;
  }

  static std::vector<std::string> statement_starts() {
    std::vector<std::string> v = {"WHILE", "IF", "IFELSE", "REPEAT"};
    for (auto n : kActionNames) v.emplace_back(n);
    return v;
  }

  // One or more statements terminated by `close`.
  Stmt block(std::string_view close) {
    std::vector<Stmt> stmts;
    stmts.push_back(statement());
    while (peek() != close) {
      if (pos_ >= tokens_.size()) {
        auto exp = statement_starts();
        exp.emplace_back(close);
        fail(std::move(exp));
      }
      stmts.push_back(statement());
    }
    ++pos_;
    return Stmt::chain(stmts);
  }

  Cond condition() {
    expect("c(");
    Cond c;
    if (peek() == "not(") {
      ++pos_;
      c.negated = true;
      c.percept = percept();
      expect(")");
    } else {
      c.percept = percept();
    }
    expect("c)");
    return c;
  }

  Percept percept() {
    if (auto h = percept_from_string(peek())) {
      ++pos_;
      return *h;
    }
    std::vector<std::string> exp(kPerceptNames.begin(), kPerceptNames.end());
    fail(std::move(exp));
  }

  Stmt statement() {
    const std::string_view tok = peek();
    if (auto a = action_from_string(tok)) {
      ++pos_;
      return Stmt::act(*a);
    }
    if (tok == "WHILE") {
      ++pos_;
      Cond c = condition();
      expect("w(");
      return Stmt::while_loop(c, block("w)"));
    }
    if (tok == "IF") {
      ++pos_;
      Cond c = condition();
      expect("i(");
      return Stmt::if_then(c, block("i)"));
    }
    if (tok == "IFELSE") {
      ++pos_;
      Cond c = condition();
      expect("i(");
      Stmt then_body = block("i)");
      expect("ELSE");
      expect("e(");
      return Stmt::if_else(c, std::move(then_body), block("e)"));
    }
    if (tok == "REPEAT") {
      ++pos_;
      const std::string_view r = peek();
      int n = -1;
      if (r.size() > 2 && r.substr(0, 2) == "R=") {
        const char* begin = r.data() + 2;
        const char* end = r.data() + r.size();
        auto [ptr, ec] = std::from_chars(begin, end, n);
        if (ec != std::errc{} || ptr != end) n = -1;
      }
      if (n < 0 || n > kMaxRepeat) fail({"R=0..R=19"});
      ++pos_;
      expect("r(");
      return Stmt::repeat(n, block("r)"));
    }
    fail(statement_starts());
  }

  std::vector<std::string_view> tokens_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses canonical token text. Any amount of whitespace separates tokens.
inline Program parse(std::string_view text) { return detail::Parser(text).program(); }

// ---------------------------------------------------------------------------
// Structural measures and generation constraints

inline int depth(const Program& p) { return p.body.depth(); }
inline int chain_width(const Program& p) { return p.body.max_chain(); }
inline int token_length(const Program& p) { return p.tokens(); }

struct GenConstraints {
  int maxNestingDepth = 4;
  int maxChainPerBlock = 6;
  int maxTokenLength = 45;

  void validate() const {
    if (maxNestingDepth < 1 || maxChainPerBlock < 1 || maxTokenLength < 1)
      throw std::invalid_argument("generation constraints must all be >= 1");
  }
};

enum class ViolationKind { Depth, Chain, Length };

struct Violation {
  ViolationKind kind;
  int measured;
  int limit;
  friend bool operator==(const Violation&, const Violation&) = default;
};

inline std::vector<Violation> check_constraints(const Program& p, const GenConstraints& c) {
  std::vector<Violation> out;
  if (depth(p) > c.maxNestingDepth) out.push_back({ViolationKind::Depth, depth(p), c.maxNestingDepth});
  if (chain_width(p) > c.maxChainPerBlock)
    out.push_back({ViolationKind::Chain, chain_width(p), c.maxChainPerBlock});
  if (token_length(p) > c.maxTokenLength)
    out.push_back({ViolationKind::Length, token_length(p), c.maxTokenLength});
  return out;
}

inline bool satisfies(const Program& p, const GenConstraints& c) {
  return depth(p) <= c.maxNestingDepth && chain_width(p) <= c.maxChainPerBlock &&
         token_length(p) <= c.maxTokenLength;
}

// ---------------------------------------------------------------------------
// Probabilistic grammar

struct GrammarProbs {
  // Indexed by StmtKind: WHILE, IF, IFELSE, REPEAT, s;s, a
  std::array<double, kNumStmtKinds> stmt = {0.15, 0.08, 0.04, 0.03, 0.5, 0.2};
  // b := h, b := not( h )
  std::array<double, 2> cond = {0.9, 0.1};
  // Indexed by Percept
  std::array<double, kNumPercepts> percept = {0.5, 0.15, 0.15, 0.1, 0.1};
  // Indexed by Action: move, turnLeft, turnRight, putMarker, pickMarker
  std::array<double, kNumActions> action = {0.5, 0.15, 0.15, 0.1, 0.1};
  // n := 0..19 uniformly

  void validate() const {
    auto check = [](auto const& w, const char* what) {
      double s = 0.0;
      for (double x : w) {
        if (x < 0.0) throw std::invalid_argument(std::string("negative weight in ") + what);
        s += x;
      }
      if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument(std::string(what) + " weights must sum to 1");
    };
    check(stmt, "statement");
    check(cond, "condition");
    check(percept, "perception");
    check(action, "action");
  }
};

/// Expansion counters, fed by the generator when a pointer is supplied.
/// Counts include expansions of attempts that were later rejected.
struct SamplerStats {
  std::array<std::uint64_t, kNumStmtKinds> stmt{};
  std::array<std::uint64_t, 2> cond{};
  std::array<std::uint64_t, kNumPercepts> percept{};
  std::array<std::uint64_t, kNumActions> action{};
  std::array<std::uint64_t, kMaxRepeat + 1> count{};
  std::array<std::uint64_t, kNumStmtKinds> first{};  // rule chosen for the root s of each attempt
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
};

class SamplingBudgetExceeded : public std::runtime_error {
 public:
  explicit SamplingBudgetExceeded(std::size_t rejections)
      : std::runtime_error("sampling budget exceeded after " + std::to_string(rejections) +
                           " consecutive rejections"),
        rejections_(rejections) {}
  std::size_t rejections() const { return rejections_; }

 private:
  std::size_t rejections_;
};

inline constexpr std::size_t kDefaultMaxRejections = 10'000;

/// Grows subtrees from the grammar, top-down and left-to-right. A draw that
/// provably cannot satisfy the limits is abandoned as soon as that is known;
/// callers treat the abandoned draw as a rejection.
class Grower {
 public:
  Grower(Rng& rng, const GrammarProbs& probs, SamplerStats* stats = nullptr)
      : rng_(rng), probs_(probs), stats_(stats) {}

  /// Grows from nonterminal s. `depth` is the number of control-flow
  /// constructs enclosing the slot; `max_depth` caps the total; `tokens`
  /// is the number of tokens still available. Returns nullopt when a limit is
  /// exceeded mid-growth.
  std::optional<Stmt> stmt(int depth, int max_depth, int& tokens) {
    const auto k = static_cast<StmtKind>(rng_.weighted(probs_.stmt));
    if (stats_) {
      ++stats_->stmt[static_cast<int>(k)];
      if (at_root_) ++stats_->first[static_cast<int>(k)];
    }
    at_root_ = false;
    if (is_control(k) && depth + 1 > max_depth) return std::nullopt;
    switch (k) {
      case StmtKind::Act: {
        if ((tokens -= 1) < 0) return std::nullopt;
        return Stmt::act(action());
      }
      case StmtKind::Seq: {
        auto first = stmt(depth, max_depth, tokens);
        if (!first) return std::nullopt;
        auto second = stmt(depth, max_depth, tokens);
        if (!second) return std::nullopt;
        return Stmt::seq(std::move(*first), std::move(*second));
      }
      case StmtKind::Repeat: {
        if ((tokens -= 4) < 0) return std::nullopt;
        const int n = count();
        auto body = stmt(depth + 1, max_depth, tokens);
        if (!body) return std::nullopt;
        return Stmt::repeat(n, std::move(*body));
      }
      case StmtKind::While:
      case StmtKind::If: {
        if ((tokens -= 5) < 0) return std::nullopt;
        const Cond c = cond();
        if ((tokens -= c.tokens()) < 0) return std::nullopt;
        auto body = stmt(depth + 1, max_depth, tokens);
        if (!body) return std::nullopt;
        return k == StmtKind::While ? Stmt::while_loop(c, std::move(*body))
                                    : Stmt::if_then(c, std::move(*body));
      }
      case StmtKind::IfElse: {
        if ((tokens -= 8) < 0) return std::nullopt;
        const Cond c = cond();
        if ((tokens -= c.tokens()) < 0) return std::nullopt;
        auto then_body = stmt(depth + 1, max_depth, tokens);
        if (!then_body) return std::nullopt;
        auto else_body = stmt(depth + 1, max_depth, tokens);
        if (!else_body) return std::nullopt;
        return Stmt::if_else(c, std::move(*then_body), std::move(*else_body));
      }
    }
    return std::nullopt;
  }

  /// The next stmt() call expands the root of a fresh draw.
  void mark_root() { at_root_ = true; }

  Cond cond() {
    Cond c;
    const std::size_t form = rng_.weighted(probs_.cond);
    if (stats_) ++stats_->cond[form];
    c.negated = form == 1;
    c.percept = percept();
    return c;
  }

  Percept percept() {
    const std::size_t i = rng_.weighted(probs_.percept);
    if (stats_) ++stats_->percept[i];
    return static_cast<Percept>(i);
  }

  Action action() {
    const std::size_t i = rng_.weighted(probs_.action);
    if (stats_) ++stats_->action[i];
    return static_cast<Action>(i);
  }

  int count() {
    const int n = static_cast<int>(rng_.below(kMaxRepeat + 1));
    if (stats_) ++stats_->count[n];
    return n;
  }

 private:
  Rng& rng_;
  const GrammarProbs& probs_;
  SamplerStats* stats_;
  bool at_root_ = false;
};

/// Draws a program from the probabilistic grammar conditioned on `c` by
/// rejection. Throws SamplingBudgetExceeded after `max_rejections`
/// consecutive rejections.
inline Program sample_program(Rng& rng, const GrammarProbs& probs = {}, const GenConstraints& c = {},
                              SamplerStats* stats = nullptr,
                              std::size_t max_rejections = kDefaultMaxRejections) {
  Grower grow(rng, probs, stats);
  for (std::size_t rejected = 0; rejected < max_rejections; ++rejected) {
    if (stats) ++stats->attempts;
    int tokens = c.maxTokenLength - 4;
    grow.mark_root();
    auto body = grow.stmt(0, c.maxNestingDepth, tokens);
    if (!body) continue;
    Program p{std::move(*body)};
    if (satisfies(p, c)) {
      if (stats) ++stats->accepted;
      return p;
    }
  }
  throw SamplingBudgetExceeded(max_rejections);
}

}  // namespace karel
