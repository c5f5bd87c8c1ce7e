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

// Neighborhood of a program: regrow one child slot of one AST node.
//
// Mutation nodes are visited in preorder: the program root first, then every
// statement, with a statement's condition node right after the statement.
//
//   node        slots
//   root        body (s)
//   While, If   cond (b), body (s)
//   IfElse      cond (b), then (s), else (s)
//   Repeat      count (n), body (s)
//   Seq         first (s), second (s)
//   Act         action (a)
//   condition   percept (h)

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "karel/dsl.hpp"
#include "karel/rng.hpp"

namespace karel {

struct NeighborhoodParams {
  int K = 250;
  std::size_t maxRejections = kDefaultMaxRejections;

  void validate() const {
    if (K < 1) throw std::invalid_argument("neighborhood size K must be >= 1");
  }
};

enum class SlotKind : std::uint8_t { Stmt, Cond, Percept, Count, Action };

struct MutationPoint {
  int node = 0;
  int slot = 0;
  friend bool operator==(const MutationPoint&, const MutationPoint&) = default;
};

inline int slot_count(StmtKind k) {
  switch (k) {
    case StmtKind::IfElse: return 3;
    case StmtKind::Act: return 1;
    default: return 2;
  }
}

inline SlotKind slot_kind(StmtKind k, int slot) {
  switch (k) {
    case StmtKind::While:
    case StmtKind::If:
    case StmtKind::IfElse: return slot == 0 ? SlotKind::Cond : SlotKind::Stmt;
    case StmtKind::Repeat: return slot == 0 ? SlotKind::Count : SlotKind::Stmt;
    case StmtKind::Seq: return SlotKind::Stmt;
    case StmtKind::Act: return SlotKind::Action;
  }
  return SlotKind::Stmt;
}

namespace detail {

inline int count_nodes(const Stmt& s) {
  switch (s.kind()) {
    case StmtKind::Act: return 1;
    case StmtKind::Seq: return 1 + count_nodes(s.first()) + count_nodes(s.second());
    case StmtKind::Repeat: return 1 + count_nodes(s.body());
    case StmtKind::While:
    case StmtKind::If: return 2 + count_nodes(s.body());
    case StmtKind::IfElse: return 2 + count_nodes(s.body()) + count_nodes(s.else_body());
  }
  return 1;
}

inline void collect_slot_counts(const Stmt& s, std::vector<int>& out) {
  out.push_back(slot_count(s.kind()));
  if (has_cond(s.kind())) out.push_back(1);
  switch (s.kind()) {
    case StmtKind::Act: break;
    case StmtKind::Seq:
      collect_slot_counts(s.first(), out);
      collect_slot_counts(s.second(), out);
      break;
    case StmtKind::IfElse:
      collect_slot_counts(s.body(), out);
      collect_slot_counts(s.else_body(), out);
      break;
    default:
      collect_slot_counts(s.body(), out);
  }
}

// Rebuilds the path to one mutation point, regrowing the chosen slot.
class Rewriter {
 public:
  Rewriter(Grower& grow, MutationPoint at, const GenConstraints& c, int program_tokens)
      : grow_(grow), at_(at), c_(c), program_tokens_(program_tokens) {}

  std::optional<Stmt> root(const Stmt& body) {
    if (at_.node == 0) return regrow(body, 0);
    next_ = 1;
    return visit(body, 0);
  }

 private:
  std::optional<Stmt> regrow(const Stmt& old, int depth) {
    int tokens = c_.maxTokenLength - (program_tokens_ - old.tokens());
    return grow_.stmt(depth, c_.maxNestingDepth, tokens);
  }

  // `depth` counts control constructs enclosing `s`.
  std::optional<Stmt> visit(const Stmt& s, int depth) {
    const int self = next_++;
    const int cond_id = has_cond(s.kind()) ? next_++ : -1;
    const int inner = depth + (is_control(s.kind()) ? 1 : 0);

    if (self == at_.node) return regrow_slot(s, depth, inner);
    if (cond_id == at_.node) {
      Cond c = s.cond();
      c.percept = grow_.percept();
      return with_cond(s, c);
    }

    switch (s.kind()) {
      case StmtKind::Act:
        return s;
      case StmtKind::Seq: {
        const int span = count_nodes(s.first());
        if (at_.node < next_ + span) {
          auto a = visit(s.first(), depth);
          if (!a) return std::nullopt;
          return Stmt::seq(std::move(*a), s.second());
        }
        next_ += span;
        auto b = visit(s.second(), depth);
        if (!b) return std::nullopt;
        return Stmt::seq(s.first(), std::move(*b));
      }
      case StmtKind::IfElse: {
        const int span = count_nodes(s.body());
        if (at_.node < next_ + span) {
          auto a = visit(s.body(), inner);
          if (!a) return std::nullopt;
          return Stmt::if_else(s.cond(), std::move(*a), s.else_body());
        }
        next_ += span;
        auto b = visit(s.else_body(), inner);
        if (!b) return std::nullopt;
        return Stmt::if_else(s.cond(), s.body(), std::move(*b));
      }
      default: {
        auto a = visit(s.body(), inner);
        if (!a) return std::nullopt;
        return with_body(s, std::move(*a));
      }
    }
  }

  std::optional<Stmt> regrow_slot(const Stmt& s, int depth, int inner) {
    switch (slot_kind(s.kind(), at_.slot)) {
      case SlotKind::Action:
        return Stmt::act(grow_.action());
      case SlotKind::Count:
        return Stmt::repeat(grow_.count(), s.body());
      case SlotKind::Percept:
        break;  // condition nodes are handled by the caller
      case SlotKind::Cond: {
        const Cond c = grow_.cond();
        if (program_tokens_ - s.cond().tokens() + c.tokens() > c_.maxTokenLength) return std::nullopt;
        return with_cond(s, c);
      }
      case SlotKind::Stmt: {
        if (s.kind() == StmtKind::Seq) {
          const Stmt& old = at_.slot == 0 ? s.first() : s.second();
          auto fresh = regrow(old, depth);
          if (!fresh) return std::nullopt;
          return at_.slot == 0 ? Stmt::seq(std::move(*fresh), s.second()) : Stmt::seq(s.first(), std::move(*fresh));
        }
        if (s.kind() == StmtKind::IfElse && at_.slot == 2) {
          auto fresh = regrow(s.else_body(), inner);
          if (!fresh) return std::nullopt;
          return Stmt::if_else(s.cond(), s.body(), std::move(*fresh));
        }
        auto fresh = regrow(s.body(), inner);
        if (!fresh) return std::nullopt;
        if (s.kind() == StmtKind::IfElse) return Stmt::if_else(s.cond(), std::move(*fresh), s.else_body());
        return with_body(s, std::move(*fresh));
      }
    }
    return std::nullopt;
  }

  static Stmt with_cond(const Stmt& s, Cond c) {
    switch (s.kind()) {
      case StmtKind::While: return Stmt::while_loop(c, s.body());
      case StmtKind::If: return Stmt::if_then(c, s.body());
      default: return Stmt::if_else(c, s.body(), s.else_body());
    }
  }

  static Stmt with_body(const Stmt& s, Stmt body) {
    switch (s.kind()) {
      case StmtKind::While: return Stmt::while_loop(s.cond(), std::move(body));
      case StmtKind::If: return Stmt::if_then(s.cond(), std::move(body));
      case StmtKind::Repeat: return Stmt::repeat(s.count(), std::move(body));
      default: throw std::logic_error("statement has no single body");
    }
  }

  Grower& grow_;
  MutationPoint at_;
  const GenConstraints& c_;
  int program_tokens_;
  int next_ = 0;
};

}  // namespace detail

/// Slot counts of the mutation nodes of `p`, in preorder.
inline std::vector<int> mutation_nodes(const Program& p) {
  std::vector<int> out = {1};
  detail::collect_slot_counts(p.body, out);
  return out;
}

/// Uniform node, then uniform slot within it.
inline MutationPoint pick_mutation_point(const Program& p, Rng& rng) {
  const auto nodes = mutation_nodes(p);
  MutationPoint m;
  m.node = static_cast<int>(rng.below(nodes.size()));
  m.slot = static_cast<int>(rng.below(static_cast<std::uint64_t>(nodes[static_cast<std::size_t>(m.node)])));
  return m;
}

/// One regrowth attempt at a given point; nullopt if the draw breaks `c`.
inline std::optional<Program> mutate_at(const Program& p, MutationPoint at, Rng& rng, const GrammarProbs& probs = {},
                                        const GenConstraints& c = {}) {
  Grower grow(rng, probs);
  detail::Rewriter rw(grow, at, c, p.tokens());
  auto body = rw.root(p.body);
  if (!body) return std::nullopt;
  Program q{std::move(*body)};
  if (!satisfies(q, c)) return std::nullopt;
  return q;
}

/// A random neighbor of `p`. A regrowth that breaks the constraints is thrown
/// away together with its mutation point. May return `p` itself.
inline Program mutate(const Program& p, Rng& rng, const GrammarProbs& probs = {}, const GenConstraints& c = {},
                      std::size_t max_rejections = kDefaultMaxRejections) {
  for (std::size_t i = 0; i < max_rejections; ++i) {
    const MutationPoint at = pick_mutation_point(p, rng);
    if (auto q = mutate_at(p, at, rng, probs, c)) return std::move(*q);
  }
  throw SamplingBudgetExceeded(max_rejections);
}

inline std::vector<Program> neighborhood(const Program& p, const NeighborhoodParams& params, Rng& rng,
                                         const GrammarProbs& probs = {}, const GenConstraints& c = {}) {
  params.validate();
  std::vector<Program> out;
  out.reserve(static_cast<std::size_t>(params.K));
  for (int i = 0; i < params.K; ++i) out.push_back(mutate(p, rng, probs, c, params.maxRejections));
  return out;
}

inline Program iterate_mutations(const Program& p, int n, Rng& rng, const GrammarProbs& probs = {},
                                 const GenConstraints& c = {}, std::size_t max_rejections = kDefaultMaxRejections) {
  if (n < 0) throw std::invalid_argument("mutation count must be >= 0");
  Program cur = p;
  for (int i = 0; i < n; ++i) cur = mutate(cur, rng, probs, c, max_rejections);
  return cur;
}

}  // namespace karel
