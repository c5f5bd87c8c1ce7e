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


#include <gtest/gtest.h>

#include <map>

#include "karel/mutation.hpp"

namespace karel {
namespace {

TEST(MutationNodes, PreorderSlotCounts) {
  // root, IfElse, its condition, Act, Seq, Act, Act
  const Program p = parse("DEF run m( IFELSE c( markersPresent c) i( move i) ELSE e( turnLeft putMarker e) m)");
  EXPECT_EQ(mutation_nodes(p), (std::vector<int>{1, 3, 1, 1, 2, 1, 1}));
  EXPECT_EQ(mutation_nodes(parse("DEF run m( move m)")), (std::vector<int>{1, 1}));
  EXPECT_EQ(mutation_nodes(parse("DEF run m( REPEAT R=2 r( move r) m)")), (std::vector<int>{1, 2, 1}));
}

TEST(Mutate, StaysInsideTheSpace) {
  Rng rng(1);
  const GenConstraints c;
  int changed = 0;
  for (int i = 0; i < 2000; ++i) {
    const Program p = sample_program(rng);
    for (int j = 0; j < 5; ++j) {
      const Program q = mutate(p, rng);
      ASSERT_TRUE(satisfies(q, c)) << print(q);
      ASSERT_EQ(print(parse(print(q))), print(q));
      if (!(q == p)) ++changed;
    }
  }
  EXPECT_GT(changed, 6000);
}

TEST(Mutate, CanReturnTheSameProgram) {
  // One action: 1/2 chance of the Act node, then 1/2 of drawing move again.
  const Program p = parse("DEF run m( move m)");
  Rng rng(2);
  int same = 0;
  for (int i = 0; i < 1000; ++i) {
    const Program q = mutate(p, rng);
    ASSERT_TRUE(satisfies(q, {}));
    if (q == p) ++same;
  }
  EXPECT_GT(same, 150);
  EXPECT_LT(same, 600);
}

TEST(Mutate, SmallProgramCoverage) {
  const Program p = parse("DEF run m( WHILE c( frontIsClear c) w( move w) m)");
  Rng rng(3);
  std::map<std::string, int> seen;
  for (int i = 0; i < 1000; ++i) ++seen[print(mutate(p, rng))];
  EXPECT_GT(seen.size(), 20u);
  // Changing only the percept keeps the loop shape.
  EXPECT_GT(seen.count("DEF run m( WHILE c( leftIsClear c) w( move w) m)"), 0u);
  EXPECT_GT(seen.count("DEF run m( WHILE c( frontIsClear c) w( turnLeft w) m)"), 0u);
}

TEST(Mutate, LocalEditKeepsTheRest) {
  const Program p = parse("DEF run m( REPEAT R=4 r( move r) turnLeft m)");
  // Node 4 is the trailing Act (root, Seq, Repeat, Act, Act).
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto q = mutate_at(p, {4, 0}, rng);
    ASSERT_TRUE(q.has_value());
    EXPECT_EQ(print(*q).rfind("DEF run m( REPEAT R=4 r( move r) ", 0), 0u) << print(*q);
  }
  for (int i = 0; i < 50; ++i) {
    const auto q = mutate_at(p, {2, 0}, rng);
    ASSERT_TRUE(q.has_value());
    EXPECT_EQ(q->body.first().body(), p.body.first().body());
    EXPECT_EQ(print(q->body.second()), "turnLeft");
  }
}

TEST(PickMutationPoint, UniformOverNodesThenSlots) {
  const Program p = parse("DEF run m( IFELSE c( markersPresent c) i( move i) ELSE e( turnLeft putMarker e) m)");
  const auto nodes = mutation_nodes(p);
  Rng rng(5);
  const int draws = 70000;
  std::map<std::pair<int, int>, int> hits;
  for (int i = 0; i < draws; ++i) {
    const MutationPoint m = pick_mutation_point(p, rng);
    ++hits[{m.node, m.slot}];
  }
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    for (int s = 0; s < nodes[n]; ++s) {
      const double expected = draws / static_cast<double>(nodes.size()) / nodes[n];
      const double got = hits[{static_cast<int>(n), s}];
      EXPECT_NEAR(got / expected, 1.0, 0.2) << n << "," << s;
    }
  }
  int total = 0;
  for (const auto& [k, v] : hits) total += v;
  EXPECT_EQ(total, draws);
}

TEST(Neighborhood, SizeAndDeterminism) {
  const Program p = parse("DEF run m( WHILE c( frontIsClear c) w( move w) putMarker m)");
  for (int K : {1, 10, 250}) {
    Rng a(6), b(6);
    const auto na = neighborhood(p, {K}, a);
    const auto nb = neighborhood(p, {K}, b);
    ASSERT_EQ(static_cast<int>(na.size()), K);
    for (int i = 0; i < K; ++i) EXPECT_EQ(na[static_cast<std::size_t>(i)], nb[static_cast<std::size_t>(i)]);
  }
  Rng rng(6);
  EXPECT_THROW(neighborhood(p, {0}, rng), std::invalid_argument);
}

TEST(IterateMutations, ZeroIsIdentity) {
  Rng rng(7);
  const Program p = sample_program(rng);
  EXPECT_EQ(iterate_mutations(p, 0, rng), p);
  EXPECT_THROW(iterate_mutations(p, -1, rng), std::invalid_argument);
  Rng a(8), b(8);
  EXPECT_EQ(iterate_mutations(p, 7, a), iterate_mutations(p, 7, b));
}

TEST(Mutate, TightConstraintsRespected) {
  GenConstraints c;
  c.maxNestingDepth = 1;
  c.maxChainPerBlock = 2;
  c.maxTokenLength = 14;
  Rng rng(9);
  const Program p = sample_program(rng, {}, c);
  Program cur = p;
  for (int i = 0; i < 500; ++i) {
    cur = mutate(cur, rng, {}, c);
    ASSERT_TRUE(satisfies(cur, c)) << print(cur);
  }
}

}  // namespace
}  // namespace karel
