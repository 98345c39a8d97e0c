#include <doctest.h>

#include <algorithm>

#include "ccsgame/strategy.hpp"
#include "support/oracles.hpp"

using namespace ccsgame;
using namespace ccsgame::strat;
using game::BasicMove;

namespace {

constexpr int kArity = 4;

StratId tr(StrategyStore& ss, ccs::ProcessStore& ps, const char* text) {
  auto [ctx, p] = ccs::parse_ccs(ps, text);
  return translate_ccs(ss, ps, ctx, p);
}

BasicMove in(int c) { return {BasicMove::Tag::In, c}; }
BasicMove out(int c) { return {BasicMove::Tag::Out, c}; }
BasicMove tick() { return {BasicMove::Tag::Tick, 0}; }
BasicMove nu() { return {BasicMove::Tag::Nu, 0}; }
BasicMove paral() { return {BasicMove::Tag::ParaL, 0}; }
BasicMove parar() { return {BasicMove::Tag::ParaR, 0}; }

}  // namespace

TEST_CASE("the basic move table is laid out canonically") {
  CHECK(basic_count(0) == 4);
  CHECK(basic_count(2) == 8);
  CHECK(basic_index(2, paral()) == 0);
  CHECK(basic_index(2, parar()) == 1);
  CHECK(basic_index(2, tick()) == 2);
  CHECK(basic_index(2, nu()) == 3);
  CHECK(basic_index(2, in(1)) == 4);
  CHECK(basic_index(2, out(1)) == 5);
  CHECK(basic_index(2, in(2)) == 6);
  CHECK(basic_index(2, out(2)) == 7);
  for (int b = 0; b < basic_count(3); b++) CHECK(basic_index(3, basic_at(3, b)) == b);
  CHECK(basic_result_arity(2, nu()) == 3);
  CHECK(basic_result_arity(2, in(2)) == 2);
  CHECK_THROWS_AS(basic_index(1, in(2)), std::out_of_range);
}

TEST_CASE("translating a guarded sum fills the guard entries") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  // a.P + a.Q + 'b.R with P = 0, Q = tick.0, R = a.0
  StratId s = tr(ss, ps, "[2] a1.0 + a1.tick.0 + 'a2.a1.0");
  REQUIRE(ss.parts(s).size() == 1);
  DefId d = ss.parts(s)[0];
  CHECK(ss.def_arity(d) == 2);

  StratId in1 = residual(ss, d, in(1));
  REQUIRE(ss.parts(in1).size() == 2);  // one state per a-branch, in branch order
  CHECK(struct_equal(ss, ss.strategy({ss.parts(in1)[0]}), tr(ss, ps, "[2] 0")));
  CHECK(struct_equal(ss, ss.strategy({ss.parts(in1)[1]}), tr(ss, ps, "[2] tick.0")));

  StratId out2 = residual(ss, d, out(2));
  CHECK(struct_equal(ss, out2, tr(ss, ps, "[2] a1.0")));

  for (BasicMove b : {paral(), parar(), tick(), nu(), in(2), out(1)})
    CHECK(ss.parts(residual(ss, d, b)).empty());
}

TEST_CASE("translating nu and nil") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  StratId s = tr(ss, ps, "[1] new b. a1.0");
  REQUIRE(ss.parts(s).size() == 1);
  DefId d = ss.parts(s)[0];
  StratId body = residual(ss, d, nu());
  CHECK(ss.strat_arity(body) == 2);
  CHECK(struct_equal(ss, body, tr(ss, ps, "[2] a1.0")));
  for (BasicMove b : {paral(), parar(), tick(), in(1), out(1)})
    CHECK(ss.parts(residual(ss, d, b)).empty());

  StratId zero = tr(ss, ps, "[1] 0");
  REQUIRE(ss.parts(zero).size() == 1);
  for (int b = 0; b < basic_count(1); b++)
    CHECK(ss.parts(ss.table(ss.parts(zero)[0])[static_cast<size_t>(b)]).empty());
}

TEST_CASE("a fork never populates guard entries") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  StratId s = tr(ss, ps, "[1] a1.0 | 'a1.tick.0");
  REQUIRE(ss.parts(s).size() == 1);
  DefId d = ss.parts(s)[0];
  CHECK(struct_equal(ss, residual(ss, d, paral()), tr(ss, ps, "[1] a1.0")));
  CHECK(struct_equal(ss, residual(ss, d, parar()), tr(ss, ps, "[1] 'a1.tick.0")));
  for (BasicMove b : {tick(), nu(), in(1), out(1)}) CHECK(ss.parts(residual(ss, d, b)).empty());
}

TEST_CASE("restriction picks one initial state") {
  StrategyStore ss;
  DefId d0 = ss.deadlock(1);
  DefId d1 = ss.definite(1, {ss.empty_strategy(), ss.empty_strategy(),
                             ss.strategy({ss.deadlock(1)}), ss.empty_strategy(),
                             ss.empty_strategy(), ss.empty_strategy()});
  StratId s = ss.strategy({d0, d1});
  CHECK(restrict_at(ss, s, 0) == d0);
  CHECK(restrict_at(ss, s, 1) == d1);
  CHECK_THROWS_AS(restrict_at(ss, ss.empty_strategy(), 0), std::out_of_range);
}

TEST_CASE("oplus flattens and interning dedups") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  StratId a = tr(ss, ps, "[1] a1.0");
  StratId b = tr(ss, ps, "[1] tick.0");
  StratId ab = ss.oplus({a, b});
  CHECK(ss.parts(ab).size() == 2);
  CHECK(ss.parts(ab)[0] == ss.parts(a)[0]);
  CHECK(ss.parts(ab)[1] == ss.parts(b)[0]);
  CHECK(ss.oplus({a, b}) == ab);          // same id on repeat
  CHECK(tr(ss, ps, "[1] a1.0") == a);     // translation is memoized by structure
  CHECK(ss.strat_arity(ss.empty_strategy()) == -1);
}

TEST_CASE("view counting on translated sums") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  StratId s = tr(ss, ps, "[1] a1.0");
  CHECK(value_on_view(ss, s, {1, {}}) == 1);
  CHECK(value_on_view(ss, s, {1, {in(1)}}) == 1);
  CHECK(value_on_view(ss, s, {1, {tick()}}) == 0);
  CHECK(value_on_view(ss, s, {1, {in(1), in(1)}}) == 0);

  StratId two = tr(ss, ps, "[1] a1.0 + a1.tick.0");
  CHECK(value_on_view(ss, two, {1, {}}) == 1);
  CHECK(value_on_view(ss, two, {1, {in(1)}}) == 2);
  CHECK(value_on_view(ss, two, {1, {in(1), tick()}}) == 1);
}

TEST_CASE("view counts decompose over initial states and residuals") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  const char* samples[] = {"[2] a1.0 + a1.tick.0 + 'a2.a1.0", "[1] a1.0 | 'a1.tick.0",
                           "[1] rec X. a1.X + tick.0"};
  game::ViewPath views[] = {{2, {in(1)}}, {1, {paral()}}, {1, {in(1)}}, {2, {out(2)}}};
  for (const char* text : samples) {
    StratId s = tr(ss, ps, text);
    for (const auto& v : views) {
      if (ss.strat_arity(s) != v.start_arity) continue;
      long total = 0;
      for (DefId d : ss.parts(s)) {
        StratId res = residual(ss, d, v.moves[0]);
        total += value_on_view(ss, res, {game::arity_after(v, 1), {}});
      }
      CHECK(value_on_view(ss, s, v) == total);
    }
  }
}

TEST_CASE("state restriction is a monotone projection and decoding matches") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  StratId s = tr(ss, ps, "[1] a1.0 + a1.(tick.0 + a1.0) + a1.tick.0");
  game::ViewPath v{1, {in(1), tick()}};
  long full = value_on_view(ss, s, v);
  CHECK(full == 2);  // branches 2 and 3 offer tick after a
  long mid = value_on_view(ss, s, {1, {in(1)}});
  CHECK(mid == 3);
  std::vector<long> down(static_cast<size_t>(full));
  for (long i = 0; i < full; i++) {
    down[static_cast<size_t>(i)] = restrict_state(ss, s, v, 2, 1, i);
    CHECK(down[static_cast<size_t>(i)] < mid);
    CHECK(restrict_state(ss, s, v, 2, 2, i) == i);
    CHECK(restrict_state(ss, s, v, 1, 0, down[static_cast<size_t>(i)]) == 0);
  }
  CHECK(std::is_sorted(down.begin(), down.end()));  // lexicographic layering

  // decoding a state leaves the player with the continuation prestrategy
  DefId after = decode_state(ss, s, {1, {in(1)}}, 0);
  CHECK(struct_equal(ss, ss.strategy({after}), tr(ss, ps, "[1] 0")));
  DefId after1 = decode_state(ss, s, {1, {in(1)}}, 1);
  CHECK(struct_equal(ss, ss.strategy({after1}), tr(ss, ps, "[1] tick.0 + a1.0")));
  CHECK_THROWS_AS(decode_state(ss, s, {1, {in(1)}}, 5), std::out_of_range);
}

TEST_CASE("recursive processes become cyclic strategy graphs") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  StratId loop = tr(ss, ps, "[1] rec X. a1.X");
  REQUIRE(ss.parts(loop).size() == 1);
  StratId back = residual(ss, ss.parts(loop)[0], in(1));
  CHECK(back == loop);  // the cycle closes on the same node

  // unfolding equality: one-step and two-step loops have the same tree
  StratId loop2 = tr(ss, ps, "[1] rec X. a1.a1.X");
  CHECK(struct_equal(ss, loop, loop2));
  CHECK_FALSE(struct_equal(ss, loop, tr(ss, ps, "[1] rec X. a1.(a1.X + tick.0)")));
  // view counting walks the cycle without diverging
  CHECK(value_on_view(ss, loop, {1, {in(1), in(1), in(1)}}) == 1);
}

TEST_CASE("theta builds the fork and guarded-sum term") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  auto [ctx, p] = ccs::parse_ccs(ps, "[2] a1.0 | 'a2.0");
  TermId t = theta(ss, ps, ctx, p);
  REQUIRE(ss.is_fork(t));
  CHECK(ss.term_arity(t) == 2);
  TermId l = ss.fork_left(t), r = ss.fork_right(t);
  REQUIRE_FALSE(ss.is_fork(l));
  REQUIRE(ss.branches(l).size() == 1);
  CHECK(ss.branches(l)[0].first == Guard{Guard::Kind::In, 1});
  CHECK(ss.branches(r)[0].first == Guard{Guard::Kind::Out, 2});
  CHECK(ss.branches(ss.branches(l)[0].second).empty());

  auto [c2, nil] = ccs::parse_ccs(ps, "[0] 0");
  TermId tz = theta(ss, ps, c2, nil);
  CHECK_FALSE(ss.is_fork(tz));
  CHECK(ss.branches(tz).empty());

  auto [c3, pnu] = ccs::parse_ccs(ps, "[0] new a. a1.0");
  TermId tn = theta(ss, ps, c3, pnu);
  REQUIRE(ss.branches(tn).size() == 1);
  CHECK(ss.branches(tn)[0].first == Guard{Guard::Kind::Nu, 0});
  CHECK(ss.term_arity(ss.branches(tn)[0].second) == 1);
}

TEST_CASE("interpretation of theta agrees with the direct translation") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  const char* samples[] = {
      "[0] 0",
      "[1] a1.0 + a1.tick.0",
      "[2] a1.0 | 'a2.0",
      "[0] new a. (a1.0 | 'a1.tick.0)",
      "[1] rec X. a1.X + tick.0",
      "[2] (a1.0 | 'a2.0) | tick.0",
  };
  for (const char* text : samples) {
    auto [ctx, p] = ccs::parse_ccs(ps, text);
    StratId direct = translate_ccs(ss, ps, ctx, p);
    StratId via_terms = interpret_term(ss, theta(ss, ps, ctx, p));
    CHECK(struct_equal(ss, direct, via_terms));
  }
}

TEST_CASE("interpret is stable and the swapped variant differs on asymmetric forks") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  auto [ctx, p] = ccs::parse_ccs(ps, "[2] a1.0 | 'a2.0");
  TermId t = theta(ss, ps, ctx, p);
  CHECK(ss.interpret(t) == ss.interpret(t));
  StratId plain = ss.interpret(t);
  StratId swapped = ss.interpret_swapped(t);
  CHECK_FALSE(struct_equal(ss, plain, swapped));
  DefId d = ss.parts(swapped)[0];
  CHECK(struct_equal(ss, residual(ss, d, paral()), tr(ss, ps, "[2] 'a2.0")));
}

TEST_CASE("pairing families over a channel interface") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  StrategyFamily left{game::single_player(1), {tr(ss, ps, "[1] a1.0")}};
  StrategyFamily right{game::single_player(1), {tr(ss, ps, "[1] 'a1.0")}};
  ChannelGlue glue;
  glue.interface_channels = 1;
  glue.into_left = {0};
  glue.into_right = {0};
  GluedFamily g = pair(left, right, glue);
  CHECK(g.family.pos.channels == 1);
  REQUIRE(g.family.pos.players.size() == 2);
  CHECK(g.family.components[0] == left.components[0]);  // left players first
  CHECK(g.family.components[1] == right.components[0]);
  CHECK(g.left_chan == std::vector<int>{0});
  CHECK(g.right_chan == std::vector<int>{0});

  // gluing against a player-free extension only adds channels
  StrategyFamily ext{game::Position{2, {}}, {}};
  ChannelGlue glue2;
  glue2.interface_channels = 1;
  glue2.into_left = {0};
  glue2.into_right = {1};
  GluedFamily g2 = pair(left, ext, glue2);
  CHECK(g2.family.pos.channels == 2);
  CHECK(g2.family.pos.players.size() == 1);
  CHECK(g2.family.components == left.components);

  ChannelGlue bad = glue;
  bad.into_right = {5};
  CHECK_THROWS_AS(pair(left, right, bad), std::invalid_argument);
  StrategyFamily mismatched{game::single_player(1), {}};
  CHECK_THROWS_AS(pair(mismatched, right, glue), std::invalid_argument);
}

namespace {

game::Play fork_play(int arity) {
  game::Position z = game::single_player(arity);
  game::GlobalMove fork = game::instantiate(game::MoveKind{game::MoveTag::Para, arity, 0, 0, 0}, z,
                                            game::Anchor{0, -1, -1}, kArity);
  return game::compose(game::Play{z, {}}, fork);
}

}  // namespace

TEST_CASE("the trace forest mirrors lineages") {
  game::Play play = fork_play(2);
  TraceForest forest = trace_forest(play);
  REQUIRE(forest.nodes.size() == 3);  // the pre-fork view plus both children
  CHECK(forest.nodes[0].view.moves.empty());
  CHECK(forest.nodes[0].parent == -1);
  CHECK(forest.nodes[1].parent == 0);
  CHECK(forest.nodes[2].parent == 0);
  CHECK(forest.final_nodes.size() == 2);
  CHECK(forest.node_of(0, {game::BasicMove{game::BasicMove::Tag::ParaL, 0}}) >= 1);

  // appending a move extends the forest without reordering existing nodes
  game::GlobalMove tick_move =
      game::instantiate(game::MoveKind{game::MoveTag::Tick, 2, 0, 0, 0}, play.current(),
                        game::Anchor{0, -1, -1}, kArity);
  game::Play longer = game::compose(play, tick_move);
  TraceForest f2 = trace_forest(longer);
  REQUIRE(f2.nodes.size() == 4);
  for (size_t k = 0; k < forest.nodes.size(); k++) {
    CHECK(f2.nodes[k].root == forest.nodes[k].root);
    CHECK(f2.nodes[k].view == forest.nodes[k].view);
  }
}

TEST_CASE("extension on the identity play of a definite family") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  StrategyFamily f{game::single_player(1), {tr(ss, ps, "[1] a1.0")}};
  game::Play idp{f.pos, {}};
  ExtendResult r = extend(ss, f, idp);
  REQUIRE(r.elements.size() == 1);
  CHECK(r.elements[0] == std::vector<long>{0});
}

TEST_CASE("extension across a fork multiplies the children's states") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  // a hand-built fork whose left child has two initial states
  StratId sl = ss.oplus({tr(ss, ps, "[1] a1.0"), tr(ss, ps, "[1] tick.0")});
  StratId sr = tr(ss, ps, "[1] 'a1.0");
  StratId e = ss.empty_strategy();
  DefId forkd = ss.definite(1, {sl, sr, e, e, e, e});
  StrategyFamily f{game::single_player(1), {ss.strategy({forkd})}};
  game::Play play = fork_play(1);
  ExtendResult r = extend(ss, f, play);
  // views: the empty view (1 state), paraL (2 states), paraR (1 state)
  CHECK(r.elements.size() == 2);
  CHECK(r.elements == oracles::brute_extend(ss, f, play));
}

TEST_CASE("independent lineages impose no cross constraints") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  StratId l = tr(ss, ps, "[1] 'a1.0 + 'a1.tick.0");
  StratId r = tr(ss, ps, "[1] 'a1.0 + 'a1.tick.0 + 'a1.a1.0");
  game::Position z;
  z.channels = 1;
  z.players = {game::Player{1, {0}}, game::Player{1, {0}}};
  StrategyFamily f{z, {l, r}};
  game::Play play{z, {}};
  auto outm = [&](const game::Position& at, int player) {
    return game::instantiate(game::MoveKind{game::MoveTag::Out, 1, 1, 0, 0}, at,
                             game::Anchor{player, -1, -1}, kArity);
  };
  play = game::compose(std::move(play), outm(z, 0));
  play = game::compose(std::move(play), outm(play.current(), 1));
  ExtendResult got = extend(ss, f, play);
  CHECK(got.elements.size() == 2 * 3);
  CHECK(got.elements == oracles::brute_extend(ss, f, play));
}

TEST_CASE("extension elements restrict to elements of every prefix") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  StratId s = tr(ss, ps, "[1] (a1.0 + tick.0) | ('a1.0 + 'a1.tick.0)");
  StrategyFamily f{game::single_player(1), {s}};
  game::Play play = fork_play(1);
  game::Position cur = play.current();
  game::MoveKind tau{game::MoveTag::Tau, 0, 0, 0, 0};
  tau.m = 1;
  tau.j = 1;
  tau.n = 1;
  tau.i = 1;
  game::Play longer =
      game::compose(play, game::instantiate(tau, cur, game::Anchor{-1, 1, 0}, kArity));
  ExtendResult big = extend(ss, f, longer);
  ExtendResult small = extend(ss, f, play);
  CHECK_FALSE(big.elements.empty());
  for (const auto& e : big.elements) {
    std::vector<long> cut(e.begin(), e.begin() + static_cast<long>(small.forest.nodes.size()));
    CHECK(std::find(small.elements.begin(), small.elements.end(), cut) != small.elements.end());
  }
  CHECK(big.elements == oracles::brute_extend(ss, f, longer));
}

TEST_CASE("dumps show tables and cycles") {
  StrategyStore ss;
  ccs::ProcessStore ps;
  std::string d = dump(ss, tr(ss, ps, "[1] a1.0 + tick.0"));
  CHECK(d.find("in1") != std::string::npos);
  CHECK(d.find("tick") != std::string::npos);
  CHECK(d.find("⊕[") != std::string::npos);
  std::string loop = dump(ss, tr(ss, ps, "[1] rec X. a1.X"));
  CHECK(loop.find("@0=") != std::string::npos);
  CHECK(loop.rfind("@0") > loop.find("@0="));

  ccs::Json j = strategy_json(ss, tr(ss, ps, "[1] a1.0"));
  CHECK_FALSE(j.is_null());
}
