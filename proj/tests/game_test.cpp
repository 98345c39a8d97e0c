#include <doctest.h>

#include <algorithm>
#include <set>

#include "ccsgame/game.hpp"
#include "support/oracles.hpp"

using namespace ccsgame;
using namespace ccsgame::game;

namespace {

constexpr int kArity = 4;

const presheaf::Presentation& pres() { return presheaf::presentation(kArity); }

// [2]|[2]: two 2-ary players on the same two channels
Position two_players_shared() {
  Position z;
  z.channels = 2;
  z.players = {Player{2, {0, 1}}, Player{2, {0, 1}}};
  return z;
}

std::string ckey(const Position& z) { return canonical_form(z).key; }

}  // namespace

TEST_CASE("seed shapes: fork, channel creation, synchronization") {
  LocalSeed fork = local_seed(pres(), MoveKind{MoveTag::Para, 2, 0, 0, 0});
  CHECK(fork.initial.players.size() == 1);
  CHECK(fork.final_pos.players.size() == 2);
  CHECK(fork.final_pos.players[0] == fork.final_pos.players[1]);
  CHECK(fork.initial.channels == 2);
  CHECK(fork.interface_channels == 2);

  LocalSeed nu = local_seed(pres(), MoveKind{MoveTag::Nu, 2, 0, 0, 0});
  CHECK(nu.initial == single_player(2));
  CHECK(nu.final_pos == single_player(3));

  LocalSeed tau = local_seed(pres(), MoveKind{MoveTag::Tau, 2, 1, 3, 3});
  REQUIRE(tau.initial.players.size() == 2);
  CHECK(tau.initial == tau.final_pos);
  CHECK(tau.initial.channels == 4);  // 3 + 2 - 1
  const Player& outp = tau.initial.players[0];
  const Player& inp = tau.initial.players[1];
  CHECK(outp.arity == 3);
  CHECK(inp.arity == 2);
  CHECK(outp.assign[2] == inp.assign[0]);  // shared: 3rd output port, 1st input port
}

TEST_CASE("seed presheaf legs are genuine cospans into the move representable") {
  for (MoveKind k : {MoveKind{MoveTag::Para, 2, 0, 0, 0}, MoveKind{MoveTag::Nu, 1, 0, 0, 0},
                     MoveKind{MoveTag::Tick, 2, 0, 0, 0}, MoveKind{MoveTag::In, 2, 1, 0, 0},
                     MoveKind{MoveTag::Tau, 2, 1, 2, 2}}) {
    LocalSeed seed = local_seed(pres(), k);
    CHECK(presheaf::check_presheaf(pres(), seed.mid));
    presheaf::FinPresheaf fin = to_presheaf(pres(), seed.final_pos);
    presheaf::FinPresheaf ini = to_presheaf(pres(), seed.initial);
    CHECK(presheaf::check_natural(pres(), fin, seed.mid, seed.leg_final));
    CHECK(presheaf::check_natural(pres(), ini, seed.mid, seed.leg_initial));
    CHECK(presheaf::is_mono(fin, seed.leg_final));
    CHECK(presheaf::is_mono(ini, seed.leg_initial));
  }
}

TEST_CASE("full and closed-world classification") {
  CHECK(is_full(MoveKind{MoveTag::Para, 2, 0, 0, 0}));
  CHECK(is_full(MoveKind{MoveTag::Tau, 1, 1, 1, 1}));
  CHECK(is_full(MoveKind{MoveTag::Tick, 0, 0, 0, 0}));
  CHECK_FALSE(is_full(MoveKind{MoveTag::ParaL, 3, 0, 0, 0}));
  CHECK_FALSE(is_full(MoveKind{MoveTag::ParaR, 1, 0, 0, 0}));

  CHECK(is_closed_world(MoveKind{MoveTag::Tick, 1, 0, 0, 0}));
  CHECK(is_closed_world(MoveKind{MoveTag::Para, 0, 0, 0, 0}));
  CHECK(is_closed_world(MoveKind{MoveTag::Nu, 1, 0, 0, 0}));
  CHECK(is_closed_world(MoveKind{MoveTag::Tau, 1, 1, 1, 1}));
  CHECK_FALSE(is_closed_world(MoveKind{MoveTag::In, 2, 1, 0, 0}));
  CHECK_FALSE(is_closed_world(MoveKind{MoveTag::Out, 2, 2, 0, 0}));
  CHECK_FALSE(is_closed_world(MoveKind{MoveTag::ParaL, 2, 0, 0, 0}));
}

TEST_CASE("instantiating the fork at its own seed reproduces the seed") {
  MoveKind k{MoveTag::Para, 2, 0, 0, 0};
  GlobalMove m = instantiate(k, single_player(2), Anchor{0, -1, -1}, kArity);
  LocalSeed seed = local_seed(pres(), k);
  CHECK(m.initial == seed.initial);
  CHECK(m.final_pos == seed.final_pos);
  CHECK(m.player_map[0][0] != m.player_map[0][1]);
  CHECK(m.player_map[0][1] != -1);
}

TEST_CASE("tick inside a larger position preserves the shape") {
  Position z = two_players_shared();
  GlobalMove m = instantiate(MoveKind{MoveTag::Tick, 2, 0, 0, 0}, z, Anchor{1, -1, -1}, kArity);
  CHECK(m.final_pos == z);
  CHECK(m.player_map[0] == std::array<int, 2>{0, -1});
  CHECK(m.player_map[1] == std::array<int, 2>{1, -1});
}

TEST_CASE("nu appends a fresh channel for the anchor only") {
  Position z = two_players_shared();
  GlobalMove m = instantiate(MoveKind{MoveTag::Nu, 2, 0, 0, 0}, z, Anchor{0, -1, -1}, kArity);
  CHECK(m.new_channel == 2);
  CHECK(m.final_pos.channels == 3);
  REQUIRE(m.final_pos.players.size() == 2);
  int avatar = m.player_map[0][0];
  int other = m.player_map[1][0];
  CHECK(m.final_pos.players[avatar].arity == 3);
  CHECK(m.final_pos.players[avatar].assign == std::vector<int>{0, 1, 2});
  CHECK(m.final_pos.players[other].arity == 2);
}

TEST_CASE("tau requires two distinct players sharing the channel") {
  Position z = two_players_shared();
  MoveKind tau{MoveTag::Tau, 2, 2, 2, 2};
  tau.m = 2;
  tau.j = 1;
  tau.n = 2;
  tau.i = 1;
  GlobalMove m = instantiate(tau, z, Anchor{-1, 0, 1}, kArity);
  CHECK(m.final_pos == z);

  CHECK_THROWS_AS(instantiate(tau, z, Anchor{-1, 0, 0}, kArity), std::invalid_argument);
  Position split;  // no shared channel between the two players
  split.channels = 2;
  split.players = {Player{1, {0}}, Player{1, {1}}};
  CHECK_THROWS_AS(instantiate(MoveKind{MoveTag::Tau, 1, 1, 1, 1}, split, Anchor{-1, 0, 1}, kArity),
                  std::invalid_argument);
  CHECK_THROWS_AS(instantiate(tau, z, Anchor{-1, 0, 3}, kArity), std::invalid_argument);
}

TEST_CASE("anchor arity mismatches are rejected") {
  Position z;
  z.channels = 1;
  z.players = {Player{1, {0}}};
  CHECK_THROWS_AS(instantiate(MoveKind{MoveTag::Tick, 2, 0, 0, 0}, z, Anchor{0, -1, -1}, kArity),
                  std::invalid_argument);
  CHECK_THROWS_AS(instantiate(MoveKind{MoveTag::Para, 1, 0, 0, 0}, z, Anchor{5, -1, -1}, kArity),
                  std::invalid_argument);
}

TEST_CASE("the arity bound stops channel creation") {
  Position z = single_player(kArity);
  CHECK_THROWS_AS(instantiate(MoveKind{MoveTag::Nu, kArity, 0, 0, 0}, z, Anchor{0, -1, -1}, kArity),
                  MaxArityExceeded);
  EnabledMoves en = enabled_moves(z, MoveFilter::All, kArity);
  CHECK(en.truncated);
  for (const auto& m : en.moves) CHECK(m.kind.tag != MoveTag::Nu);
}

TEST_CASE("enabled moves on the shared two-player position") {
  Position z = two_players_shared();
  EnabledMoves en = enabled_moves(z, MoveFilter::FullOnly, kArity);
  CHECK_FALSE(en.truncated);
  int para = 0, tick = 0, nu = 0, in = 0, out = 0, tau = 0;
  for (const auto& m : en.moves) {
    switch (m.kind.tag) {
      case MoveTag::Para: para++; break;
      case MoveTag::Tick: tick++; break;
      case MoveTag::Nu: nu++; break;
      case MoveTag::In: in++; break;
      case MoveTag::Out: out++; break;
      case MoveTag::Tau: tau++; break;
      default: FAIL("fork half in full-only enumeration");
    }
  }
  CHECK(para == 2);
  CHECK(tick == 2);
  CHECK(nu == 2);
  CHECK(in == 4);   // two channels per player
  CHECK(out == 4);
  CHECK(tau == 4);  // two shared channels, two directions each
  CHECK(en.moves.size() == 18);
  // both synchronization directions are present
  bool fwd = false, bwd = false;
  for (const auto& m : en.moves)
    if (m.kind.tag == MoveTag::Tau) {
      fwd |= m.anchor.out_player == 0 && m.anchor.in_player == 1;
      bwd |= m.anchor.out_player == 1 && m.anchor.in_player == 0;
    }
  CHECK(fwd);
  CHECK(bwd);
}

TEST_CASE("enabled moves on degenerate positions") {
  Position interface_only;
  interface_only.channels = 2;
  CHECK(enabled_moves(interface_only, MoveFilter::All, kArity).moves.empty());

  EnabledMoves en = enabled_moves(single_player(0), MoveFilter::ClosedWorldOnly, kArity);
  std::set<MoveTag> tags;
  for (const auto& m : en.moves) tags.insert(m.kind.tag);
  CHECK(en.moves.size() == 3);
  CHECK(tags == std::set<MoveTag>{MoveTag::Para, MoveTag::Tick, MoveTag::Nu});
}

TEST_CASE("instantiation agrees with the raw presheaf pushout") {
  std::vector<Position> samples;
  samples.push_back(single_player(0));
  samples.push_back(single_player(2));
  samples.push_back(two_players_shared());
  Position mixed;  // a 2-ary, a 1-ary and a 0-ary player over three channels
  mixed.channels = 3;
  mixed.players = {Player{2, {0, 1}}, Player{1, {1}}, Player{0, {}}};
  samples.push_back(mixed);
  Position repeated;  // one player listening twice on the same channel
  repeated.channels = 1;
  repeated.players = {Player{2, {0, 0}}, Player{1, {0}}};
  samples.push_back(repeated);

  int checked = 0;
  for (const Position& z : samples) {
    for (const auto& m : enabled_moves(z, MoveFilter::All, kArity).moves) {
      Position oracle_final = oracles::pushout_instantiate_final(pres(), m.kind, z, m.anchor);
      CHECK(ckey(m.final_pos) == ckey(oracle_final));
      Position oracle_initial = oracles::pushout_instantiate_initial(pres(), m.kind, z, m.anchor);
      CHECK(ckey(oracle_initial) == ckey(z));
      CHECK(presheaf::check_presheaf(pres(), to_presheaf(pres(), m.final_pos)));
      checked++;
    }
  }
  CHECK(checked > 40);
}

TEST_CASE("composition demands matching endpoints") {
  Position z = single_player(2);
  Play play{z, {}};
  CHECK(play.current() == z);
  GlobalMove fork = instantiate(MoveKind{MoveTag::Para, 2, 0, 0, 0}, z, Anchor{0, -1, -1}, kArity);
  play = compose(std::move(play), fork);
  CHECK(play.current().players.size() == 2);

  GlobalMove wrong = instantiate(MoveKind{MoveTag::Tick, 2, 0, 0, 0}, z, Anchor{0, -1, -1}, kArity);
  CHECK_THROWS_AS(compose(play, wrong), std::invalid_argument);
}

TEST_CASE("disjoint moves commute up to canonical labeling") {
  Position z = two_players_shared();
  auto nu_at = [&](const Position& at, int player) {
    return instantiate(MoveKind{MoveTag::Nu, 2, 0, 0, 0}, at, Anchor{player, -1, -1}, kArity);
  };
  Play ab{z, {}};
  ab = compose(std::move(ab), nu_at(z, 0));
  ab = compose(std::move(ab), nu_at(ab.current(), 1));
  Play ba{z, {}};
  ba = compose(std::move(ba), nu_at(z, 1));
  ba = compose(std::move(ba), nu_at(ba.current(), 0));
  CHECK(ckey(ab.current()) == ckey(ba.current()));
  CHECK(ab.current() != ba.current());  // on the nose the channel order differs
}

TEST_CASE("success means a tick move occurred") {
  Position z = single_player(1);
  Play play{z, {}};
  CHECK_FALSE(is_successful(play));
  play = compose(std::move(play), instantiate(MoveKind{MoveTag::In, 1, 1, 0, 0}, z, Anchor{0, -1, -1}, kArity));
  CHECK_FALSE(is_successful(play));
  play = compose(std::move(play), instantiate(MoveKind{MoveTag::Tick, 1, 0, 0, 0}, play.current(),
                                              Anchor{0, -1, -1}, kArity));
  CHECK(is_successful(play));
}

TEST_CASE("views project a play onto one lineage") {
  Position z = single_player(2);
  Play play{z, {}};
  CHECK(view_of(play, 0) == ViewPath{2, {}});

  GlobalMove fork = instantiate(MoveKind{MoveTag::Para, 2, 0, 0, 0}, z, Anchor{0, -1, -1}, kArity);
  play = compose(std::move(play), fork);
  int left = fork.player_map[0][0], right = fork.player_map[0][1];
  CHECK(view_of(play, left) == ViewPath{2, {BasicMove{BasicMove::Tag::ParaL, 0}}});
  CHECK(view_of(play, right) == ViewPath{2, {BasicMove{BasicMove::Tag::ParaR, 0}}});

  // after the fork the left child receives a synchronization on channel 2
  MoveKind tau{MoveTag::Tau, 0, 0, 0, 0};
  tau.m = 2;
  tau.j = 2;
  tau.n = 2;
  tau.i = 2;
  GlobalMove sync = instantiate(tau, play.current(), Anchor{-1, right, left}, kArity);
  play = compose(std::move(play), sync);
  ViewPath lv = view_of(play, sync.player_map[static_cast<size_t>(left)][0]);
  REQUIRE(lv.moves.size() == 2);
  CHECK(lv.moves[0] == BasicMove{BasicMove::Tag::ParaL, 0});
  CHECK(lv.moves[1] == BasicMove{BasicMove::Tag::In, 2});
  ViewPath rv = view_of(play, sync.player_map[static_cast<size_t>(right)][0]);
  CHECK(rv.moves[1] == BasicMove{BasicMove::Tag::Out, 2});
}

TEST_CASE("uninvolved players keep their views across other moves") {
  Position z = two_players_shared();
  Play play{z, {}};
  GlobalMove m = instantiate(MoveKind{MoveTag::Tick, 2, 0, 0, 0}, z, Anchor{0, -1, -1}, kArity);
  play = compose(std::move(play), m);
  CHECK(view_of(play, m.player_map[0][0]).moves.size() == 1);
  CHECK(view_of(play, m.player_map[1][0]).moves.empty());
}

TEST_CASE("every view of a legal play is a legal view") {
  Position z = two_players_shared();
  // breadth-2 exploration of plays of length 2
  for (const auto& m1 : enabled_moves(z, MoveFilter::All, kArity).moves) {
    Play p1 = compose(Play{z, {}}, m1);
    for (const auto& m2 : enabled_moves(p1.current(), MoveFilter::All, kArity).moves) {
      Play p2 = compose(p1, m2);
      for (size_t pl = 0; pl < p2.current().players.size(); pl++) {
        ViewPath v = view_of(p2, static_cast<int>(pl));
        CHECK(valid_view(v));
        CHECK(arity_after(v, v.moves.size()) == p2.current().players[pl].arity);
      }
    }
  }
}

TEST_CASE("canonical labeling identifies isomorphic positions only") {
  Position a;
  a.channels = 2;
  a.players = {Player{2, {0, 1}}, Player{1, {1}}};
  Position b;  // channels renamed, players listed the other way round
  b.channels = 2;
  b.players = {Player{1, {0}}, Player{2, {1, 0}}};
  CHECK(canonical_form(a).key == canonical_form(b).key);

  Position c;  // same shape sizes, different wiring
  c.channels = 2;
  c.players = {Player{2, {0, 0}}, Player{1, {1}}};
  CHECK(canonical_form(a).key != canonical_form(c).key);

  Canonical ca = canonical_form(a);
  // player_perm and channel_perm reconstruct the canonical position
  for (size_t p = 0; p < ca.pos.players.size(); p++) {
    const Player& orig = a.players[static_cast<size_t>(ca.player_perm[p])];
    CHECK(ca.pos.players[p].arity == orig.arity);
  }

  // attachment tags distinguish otherwise-identical players
  Position d = two_players_shared();
  CHECK(canonical_form(d, {7, 7}).key != canonical_form(d, {7, 8}).key);
  CHECK(canonical_form(d, {8, 7}).key == canonical_form(d, {7, 8}).key);
}

TEST_CASE("positions round trip through presheaves up to iso") {
  Position mixed;
  mixed.channels = 3;
  mixed.players = {Player{1, {2}}, Player{2, {1, 0}}, Player{0, {}}};
  presheaf::FinPresheaf f = to_presheaf(pres(), mixed);
  CHECK(presheaf::check_presheaf(pres(), f));
  Position back = position_of_presheaf(pres(), f);
  CHECK(ckey(back) == ckey(mixed));
}

TEST_CASE("dot and json exports mention the pieces") {
  Position z = two_players_shared();
  std::string d = dot(z);
  CHECK(d.find("graph position") != std::string::npos);
  Play play{z, {}};
  play = compose(std::move(play),
                 instantiate(MoveKind{MoveTag::Tick, 2, 0, 0, 0}, z, Anchor{0, -1, -1}, kArity));
  presheaf::Json j = to_json(play);
  CHECK(j["moves"].size() == 1);
  CHECK(j["moves"][0]["kind"] == "tick(2)");
}
