#include <doctest.h>

#include <algorithm>
#include <set>

#include "ccsgame/presheaf.hpp"

using namespace ccsgame::presheaf;

namespace {

int carrier(const ElementCategory& cat, const Presentation& pres, const BaseObject& ob) {
  ObId id = pres.object_id(ob);
  int n = 0;
  for (const auto& node : cat.nodes)
    if (node.ob == id) n++;
  return n;
}

}  // namespace

TEST_CASE("the presentation lists the expected generators per arity") {
  const Presentation& p1 = presentation(1);
  CHECK(p1.generator_id("s:1:1") >= 0);        // channel 1 of [1]
  CHECK(p1.generator_id("s:1:2") < 0);         // no second channel at arity 1
  CHECK(p1.generator_id("s:tick:1") >= 0);     // both legs into the tick move
  CHECK(p1.generator_id("t:tick:1") >= 0);
  CHECK(p1.generator_id("l:1") >= 0);
  CHECK(p1.generator_id("r:1") >= 0);
  CHECK(p1.generator_id("eps:tau:1:1:1:1") >= 0);
  CHECK(p1.generator_id("rho:tau:1:1:1:1") >= 0);
  CHECK(p1.object_id(ob_tau(2, 1, 1, 1)) < 0);  // arity 2 is out of range here

  const Presentation& p0 = presentation(0);
  CHECK(p0.generator_id("s:tick:0") >= 0);
  CHECK(p0.generator_id("t:tick:0") >= 0);
  CHECK(p0.generator_id("s:0:1") < 0);  // [0] has no channel edges
}

TEST_CASE("overlapping embeddings are identified by the equations") {
  const Presentation& pres = presentation(2);
  // both legs of the tick cospan restrict to the same channel map
  Morphism via_s = pres.normalize_keys(star(), {"s:2:1", "s:tick:2"});
  Morphism via_t = pres.normalize_keys(star(), {"s:2:1", "t:tick:2"});
  CHECK(via_s == via_t);
  // the two fork legs agree on their source player
  Morphism lt = pres.normalize_keys(player(2), {"t:paral:2", "l:2"});
  Morphism rt = pres.normalize_keys(player(2), {"t:parar:2", "r:2"});
  CHECK(lt == rt);
  Morphism ls = pres.normalize_keys(player(2), {"s:paral:2", "l:2"});
  Morphism rs = pres.normalize_keys(player(2), {"s:parar:2", "r:2"});
  CHECK(ls != rs);
  CHECK(ls != lt);
}

TEST_CASE("normalization is idempotent and composition associative") {
  const Presentation& pres = presentation(2);
  Morphism m = pres.normalize_keys(star(), {"s:2:2", "s:paral:2", "l:2"});
  const std::vector<GenId>& path = pres.repr_path(m);
  CHECK(pres.normalize(m.src, path) == m);

  // f: star -> [2], g: [2] -> paral:2, h: paral:2 -> para:2
  Morphism f = pres.normalize_keys(star(), {"s:2:1"});
  Morphism g = pres.normalize_keys(player(2), {"s:paral:2"});
  Morphism h = pres.normalize_keys(ob_paral(2), {"l:2"});
  CHECK(pres.then(pres.then(f, g), h) == pres.then(f, pres.then(g, h)));
  CHECK(pres.then(pres.identity(f.src), f) == f);
  CHECK(pres.then(f, pres.identity(f.dst)) == f);
}

TEST_CASE("hom set sizes match hand counts") {
  const Presentation& pres = presentation(3);
  ObId st = pres.require_object(star());
  CHECK(pres.hom_size(st, pres.require_object(player(3))) == 3);
  CHECK(pres.hom_size(pres.require_object(player(3)), pres.require_object(player(3))) == 1);
  CHECK(pres.hom_size(pres.require_object(player(2)), pres.require_object(ob_para(2))) == 3);
  // a tau object glues an m-ary and an n-ary player over one shared channel
  CHECK(pres.hom_size(st, pres.require_object(ob_tau(2, 1, 2, 2))) == 3);
  CHECK(pres.hom_size(st, pres.require_object(ob_tau(3, 3, 2, 1))) == 4);
  CHECK(pres.hom_size(st, pres.require_object(ob_tau(1, 1, 1, 1))) == 1);
}

TEST_CASE("representable element counts: a player") {
  const Presentation& pres = presentation(3);
  FinPresheaf y;
  ElementCategory cat = elements_of_representable(pres, player(3), &y);
  CHECK(y.size(pres.require_object(star())) == 3);
  CHECK(y.size(pres.require_object(player(3))) == 1);
  CHECK(carrier(cat, pres, star()) == 3);
  CHECK(carrier(cat, pres, player(3)) == 1);
  CHECK(cat.nodes.size() == 4);
  CHECK(check_presheaf(pres, y));
}

TEST_CASE("representable element counts: the fork move") {
  const Presentation& pres = presentation(2);
  FinPresheaf y;
  ElementCategory cat = elements_of_representable(pres, ob_para(2), &y);
  CHECK(y.size(pres.require_object(star())) == 2);
  CHECK(y.size(pres.require_object(player(2))) == 3);  // source, left and right targets
  CHECK(y.size(pres.require_object(ob_paral(2))) == 1);
  CHECK(y.size(pres.require_object(ob_parar(2))) == 1);
  CHECK(y.size(pres.require_object(ob_para(2))) == 1);
  CHECK(carrier(cat, pres, player(2)) == 3);
  CHECK(check_presheaf(pres, y));
  // the element category projects functorially: every arrow's endpoints exist
  for (const auto& a : cat.arrows) {
    CHECK(a.src_node >= 0);
    CHECK(a.src_node < static_cast<int>(cat.nodes.size()));
    CHECK(a.dst_node >= 0);
    CHECK(a.dst_node < static_cast<int>(cat.nodes.size()));
  }
}

TEST_CASE("representable of the channel object is a point") {
  const Presentation& pres = presentation(1);
  FinPresheaf y = representable(pres, star());
  CHECK(y.size(pres.require_object(star())) == 1);
  CHECK(y.support().size() == 1);
  CHECK(check_presheaf(pres, y));
}

TEST_CASE("check_presheaf rejects a broken fork action") {
  const Presentation& pres = presentation(1);
  FinPresheaf y = representable(pres, ob_para(1));
  REQUIRE(check_presheaf(pres, y));
  // redirect one of the two t-legs so t;l and t;r land on different players
  GenId tl = pres.generator_id("t:paral:1");
  GenId tr = pres.generator_id("t:parar:1");
  REQUIRE(tl >= 0);
  REQUIRE(tr >= 0);
  const std::vector<int>* l_act = y.action(tl);
  const std::vector<int>* r_act = y.action(tr);
  REQUIRE(l_act);
  REQUIRE(r_act);
  REQUIRE((*l_act)[0] == (*r_act)[0]);
  std::vector<int> broken = *r_act;
  broken[0] = ((*l_act)[0] + 1) % y.size(pres.require_object(player(1)));
  FinPresheaf bad = y;
  bad.set_action(tr, broken);
  CHECK_FALSE(check_presheaf(pres, bad));
}

TEST_CASE("check_presheaf accepts the empty presheaf") {
  const Presentation& pres = presentation(1);
  CHECK(check_presheaf(pres, FinPresheaf{}));
}

namespace {

// two channels, each mapped to the matching channel of [2]
PresheafMorphism channel_inclusion(const Presentation& pres) {
  PresheafMorphism m;
  m.comp[pres.require_object(star())] = {0, 1};
  return m;
}

FinPresheaf two_channels(const Presentation& pres) {
  FinPresheaf i;
  i.set_size(pres.require_object(star()), 2);
  return i;
}

}  // namespace

TEST_CASE("pushout of a player with itself over its channels") {
  const Presentation& pres = presentation(2);
  FinPresheaf i = two_channels(pres);
  FinPresheaf x = representable(pres, player(2));
  PresheafMorphism f = channel_inclusion(pres);
  PushoutResult po = pushout(pres, i, x, x, f, f);
  CHECK(po.apex.size(pres.require_object(star())) == 2);
  CHECK(po.apex.size(pres.require_object(player(2))) == 2);
  CHECK(check_presheaf(pres, po.apex));
  CHECK(is_mono(x, po.in_x));
  CHECK(is_mono(x, po.in_y));
  // square commutes on the interface
  ObId st = pres.require_object(star());
  for (int c = 0; c < 2; c++)
    CHECK(po.in_x.apply(st, f.apply(st, c)) == po.in_y.apply(st, f.apply(st, c)));
}

TEST_CASE("pushout along the identity is an isomorphism") {
  const Presentation& pres = presentation(2);
  FinPresheaf i = two_channels(pres);
  FinPresheaf x = representable(pres, player(2));
  PresheafMorphism f = channel_inclusion(pres);
  PresheafMorphism id;
  id.comp[pres.require_object(star())] = {0, 1};
  PushoutResult po = pushout(pres, i, x, i, f, id);
  CHECK(po.apex.size(pres.require_object(star())) == x.size(pres.require_object(star())));
  CHECK(po.apex.size(pres.require_object(player(2))) == 1);
  CHECK(is_mono(x, po.in_x));
}

TEST_CASE("pushout over the empty presheaf is a disjoint union") {
  const Presentation& pres = presentation(2);
  FinPresheaf empty;
  FinPresheaf x = representable(pres, player(1));
  FinPresheaf y = representable(pres, player(2));
  PushoutResult po = pushout(pres, empty, x, y, PresheafMorphism{}, PresheafMorphism{});
  CHECK(po.apex.size(pres.require_object(star())) == 3);
  CHECK(po.apex.size(pres.require_object(player(1))) == 1);
  CHECK(po.apex.size(pres.require_object(player(2))) == 1);
  CHECK(check_presheaf(pres, po.apex));
}

TEST_CASE("monomorphism detection") {
  const Presentation& pres = presentation(2);
  FinPresheaf i = two_channels(pres);
  PresheafMorphism id;
  id.comp[pres.require_object(star())] = {0, 1};
  CHECK(is_mono(i, id));
  PresheafMorphism collapse;
  collapse.comp[pres.require_object(star())] = {0, 0};
  CHECK_FALSE(is_mono(i, collapse));
  // a pushout injection of a player into the two-player position is monic
  FinPresheaf x = representable(pres, player(2));
  PresheafMorphism f = channel_inclusion(pres);
  PushoutResult po = pushout(pres, i, x, x, f, f);
  CHECK(is_mono(x, po.in_x));
}

TEST_CASE("naturality is actually checked") {
  const Presentation& pres = presentation(1);
  FinPresheaf x = representable(pres, player(1));
  FinPresheaf y = representable(pres, player(1));
  PresheafMorphism good;
  good.comp[pres.require_object(star())] = {0};
  good.comp[pres.require_object(player(1))] = {0};
  CHECK(check_natural(pres, x, y, good));

  // a two-channel player pair where swapping channels breaks the square
  FinPresheaf z;
  ObId st = pres.require_object(star());
  ObId pl = pres.require_object(player(1));
  z.set_size(st, 2);
  z.set_size(pl, 2);
  z.set_action(pres.generator_id("s:1:1"), {0, 1});
  REQUIRE(check_presheaf(pres, z));
  PresheafMorphism bad;
  bad.comp[st] = {0, 1};
  bad.comp[pl] = {1, 0};  // players swapped, channels fixed
  CHECK_FALSE(check_natural(pres, z, z, bad));
}

TEST_CASE("the mediating map out of a pushout is the universal one") {
  const Presentation& pres = presentation(2);
  FinPresheaf i = two_channels(pres);
  FinPresheaf x = representable(pres, player(2));
  PresheafMorphism f = channel_inclusion(pres);
  PushoutResult po = pushout(pres, i, x, x, f, f);

  // cocone: both copies of the player onto the single representable
  FinPresheaf w = representable(pres, player(2));
  PresheafMorphism p;
  p.comp[pres.require_object(star())] = {0, 1};
  p.comp[pres.require_object(player(2))] = {0};
  PresheafMorphism med = mediating(pres, i, x, x, f, f, po, p, p);
  ObId st = pres.require_object(star());
  ObId pl = pres.require_object(player(2));
  for (int e = 0; e < 2; e++) {
    CHECK(med.apply(st, po.in_x.apply(st, e)) == p.apply(st, e));
    CHECK(med.apply(st, po.in_y.apply(st, e)) == p.apply(st, e));
  }
  CHECK(med.apply(pl, po.in_x.apply(pl, 0)) == 0);
  CHECK(med.apply(pl, po.in_y.apply(pl, 0)) == 0);
  CHECK(check_natural(pres, po.apex, w, med));

  // a cocone that disagrees on the interface is rejected
  PresheafMorphism q = p;
  q.comp[st] = {1, 0};
  CHECK_THROWS_AS(mediating(pres, i, x, x, f, f, po, p, q), std::invalid_argument);
}

TEST_CASE("presheaf json round trip") {
  const Presentation& pres = presentation(2);
  FinPresheaf y = representable(pres, ob_para(2));
  Json j = to_json(pres, y);
  FinPresheaf back = presheaf_from_json(pres, j);
  CHECK(back == y);
  CHECK(j.contains("para:2"));
  CHECK(j["star"]["size"] == 2);
}
