#include "ccsgame/game.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace ccsgame::game {

using presheaf::BaseObject;
using presheaf::FinPresheaf;
using presheaf::PresheafMorphism;

Position single_player(int arity) {
  Position z;
  z.channels = arity;
  Player p;
  p.arity = arity;
  p.assign.resize(static_cast<size_t>(arity));
  for (int k = 0; k < arity; k++) p.assign[static_cast<size_t>(k)] = k;
  z.players.push_back(std::move(p));
  return z;
}

std::string to_string(const MoveKind& k) {
  switch (k.tag) {
    case MoveTag::In:
      return "in(" + std::to_string(k.n) + "," + std::to_string(k.i) + ")";
    case MoveTag::Out:
      return "out(" + std::to_string(k.n) + "," + std::to_string(k.i) + ")";
    case MoveTag::Nu:
      return "nu(" + std::to_string(k.n) + ")";
    case MoveTag::ParaL:
      return "paraL(" + std::to_string(k.n) + ")";
    case MoveTag::ParaR:
      return "paraR(" + std::to_string(k.n) + ")";
    case MoveTag::Para:
      return "para(" + std::to_string(k.n) + ")";
    case MoveTag::Tick:
      return "tick(" + std::to_string(k.n) + ")";
    case MoveTag::Tau:
      return "tau(" + std::to_string(k.m) + "," + std::to_string(k.j) + "," + std::to_string(k.n) +
             "," + std::to_string(k.i) + ")";
  }
  return "?";
}

BaseObject move_object(const MoveKind& k) {
  switch (k.tag) {
    case MoveTag::In:
      return presheaf::ob_in(k.n, k.i);
    case MoveTag::Out:
      return presheaf::ob_out(k.n, k.i);
    case MoveTag::Nu:
      return presheaf::ob_nu(k.n);
    case MoveTag::ParaL:
      return presheaf::ob_paral(k.n);
    case MoveTag::ParaR:
      return presheaf::ob_parar(k.n);
    case MoveTag::Para:
      return presheaf::ob_para(k.n);
    case MoveTag::Tick:
      return presheaf::ob_tick(k.n);
    case MoveTag::Tau:
      return presheaf::ob_tau(k.m, k.j, k.n, k.i);
  }
  throw std::logic_error("bad move kind");
}

bool is_full(const MoveKind& k) { return k.tag != MoveTag::ParaL && k.tag != MoveTag::ParaR; }

bool is_closed_world(const MoveKind& k) {
  switch (k.tag) {
    case MoveTag::Nu:
    case MoveTag::Tick:
    case MoveTag::Para:
    case MoveTag::Tau:
      return true;
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------
// Seeds

namespace {

// Position channels of a Tau seed: output ports first, then the fresh input
// ports; input port i aliases output port j.
std::vector<int> tau_in_assign(int m, int j, int n, int i) {
  std::vector<int> assign(static_cast<size_t>(n));
  int fresh = m;
  for (int k = 1; k <= n; k++)
    assign[static_cast<size_t>(k - 1)] = (k == i) ? (j - 1) : fresh++;
  return assign;
}

std::string skey(const std::string& prefix, const BaseObject& ob) {
  return prefix + ":" + presheaf::object_key(ob);
}

std::string chan_key(int n, int i) { return "s:" + std::to_string(n) + ":" + std::to_string(i); }

}  // namespace

LocalSeed local_seed(const Presentation& pres, const MoveKind& kind) {
  LocalSeed seed;
  seed.kind = kind;
  BaseObject mob = move_object(kind);
  seed.mid = presheaf::representable(pres, mob);

  auto cls = [&](const BaseObject& src, const std::vector<std::string>& keys) {
    return pres.normalize_keys(src, keys).cls;
  };
  auto star = presheaf::star();
  presheaf::ObId star_id = pres.require_object(star);

  switch (kind.tag) {
    case MoveTag::In:
    case MoveTag::Out:
    case MoveTag::Tick:
    case MoveTag::ParaL:
    case MoveTag::ParaR: {
      int n = kind.n;
      seed.initial = single_player(n);
      seed.final_pos = single_player(n);
      seed.interface_channels = n;
      presheaf::ObId pl = pres.require_object(presheaf::player(n));
      std::vector<int> chan_final(static_cast<size_t>(n)), chan_init(static_cast<size_t>(n));
      for (int k = 1; k <= n; k++) {
        chan_final[static_cast<size_t>(k - 1)] = cls(star, {chan_key(n, k), skey("s", mob)});
        chan_init[static_cast<size_t>(k - 1)] = cls(star, {chan_key(n, k), skey("t", mob)});
      }
      seed.leg_final.comp[star_id] = chan_final;
      seed.leg_initial.comp[star_id] = chan_init;
      seed.leg_final.comp[pl] = {cls(presheaf::player(n), {skey("s", mob)})};
      seed.leg_initial.comp[pl] = {cls(presheaf::player(n), {skey("t", mob)})};
      break;
    }
    case MoveTag::Nu: {
      int n = kind.n;
      seed.initial = single_player(n);
      seed.final_pos = single_player(n + 1);
      seed.interface_channels = n;
      presheaf::ObId pl_n = pres.require_object(presheaf::player(n));
      presheaf::ObId pl_n1 = pres.require_object(presheaf::player(n + 1));
      std::vector<int> chan_final(static_cast<size_t>(n + 1)), chan_init(static_cast<size_t>(n));
      for (int k = 1; k <= n + 1; k++)
        chan_final[static_cast<size_t>(k - 1)] = cls(star, {chan_key(n + 1, k), skey("s", mob)});
      for (int k = 1; k <= n; k++)
        chan_init[static_cast<size_t>(k - 1)] = cls(star, {chan_key(n, k), skey("t", mob)});
      seed.leg_final.comp[star_id] = chan_final;
      seed.leg_initial.comp[star_id] = chan_init;
      seed.leg_final.comp[pl_n1] = {cls(presheaf::player(n + 1), {skey("s", mob)})};
      seed.leg_initial.comp[pl_n] = {cls(presheaf::player(n), {skey("t", mob)})};
      break;
    }
    case MoveTag::Para: {
      int n = kind.n;
      seed.initial = single_player(n);
      seed.final_pos = single_player(n);
      Player right = seed.final_pos.players[0];
      seed.final_pos.players.push_back(right);
      seed.interface_channels = n;
      presheaf::ObId pl = pres.require_object(presheaf::player(n));
      std::string ln = "l:" + std::to_string(n), rn = "r:" + std::to_string(n);
      BaseObject pls = presheaf::ob_paral(n);
      BaseObject prs = presheaf::ob_parar(n);
      std::vector<int> chan_final(static_cast<size_t>(n)), chan_init(static_cast<size_t>(n));
      for (int k = 1; k <= n; k++) {
        chan_final[static_cast<size_t>(k - 1)] = cls(star, {chan_key(n, k), skey("s", pls), ln});
        chan_init[static_cast<size_t>(k - 1)] = cls(star, {chan_key(n, k), skey("t", pls), ln});
      }
      seed.leg_final.comp[star_id] = chan_final;
      seed.leg_initial.comp[star_id] = chan_init;
      seed.leg_final.comp[pl] = {cls(presheaf::player(n), {skey("s", pls), ln}),
                                 cls(presheaf::player(n), {skey("s", prs), rn})};
      seed.leg_initial.comp[pl] = {cls(presheaf::player(n), {skey("t", pls), ln})};
      break;
    }
    case MoveTag::Tau: {
      int m = kind.m, j = kind.j, n = kind.n, i = kind.i;
      Position z;
      z.channels = m + n - 1;
      Player outp;
      outp.arity = m;
      for (int k = 0; k < m; k++) outp.assign.push_back(k);
      Player inp;
      inp.arity = n;
      inp.assign = tau_in_assign(m, j, n, i);
      z.players = {outp, inp};
      seed.initial = z;
      seed.final_pos = z;
      seed.interface_channels = z.channels;
      BaseObject oout = presheaf::ob_out(m, j);
      BaseObject oin = presheaf::ob_in(n, i);
      std::string eps = skey("eps", mob), rho = skey("rho", mob);
      // star elements through either side agree on the shared channel
      std::vector<int> chan_final(static_cast<size_t>(z.channels)),
          chan_init(static_cast<size_t>(z.channels));
      for (int k = 1; k <= m; k++) {
        chan_final[static_cast<size_t>(k - 1)] = cls(star, {chan_key(m, k), skey("s", oout), eps});
        chan_init[static_cast<size_t>(k - 1)] = cls(star, {chan_key(m, k), skey("t", oout), eps});
      }
      for (int k = 1; k <= n; k++) {
        int c = inp.assign[static_cast<size_t>(k - 1)];
        if (k == i) continue;
        chan_final[static_cast<size_t>(c)] = cls(star, {chan_key(n, k), skey("s", oin), rho});
        chan_init[static_cast<size_t>(c)] = cls(star, {chan_key(n, k), skey("t", oin), rho});
      }
      seed.leg_final.comp[star_id] = chan_final;
      seed.leg_initial.comp[star_id] = chan_init;
      // player carriers; when m == n both players share one object
      std::map<presheaf::ObId, std::vector<int>> fin, ini;
      presheaf::ObId pm = pres.require_object(presheaf::player(m));
      presheaf::ObId pn = pres.require_object(presheaf::player(n));
      auto push_at = [](std::map<presheaf::ObId, std::vector<int>>& comp, presheaf::ObId ob,
                        int value) { comp[ob].push_back(value); };
      push_at(fin, pm, cls(presheaf::player(m), {skey("s", oout), eps}));
      push_at(ini, pm, cls(presheaf::player(m), {skey("t", oout), eps}));
      push_at(fin, pn, cls(presheaf::player(n), {skey("s", oin), rho}));
      push_at(ini, pn, cls(presheaf::player(n), {skey("t", oin), rho}));
      for (auto& [ob, v] : fin) seed.leg_final.comp[ob] = v;
      for (auto& [ob, v] : ini) seed.leg_initial.comp[ob] = v;
      break;
    }
  }
  return seed;
}

// ---------------------------------------------------------------------------
// Instantiation and enumeration

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

GlobalMove instantiate(const MoveKind& kind, const Position& z, const Anchor& anchor,
                       int max_arity) {
  GlobalMove mv;
  mv.kind = kind;
  mv.initial = z;
  mv.anchor = anchor;
  size_t np = z.players.size();
  auto identity_map = [&](Position& fin) {
    mv.player_map.assign(np, {-1, -1});
    for (size_t p = 0; p < np; p++) mv.player_map[p] = {static_cast<int>(p), -1};
    fin = z;
  };
  if (kind.tag == MoveTag::Tau) {
    require(anchor.out_player >= 0 && anchor.out_player < static_cast<int>(np), "bad tau anchor");
    require(anchor.in_player >= 0 && anchor.in_player < static_cast<int>(np), "bad tau anchor");
    require(anchor.out_player != anchor.in_player, "tau requires two distinct players");
    const Player& po = z.players[static_cast<size_t>(anchor.out_player)];
    const Player& pi = z.players[static_cast<size_t>(anchor.in_player)];
    require(po.arity == kind.m && pi.arity == kind.n, "tau anchor arity mismatch");
    require(kind.j >= 1 && kind.j <= kind.m && kind.i >= 1 && kind.i <= kind.n,
            "tau channel index out of range");
    require(po.assign[static_cast<size_t>(kind.j - 1)] == pi.assign[static_cast<size_t>(kind.i - 1)],
            "tau anchors do not share the channel");
    identity_map(mv.final_pos);
    return mv;
  }

  require(anchor.player >= 0 && anchor.player < static_cast<int>(np), "bad anchor");
  const Player& pl = z.players[static_cast<size_t>(anchor.player)];
  require(pl.arity == kind.n, "anchor arity mismatch");
  switch (kind.tag) {
    case MoveTag::In:
    case MoveTag::Out:
      require(kind.i >= 1 && kind.i <= kind.n, "channel index out of range");
      identity_map(mv.final_pos);
      break;
    case MoveTag::Tick:
    case MoveTag::ParaL:
    case MoveTag::ParaR:
      identity_map(mv.final_pos);
      break;
    case MoveTag::Nu: {
      if (kind.n + 1 > max_arity) throw MaxArityExceeded(kind.n + 1);
      identity_map(mv.final_pos);
      mv.final_pos.channels = z.channels + 1;
      mv.new_channel = z.channels;
      Player& avatar = mv.final_pos.players[static_cast<size_t>(anchor.player)];
      avatar.arity++;
      avatar.assign.push_back(mv.new_channel);
      break;
    }
    case MoveTag::Para: {
      mv.final_pos.channels = z.channels;
      mv.player_map.assign(np, {-1, -1});
      for (size_t p = 0; p < np; p++) {
        if (static_cast<int>(p) == anchor.player) {
          int at = static_cast<int>(mv.final_pos.players.size());
          mv.final_pos.players.push_back(pl);
          mv.final_pos.players.push_back(pl);
          mv.player_map[p] = {at, at + 1};
        } else {
          mv.player_map[p] = {static_cast<int>(mv.final_pos.players.size()), -1};
          mv.final_pos.players.push_back(z.players[p]);
        }
      }
      break;
    }
    default:
      throw std::logic_error("unreachable");
  }
  return mv;
}

EnabledMoves enabled_moves(const Position& z, MoveFilter filter, int max_arity) {
  EnabledMoves out;
  bool closed = filter == MoveFilter::ClosedWorldOnly;
  bool full_only = filter == MoveFilter::FullOnly;
  for (size_t p = 0; p < z.players.size(); p++) {
    int n = z.players[p].arity;
    Anchor a;
    a.player = static_cast<int>(p);
    auto add = [&](MoveKind k) { out.moves.push_back(instantiate(k, z, a, max_arity)); };
    if (!closed && !full_only) {
      add({MoveTag::ParaL, n, 0, 0, 0});
      add({MoveTag::ParaR, n, 0, 0, 0});
    }
    add({MoveTag::Para, n, 0, 0, 0});
    add({MoveTag::Tick, n, 0, 0, 0});
    if (n + 1 <= max_arity)
      add({MoveTag::Nu, n, 0, 0, 0});
    else
      out.truncated = true;
    if (!closed)
      for (int i = 1; i <= n; i++) {
        add({MoveTag::In, n, i, 0, 0});
        add({MoveTag::Out, n, i, 0, 0});
      }
  }
  for (size_t po = 0; po < z.players.size(); po++)
    for (size_t pi = 0; pi < z.players.size(); pi++) {
      if (po == pi) continue;
      const Player& outp = z.players[po];
      const Player& inp = z.players[pi];
      for (int j = 1; j <= outp.arity; j++)
        for (int i = 1; i <= inp.arity; i++) {
          if (outp.assign[static_cast<size_t>(j - 1)] != inp.assign[static_cast<size_t>(i - 1)])
            continue;
          Anchor a;
          a.out_player = static_cast<int>(po);
          a.in_player = static_cast<int>(pi);
          out.moves.push_back(
              instantiate({MoveTag::Tau, inp.arity, i, outp.arity, j}, z, a, max_arity));
        }
    }
  return out;
}

Play compose(Play play, GlobalMove move) {
  if (!(move.initial == play.current()))
    throw std::invalid_argument("move does not start at the play's final position");
  play.moves.push_back(std::move(move));
  return play;
}

bool is_successful(const Play& play) {
  for (const auto& m : play.moves)
    if (m.kind.tag == MoveTag::Tick) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Views

std::string to_string(const BasicMove& b) {
  switch (b.tag) {
    case BasicMove::Tag::ParaL:
      return "paraL";
    case BasicMove::Tag::ParaR:
      return "paraR";
    case BasicMove::Tag::Tick:
      return "tick";
    case BasicMove::Tag::Nu:
      return "nu";
    case BasicMove::Tag::In:
      return "in" + std::to_string(b.channel);
    case BasicMove::Tag::Out:
      return "out" + std::to_string(b.channel);
  }
  return "?";
}

int arity_after(const ViewPath& v, size_t len) {
  int a = v.start_arity;
  for (size_t k = 0; k < len && k < v.moves.size(); k++)
    if (v.moves[k].tag == BasicMove::Tag::Nu) a++;
  return a;
}

bool valid_view(const ViewPath& v) {
  int a = v.start_arity;
  if (a < 0) return false;
  for (const auto& b : v.moves) {
    switch (b.tag) {
      case BasicMove::Tag::Nu:
        a++;
        break;
      case BasicMove::Tag::In:
      case BasicMove::Tag::Out:
        if (b.channel < 1 || b.channel > a) return false;
        break;
      default:
        break;
    }
  }
  return true;
}

TracedView traced_view_of(const Play& play, int final_player) {
  int cur = final_player;
  if (cur < 0 || cur >= static_cast<int>(play.current().players.size()))
    throw std::out_of_range("no such player");
  std::vector<BasicMove> rev;
  for (size_t k = play.moves.size(); k-- > 0;) {
    const GlobalMove& mv = play.moves[k];
    int q = -1, slot = -1;
    for (size_t p = 0; p < mv.player_map.size(); p++) {
      if (mv.player_map[p][0] == cur) {
        q = static_cast<int>(p);
        slot = 0;
      } else if (mv.player_map[p][1] == cur) {
        q = static_cast<int>(p);
        slot = 1;
      }
    }
    if (q < 0) throw std::logic_error("broken correspondence in play");
    switch (mv.kind.tag) {
      case MoveTag::In:
        if (q == mv.anchor.player) rev.push_back({BasicMove::Tag::In, mv.kind.i});
        break;
      case MoveTag::Out:
        if (q == mv.anchor.player) rev.push_back({BasicMove::Tag::Out, mv.kind.i});
        break;
      case MoveTag::Tick:
        if (q == mv.anchor.player) rev.push_back({BasicMove::Tag::Tick, 0});
        break;
      case MoveTag::Nu:
        if (q == mv.anchor.player) rev.push_back({BasicMove::Tag::Nu, 0});
        break;
      case MoveTag::ParaL:
        if (q == mv.anchor.player) rev.push_back({BasicMove::Tag::ParaL, 0});
        break;
      case MoveTag::ParaR:
        if (q == mv.anchor.player) rev.push_back({BasicMove::Tag::ParaR, 0});
        break;
      case MoveTag::Para:
        if (q == mv.anchor.player)
          rev.push_back({slot == 0 ? BasicMove::Tag::ParaL : BasicMove::Tag::ParaR, 0});
        break;
      case MoveTag::Tau:
        if (q == mv.anchor.out_player)
          rev.push_back({BasicMove::Tag::Out, mv.kind.j});
        else if (q == mv.anchor.in_player)
          rev.push_back({BasicMove::Tag::In, mv.kind.i});
        break;
    }
    cur = q;
  }
  TracedView tv;
  tv.root = cur;
  tv.view.start_arity = play.initial.players[static_cast<size_t>(cur)].arity;
  tv.view.moves.assign(rev.rbegin(), rev.rend());
  return tv;
}

ViewPath view_of(const Play& play, int final_player) {
  return traced_view_of(play, final_player).view;
}

// ---------------------------------------------------------------------------
// Presheaf round trips

presheaf::FinPresheaf to_presheaf(const Presentation& pres, const Position& z) {
  FinPresheaf f;
  f.set_size(pres.require_object(presheaf::star()), z.channels);
  std::map<int, std::vector<int>> by_arity;  // arity -> player indices, in order
  for (size_t p = 0; p < z.players.size(); p++)
    by_arity[z.players[p].arity].push_back(static_cast<int>(p));
  for (const auto& [n, ids] : by_arity) {
    f.set_size(pres.require_object(presheaf::player(n)), static_cast<int>(ids.size()));
    for (int i = 1; i <= n; i++) {
      presheaf::GenId g = pres.generator_id(chan_key(n, i));
      if (g < 0) throw MaxArityExceeded(n);
      std::vector<int> act;
      act.reserve(ids.size());
      for (int p : ids) act.push_back(z.players[static_cast<size_t>(p)].assign[static_cast<size_t>(i - 1)]);
      f.set_action(g, std::move(act));
    }
  }
  return f;
}

Position position_of_presheaf(const Presentation& pres, const presheaf::FinPresheaf& f) {
  Position z;
  for (presheaf::ObId ob : f.support()) {
    const auto& o = pres.object(ob);
    if (o.kind != presheaf::ObKind::Star && o.kind != presheaf::ObKind::Player)
      throw std::invalid_argument("presheaf inhabits a move object; not a position");
  }
  z.channels = f.size(pres.require_object(presheaf::star()));
  for (presheaf::ObId ob : f.support()) {
    const auto& o = pres.object(ob);
    if (o.kind != presheaf::ObKind::Player) continue;
    int n = o.n;
    for (int r = 0; r < f.size(ob); r++) {
      Player p;
      p.arity = n;
      for (int i = 1; i <= n; i++) p.assign.push_back(f.apply_gen(pres.generator_id(chan_key(n, i)), r));
      z.players.push_back(std::move(p));
    }
  }
  return z;
}

// ---------------------------------------------------------------------------
// Canonical labeling

namespace {

uint64_t mix(uint64_t h, uint64_t v) {
  v += 0x9e3779b97f4a7c15ULL;
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return (h ^ v ^ (v >> 31)) * 0xff51afd7ed558ccdULL;
}

struct Labeler {
  const Position& z;
  const std::vector<uint64_t>& attach;
  std::vector<std::vector<std::pair<int, int>>> incid;  // channel -> (player, port)
  std::vector<uint64_t> base;                           // player base colors
  int leaves = 0;
  static constexpr int kLeafCap = 4096;
  bool have_best = false;
  Canonical best;

  Labeler(const Position& zz, const std::vector<uint64_t>& att) : z(zz), attach(att) {
    incid.resize(static_cast<size_t>(z.channels));
    base.resize(z.players.size());
    for (size_t p = 0; p < z.players.size(); p++) {
      const Player& pl = z.players[p];
      uint64_t b = mix(0x5eedULL, static_cast<uint64_t>(pl.arity));
      b = mix(b, attach[p]);
      // label-independent pattern: first occurrence index of each port's channel
      for (size_t k = 0; k < pl.assign.size(); k++) {
        size_t first = k;
        for (size_t k2 = 0; k2 < k; k2++)
          if (pl.assign[k2] == pl.assign[k]) {
            first = k2;
            break;
          }
        b = mix(b, first);
      }
      base[p] = b;
      for (size_t k = 0; k < pl.assign.size(); k++)
        incid[static_cast<size_t>(pl.assign[k])].emplace_back(static_cast<int>(p),
                                                              static_cast<int>(k));
    }
  }

  void refine(std::vector<uint64_t>& chan) const {
    std::vector<uint64_t> pcol(z.players.size());
    int rounds = z.channels + static_cast<int>(z.players.size()) + 2;
    for (int r = 0; r < rounds; r++) {
      for (size_t p = 0; p < z.players.size(); p++) {
        uint64_t c = base[p];
        for (int ch : z.players[p].assign) c = mix(c, chan[static_cast<size_t>(ch)]);
        pcol[p] = c;
      }
      for (int c = 0; c < z.channels; c++) {
        std::vector<uint64_t> sig;
        sig.reserve(incid[static_cast<size_t>(c)].size());
        for (auto [p, k] : incid[static_cast<size_t>(c)])
          sig.push_back(mix(pcol[static_cast<size_t>(p)], static_cast<uint64_t>(k)));
        std::sort(sig.begin(), sig.end());
        uint64_t h = mix(chan[static_cast<size_t>(c)], 0xc0ffee);
        for (uint64_t s : sig) h = mix(h, s);
        chan[static_cast<size_t>(c)] = h;
      }
    }
  }

  void encode(const std::vector<uint64_t>& chan) {
    leaves++;
    // channel ranks by color; residual ties are either unused channels
    // (interchangeable) or capped searches, where old-id order keeps the
    // encoding a genuine relabeling
    std::vector<int> order(static_cast<size_t>(z.channels));
    for (int c = 0; c < z.channels; c++) order[static_cast<size_t>(c)] = c;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return chan[static_cast<size_t>(a)] < chan[static_cast<size_t>(b)]; });
    std::vector<int> rank(static_cast<size_t>(z.channels));
    for (int r = 0; r < z.channels; r++) rank[static_cast<size_t>(order[static_cast<size_t>(r)])] = r;

    struct Row {
      int arity;
      uint64_t att;
      std::vector<int> assign;
      int old_index;
      auto tuple() const { return std::tie(arity, att, assign); }
      bool operator<(const Row& o) const { return tuple() < o.tuple(); }
    };
    std::vector<Row> rows;
    rows.reserve(z.players.size());
    for (size_t p = 0; p < z.players.size(); p++) {
      Row r;
      r.arity = z.players[p].arity;
      r.att = attach[p];
      r.old_index = static_cast<int>(p);
      for (int ch : z.players[p].assign) r.assign.push_back(rank[static_cast<size_t>(ch)]);
      rows.push_back(std::move(r));
    }
    std::stable_sort(rows.begin(), rows.end());

    std::ostringstream os;
    os << "c" << z.channels << ";";
    for (const auto& r : rows) {
      os << "p" << r.arity << ":" << r.att << ":";
      for (int ch : r.assign) os << ch << ",";
      os << ";";
    }
    std::string key = os.str();
    if (have_best && key >= best.key) return;
    have_best = true;
    best.key = std::move(key);
    best.pos.channels = z.channels;
    best.pos.players.clear();
    best.player_perm.clear();
    best.attach.clear();
    for (const auto& r : rows) {
      Player p;
      p.arity = r.arity;
      p.assign = r.assign;
      best.pos.players.push_back(std::move(p));
      best.player_perm.push_back(r.old_index);
      best.attach.push_back(r.att);
    }
    best.channel_perm = order;
  }

  void search(std::vector<uint64_t> chan) {
    refine(chan);
    std::map<uint64_t, std::vector<int>> groups;
    for (int c = 0; c < z.channels; c++) groups[chan[static_cast<size_t>(c)]].push_back(c);
    for (const auto& [color, members] : groups) {
      if (members.size() < 2) continue;
      if (incid[static_cast<size_t>(members.front())].empty()) continue;  // unused: interchangeable
      for (int c : members) {
        if (leaves > kLeafCap) break;
        auto next = chan;
        next[static_cast<size_t>(c)] = mix(color, 0x1d1d1dULL);
        search(std::move(next));
      }
      return;
    }
    encode(chan);
  }
};

}  // namespace

Canonical canonical_form(const Position& z, const std::vector<uint64_t>& attach) {
  std::vector<uint64_t> att = attach;
  att.resize(z.players.size(), 0);
  Labeler lab(z, att);
  lab.search(std::vector<uint64_t>(static_cast<size_t>(z.channels), 0));
  if (!lab.have_best) lab.encode(std::vector<uint64_t>(static_cast<size_t>(z.channels), 0));
  return lab.best;
}

// ---------------------------------------------------------------------------
// Export

std::string dot(const Position& z) {
  std::ostringstream os;
  os << "graph position {\n  node [shape=circle];\n";
  for (int c = 0; c < z.channels; c++) os << "  c" << c << " [label=\"c" << c << "\"];\n";
  os << "  node [shape=box];\n";
  for (size_t p = 0; p < z.players.size(); p++)
    os << "  p" << p << " [label=\"p" << p << ":[" << z.players[p].arity << "]\"];\n";
  for (size_t p = 0; p < z.players.size(); p++)
    for (size_t k = 0; k < z.players[p].assign.size(); k++)
      os << "  p" << p << " -- c" << z.players[p].assign[k] << " [label=\"" << (k + 1) << "\"];\n";
  os << "}\n";
  return os.str();
}

std::string dot(const Play& play) {
  std::ostringstream os;
  os << "digraph play {\n  rankdir=TB;\n";
  auto stage = [&](const Position& z, size_t s) {
    os << "  subgraph cluster_" << s << " {\n    label=\"stage " << s << "\";\n";
    for (int c = 0; c < z.channels; c++)
      os << "    s" << s << "c" << c << " [shape=circle,label=\"c" << c << "\"];\n";
    for (size_t p = 0; p < z.players.size(); p++)
      os << "    s" << s << "p" << p << " [shape=box,label=\"p" << p << ":[" << z.players[p].arity
         << "]\"];\n";
    os << "  }\n";
  };
  stage(play.initial, 0);
  for (size_t k = 0; k < play.moves.size(); k++) {
    const GlobalMove& mv = play.moves[k];
    stage(mv.final_pos, k + 1);
    for (int c = 0; c < mv.initial.channels; c++)
      os << "  s" << k << "c" << c << " -> s" << (k + 1) << "c" << c << " [style=dotted];\n";
    for (size_t p = 0; p < mv.player_map.size(); p++)
      for (int slot = 0; slot < 2; slot++) {
        int q = mv.player_map[p][static_cast<size_t>(slot)];
        if (q < 0) continue;
        bool anchored = mv.kind.tag == MoveTag::Tau
                            ? (static_cast<int>(p) == mv.anchor.out_player ||
                               static_cast<int>(p) == mv.anchor.in_player)
                            : static_cast<int>(p) == mv.anchor.player;
        os << "  s" << k << "p" << p << " -> s" << (k + 1) << "p" << q;
        if (anchored)
          os << " [label=\"" << to_string(mv.kind) << "\"];\n";
        else
          os << " [style=dotted];\n";
      }
  }
  os << "}\n";
  return os.str();
}

presheaf::Json to_json(const Position& z) {
  presheaf::Json players = presheaf::Json::array();
  for (const auto& p : z.players)
    players.push_back({{"arity", p.arity}, {"assign", p.assign}});
  return {{"channels", z.channels}, {"players", players}};
}

presheaf::Json to_json(const GlobalMove& m) {
  presheaf::Json anchor;
  if (m.kind.tag == MoveTag::Tau)
    anchor = {{"out", m.anchor.out_player}, {"in", m.anchor.in_player}};
  else
    anchor = {{"player", m.anchor.player}};
  presheaf::Json pmap = presheaf::Json::array();
  for (const auto& [a, b] : m.player_map) {
    presheaf::Json im = presheaf::Json::array();
    im.push_back(a);
    if (b >= 0) im.push_back(b);
    pmap.push_back(im);
  }
  presheaf::Json j{{"kind", to_string(m.kind)},
                   {"anchor", anchor},
                   {"initial", to_json(m.initial)},
                   {"final", to_json(m.final_pos)},
                   {"player_map", pmap}};
  if (m.new_channel >= 0) j["new_channel"] = m.new_channel;
  return j;
}

presheaf::Json to_json(const Play& play) {
  presheaf::Json moves = presheaf::Json::array();
  for (const auto& m : play.moves) moves.push_back(to_json(m));
  return {{"initial", to_json(play.initial)}, {"moves", moves}};
}

}  // namespace ccsgame::game
