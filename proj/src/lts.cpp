#include "ccsgame/lts.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>

namespace ccsgame::lts {

using game::Anchor;
using game::GlobalMove;
using game::MoveKind;
using game::MoveTag;
using game::Position;

std::string to_string(const FullLabel& l) {
  std::string s = game::to_string(l.kind);
  if (l.kind.tag == MoveTag::Tau)
    return s + "@out" + std::to_string(l.anchor.out_player) + ",in" +
           std::to_string(l.anchor.in_player);
  return s + "@" + std::to_string(l.anchor.player);
}

namespace {

std::string pos_key(const Position& z) {
  std::string s = "c" + std::to_string(z.channels);
  for (const auto& p : z.players) {
    s += ";" + std::to_string(p.arity) + ":";
    for (size_t k = 0; k < p.assign.size(); k++) {
      if (k) s += ",";
      s += std::to_string(p.assign[k]);
    }
  }
  return s;
}

}  // namespace

std::string state_key(const SState& s) {
  std::string k = pos_key(s.pos) + "|d";
  for (size_t i = 0; i < s.defs.size(); i++) {
    if (i) k += ",";
    k += std::to_string(s.defs[i]);
  }
  return k;
}

std::string state_key(const TState& t) {
  std::string k = pos_key(t.pos) + "|t";
  for (size_t i = 0; i < t.terms.size(); i++) {
    if (i) k += ",";
    k += std::to_string(t.terms[i]);
  }
  return k;
}

// ---------------------------------------------------------------------------
// CCS as a system over A

Lts ccs_lts(ccs::ProcessStore& store, ccs::Context ctx, ccs::ProcId p) {
  Lts out;
  out.initial = std::to_string(p);
  auto* st = &store;
  out.steps = [st, ctx](const std::string& key) {
    ccs::ProcId cur = std::stoi(key);
    std::vector<LtsEdge> edges;
    for (const auto& [label, q] : ccs::ccs_transitions(*st, ctx, cur))
      edges.push_back({ccs::to_string(label), label.kind == ccs::LabelKind::Id,
                       std::to_string(q)});
    std::sort(edges.begin(), edges.end(), [](const LtsEdge& a, const LtsEdge& b) {
      return std::tie(a.label, a.dst) < std::tie(b.label, b.dst);
    });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const LtsEdge& a, const LtsEdge& b) {
                              return a.label == b.label && a.dst == b.dst;
                            }),
                edges.end());
    return edges;
  };
  out.vertex_of = [ctx](const std::string&) { return std::to_string(ctx.gamma); };
  out.describe = [st](const std::string& key) {
    return ccs::to_string(*st, std::stoi(key));
  };
  return out;
}

// ---------------------------------------------------------------------------
// Steppers over F

namespace {

void check_family(const Position& pos, size_t members, const char* what) {
  if (pos.players.size() != members)
    throw std::invalid_argument(std::string(what) + " family size does not match the position");
}

// carries over the uninvolved players of mv; involved slots left at -1
template <typename Id>
std::vector<Id> carry_over(const GlobalMove& mv, const std::vector<Id>& ids) {
  std::vector<Id> next(mv.final_pos.players.size(), Id{-1});
  for (size_t p = 0; p < mv.player_map.size(); p++) {
    bool involved = static_cast<int>(p) == mv.anchor.player ||
                    static_cast<int>(p) == mv.anchor.out_player ||
                    static_cast<int>(p) == mv.anchor.in_player;
    if (!involved) next[static_cast<size_t>(mv.player_map[p][0])] = ids[p];
  }
  return next;
}

game::BasicMove basic_of_anchor(const MoveKind& kind) {
  switch (kind.tag) {
    case MoveTag::Tick:
      return {game::BasicMove::Tag::Tick, 0};
    case MoveTag::Nu:
      return {game::BasicMove::Tag::Nu, 0};
    case MoveTag::In:
      return {game::BasicMove::Tag::In, kind.i};
    case MoveTag::Out:
      return {game::BasicMove::Tag::Out, kind.i};
    default:
      throw std::logic_error("move has no single anchor view");
  }
}

template <typename St>
void sort_edges(std::vector<std::pair<FullLabel, St>>& edges) {
  std::sort(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
    return std::make_pair(to_string(a.first), state_key(a.second)) <
           std::make_pair(to_string(b.first), state_key(b.second));
  });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const auto& a, const auto& b) {
                            return to_string(a.first) == to_string(b.first) &&
                                   state_key(a.second) == state_key(b.second);
                          }),
              edges.end());
}

}  // namespace

std::vector<std::pair<FullLabel, SState>> strategy_step(const strat::StrategyStore& store,
                                                        const SState& s, int max_arity) {
  check_family(s.pos, s.defs.size(), "strategy");
  for (size_t p = 0; p < s.defs.size(); p++)
    if (store.def_arity(s.defs[p]) != s.pos.players[p].arity)
      throw std::invalid_argument("definite strategy arity does not match its player");
  std::vector<std::pair<FullLabel, SState>> edges;
  auto en = game::enabled_moves(s.pos, game::MoveFilter::FullOnly, max_arity);
  for (const GlobalMove& mv : en.moves) {
    FullLabel label{mv.kind, mv.anchor};
    if (mv.kind.tag == MoveTag::Para) {
      strat::DefId d = s.defs[static_cast<size_t>(mv.anchor.player)];
      const auto& left = store.parts(strat::residual(store, d, {game::BasicMove::Tag::ParaL, 0}));
      const auto& right = store.parts(strat::residual(store, d, {game::BasicMove::Tag::ParaR, 0}));
      for (strat::DefId dl : left)
        for (strat::DefId dr : right) {
          SState nxt{mv.final_pos, carry_over(mv, s.defs)};
          nxt.defs[static_cast<size_t>(mv.player_map[static_cast<size_t>(mv.anchor.player)][0])] = dl;
          nxt.defs[static_cast<size_t>(mv.player_map[static_cast<size_t>(mv.anchor.player)][1])] = dr;
          edges.emplace_back(label, std::move(nxt));
        }
    } else if (mv.kind.tag == MoveTag::Tau) {
      strat::DefId dout = s.defs[static_cast<size_t>(mv.anchor.out_player)];
      strat::DefId din = s.defs[static_cast<size_t>(mv.anchor.in_player)];
      const auto& outs =
          store.parts(strat::residual(store, dout, {game::BasicMove::Tag::Out, mv.kind.j}));
      const auto& ins =
          store.parts(strat::residual(store, din, {game::BasicMove::Tag::In, mv.kind.i}));
      for (strat::DefId d1 : outs)
        for (strat::DefId d2 : ins) {
          SState nxt{mv.final_pos, carry_over(mv, s.defs)};
          nxt.defs[static_cast<size_t>(mv.player_map[static_cast<size_t>(mv.anchor.out_player)][0])] = d1;
          nxt.defs[static_cast<size_t>(mv.player_map[static_cast<size_t>(mv.anchor.in_player)][0])] = d2;
          edges.emplace_back(label, std::move(nxt));
        }
    } else {
      strat::DefId d = s.defs[static_cast<size_t>(mv.anchor.player)];
      const auto& parts = store.parts(strat::residual(store, d, basic_of_anchor(mv.kind)));
      for (strat::DefId d1 : parts) {
        SState nxt{mv.final_pos, carry_over(mv, s.defs)};
        nxt.defs[static_cast<size_t>(mv.player_map[static_cast<size_t>(mv.anchor.player)][0])] = d1;
        edges.emplace_back(label, std::move(nxt));
      }
    }
  }
  sort_edges(edges);
  return edges;
}

std::vector<std::pair<FullLabel, TState>> term_step(const strat::StrategyStore& store,
                                                    const TState& t, int max_arity) {
  check_family(t.pos, t.terms.size(), "term");
  for (size_t p = 0; p < t.terms.size(); p++)
    if (store.term_arity(t.terms[p]) != t.pos.players[p].arity)
      throw std::invalid_argument("term arity does not match its player");
  std::vector<std::pair<FullLabel, TState>> edges;
  auto push_single = [&](int player, const MoveKind& kind, strat::TermId cont) {
    GlobalMove mv = game::instantiate(kind, t.pos, Anchor{player, -1, -1}, max_arity);
    TState nxt{mv.final_pos, carry_over(mv, t.terms)};
    nxt.terms[static_cast<size_t>(mv.player_map[static_cast<size_t>(player)][0])] = cont;
    edges.emplace_back(FullLabel{mv.kind, mv.anchor}, std::move(nxt));
  };
  for (size_t p = 0; p < t.terms.size(); p++) {
    strat::TermId tm = t.terms[p];
    int n = t.pos.players[p].arity;
    if (store.is_fork(tm)) {
      GlobalMove mv = game::instantiate({MoveTag::Para, n}, t.pos,
                                        Anchor{static_cast<int>(p), -1, -1}, max_arity);
      TState nxt{mv.final_pos, carry_over(mv, t.terms)};
      nxt.terms[static_cast<size_t>(mv.player_map[p][0])] = store.fork_left(tm);
      nxt.terms[static_cast<size_t>(mv.player_map[p][1])] = store.fork_right(tm);
      edges.emplace_back(FullLabel{mv.kind, mv.anchor}, std::move(nxt));
      continue;
    }
    for (const auto& [g, cont] : store.branches(tm)) {
      switch (g.kind) {
        case strat::Guard::Kind::Tick:
          push_single(static_cast<int>(p), {MoveTag::Tick, n}, cont);
          break;
        case strat::Guard::Kind::Nu:
          if (n + 1 <= max_arity) push_single(static_cast<int>(p), {MoveTag::Nu, n}, cont);
          break;
        case strat::Guard::Kind::In:
          push_single(static_cast<int>(p), {MoveTag::In, n, g.channel}, cont);
          break;
        case strat::Guard::Kind::Out:
          push_single(static_cast<int>(p), {MoveTag::Out, n, g.channel}, cont);
          break;
      }
    }
  }
  // synchronizations: an output branch of one player against an input branch
  // of a distinct player on the same position channel
  for (size_t po = 0; po < t.terms.size(); po++) {
    if (store.is_fork(t.terms[po])) continue;
    for (size_t pi = 0; pi < t.terms.size(); pi++) {
      if (pi == po || store.is_fork(t.terms[pi])) continue;
      for (const auto& [go, conto] : store.branches(t.terms[po])) {
        if (go.kind != strat::Guard::Kind::Out) continue;
        for (const auto& [gi, conti] : store.branches(t.terms[pi])) {
          if (gi.kind != strat::Guard::Kind::In) continue;
          if (t.pos.players[po].assign[static_cast<size_t>(go.channel - 1)] !=
              t.pos.players[pi].assign[static_cast<size_t>(gi.channel - 1)])
            continue;
          MoveKind kind{MoveTag::Tau, t.pos.players[pi].arity, gi.channel,
                        t.pos.players[po].arity, go.channel};
          GlobalMove mv = game::instantiate(
              kind, t.pos, Anchor{-1, static_cast<int>(po), static_cast<int>(pi)}, max_arity);
          TState nxt{mv.final_pos, carry_over(mv, t.terms)};
          nxt.terms[static_cast<size_t>(mv.player_map[po][0])] = conto;
          nxt.terms[static_cast<size_t>(mv.player_map[pi][0])] = conti;
          edges.emplace_back(FullLabel{mv.kind, mv.anchor}, std::move(nxt));
        }
      }
    }
  }
  sort_edges(edges);
  return edges;
}

TState seed_term_state(strat::StrategyStore& store, const ccs::ProcessStore& ps, ccs::Context ctx,
                       ccs::ProcId p) {
  TState t;
  t.pos = game::single_player(ctx.gamma);
  t.terms = {strat::theta(store, ps, ctx, p)};
  return t;
}

namespace {

SState interpret_state_impl(strat::StrategyStore& store, const TState& t, bool swapped) {
  SState s;
  s.pos = t.pos;
  for (strat::TermId tm : t.terms) {
    strat::StratId i = swapped ? store.interpret_swapped(tm) : store.interpret(tm);
    const auto& parts = store.parts(i);
    if (parts.size() != 1) throw std::logic_error("interpretation is not definite");
    s.defs.push_back(parts[0]);
  }
  return s;
}

}  // namespace

SState interpret_state(strat::StrategyStore& store, const TState& t) {
  return interpret_state_impl(store, t, false);
}

SState interpret_state_swapped(strat::StrategyStore& store, const TState& t) {
  return interpret_state_impl(store, t, true);
}

// ---------------------------------------------------------------------------
// Theorem 2 as a per-state property

namespace {

struct BisimChecker {
  strat::StrategyStore& store;
  int max_arity;
  bool swapped;
  std::map<std::string, int> checked;  // term-state key -> depth already verified
  BisimReport report;

  bool check(const TState& t, const SState& s, int depth) {
    if (depth <= 0) return true;
    std::string tkey = state_key(t);
    auto it = checked.find(tkey);
    if (it != checked.end() && it->second >= depth) return true;
    checked[tkey] = depth;

    auto tedges = term_step(store, t, max_arity);
    auto sedges = strategy_step(store, s, max_arity);
    std::map<std::pair<std::string, std::string>, const TState*> image;
    for (const auto& [l, nxt] : tedges) {
      SState img = interpret_state_impl(store, nxt, swapped);
      image.emplace(std::make_pair(to_string(l), state_key(img)), &nxt);
    }
    std::set<std::pair<std::string, std::string>> actual;
    for (const auto& [l, nxt] : sedges) actual.emplace(to_string(l), state_key(nxt));
    for (const auto& [k, ignored] : image) {
      (void)ignored;
      if (!actual.count(k)) {
        report.ok = false;
        report.counterexample = "term transition " + k.first + " from " + tkey +
                                " has no strategy match to " + k.second;
        return false;
      }
    }
    for (const auto& k : actual) {
      if (!image.count(k)) {
        report.ok = false;
        report.counterexample = "strategy transition " + k.first + " from " + state_key(s) +
                                " to " + k.second + " is not the image of a term transition";
        return false;
      }
    }
    for (const auto& [l, nxt] : tedges) {
      SState img = interpret_state_impl(store, nxt, swapped);
      if (!check(nxt, img, depth - 1)) return false;
      (void)l;
    }
    return true;
  }
};

}  // namespace

BisimReport interpret_is_strong_bisim(strat::StrategyStore& store, const TState& seed, int depth,
                                      int max_arity, bool swapped) {
  BisimChecker c{store, max_arity, swapped, {}, {}};
  c.check(seed, interpret_state_impl(store, seed, swapped), depth);
  return c.report;
}

// ---------------------------------------------------------------------------
// Change of base

bool l_edge_allowed(const InterfacedPosition& v, const MoveKind& kind, const Anchor& anchor) {
  if (kind.tag != MoveTag::In && kind.tag != MoveTag::Out) return true;
  int channel =
      v.x.players[static_cast<size_t>(anchor.player)].assign[static_cast<size_t>(kind.i - 1)];
  return std::find(v.h.begin(), v.h.end(), channel) != v.h.end();
}

ccs::LabelA xi(const InterfacedPosition& v, const MoveKind& kind, const Anchor& anchor) {
  ccs::LabelA l;
  l.context = v.interface_channels;
  switch (kind.tag) {
    case MoveTag::Tick:
      l.kind = ccs::LabelKind::Tick;
      return l;
    case MoveTag::Nu:
    case MoveTag::Para:
    case MoveTag::Tau:
      l.kind = ccs::LabelKind::Id;
      return l;
    case MoveTag::In:
    case MoveTag::Out: {
      int channel =
          v.x.players[static_cast<size_t>(anchor.player)].assign[static_cast<size_t>(kind.i - 1)];
      auto it = std::find(v.h.begin(), v.h.end(), channel);
      if (it == v.h.end()) throw std::logic_error("input/output outside the interface image");
      l.kind = kind.tag == MoveTag::In ? ccs::LabelKind::In : ccs::LabelKind::Out;
      l.channel = static_cast<int>(it - v.h.begin()) + 1;
      return l;
    }
    default:
      throw std::logic_error("fork halves are not full moves");
  }
}

namespace {

std::string ipos_key(const InterfacedPosition& v) {
  std::string s = "I" + std::to_string(v.interface_channels) + "[";
  for (size_t k = 0; k < v.h.size(); k++) {
    if (k) s += ",";
    s += std::to_string(v.h[k]);
  }
  return s + "]" + pos_key(v.x);
}

}  // namespace

ChiFragment build_chi(int max_channels, int max_players, int max_arity) {
  ChiFragment out;
  // positions within bounds, in enumeration order
  std::map<std::string, int> f_index;
  for (int n = 0; n <= max_channels; n++) {
    // player shapes at n channels
    std::vector<game::Player> shapes;
    for (int k = 0; k <= max_arity; k++) {
      std::vector<std::vector<int>> assigns{{}};
      for (int port = 0; port < k; port++) {
        std::vector<std::vector<int>> next;
        for (const auto& a : assigns)
          for (int c = 0; c < n; c++) {
            auto b = a;
            b.push_back(c);
            next.push_back(std::move(b));
          }
        assigns = std::move(next);
      }
      for (auto& a : assigns) shapes.push_back({k, std::move(a)});
    }
    // player lists of bounded length
    std::vector<std::vector<game::Player>> lists{{}};
    for (int len = 0; len < max_players; len++) {
      std::vector<std::vector<game::Player>> next;
      for (const auto& l : lists)
        if (static_cast<int>(l.size()) == len)
          for (const auto& sh : shapes) {
            auto m = l;
            m.push_back(sh);
            next.push_back(std::move(m));
          }
      lists.insert(lists.end(), next.begin(), next.end());
    }
    for (const auto& l : lists) {
      game::Position z{n, l};
      f_index.emplace(pos_key(z), static_cast<int>(out.f_vertices.size()));
      out.f_vertices.push_back(std::move(z));
    }
  }
  // interfaces: ordered injections into the channels
  std::map<std::string, int> l_index;
  for (int fi = 0; fi < static_cast<int>(out.f_vertices.size()); fi++) {
    const auto& z = out.f_vertices[static_cast<size_t>(fi)];
    std::vector<std::vector<int>> injections{{}};
    for (size_t k = 0; k < injections.size(); k++) {
      auto h = injections[k];
      if (static_cast<int>(h.size()) >= z.channels) continue;
      for (int c = 0; c < z.channels; c++) {
        if (std::find(h.begin(), h.end(), c) != h.end()) continue;
        auto h2 = h;
        h2.push_back(c);
        injections.push_back(std::move(h2));
      }
    }
    std::sort(injections.begin(), injections.end());
    injections.erase(std::unique(injections.begin(), injections.end()), injections.end());
    for (const auto& h : injections) {
      InterfacedPosition v{static_cast<int>(h.size()), h, z};
      l_index.emplace(ipos_key(v), static_cast<int>(out.l_vertices.size()));
      out.l_vertices.push_back(std::move(v));
      out.chi_vertex.push_back(fi);
    }
  }
  // full moves with both endpoints within bounds
  std::map<std::string, int> f_edge_index;
  for (int fi = 0; fi < static_cast<int>(out.f_vertices.size()); fi++) {
    const auto& z = out.f_vertices[static_cast<size_t>(fi)];
    auto en = game::enabled_moves(z, game::MoveFilter::FullOnly, max_arity);
    for (const GlobalMove& mv : en.moves) {
      if (mv.final_pos.channels > max_channels) continue;
      if (static_cast<int>(mv.final_pos.players.size()) > max_players) continue;
      auto it = f_index.find(pos_key(mv.final_pos));
      if (it == f_index.end()) continue;
      std::string ekey = std::to_string(fi) + "!" + to_string(FullLabel{mv.kind, mv.anchor});
      f_edge_index.emplace(ekey, static_cast<int>(out.f_edges.size()));
      out.f_edges.push_back({fi, mv.kind, mv.anchor, it->second});
    }
  }
  for (int li = 0; li < static_cast<int>(out.l_vertices.size()); li++) {
    const auto& v = out.l_vertices[static_cast<size_t>(li)];
    int fi = out.chi_vertex[static_cast<size_t>(li)];
    auto en = game::enabled_moves(v.x, game::MoveFilter::FullOnly, max_arity);
    for (const GlobalMove& mv : en.moves) {
      if (!l_edge_allowed(v, mv.kind, mv.anchor)) continue;
      std::string ekey = std::to_string(fi) + "!" + to_string(FullLabel{mv.kind, mv.anchor});
      auto fe = f_edge_index.find(ekey);
      if (fe == f_edge_index.end()) continue;  // out of bounds
      InterfacedPosition w{v.interface_channels, v.h, mv.final_pos};
      auto wt = l_index.find(ipos_key(w));
      if (wt == l_index.end()) continue;
      out.l_edges.push_back({li, mv.kind, mv.anchor, wt->second});
      out.chi_edge.push_back(fe->second);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lazy systems over F, their pullback, and postcomposition

namespace {

template <typename St>
struct Registry {
  std::map<std::string, St> states;
  std::mutex mu;

  std::string put(const St& s) {
    std::string key = state_key(s);
    std::lock_guard lock(mu);
    states.emplace(key, s);
    return key;
  }
  St get(const std::string& key) {
    std::lock_guard lock(mu);
    auto it = states.find(key);
    if (it == states.end()) throw std::out_of_range("unknown state key " + key);
    return it->second;
  }
};

}  // namespace

LtsOverF strategy_system(const strat::StrategyStore& store, const SState& start, int max_arity) {
  auto reg = std::make_shared<Registry<SState>>();
  LtsOverF out;
  out.initial = reg->put(start);
  const auto* st = &store;
  out.steps = [reg, st, max_arity](const std::string& key) {
    SState cur = reg->get(key);
    std::vector<FEdgeOut> edges;
    for (const auto& [l, nxt] : strategy_step(*st, cur, max_arity))
      edges.push_back({l.kind, l.anchor, reg->put(nxt)});
    return edges;
  };
  out.position_of = [reg](const std::string& key) { return reg->get(key).pos; };
  out.describe = [](const std::string& key) { return key; };
  return out;
}

LtsOverF term_system(const strat::StrategyStore& store, const TState& start, int max_arity) {
  auto reg = std::make_shared<Registry<TState>>();
  LtsOverF out;
  out.initial = reg->put(start);
  const auto* st = &store;
  out.steps = [reg, st, max_arity](const std::string& key) {
    TState cur = reg->get(key);
    std::vector<FEdgeOut> edges;
    for (const auto& [l, nxt] : term_step(*st, cur, max_arity))
      edges.push_back({l.kind, l.anchor, reg->put(nxt)});
    return edges;
  };
  out.position_of = [reg](const std::string& key) { return reg->get(key).pos; };
  out.describe = [](const std::string& key) { return key; };
  return out;
}

LtsOverL pullback_lts(const LtsOverF& p, const InterfacedPosition& start) {
  if (!(p.position_of(p.initial) == start.x))
    throw std::invalid_argument("interfaced position does not lie over the system's start");
  auto base = std::make_shared<LtsOverF>(p);
  auto iface = std::make_shared<InterfacedPosition>(start);
  LtsOverL out;
  // the interface never changes along transitions, so a state is the
  // underlying state plus the fixed interface prefix
  std::string prefix = "I" + std::to_string(start.interface_channels) + "[";
  for (size_t k = 0; k < start.h.size(); k++) {
    if (k) prefix += ",";
    prefix += std::to_string(start.h[k]);
  }
  prefix += "]/";
  out.initial = prefix + p.initial;
  auto strip = [prefix](const std::string& key) { return key.substr(prefix.size()); };
  out.steps = [base, iface, prefix, strip](const std::string& key) {
    std::string fkey = strip(key);
    InterfacedPosition here{iface->interface_channels, iface->h, base->position_of(fkey)};
    std::vector<FEdgeOut> edges;
    for (const auto& e : base->steps(fkey))
      if (l_edge_allowed(here, e.kind, e.anchor))
        edges.push_back({e.kind, e.anchor, prefix + e.dst});
    return edges;
  };
  out.vertex_of = [base, iface, strip](const std::string& key) {
    return InterfacedPosition{iface->interface_channels, iface->h,
                              base->position_of(strip(key))};
  };
  out.describe = [base, strip, prefix](const std::string& key) {
    return prefix + base->describe(strip(key));
  };
  return out;
}

Lts postcompose_lts(const LtsOverL& p) {
  auto base = std::make_shared<LtsOverL>(p);
  Lts out;
  out.initial = p.initial;
  out.steps = [base](const std::string& key) {
    InterfacedPosition here = base->vertex_of(key);
    std::vector<LtsEdge> edges;
    for (const auto& e : base->steps(key)) {
      ccs::LabelA l = xi(here, e.kind, e.anchor);
      edges.push_back({ccs::to_string(l), l.kind == ccs::LabelKind::Id, e.dst});
    }
    std::sort(edges.begin(), edges.end(), [](const LtsEdge& a, const LtsEdge& b) {
      return std::tie(a.label, a.dst) < std::tie(b.label, b.dst);
    });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const LtsEdge& a, const LtsEdge& b) {
                              return a.label == b.label && a.dst == b.dst;
                            }),
                edges.end());
    return edges;
  };
  out.vertex_of = [base](const std::string& key) {
    return std::to_string(base->vertex_of(key).interface_channels);
  };
  out.describe = [base](const std::string& key) { return base->describe(key); };
  return out;
}

// ---------------------------------------------------------------------------
// Bounded weak bisimulation

namespace {

struct Explored {
  std::vector<std::string> order;
  std::map<std::string, std::vector<LtsEdge>> adj;
  bool complete = true;
};

Explored explore(const Lts& l, long cap) {
  Explored g;
  std::vector<std::string> queue{l.initial};
  std::set<std::string> seen{l.initial};
  for (size_t head = 0; head < queue.size(); head++) {
    if (static_cast<long>(g.order.size()) >= cap) {
      g.complete = false;
      return g;
    }
    std::string cur = queue[head];
    g.order.push_back(cur);
    auto edges = l.steps(cur);
    for (const auto& e : edges)
      if (seen.insert(e.dst).second) queue.push_back(e.dst);
    g.adj.emplace(std::move(cur), std::move(edges));
  }
  return g;
}

std::string pair_hash(const std::string& a, const std::string& b) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%016zx:%016zx", std::hash<std::string>{}(a),
                std::hash<std::string>{}(b));
  return buf;
}

// silent-closure (reflexive, transitive over silent edges)
std::vector<int> silent_closure(const std::vector<std::vector<std::pair<int, int>>>& succ,
                                const std::vector<bool>& silent_edge, int from) {
  std::vector<int> out{from};
  std::set<int> seen{from};
  for (size_t q = 0; q < out.size(); q++)
    for (const auto& [eid, to] : succ[static_cast<size_t>(out[q])])
      if (silent_edge[static_cast<size_t>(eid)] && seen.insert(to).second) out.push_back(to);
  return out;
}

struct ExactSide {
  std::vector<std::string> keys;
  std::map<std::string, int> index;
  std::vector<std::vector<std::pair<int, int>>> succ;  // state -> (edge id, dst)
  std::vector<std::string> edge_label;
  std::vector<bool> edge_silent;
  std::vector<std::vector<int>> closure;
  // weak moves: state -> label -> set of states (silent* label silent*)
  std::vector<std::map<std::string, std::set<int>>> weak;

  explicit ExactSide(const Explored& g) {
    keys = g.order;
    for (size_t k = 0; k < keys.size(); k++) index.emplace(keys[k], static_cast<int>(k));
    succ.resize(keys.size());
    for (size_t k = 0; k < keys.size(); k++)
      for (const auto& e : g.adj.at(keys[k])) {
        int eid = static_cast<int>(edge_label.size());
        edge_label.push_back(e.label);
        edge_silent.push_back(e.silent);
        succ[k].emplace_back(eid, index.at(e.dst));
      }
    closure.resize(keys.size());
    for (size_t k = 0; k < keys.size(); k++)
      closure[k] = silent_closure(succ, edge_silent, static_cast<int>(k));
    weak.resize(keys.size());
    for (size_t k = 0; k < keys.size(); k++)
      for (int mid : closure[k])
        for (const auto& [eid, to] : succ[static_cast<size_t>(mid)]) {
          if (edge_silent[static_cast<size_t>(eid)]) continue;
          for (int fin : closure[static_cast<size_t>(to)])
            weak[k][edge_label[static_cast<size_t>(eid)]].insert(fin);
        }
  }
};

}  // namespace

BisimVerdict weak_bisim_bounded(const Lts& a, const Lts& b, int depth, long state_cap) {
  BisimVerdict v;
  Explored ga = explore(a, state_cap);
  Explored gb = explore(b, state_cap);
  v.states_explored = static_cast<long>(ga.order.size() + gb.order.size());

  if (ga.complete && gb.complete) {
    ExactSide A(ga), B(gb);
    size_t na = A.keys.size(), nb = B.keys.size();
    std::vector<char> rel(na * nb, 1);
    auto at = [&](int i, int j) -> char& { return rel[static_cast<size_t>(i) * nb + static_cast<size_t>(j)]; };
    // killing challenge per removed pair, for the counterexample trace
    std::map<std::pair<int, int>, std::pair<std::string, std::string>> kill;
    std::map<std::pair<int, int>, int> level;
    bool changed = true;
    int round = 0;
    while (changed) {
      changed = false;
      round++;
      for (size_t i = 0; i < na; i++)
        for (size_t j = 0; j < nb; j++) {
          if (!at(static_cast<int>(i), static_cast<int>(j))) continue;
          auto survives = [&](int side) {
            const ExactSide& X = side == 0 ? A : B;
            const ExactSide& Y = side == 0 ? B : A;
            int x = side == 0 ? static_cast<int>(i) : static_cast<int>(j);
            int y = side == 0 ? static_cast<int>(j) : static_cast<int>(i);
            auto related = [&](int xx, int yy) {
              return side == 0 ? at(xx, yy) : at(yy, xx);
            };
            for (const auto& [eid, to] : X.succ[static_cast<size_t>(x)]) {
              bool answered = false;
              if (X.edge_silent[static_cast<size_t>(eid)]) {
                for (int yy : Y.closure[static_cast<size_t>(y)])
                  if (related(to, yy)) {
                    answered = true;
                    break;
                  }
              } else {
                auto it = Y.weak[static_cast<size_t>(y)].find(
                    X.edge_label[static_cast<size_t>(eid)]);
                if (it != Y.weak[static_cast<size_t>(y)].end())
                  for (int yy : it->second)
                    if (related(to, yy)) {
                      answered = true;
                      break;
                    }
              }
              if (!answered)
                return std::optional<std::string>(X.edge_label[static_cast<size_t>(eid)]);
            }
            return std::optional<std::string>();
          };
          auto bad = survives(0);
          std::string side = "left";
          if (!bad) {
            bad = survives(1);
            side = "right";
          }
          if (bad) {
            at(static_cast<int>(i), static_cast<int>(j)) = 0;
            kill[{static_cast<int>(i), static_cast<int>(j)}] = {side, *bad};
            level[{static_cast<int>(i), static_cast<int>(j)}] = round;
            changed = true;
          }
        }
    }
    v.depth_used = round;
    if (at(0, 0)) {
      v.outcome = BisimVerdict::Outcome::Bisimilar;
      return v;
    }
    v.outcome = BisimVerdict::Outcome::NotBisimilar;
    // walk the killing challenges from the roots downwards
    int i = 0, j = 0;
    int guard = 0;
    while (kill.count({i, j}) && guard++ < 64) {
      auto [side, label] = kill[{i, j}];
      v.trace.push_back(pair_hash(A.keys[static_cast<size_t>(i)], B.keys[static_cast<size_t>(j)]));
      v.trace.push_back(side + ":" + label);
      // descend into the challenge target paired with its longest-surviving answer
      const ExactSide& X = side == "left" ? A : B;
      const ExactSide& Y = side == "left" ? B : A;
      int x = side == "left" ? i : j;
      int y = side == "left" ? j : i;
      int to = -1;
      for (const auto& [eid, t] : X.succ[static_cast<size_t>(x)])
        if (X.edge_label[static_cast<size_t>(eid)] == label) {
          to = t;
          break;
        }
      if (to < 0) break;
      int best = -1, best_level = -1;
      auto consider = [&](int yy) {
        int ii = side == "left" ? to : yy;
        int jj = side == "left" ? yy : to;
        auto lv = level.find({ii, jj});
        int l = lv == level.end() ? 1 << 30 : lv->second;
        if (l > best_level) {
          best_level = l;
          best = yy;
        }
      };
      bool is_silent = false;
      for (size_t eid = 0; eid < X.edge_label.size(); eid++)
        if (X.edge_label[eid] == label && X.edge_silent[eid]) is_silent = true;
      if (is_silent)
        for (int yy : Y.closure[static_cast<size_t>(y)]) consider(yy);
      else {
        auto it = Y.weak[static_cast<size_t>(y)].find(label);
        if (it != Y.weak[static_cast<size_t>(y)].end())
          for (int yy : it->second) consider(yy);
      }
      if (best < 0) break;
      i = side == "left" ? to : best;
      j = side == "left" ? best : to;
    }
    return v;
  }

  // bounded approximants on the lazily explored part
  struct Bounded {
    const Lts& a;
    const Lts& b;
    long cap;
    long expanded = 0;
    std::map<std::string, std::vector<LtsEdge>> adj_a, adj_b;
    std::map<std::tuple<std::string, std::string, int>, bool> memo;
    std::vector<std::string> trace;
    struct CapHit {};

    const std::vector<LtsEdge>& edges(const Lts& l, std::map<std::string, std::vector<LtsEdge>>& adj,
                                      const std::string& key) {
      auto it = adj.find(key);
      if (it != adj.end()) return it->second;
      if (++expanded > cap) throw CapHit{};
      return adj.emplace(key, l.steps(key)).first->second;
    }

    std::vector<std::string> closure(const Lts& l, std::map<std::string, std::vector<LtsEdge>>& adj,
                                     const std::string& from) {
      std::vector<std::string> out{from};
      std::set<std::string> seen{from};
      for (size_t q = 0; q < out.size(); q++)
        for (const auto& e : edges(l, adj, out[q]))
          if (e.silent && seen.insert(e.dst).second) out.push_back(e.dst);
      return out;
    }

    bool rec(const std::string& x, const std::string& y, int k) {
      if (k <= 0) return true;
      auto key = std::make_tuple(x, y, k);
      auto it = memo.find(key);
      if (it != memo.end()) return it->second;
      memo[key] = true;  // provisional; depth strictly decreases so no real cycle
      auto challenge = [&](const Lts& lx, std::map<std::string, std::vector<LtsEdge>>& ax,
                           const Lts& ly, std::map<std::string, std::vector<LtsEdge>>& ay,
                           const std::string& sx, const std::string& sy, bool left) {
        for (const auto& e : edges(lx, ax, sx)) {
          // collect the weak answers first
          std::vector<std::string> answers;
          if (e.silent) {
            answers = closure(ly, ay, sy);
          } else {
            std::set<std::string> seen;
            for (const auto& mid : closure(ly, ay, sy))
              for (const auto& e2 : edges(ly, ay, mid)) {
                if (e2.silent || e2.label != e.label) continue;
                for (const auto& t : closure(ly, ay, e2.dst))
                  if (seen.insert(t).second) answers.push_back(t);
              }
          }
          size_t mark = trace.size();
          bool answered = false;
          for (const auto& t : answers) {
            trace.resize(mark);  // keep at most one failed sub-chain
            if (left ? rec(e.dst, t, k - 1) : rec(t, e.dst, k - 1)) {
              answered = true;
              break;
            }
          }
          if (answered) {
            trace.resize(mark);
            continue;
          }
          trace.push_back(pair_hash(x, y));
          trace.push_back(std::string(left ? "left:" : "right:") + e.label);
          return false;
        }
        return true;
      };
      bool ok = challenge(a, adj_a, b, adj_b, x, y, true) &&
                challenge(b, adj_b, a, adj_a, y, x, false);
      memo[key] = ok;
      return ok;
    }
  };

  Bounded bd{a, b, state_cap, 0, std::move(ga.adj), std::move(gb.adj), {}, {}};
  try {
    bool ok = bd.rec(a.initial, b.initial, depth);
    v.depth_used = depth;
    v.states_explored += bd.expanded;
    if (ok) {
      v.outcome = BisimVerdict::Outcome::BisimilarToDepth;
    } else {
      v.outcome = BisimVerdict::Outcome::NotBisimilar;
      v.trace.assign(bd.trace.rbegin(), bd.trace.rend());
    }
  } catch (const Bounded::CapHit&) {
    v.outcome = BisimVerdict::Outcome::BudgetExceeded;
    v.states_explored += bd.expanded;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Export

std::string dot(const Lts& l, int max_states) {
  std::ostringstream os;
  os << "digraph lts {\n  rankdir=LR;\n  node [shape=box, fontsize=10];\n";
  std::vector<std::string> queue{l.initial};
  std::set<std::string> seen{l.initial};
  std::map<std::string, int> id;
  auto node = [&](const std::string& key) {
    auto it = id.find(key);
    if (it != id.end()) return it->second;
    int n = static_cast<int>(id.size());
    id.emplace(key, n);
    std::string label = l.describe ? l.describe(key) : key;
    os << "  n" << n << " [label=\"" << label << "\"];\n";
    return n;
  };
  node(l.initial);
  for (size_t q = 0; q < queue.size() && static_cast<int>(q) < max_states; q++) {
    for (const auto& e : l.steps(queue[q])) {
      if (seen.insert(e.dst).second) queue.push_back(e.dst);
      os << "  n" << node(queue[q]) << " -> n" << node(e.dst) << " [label=\"" << e.label << "\"";
      if (e.silent) os << ", style=dashed";
      if (e.label == "tick") os << ", penwidth=2.5";
      os << "];\n";
    }
  }
  os << "}\n";
  return os.str();
}

ccs::Json lts_json(const Lts& l, int max_states) {
  ccs::Json states = ccs::Json::array();
  ccs::Json edges = ccs::Json::array();
  std::vector<std::string> queue{l.initial};
  std::set<std::string> seen{l.initial};
  for (size_t q = 0; q < queue.size() && static_cast<int>(q) < max_states; q++) {
    const std::string cur = queue[q];  // push_back below may reallocate the queue
    states.push_back({{"key", cur},
                      {"vertex", l.vertex_of ? l.vertex_of(cur) : ""},
                      {"desc", l.describe ? l.describe(cur) : cur}});
    for (const auto& e : l.steps(cur)) {
      if (seen.insert(e.dst).second) queue.push_back(e.dst);
      edges.push_back({{"src", cur}, {"label", e.label}, {"silent", e.silent}, {"dst", e.dst}});
    }
  }
  return {{"initial", l.initial}, {"states", states}, {"edges", edges}};
}

}  // namespace ccsgame::lts
