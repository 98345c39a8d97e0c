#include "ccsgame/fairtest.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <set>
#include <thread>

namespace ccsgame::fairtest {

ccs::Json to_json(const Verdict& v) {
  ccs::Json j;
  switch (v.kind) {
    case Verdict::Kind::Pass:
      j["verdict"] = "pass";
      break;
    case Verdict::Kind::Fail:
      j["verdict"] = "fail";
      j["saturated"] = v.saturated;
      break;
    case Verdict::Kind::Inconclusive:
      j["verdict"] = "inconclusive";
      break;
  }
  if (!v.witness.is_null()) j["witness"] = v.witness;
  if (!v.note.empty()) j["note"] = v.note;
  j["budget_used"] = v.budget_used;
  j["depth"] = v.depth;
  j["family_size"] = v.family_size;
  return j;
}

namespace {

void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
  size_t workers = std::min<size_t>(jobs <= 1 ? 1 : static_cast<size_t>(jobs), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; i++) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; w++)
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

// ---------------------------------------------------------------------------
// bot_s

Verdict bot_s(const lts::Lts& l, const std::string& state, const Budget& budget) {
  Verdict v;
  // R: the silent closure of the start state, with parents for witness paths
  std::vector<std::string> order{state};
  std::map<std::string, int> index{{state, 0}};
  std::vector<int> parent{-1};
  std::vector<std::vector<int>> silent_succ;
  std::vector<bool> has_tick;
  for (size_t head = 0; head < order.size(); head++) {
    if (static_cast<long>(order.size()) > budget.state_cap) {
      v.kind = Verdict::Kind::Inconclusive;
      v.note = "silent-reachable set exceeds the state cap";
      v.budget_used = static_cast<long>(order.size());
      return v;
    }
    silent_succ.emplace_back();
    has_tick.push_back(false);
    for (const auto& e : l.steps(order[head])) {
      if (e.label == "tick") has_tick[head] = true;
      if (!e.silent) continue;
      auto it = index.find(e.dst);
      int to;
      if (it == index.end()) {
        to = static_cast<int>(order.size());
        index.emplace(e.dst, to);
        order.push_back(e.dst);
        parent.push_back(static_cast<int>(head));
      } else {
        to = it->second;
      }
      silent_succ[head].push_back(to);
    }
  }
  v.budget_used = static_cast<long>(order.size());
  // G within R: backward closure of tick-enabled states along silent edges
  std::vector<std::vector<int>> pred(order.size());
  for (size_t s = 0; s < order.size(); s++)
    for (int t : silent_succ[s]) pred[static_cast<size_t>(t)].push_back(static_cast<int>(s));
  std::vector<bool> good(order.size(), false);
  std::vector<int> queue;
  for (size_t s = 0; s < order.size(); s++)
    if (has_tick[s]) {
      good[s] = true;
      queue.push_back(static_cast<int>(s));
    }
  for (size_t head = 0; head < queue.size(); head++)
    for (int p : pred[static_cast<size_t>(queue[head])])
      if (!good[static_cast<size_t>(p)]) {
        good[static_cast<size_t>(p)] = true;
        queue.push_back(p);
      }
  for (size_t s = 0; s < order.size(); s++) {
    if (good[s]) continue;
    v.kind = Verdict::Kind::Fail;
    std::vector<std::string> path;
    for (int at = static_cast<int>(s); at >= 0; at = parent[static_cast<size_t>(at)])
      path.push_back(order[static_cast<size_t>(at)]);
    std::reverse(path.begin(), path.end());
    ccs::Json jpath = ccs::Json::array();
    ccs::Json jdesc = ccs::Json::array();
    for (const auto& k : path) {
      jpath.push_back(k);
      jdesc.push_back(l.describe ? l.describe(k) : k);
    }
    v.witness = {{"path", jpath}, {"states", jdesc}};
    return v;
  }
  v.kind = Verdict::Kind::Pass;
  return v;
}

// ---------------------------------------------------------------------------
// Tree tests

TestFamily gen_tree_tests(ccs::ProcessStore& store, ccs::Context ctx, int depth, int width) {
  if (depth < 0 || width < 0) throw std::invalid_argument("negative depth or width");
  std::vector<ccs::Prefix> prefixes{{ccs::PrefixKind::Tick, 0}};
  for (int a = 1; a <= ctx.gamma; a++) {
    prefixes.push_back({ccs::PrefixKind::In, a});
    prefixes.push_back({ccs::PrefixKind::Out, a});
  }
  std::vector<ccs::ProcId> level{store.nil()};
  for (int d = 1; d <= depth; d++) {
    // branch candidates over the previous level, in enumeration order
    std::vector<ccs::Branch> cands;
    for (const auto& pre : prefixes)
      for (ccs::ProcId t : level) cands.push_back({pre, t});
    std::vector<ccs::ProcId> next{store.nil()};
    std::set<ccs::ProcId> seen{store.nil()};
    // multisets of 1..width candidates as non-decreasing index tuples
    std::vector<size_t> pick;
    std::function<void()> emit = [&] {
      std::vector<ccs::Branch> branches;
      for (size_t i : pick) branches.push_back(cands[i]);
      ccs::ProcId p = store.sum(std::move(branches));
      if (seen.insert(p).second) next.push_back(p);
    };
    std::function<void(size_t)> grow = [&](size_t from) {
      if (!pick.empty()) emit();
      if (static_cast<int>(pick.size()) == width) return;
      for (size_t i = from; i < cands.size(); i++) {
        pick.push_back(i);
        grow(i);
        pick.pop_back();
      }
    };
    grow(0);
    level = std::move(next);
  }
  return TestFamily{ctx, level};
}

// ---------------------------------------------------------------------------
// Standard fair testing

Verdict fair_equiv_standard(ccs::ProcessStore& store, ccs::ProcId p, ccs::ProcId q,
                            ccs::Context ctx, const TestFamily& tests, const Budget& budget) {
  if (tests.ctx.gamma != ctx.gamma)
    throw std::invalid_argument("test family context does not match the tested context");
  struct Row {
    Verdict left, right;
    std::string error;
  };
  std::vector<Row> rows(tests.tests.size());
  parallel_for(tests.tests.size(), budget.jobs, [&](size_t i) {
    try {
      ccs::ProcId tp = store.par(p, tests.tests[i]);
      ccs::ProcId tq = store.par(q, tests.tests[i]);
      lts::Lts lp = lts::ccs_lts(store, ctx, tp);
      lts::Lts lq = lts::ccs_lts(store, ctx, tq);
      rows[i].left = bot_s(lp, lp.initial, budget);
      rows[i].right = bot_s(lq, lq.initial, budget);
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  });
  Verdict v;
  v.family_size = static_cast<long>(tests.tests.size());
  v.kind = Verdict::Kind::Pass;
  auto name = [&](Verdict::Kind k) {
    return k == Verdict::Kind::Pass ? "pass" : k == Verdict::Kind::Fail ? "fail" : "inconclusive";
  };
  for (size_t i = 0; i < rows.size(); i++) {
    v.budget_used += rows[i].left.budget_used + rows[i].right.budget_used;
    if (!rows[i].error.empty()) {
      if (v.kind == Verdict::Kind::Pass) {
        v.kind = Verdict::Kind::Inconclusive;
        v.note = rows[i].error;
      }
      continue;
    }
    const Verdict& a = rows[i].left;
    const Verdict& b = rows[i].right;
    bool defa = a.kind != Verdict::Kind::Inconclusive;
    bool defb = b.kind != Verdict::Kind::Inconclusive;
    if (defa && defb && a.kind != b.kind) {
      v.kind = Verdict::Kind::Fail;
      const Verdict& failing = a.kind == Verdict::Kind::Fail ? a : b;
      v.witness = {{"test_index", i},
                   {"test", ccs::to_string(store, tests.tests[i])},
                   {"left", name(a.kind)},
                   {"right", name(b.kind)},
                   {"failing_side_witness", failing.witness}};
      return v;
    }
    if ((!defa || !defb) && v.kind == Verdict::Kind::Pass) {
      v.kind = Verdict::Kind::Inconclusive;
      v.note = "budget exhausted on test " + std::to_string(i);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Semantic side

InterfacedFamily semantic_subject(strat::StrategyStore& ss, const ccs::ProcessStore& ps,
                                  ccs::Context ctx, ccs::ProcId p) {
  InterfacedFamily out;
  out.interface_channels = ctx.gamma;
  for (int c = 0; c < ctx.gamma; c++) out.embed.push_back(c);
  out.family.pos = game::single_player(ctx.gamma);
  out.family.components = {strat::translate_ccs(ss, ps, ctx, p)};
  return out;
}

namespace {

struct PlayBudgetHit {};

// closed-world strategy transitions from a fully definite configuration
std::vector<std::pair<lts::FullLabel, lts::SState>> closed_world_steps(
    const strat::StrategyStore& store, const lts::SState& s, int max_arity) {
  auto all = lts::strategy_step(store, s, max_arity);
  std::vector<std::pair<lts::FullLabel, lts::SState>> out;
  for (auto& e : all)
    if (game::is_closed_world(e.first.kind)) out.push_back(std::move(e));
  return out;
}

struct SemanticSearch {
  const strat::StrategyStore& store;
  const strat::StrategyFamily& f;
  int k;
  const Budget& budget;
  long used = 0;
  Verdict verdict;  // set on failure

  void charge() {
    if (++used > budget.state_cap) throw PlayBudgetHit{};
  }

  // decoded per-player definite configuration of (play, element)
  lts::SState decode_config(const game::Play& u, const strat::ExtendResult& ext,
                            const std::vector<long>& elem) {
    lts::SState s;
    s.pos = u.moves.empty() ? u.initial : u.moves.back().final_pos;
    s.defs.resize(s.pos.players.size(), -1);
    for (size_t p = 0; p < ext.forest.final_nodes.size(); p++) {
      int node = ext.forest.final_nodes[p];
      const auto& n = ext.forest.nodes[static_cast<size_t>(node)];
      strat::StratId comp = f.components[static_cast<size_t>(n.root)];
      s.defs[p] = strat::decode_state(store, comp, n.view, elem[static_cast<size_t>(node)]);
    }
    return s;
  }

  // reachability of a tick transition from the configuration, with canonical
  // deduplication; classifies a failure as saturated when the search
  // exhausts without finding one
  void classify(const lts::SState& cfg) {
    std::vector<lts::SState> queue{cfg};
    std::set<std::string> seen;
    std::vector<uint64_t> att;
    for (strat::DefId d : cfg.defs) att.push_back(static_cast<uint64_t>(d));
    seen.insert(game::canonical_form(cfg.pos, att).key);
    long visited = 0;
    for (size_t head = 0; head < queue.size(); head++) {
      if (++visited > budget.state_cap) {
        verdict.saturated = false;
        return;
      }
      for (const auto& [l, nxt] : closed_world_steps(store, queue[head], budget.max_arity)) {
        if (l.kind.tag == game::MoveTag::Tick) {
          verdict.saturated = false;  // a success exists beyond the depth bound
          return;
        }
        std::vector<uint64_t> a2;
        for (strat::DefId d : nxt.defs) a2.push_back(static_cast<uint64_t>(d));
        if (seen.insert(game::canonical_form(nxt.pos, a2).key).second) queue.push_back(nxt);
      }
    }
    verdict.saturated = true;
  }

  // returns the satisfied subset of the play's elements; sets verdict and
  // throws on the first unsatisfiable element
  struct FailFound {};
  std::vector<std::vector<long>> search(const game::Play& u) {
    charge();
    strat::ExtendResult ext = strat::extend(store, f, u);
    if (ext.elements.empty()) return {};
    if (game::is_successful(u)) return ext.elements;
    std::vector<std::vector<long>> sat;
    if (static_cast<int>(u.moves.size()) < k) {
      game::Position cur = u.moves.empty() ? u.initial : u.moves.back().final_pos;
      size_t keep = ext.forest.nodes.size();
      auto en = game::enabled_moves(cur, game::MoveFilter::ClosedWorldOnly, budget.max_arity);
      std::set<std::vector<long>> satset;
      for (const auto& mv : en.moves) {
        game::Play u2 = u;
        u2.moves.push_back(mv);
        for (const auto& elem : search(u2)) {
          std::vector<long> restricted(elem.begin(), elem.begin() + static_cast<long>(keep));
          satset.insert(std::move(restricted));
        }
      }
      sat.assign(satset.begin(), satset.end());
    }
    if (static_cast<int>(u.moves.size()) < k) {
      for (const auto& elem : ext.elements) {
        if (std::binary_search(sat.begin(), sat.end(), elem)) continue;
        verdict.kind = Verdict::Kind::Fail;
        ccs::Json moves = ccs::Json::array();
        for (const auto& mv : u.moves)
          moves.push_back(lts::to_string(lts::FullLabel{mv.kind, mv.anchor}));
        verdict.witness = {{"play", moves}, {"element", elem}};
        classify(decode_config(u, ext, elem));
        throw FailFound{};
      }
    }
    return sat;
  }
};

}  // namespace

Verdict semantic_bot(const strat::StrategyStore& store, const strat::StrategyFamily& f, int k,
                     const Budget& budget) {
  SemanticSearch s{store, f, k, budget, 0, {}};
  s.verdict.depth = k;
  game::Play empty;
  empty.initial = f.pos;
  try {
    s.search(empty);
    s.verdict.kind = Verdict::Kind::Pass;
  } catch (const SemanticSearch::FailFound&) {
    // verdict already filled
  } catch (const PlayBudgetHit&) {
    s.verdict.kind = Verdict::Kind::Inconclusive;
    s.verdict.note = "play budget exhausted";
  }
  s.verdict.budget_used = s.used;
  return s.verdict;
}

Verdict passes(const strat::StrategyStore& store, const InterfacedFamily& subject,
               const SemanticTest& test, int k, const Budget& budget) {
  if (subject.interface_channels != test.interface_channels)
    throw std::invalid_argument("subject and test interfaces differ");
  strat::ChannelGlue glue{subject.interface_channels, subject.embed, test.embed};
  strat::GluedFamily glued = strat::pair(subject.family, test.family, glue);
  Verdict v = semantic_bot(store, glued.family, k, budget);
  v.family_size = 1;
  return v;
}

Verdict fair_equiv_semantic(const strat::StrategyStore& store, const InterfacedFamily& s1,
                            const InterfacedFamily& s2, const std::vector<SemanticTest>& tests,
                            int k, const Budget& budget) {
  if (s1.interface_channels != s2.interface_channels)
    throw std::invalid_argument("compared subjects have different interfaces");
  struct Row {
    Verdict left, right;
    std::string error;
  };
  std::vector<Row> rows(tests.size());
  parallel_for(tests.size(), budget.jobs, [&](size_t i) {
    try {
      rows[i].left = passes(store, s1, tests[i], k, budget);
      rows[i].right = passes(store, s2, tests[i], k, budget);
    } catch (const std::exception& e) {
      rows[i].error = e.what();
    }
  });
  Verdict v;
  v.kind = Verdict::Kind::Pass;
  v.depth = k;
  v.family_size = static_cast<long>(tests.size());
  auto name = [&](const Verdict& w) {
    return w.kind == Verdict::Kind::Pass ? "pass"
           : w.kind == Verdict::Kind::Fail ? (w.saturated ? "fail" : "fail(depth-bounded)")
                                           : "inconclusive";
  };
  for (size_t i = 0; i < rows.size(); i++) {
    v.budget_used += rows[i].left.budget_used + rows[i].right.budget_used;
    if (!rows[i].error.empty()) {
      if (v.kind == Verdict::Kind::Pass) {
        v.kind = Verdict::Kind::Inconclusive;
        v.note = rows[i].error;
      }
      continue;
    }
    const Verdict& a = rows[i].left;
    const Verdict& b = rows[i].right;
    if (a.kind == Verdict::Kind::Inconclusive || b.kind == Verdict::Kind::Inconclusive) {
      if (v.kind == Verdict::Kind::Pass) {
        v.kind = Verdict::Kind::Inconclusive;
        v.note = "budget exhausted on test " + std::to_string(i);
      }
      continue;
    }
    if (a.kind == b.kind) continue;
    // one side passes, the other fails: definite only when the failure is
    // saturated, otherwise a deeper k could flip it
    const Verdict& failing = a.kind == Verdict::Kind::Fail ? a : b;
    if (!failing.saturated) {
      if (v.kind == Verdict::Kind::Pass) {
        v.kind = Verdict::Kind::Inconclusive;
        v.note = "depth-bounded disagreement on test " + std::to_string(i);
      }
      continue;
    }
    v.kind = Verdict::Kind::Fail;
    v.witness = {{"test_index", i},
                 {"left", name(a)},
                 {"right", name(b)},
                 {"failing_side_witness", failing.witness}};
    return v;
  }
  return v;
}

}  // namespace ccsgame::fairtest
