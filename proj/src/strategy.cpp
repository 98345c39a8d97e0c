#include "ccsgame/strategy.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace ccsgame::strat {

using game::BasicMove;
using game::ViewPath;

int basic_count(int arity) { return 4 + 2 * arity; }

int basic_index(int arity, const BasicMove& b) {
  switch (b.tag) {
    case BasicMove::Tag::ParaL:
      return 0;
    case BasicMove::Tag::ParaR:
      return 1;
    case BasicMove::Tag::Tick:
      return 2;
    case BasicMove::Tag::Nu:
      return 3;
    case BasicMove::Tag::In:
    case BasicMove::Tag::Out:
      if (b.channel < 1 || b.channel > arity)
        throw std::out_of_range("basic move channel outside arity");
      return 4 + 2 * (b.channel - 1) + (b.tag == BasicMove::Tag::Out ? 1 : 0);
  }
  throw std::logic_error("bad basic move");
}

BasicMove basic_at(int arity, int index) {
  switch (index) {
    case 0:
      return {BasicMove::Tag::ParaL, 0};
    case 1:
      return {BasicMove::Tag::ParaR, 0};
    case 2:
      return {BasicMove::Tag::Tick, 0};
    case 3:
      return {BasicMove::Tag::Nu, 0};
    default: {
      int k = index - 4;
      int channel = k / 2 + 1;
      if (channel > arity) throw std::out_of_range("basic index outside arity");
      return {(k % 2 == 0) ? BasicMove::Tag::In : BasicMove::Tag::Out, channel};
    }
  }
}

int basic_result_arity(int arity, const BasicMove& b) {
  return b.tag == BasicMove::Tag::Nu ? arity + 1 : arity;
}

game::BasicMove guard_basic(const Guard& g) {
  switch (g.kind) {
    case Guard::Kind::Tick:
      return {BasicMove::Tag::Tick, 0};
    case Guard::Kind::Nu:
      return {BasicMove::Tag::Nu, 0};
    case Guard::Kind::In:
      return {BasicMove::Tag::In, g.channel};
    case Guard::Kind::Out:
      return {BasicMove::Tag::Out, g.channel};
  }
  throw std::logic_error("bad guard");
}

// ---------------------------------------------------------------------------
// Store

StratId StrategyStore::intern_strategy(std::vector<DefId> parts) {
  auto it = strat_index_.find(parts);
  if (it != strat_index_.end()) return it->second;
  auto id = static_cast<StratId>(strats_.size());
  auto node = std::make_unique<StratNode>();
  node->parts = parts;
  strats_.push_back(std::move(node));
  strat_index_.emplace(std::move(parts), id);
  return id;
}

StratId StrategyStore::strategy(std::vector<DefId> parts) {
  std::lock_guard lock(mu_);
  return intern_strategy(std::move(parts));
}

StratId StrategyStore::empty_strategy() { return strategy({}); }

StratId StrategyStore::oplus(const std::vector<StratId>& summands) {
  std::lock_guard lock(mu_);
  if (summands.size() == 1) return summands[0];
  auto it = pending_index_.find(summands);
  if (it != pending_index_.end()) return it->second;
  bool unresolved = false;
  for (StratId s : summands)
    if (strats_.at(static_cast<size_t>(s))->placeholder) unresolved = true;
  if (unresolved) {
    // summands include a recursion slot that is not filled yet; flattening
    // now would lose the cycle, so park the node until the fill happens
    auto id = static_cast<StratId>(strats_.size());
    auto node = std::make_unique<StratNode>();
    node->placeholder = true;
    node->pending_summands = summands;
    strats_.push_back(std::move(node));
    pending_index_.emplace(summands, id);
    pending_.push_back(id);
    return id;
  }
  std::vector<DefId> all;
  for (StratId s : summands) {
    const auto& ps = strats_.at(static_cast<size_t>(s))->parts;
    all.insert(all.end(), ps.begin(), ps.end());
  }
  return intern_strategy(std::move(all));
}

StratId StrategyStore::placeholder_strategy() {
  std::lock_guard lock(mu_);
  auto id = static_cast<StratId>(strats_.size());
  auto node = std::make_unique<StratNode>();
  node->placeholder = true;
  strats_.push_back(std::move(node));
  return id;
}

void StrategyStore::fill_strategy(StratId s, std::vector<DefId> parts) {
  std::lock_guard lock(mu_);
  auto& node = *strats_.at(static_cast<size_t>(s));
  if (!node.placeholder) throw std::logic_error("filling a non-placeholder strategy");
  node.parts = std::move(parts);
  node.placeholder = false;
  resolve_pending_locked();
}

void StrategyStore::resolve_pending_locked() {
  bool progress = true;
  while (progress) {
    progress = false;
    for (size_t k = 0; k < pending_.size();) {
      auto& node = *strats_.at(static_cast<size_t>(pending_[k]));
      bool ready = true;
      for (StratId s : node.pending_summands)
        if (strats_.at(static_cast<size_t>(s))->placeholder) ready = false;
      if (!ready) {
        k++;
        continue;
      }
      std::vector<DefId> all;
      for (StratId s : node.pending_summands) {
        const auto& ps = strats_.at(static_cast<size_t>(s))->parts;
        all.insert(all.end(), ps.begin(), ps.end());
      }
      node.parts = std::move(all);
      node.placeholder = false;
      node.pending_summands.clear();
      pending_.erase(pending_.begin() + static_cast<long>(k));
      progress = true;
    }
  }
}

const std::vector<DefId>& StrategyStore::parts(StratId s) const {
  std::lock_guard lock(mu_);
  return strats_.at(static_cast<size_t>(s))->parts;
}

int StrategyStore::strat_arity(StratId s) const {
  std::lock_guard lock(mu_);
  const auto& ps = strats_.at(static_cast<size_t>(s))->parts;
  return ps.empty() ? -1 : defs_.at(static_cast<size_t>(ps.front()))->arity;
}

DefId StrategyStore::definite(int arity, std::vector<StratId> table) {
  std::lock_guard lock(mu_);
  if (static_cast<int>(table.size()) != basic_count(arity))
    throw std::invalid_argument("definite table size does not match arity");
  for (int k = 0; k < static_cast<int>(table.size()); k++) {
    const auto& ps = strats_.at(static_cast<size_t>(table[static_cast<size_t>(k)]))->parts;
    if (ps.empty()) continue;
    int want = basic_result_arity(arity, basic_at(arity, k));
    int got = defs_.at(static_cast<size_t>(ps.front()))->arity;
    if (got != want) throw std::invalid_argument("residual arity mismatch in definite table");
  }
  auto key = std::make_pair(arity, table);
  auto it = def_index_.find(key);
  if (it != def_index_.end()) return it->second;
  auto id = static_cast<DefId>(defs_.size());
  auto node = std::make_unique<DefNode>();
  node->arity = arity;
  node->table = std::move(table);
  defs_.push_back(std::move(node));
  def_index_.emplace(std::move(key), id);
  return id;
}

DefId StrategyStore::deadlock(int arity) {
  StratId e = empty_strategy();
  return definite(arity, std::vector<StratId>(static_cast<size_t>(basic_count(arity)), e));
}

int StrategyStore::def_arity(DefId d) const {
  std::lock_guard lock(mu_);
  return defs_.at(static_cast<size_t>(d))->arity;
}

const std::vector<StratId>& StrategyStore::table(DefId d) const {
  std::lock_guard lock(mu_);
  return defs_.at(static_cast<size_t>(d))->table;
}

TermId StrategyStore::fork(int arity, TermId left, TermId right) {
  std::lock_guard lock(mu_);
  auto key = std::make_tuple(arity, left, right);
  auto it = fork_index_.find(key);
  if (it != fork_index_.end()) return it->second;
  auto id = static_cast<TermId>(terms_.size());
  auto node = std::make_unique<TermNode>();
  node->fork = true;
  node->arity = arity;
  node->left = left;
  node->right = right;
  terms_.push_back(std::move(node));
  fork_index_.emplace(key, id);
  return id;
}

TermId StrategyStore::guarded_sum(int arity, std::vector<std::pair<Guard, TermId>> branches) {
  std::lock_guard lock(mu_);
  auto key = std::make_pair(arity, branches);
  auto it = gsum_index_.find(key);
  if (it != gsum_index_.end()) return it->second;
  auto id = static_cast<TermId>(terms_.size());
  auto node = std::make_unique<TermNode>();
  node->arity = arity;
  node->branches = std::move(branches);
  terms_.push_back(std::move(node));
  gsum_index_.emplace(std::move(key), id);
  return id;
}

TermId StrategyStore::placeholder_term(int arity, bool is_fork) {
  std::lock_guard lock(mu_);
  auto id = static_cast<TermId>(terms_.size());
  auto node = std::make_unique<TermNode>();
  node->fork = is_fork;
  node->arity = arity;
  node->placeholder = true;
  terms_.push_back(std::move(node));
  return id;
}

void StrategyStore::fill_fork(TermId t, TermId left, TermId right) {
  std::lock_guard lock(mu_);
  auto& node = *terms_.at(static_cast<size_t>(t));
  if (!node.placeholder || !node.fork) throw std::logic_error("not a fork placeholder");
  node.left = left;
  node.right = right;
  node.placeholder = false;
}

void StrategyStore::fill_guarded_sum(TermId t, std::vector<std::pair<Guard, TermId>> branches) {
  std::lock_guard lock(mu_);
  auto& node = *terms_.at(static_cast<size_t>(t));
  if (!node.placeholder || node.fork) throw std::logic_error("not a sum placeholder");
  node.branches = std::move(branches);
  node.placeholder = false;
}

bool StrategyStore::is_fork(TermId t) const {
  std::lock_guard lock(mu_);
  return terms_.at(static_cast<size_t>(t))->fork;
}

int StrategyStore::term_arity(TermId t) const {
  std::lock_guard lock(mu_);
  return terms_.at(static_cast<size_t>(t))->arity;
}

TermId StrategyStore::fork_left(TermId t) const {
  std::lock_guard lock(mu_);
  return terms_.at(static_cast<size_t>(t))->left;
}

TermId StrategyStore::fork_right(TermId t) const {
  std::lock_guard lock(mu_);
  return terms_.at(static_cast<size_t>(t))->right;
}

const std::vector<std::pair<Guard, TermId>>& StrategyStore::branches(TermId t) const {
  std::lock_guard lock(mu_);
  return terms_.at(static_cast<size_t>(t))->branches;
}

StratId StrategyStore::interpret_locked(TermId t, std::map<TermId, StratId>& memo, bool swapped) {
  auto it = memo.find(t);
  if (it != memo.end()) return it->second;
  StratId slot = placeholder_strategy();
  memo.emplace(t, slot);
  const TermNode& node = *terms_.at(static_cast<size_t>(t));
  int n = node.arity;
  StratId e = intern_strategy({});
  std::vector<StratId> tab(static_cast<size_t>(basic_count(n)), e);
  if (node.fork) {
    StratId l = interpret_locked(node.left, memo, swapped);
    StratId r = interpret_locked(node.right, memo, swapped);
    if (swapped) std::swap(l, r);
    tab[static_cast<size_t>(basic_index(n, {BasicMove::Tag::ParaL, 0}))] = l;
    tab[static_cast<size_t>(basic_index(n, {BasicMove::Tag::ParaR, 0}))] = r;
  } else {
    std::map<int, std::vector<StratId>> sums;
    for (const auto& [g, cont] : node.branches)
      sums[basic_index(n, guard_basic(g))].push_back(interpret_locked(cont, memo, swapped));
    for (auto& [idx, ids] : sums) tab[static_cast<size_t>(idx)] = oplus(ids);
  }
  fill_strategy(slot, {definite(n, std::move(tab))});
  return slot;
}

StratId StrategyStore::interpret(TermId t) {
  std::lock_guard lock(mu_);
  return interpret_locked(t, interp_memo_, false);
}

StratId StrategyStore::interpret_swapped(TermId t) {
  std::lock_guard lock(mu_);
  return interpret_locked(t, interp_swapped_memo_, true);
}

StratId interpret_term(StrategyStore& store, TermId t) { return store.interpret(t); }

// ---------------------------------------------------------------------------
// Structural equality of unfoldings

namespace {

bool eq_strats(const StrategyStore& store, StratId a, StratId b,
               std::set<std::pair<StratId, StratId>>& assumed);

bool eq_defs(const StrategyStore& store, DefId a, DefId b,
             std::set<std::pair<StratId, StratId>>& assumed) {
  if (store.def_arity(a) != store.def_arity(b)) return false;
  const auto& ta = store.table(a);
  const auto& tb = store.table(b);
  for (size_t k = 0; k < ta.size(); k++)
    if (!eq_strats(store, ta[k], tb[k], assumed)) return false;
  return true;
}

bool eq_strats(const StrategyStore& store, StratId a, StratId b,
               std::set<std::pair<StratId, StratId>>& assumed) {
  if (a == b) return true;
  if (!assumed.emplace(a, b).second) return true;  // coinductive hypothesis
  const auto& pa = store.parts(a);
  const auto& pb = store.parts(b);
  if (pa.size() != pb.size()) return false;
  for (size_t k = 0; k < pa.size(); k++)
    if (!eq_defs(store, pa[k], pb[k], assumed)) return false;
  return true;
}

}  // namespace

bool struct_equal(const StrategyStore& store, StratId a, StratId b) {
  std::set<std::pair<StratId, StratId>> assumed;
  return eq_strats(store, a, b, assumed);
}

bool struct_equal_terms(const StrategyStore& store, TermId a, TermId b) {
  std::set<std::pair<TermId, TermId>> assumed;
  struct Rec {
    const StrategyStore& store;
    std::set<std::pair<TermId, TermId>>& assumed;
    bool operator()(TermId x, TermId y) {
      if (x == y) return true;
      if (!assumed.emplace(x, y).second) return true;
      if (store.is_fork(x) != store.is_fork(y)) return false;
      if (store.term_arity(x) != store.term_arity(y)) return false;
      if (store.is_fork(x))
        return (*this)(store.fork_left(x), store.fork_left(y)) &&
               (*this)(store.fork_right(x), store.fork_right(y));
      const auto& bx = store.branches(x);
      const auto& by = store.branches(y);
      if (bx.size() != by.size()) return false;
      for (size_t k = 0; k < bx.size(); k++) {
        if (bx[k].first != by[k].first) return false;
        if (!(*this)(bx[k].second, by[k].second)) return false;
      }
      return true;
    }
  } rec{store, assumed};
  return rec(a, b);
}

// ---------------------------------------------------------------------------
// Translations

namespace {

struct Translator {
  StrategyStore& store;
  const ccs::ProcessStore& ps;

  StratId go(int gamma, ccs::ProcId p, std::map<std::string, StratId>& env) {
    const ccs::Process& n = ps.at(p);
    if (n.kind == ccs::ProcKind::RecVar) {
      auto it = env.find(n.name);
      if (it == env.end()) throw std::invalid_argument("unbound recursion variable " + n.name);
      return it->second;
    }
    if (n.kind == ccs::ProcKind::RecDef) {
      StratId slot = store.placeholder_strategy();
      auto inner = env;
      ccs::ProcId core = p;
      while (ps.at(core).kind == ccs::ProcKind::RecDef) {
        inner[ps.at(core).name] = slot;
        core = ps.at(core).body;
      }
      if (ps.at(core).kind == ccs::ProcKind::RecVar)
        throw std::invalid_argument("unguarded recursion");
      StratId body = go(gamma, core, inner);
      store.fill_strategy(slot, store.parts(body));
      return slot;
    }
    StratId e = store.empty_strategy();
    std::vector<StratId> tab(static_cast<size_t>(basic_count(gamma)), e);
    switch (n.kind) {
      case ccs::ProcKind::Par: {
        tab[static_cast<size_t>(basic_index(gamma, {BasicMove::Tag::ParaL, 0}))] =
            go(gamma, n.left, env);
        tab[static_cast<size_t>(basic_index(gamma, {BasicMove::Tag::ParaR, 0}))] =
            go(gamma, n.right, env);
        break;
      }
      case ccs::ProcKind::Nu: {
        tab[static_cast<size_t>(basic_index(gamma, {BasicMove::Tag::Nu, 0}))] =
            go(gamma + 1, n.body, env);
        break;
      }
      case ccs::ProcKind::Sum: {
        std::map<int, std::vector<StratId>> sums;
        for (const auto& b : n.branches) {
          BasicMove bm;
          switch (b.prefix.kind) {
            case ccs::PrefixKind::In:
              bm = {BasicMove::Tag::In, b.prefix.channel};
              break;
            case ccs::PrefixKind::Out:
              bm = {BasicMove::Tag::Out, b.prefix.channel};
              break;
            case ccs::PrefixKind::Tick:
              bm = {BasicMove::Tag::Tick, 0};
              break;
          }
          sums[basic_index(gamma, bm)].push_back(go(gamma, b.cont, env));
        }
        for (const auto& [idx, summands] : sums) tab[static_cast<size_t>(idx)] = store.oplus(summands);
        break;
      }
      default:
        throw std::logic_error("unreachable");
    }
    return store.strategy({store.definite(gamma, std::move(tab))});
  }
};

struct Theta {
  StrategyStore& store;
  const ccs::ProcessStore& ps;

  TermId go(int gamma, ccs::ProcId p, std::map<std::string, TermId>& env) {
    const ccs::Process& n = ps.at(p);
    if (n.kind == ccs::ProcKind::RecVar) {
      auto it = env.find(n.name);
      if (it == env.end()) throw std::invalid_argument("unbound recursion variable " + n.name);
      return it->second;
    }
    if (n.kind == ccs::ProcKind::RecDef) {
      ccs::ProcId core = p;
      std::vector<std::string> names;
      while (ps.at(core).kind == ccs::ProcKind::RecDef) {
        names.push_back(ps.at(core).name);
        core = ps.at(core).body;
      }
      if (ps.at(core).kind == ccs::ProcKind::RecVar)
        throw std::invalid_argument("unguarded recursion");
      TermId slot = store.placeholder_term(gamma, ps.at(core).kind == ccs::ProcKind::Par);
      auto inner = env;
      for (const auto& x : names) inner[x] = slot;
      fill(gamma, core, slot, inner);
      return slot;
    }
    TermId slot = store.placeholder_term(gamma, n.kind == ccs::ProcKind::Par);
    fill(gamma, p, slot, env);
    return slot;
  }

  void fill(int gamma, ccs::ProcId core, TermId slot, std::map<std::string, TermId>& env) {
    const ccs::Process& n = ps.at(core);
    switch (n.kind) {
      case ccs::ProcKind::Par:
        store.fill_fork(slot, go(gamma, n.left, env), go(gamma, n.right, env));
        break;
      case ccs::ProcKind::Nu:
        store.fill_guarded_sum(slot, {{Guard{Guard::Kind::Nu, 0}, go(gamma + 1, n.body, env)}});
        break;
      case ccs::ProcKind::Sum: {
        std::vector<std::pair<Guard, TermId>> branches;
        for (const auto& b : n.branches) {
          Guard g;
          switch (b.prefix.kind) {
            case ccs::PrefixKind::In:
              g = {Guard::Kind::In, b.prefix.channel};
              break;
            case ccs::PrefixKind::Out:
              g = {Guard::Kind::Out, b.prefix.channel};
              break;
            case ccs::PrefixKind::Tick:
              g = {Guard::Kind::Tick, 0};
              break;
          }
          branches.emplace_back(g, go(gamma, b.cont, env));
        }
        store.fill_guarded_sum(slot, std::move(branches));
        break;
      }
      default:
        throw std::logic_error("unreachable");
    }
  }
};

}  // namespace

StratId translate_ccs(StrategyStore& store, const ccs::ProcessStore& ps, ccs::Context ctx,
                      ccs::ProcId p) {
  std::map<std::string, StratId> env;
  return Translator{store, ps}.go(ctx.gamma, p, env);
}

TermId theta(StrategyStore& store, const ccs::ProcessStore& ps, ccs::Context ctx, ccs::ProcId p) {
  std::map<std::string, TermId> env;
  return Theta{store, ps}.go(ctx.gamma, p, env);
}

// ---------------------------------------------------------------------------
// Residuals and view counting

StratId residual(const StrategyStore& store, DefId d, const BasicMove& b) {
  return store.table(d).at(static_cast<size_t>(basic_index(store.def_arity(d), b)));
}

DefId restrict_at(const StrategyStore& store, StratId s, int i) {
  return store.parts(s).at(static_cast<size_t>(i));
}

namespace {

struct ViewCounter {
  const StrategyStore& store;
  const ViewPath& v;
  size_t len;
  std::map<std::pair<StratId, size_t>, long> memo;

  long count(StratId s, size_t pos) {
    if (pos == len) return static_cast<long>(store.parts(s).size());
    auto key = std::make_pair(s, pos);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    long total = 0;
    for (DefId d : store.parts(s)) total += count(residual(store, d, v.moves[pos]), pos + 1);
    memo.emplace(key, total);
    return total;
  }
};

}  // namespace

long view_count(const StrategyStore& store, StratId s, const ViewPath& v, size_t len) {
  if (len > v.moves.size()) throw std::out_of_range("view prefix longer than the view");
  if (!valid_view(v)) throw std::invalid_argument("invalid view");
  int sa = store.strat_arity(s);
  if (sa >= 0 && sa != v.start_arity) throw std::invalid_argument("view arity mismatch");
  ViewCounter vc{store, v, len, {}};
  return vc.count(s, 0);
}

long value_on_view(const StrategyStore& store, StratId s, const ViewPath& v) {
  return view_count(store, s, v, v.moves.size());
}

namespace {

// shared recursion for restriction and decoding; to_len == npos decodes
long walk_state(const StrategyStore& store, StratId s, const ViewPath& v, size_t pos,
                size_t from_len, size_t to_len, long idx, DefId* out_def) {
  const auto& parts = store.parts(s);
  if (pos == from_len) {
    // idx is the part index here
    if (idx < 0 || idx >= static_cast<long>(parts.size())) throw std::out_of_range("bad state");
    if (out_def) *out_def = parts[static_cast<size_t>(idx)];
    return idx;
  }
  ViewCounter vc_long{store, v, from_len, {}};
  long offset_long = 0;
  size_t chosen = parts.size();
  long inner = idx;
  for (size_t k = 0; k < parts.size(); k++) {
    long block = vc_long.count(residual(store, parts[k], v.moves[pos]), pos + 1);
    if (inner < block) {
      chosen = k;
      break;
    }
    inner -= block;
    offset_long += block;
  }
  if (chosen == parts.size()) throw std::out_of_range("bad state");
  if (pos == to_len) return static_cast<long>(chosen);
  long prefix_short = 0;
  if (to_len != std::string::npos) {
    ViewCounter vc_short{store, v, to_len, {}};
    for (size_t k = 0; k < chosen; k++)
      prefix_short += vc_short.count(residual(store, parts[k], v.moves[pos]), pos + 1);
  }
  long rec = walk_state(store, residual(store, parts[chosen], v.moves[pos]), v, pos + 1, from_len,
                        to_len, inner, out_def);
  return prefix_short + rec;
}

}  // namespace

long restrict_state(const StrategyStore& store, StratId s, const ViewPath& v, size_t from_len,
                    size_t to_len, long idx) {
  if (to_len > from_len) throw std::invalid_argument("restriction target longer than source");
  return walk_state(store, s, v, 0, from_len, to_len, idx, nullptr);
}

DefId decode_state(const StrategyStore& store, StratId s, const ViewPath& v, long idx) {
  DefId out = -1;
  walk_state(store, s, v, 0, v.moves.size(), std::string::npos, idx, &out);
  return out;
}

// ---------------------------------------------------------------------------
// Pairing

GluedFamily pair(const StrategyFamily& left, const StrategyFamily& right, const ChannelGlue& glue) {
  if (left.components.size() != left.pos.players.size() ||
      right.components.size() != right.pos.players.size())
    throw std::invalid_argument("family components do not match the position's players");
  if (static_cast<int>(glue.into_left.size()) != glue.interface_channels ||
      static_cast<int>(glue.into_right.size()) != glue.interface_channels)
    throw std::invalid_argument("interface map size mismatch");
  for (int c : glue.into_left)
    if (c < 0 || c >= left.pos.channels) throw std::invalid_argument("interface map out of range");
  for (int c : glue.into_right)
    if (c < 0 || c >= right.pos.channels) throw std::invalid_argument("interface map out of range");

  int nl = left.pos.channels, nr = right.pos.channels;
  std::vector<int> parent(static_cast<size_t>(nl + nr));
  for (size_t k = 0; k < parent.size(); k++) parent[k] = static_cast<int>(k);
  auto find = [&](int x) {
    while (parent[static_cast<size_t>(x)] != x) x = parent[static_cast<size_t>(x)] =
                                                    parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
    return x;
  };
  for (int k = 0; k < glue.interface_channels; k++) {
    int a = find(glue.into_left[static_cast<size_t>(k)]);
    int b = find(nl + glue.into_right[static_cast<size_t>(k)]);
    if (a != b) parent[static_cast<size_t>(a)] = b;
  }
  GluedFamily out;
  std::map<int, int> cls;
  out.left_chan.resize(static_cast<size_t>(nl));
  out.right_chan.resize(static_cast<size_t>(nr));
  int next = 0;
  for (int k = 0; k < nl + nr; k++) {
    int root = find(k);
    auto it = cls.find(root);
    int c = (it == cls.end()) ? (cls[root] = next++) : it->second;
    if (k < nl)
      out.left_chan[static_cast<size_t>(k)] = c;
    else
      out.right_chan[static_cast<size_t>(k - nl)] = c;
  }
  out.family.pos.channels = next;
  auto add_players = [&](const StrategyFamily& f, const std::vector<int>& chan) {
    for (size_t p = 0; p < f.pos.players.size(); p++) {
      game::Player pl = f.pos.players[p];
      for (auto& c : pl.assign) c = chan[static_cast<size_t>(c)];
      out.family.pos.players.push_back(std::move(pl));
      out.family.components.push_back(f.components[p]);
    }
  };
  add_players(left, out.left_chan);
  add_players(right, out.right_chan);
  return out;
}

// ---------------------------------------------------------------------------
// Trace forests and behaviour elements

int TraceForest::node_of(int root, const std::vector<BasicMove>& trace) const {
  for (size_t k = 0; k < nodes.size(); k++)
    if (nodes[k].root == root && nodes[k].view.moves == trace) return static_cast<int>(k);
  return -1;
}

TraceForest trace_forest(const game::Play& play) {
  TraceForest f;
  std::vector<int> cur;  // current player -> node
  for (size_t p = 0; p < play.initial.players.size(); p++) {
    ViewPath v;
    v.start_arity = play.initial.players[p].arity;
    f.nodes.push_back({static_cast<int>(p), std::move(v), -1});
    cur.push_back(static_cast<int>(p));
  }
  for (const auto& mv : play.moves) {
    std::vector<int> next(mv.final_pos.players.size(), -1);
    auto extend_node = [&](int parent_node, const BasicMove& b) {
      TraceForest::Node n;
      n.root = f.nodes[static_cast<size_t>(parent_node)].root;
      n.view = f.nodes[static_cast<size_t>(parent_node)].view;
      n.view.moves.push_back(b);
      n.parent = parent_node;
      f.nodes.push_back(std::move(n));
      return static_cast<int>(f.nodes.size() - 1);
    };
    for (size_t p = 0; p < mv.player_map.size(); p++) {
      int a0 = mv.player_map[p][0], a1 = mv.player_map[p][1];
      switch (mv.kind.tag) {
        case game::MoveTag::Para:
          if (static_cast<int>(p) == mv.anchor.player) {
            next[static_cast<size_t>(a0)] = extend_node(cur[p], {BasicMove::Tag::ParaL, 0});
            next[static_cast<size_t>(a1)] = extend_node(cur[p], {BasicMove::Tag::ParaR, 0});
            continue;
          }
          break;
        case game::MoveTag::ParaL:
          if (static_cast<int>(p) == mv.anchor.player) {
            next[static_cast<size_t>(a0)] = extend_node(cur[p], {BasicMove::Tag::ParaL, 0});
            continue;
          }
          break;
        case game::MoveTag::ParaR:
          if (static_cast<int>(p) == mv.anchor.player) {
            next[static_cast<size_t>(a0)] = extend_node(cur[p], {BasicMove::Tag::ParaR, 0});
            continue;
          }
          break;
        case game::MoveTag::Tick:
          if (static_cast<int>(p) == mv.anchor.player) {
            next[static_cast<size_t>(a0)] = extend_node(cur[p], {BasicMove::Tag::Tick, 0});
            continue;
          }
          break;
        case game::MoveTag::Nu:
          if (static_cast<int>(p) == mv.anchor.player) {
            next[static_cast<size_t>(a0)] = extend_node(cur[p], {BasicMove::Tag::Nu, 0});
            continue;
          }
          break;
        case game::MoveTag::In:
          if (static_cast<int>(p) == mv.anchor.player) {
            next[static_cast<size_t>(a0)] = extend_node(cur[p], {BasicMove::Tag::In, mv.kind.i});
            continue;
          }
          break;
        case game::MoveTag::Out:
          if (static_cast<int>(p) == mv.anchor.player) {
            next[static_cast<size_t>(a0)] = extend_node(cur[p], {BasicMove::Tag::Out, mv.kind.i});
            continue;
          }
          break;
        case game::MoveTag::Tau:
          if (static_cast<int>(p) == mv.anchor.out_player) {
            next[static_cast<size_t>(a0)] = extend_node(cur[p], {BasicMove::Tag::Out, mv.kind.j});
            continue;
          }
          if (static_cast<int>(p) == mv.anchor.in_player) {
            next[static_cast<size_t>(a0)] = extend_node(cur[p], {BasicMove::Tag::In, mv.kind.i});
            continue;
          }
          break;
      }
      next[static_cast<size_t>(a0)] = cur[p];
    }
    cur = std::move(next);
  }
  f.final_nodes = cur;
  return f;
}

ExtendResult extend(const StrategyStore& store, const StrategyFamily& f, const game::Play& play) {
  if (!(f.pos == play.initial))
    throw std::invalid_argument("family position does not match the play's initial position");
  if (f.components.size() != f.pos.players.size())
    throw std::invalid_argument("family components do not match the position's players");
  ExtendResult out;
  out.forest = trace_forest(play);
  const auto& nodes = out.forest.nodes;

  // per-root coherent assignments, nodes in creation order
  std::vector<std::vector<int>> root_nodes(f.pos.players.size());
  for (size_t k = 0; k < nodes.size(); k++)
    root_nodes[static_cast<size_t>(nodes[k].root)].push_back(static_cast<int>(k));

  std::vector<std::vector<std::vector<long>>> per_root;  // root -> assignments -> node states
  for (size_t r = 0; r < root_nodes.size(); r++) {
    const auto& ns = root_nodes[r];
    StratId s = f.components[r];
    std::vector<std::vector<long>> acc;
    std::vector<long> states(ns.size(), 0);
    std::vector<long> counts(ns.size());
    for (size_t k = 0; k < ns.size(); k++)
      counts[k] = view_count(store, s, nodes[static_cast<size_t>(ns[k])].view,
                             nodes[static_cast<size_t>(ns[k])].view.moves.size());
    struct Rec {
      const StrategyStore& store;
      const TraceForest& forest;
      const std::vector<int>& ns;
      StratId s;
      std::vector<long>& states;
      const std::vector<long>& counts;
      std::vector<std::vector<long>>& acc;
      void operator()(size_t k) {
        if (k == ns.size()) {
          acc.push_back(states);
          return;
        }
        const auto& node = forest.nodes[static_cast<size_t>(ns[k])];
        for (long t = 0; t < counts[k]; t++) {
          if (node.parent >= 0) {
            // locate the parent among this root's nodes
            size_t pk = 0;
            while (ns[pk] != node.parent) pk++;
            long restricted = restrict_state(store, s, node.view, node.view.moves.size(),
                                             node.view.moves.size() - 1, t);
            if (restricted != states[pk]) continue;
          }
          states[k] = t;
          (*this)(k + 1);
        }
      }
    } rec{store, out.forest, ns, s, states, counts, acc};
    rec(0);
    per_root.push_back(std::move(acc));
  }

  // cartesian product across roots, assembled into full node-state vectors
  std::vector<size_t> pick(per_root.size(), 0);
  while (true) {
    std::vector<long> elem(nodes.size(), 0);
    bool any_empty = false;
    for (size_t r = 0; r < per_root.size(); r++) {
      if (per_root[r].empty()) {
        any_empty = true;
        break;
      }
      const auto& a = per_root[r][pick[r]];
      for (size_t k = 0; k < root_nodes[r].size(); k++)
        elem[static_cast<size_t>(root_nodes[r][k])] = a[k];
    }
    if (any_empty) break;
    out.elements.push_back(std::move(elem));
    size_t r = per_root.size();
    while (r > 0) {
      r--;
      if (++pick[r] < per_root[r].size()) break;
      pick[r] = 0;
      if (r == 0) {
        r = per_root.size() + 1;
        break;
      }
    }
    if (per_root.empty() || r == per_root.size() + 1) break;
  }
  std::sort(out.elements.begin(), out.elements.end());
  return out;
}

// ---------------------------------------------------------------------------
// Dumps

namespace {

void mark_cycles(const StrategyStore& store, StratId s, std::set<StratId>& on_stack,
                 std::set<StratId>& done, std::map<StratId, int>& labels) {
  if (on_stack.count(s)) {
    if (!labels.count(s)) labels.emplace(s, static_cast<int>(labels.size()));
    return;
  }
  if (done.count(s)) return;
  on_stack.insert(s);
  for (DefId d : store.parts(s))
    for (StratId child : store.table(d)) mark_cycles(store, child, on_stack, done, labels);
  on_stack.erase(s);
  done.insert(s);
}

void dump_strat(const StrategyStore& store, StratId s, std::map<StratId, int>& labels,
                std::set<StratId>& printed, std::ostringstream& os) {
  auto lab = labels.find(s);
  if (lab != labels.end()) {
    if (printed.count(s)) {
      os << "@" << lab->second;
      return;
    }
    printed.insert(s);
    os << "@" << lab->second << "=";
  }
  const auto& ps = store.parts(s);
  os << "⊕[";
  for (size_t k = 0; k < ps.size(); k++) {
    if (k) os << ", ";
    DefId d = ps[k];
    int n = store.def_arity(d);
    os << "⟨";
    const auto& tab = store.table(d);
    for (int b = 0; b < static_cast<int>(tab.size()); b++) {
      if (b) os << ", ";
      os << to_string(basic_at(n, b)) << "↦";
      dump_strat(store, tab[static_cast<size_t>(b)], labels, printed, os);
    }
    os << "⟩";
  }
  os << "]";
}

}  // namespace

std::string dump(const StrategyStore& store, StratId s) {
  std::map<StratId, int> labels;
  std::set<StratId> on_stack, done, printed;
  mark_cycles(store, s, on_stack, done, labels);
  std::ostringstream os;
  dump_strat(store, s, labels, printed, os);
  return os.str();
}

ccs::Json strategy_json(const StrategyStore& store, StratId s) {
  // nodes reachable from s, named s<k>/d<k> in discovery order
  std::map<StratId, std::string> snames;
  std::map<DefId, std::string> dnames;
  std::vector<StratId> squeue{s};
  ccs::Json nodes = ccs::Json::object();
  while (!squeue.empty()) {
    StratId cur = squeue.back();
    squeue.pop_back();
    if (snames.count(cur)) continue;
    snames.emplace(cur, "s" + std::to_string(snames.size()));
    for (DefId d : store.parts(cur))
      if (!dnames.count(d)) {
        dnames.emplace(d, "d" + std::to_string(dnames.size()));
        for (StratId child : store.table(d)) squeue.push_back(child);
      }
  }
  // second pass with stable names
  for (const auto& [sid, name] : snames) {
    ccs::Json parts = ccs::Json::array();
    for (DefId d : store.parts(sid)) parts.push_back(dnames.at(d));
    nodes[name] = {{"parts", parts}};
  }
  for (const auto& [did, name] : dnames) {
    int n = store.def_arity(did);
    ccs::Json tab = ccs::Json::object();
    const auto& t = store.table(did);
    for (int b = 0; b < static_cast<int>(t.size()); b++)
      tab[to_string(basic_at(n, b))] = snames.at(t[static_cast<size_t>(b)]);
    nodes[name] = {{"arity", n}, {"table", tab}};
  }
  return {{"root", snames.at(s)}, {"nodes", nodes}};
}

}  // namespace ccsgame::strat
