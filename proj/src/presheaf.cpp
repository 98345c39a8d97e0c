#include "ccsgame/presheaf.hpp"

#include <algorithm>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

namespace ccsgame::presheaf {

BaseObject star() { return {ObKind::Star, 0, 0, 0, 0}; }
BaseObject player(int n) { return {ObKind::Player, n, 0, 0, 0}; }
BaseObject ob_in(int n, int i) { return {ObKind::In, n, i, 0, 0}; }
BaseObject ob_out(int n, int i) { return {ObKind::Out, n, i, 0, 0}; }
BaseObject ob_nu(int n) { return {ObKind::Nu, n, 0, 0, 0}; }
BaseObject ob_paral(int n) { return {ObKind::ParaL, n, 0, 0, 0}; }
BaseObject ob_parar(int n) { return {ObKind::ParaR, n, 0, 0, 0}; }
BaseObject ob_para(int n) { return {ObKind::Para, n, 0, 0, 0}; }
BaseObject ob_tick(int n) { return {ObKind::Tick, n, 0, 0, 0}; }
BaseObject ob_tau(int m, int j, int n, int i) { return {ObKind::Tau, n, i, m, j}; }

std::string object_key(const BaseObject& ob) {
  switch (ob.kind) {
    case ObKind::Star:
      return "star";
    case ObKind::Player:
      return "player:" + std::to_string(ob.n);
    case ObKind::In:
      return "in:" + std::to_string(ob.n) + ":" + std::to_string(ob.i);
    case ObKind::Out:
      return "out:" + std::to_string(ob.n) + ":" + std::to_string(ob.i);
    case ObKind::Nu:
      return "nu:" + std::to_string(ob.n);
    case ObKind::ParaL:
      return "paral:" + std::to_string(ob.n);
    case ObKind::ParaR:
      return "parar:" + std::to_string(ob.n);
    case ObKind::Para:
      return "para:" + std::to_string(ob.n);
    case ObKind::Tick:
      return "tick:" + std::to_string(ob.n);
    case ObKind::Tau:
      return "tau:" + std::to_string(ob.m) + ":" + std::to_string(ob.j) + ":" +
             std::to_string(ob.n) + ":" + std::to_string(ob.i);
  }
  return "?";
}

namespace {

uint64_t pair_key(ObId a, ObId b) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

Presentation::Presentation(int max_arity) : max_arity_(max_arity) {
  if (max_arity < 0) throw std::invalid_argument("negative max arity");

  auto add_ob = [&](const BaseObject& ob) {
    ObId id = static_cast<ObId>(objects_.size());
    objects_.push_back(ob);
    ob_index_.emplace(ob, id);
    return id;
  };
  add_ob(star());
  for (int n = 0; n <= max_arity; n++) add_ob(player(n));
  for (int n = 0; n <= max_arity; n++) {
    for (int i = 1; i <= n; i++) {
      add_ob(ob_in(n, i));
      add_ob(ob_out(n, i));
    }
    add_ob(ob_paral(n));
    add_ob(ob_parar(n));
    add_ob(ob_para(n));
    add_ob(ob_tick(n));
    if (n + 1 <= max_arity) add_ob(ob_nu(n));
  }
  for (int m = 0; m <= max_arity; m++)
    for (int j = 1; j <= m; j++)
      for (int n = 0; n <= max_arity; n++)
        for (int i = 1; i <= n; i++) add_ob(ob_tau(m, j, n, i));

  out_edges_.resize(objects_.size());
  auto add_gen = [&](const std::string& key, const BaseObject& src, const BaseObject& dst) {
    GenId id = static_cast<GenId>(gens_.size());
    gens_.push_back({id, key, require_object(src), require_object(dst)});
    gen_index_.emplace(key, id);
    out_edges_[require_object(src)].push_back(id);
    return id;
  };

  for (int n = 1; n <= max_arity; n++)
    for (int i = 1; i <= n; i++)
      add_gen("s:" + std::to_string(n) + ":" + std::to_string(i), star(), player(n));
  for (int n = 0; n <= max_arity; n++) {
    auto add_st = [&](const BaseObject& c) {
      add_gen("s:" + object_key(c), player(n), c);
      add_gen("t:" + object_key(c), player(n), c);
    };
    for (int i = 1; i <= n; i++) {
      add_st(ob_in(n, i));
      add_st(ob_out(n, i));
    }
    add_st(ob_paral(n));
    add_st(ob_parar(n));
    add_st(ob_tick(n));
    if (n + 1 <= max_arity) {
      add_gen("s:" + object_key(ob_nu(n)), player(n + 1), ob_nu(n));
      add_gen("t:" + object_key(ob_nu(n)), player(n), ob_nu(n));
    }
    add_gen("l:" + std::to_string(n), ob_paral(n), ob_para(n));
    add_gen("r:" + std::to_string(n), ob_parar(n), ob_para(n));
  }
  for (int m = 0; m <= max_arity; m++)
    for (int j = 1; j <= m; j++)
      for (int n = 0; n <= max_arity; n++)
        for (int i = 1; i <= n; i++) {
          BaseObject t = ob_tau(m, j, n, i);
          add_gen("eps:" + object_key(t), ob_out(m, j), t);
          add_gen("rho:" + object_key(t), ob_in(n, i), t);
        }

  // Equation schemes, as parallel generator paths in diagrammatic order.
  auto gid = [&](const std::string& key) {
    GenId g = generator_id(key);
    if (g < 0) throw std::logic_error("missing generator " + key);
    return g;
  };
  auto chan = [&](int n, int i) { return gid("s:" + std::to_string(n) + ":" + std::to_string(i)); };
  std::vector<Equation> base;
  for (int n = 1; n <= max_arity; n++) {
    std::vector<BaseObject> local;
    for (int i = 1; i <= n; i++) {
      local.push_back(ob_in(n, i));
      local.push_back(ob_out(n, i));
    }
    local.push_back(ob_paral(n));
    local.push_back(ob_parar(n));
    local.push_back(ob_tick(n));
    for (const auto& c : local)
      for (int i = 1; i <= n; i++)
        base.push_back({{chan(n, i), gid("s:" + object_key(c))}, {chan(n, i), gid("t:" + object_key(c))}});
  }
  for (int n = 0; n + 1 <= max_arity; n++)
    for (int i = 1; i <= n; i++)
      base.push_back({{chan(n + 1, i), gid("s:" + object_key(ob_nu(n)))},
                      {chan(n, i), gid("t:" + object_key(ob_nu(n)))}});
  for (int n = 0; n <= max_arity; n++)
    base.push_back({{gid("t:" + object_key(ob_paral(n))), gid("l:" + std::to_string(n))},
                    {gid("t:" + object_key(ob_parar(n))), gid("r:" + std::to_string(n))}});
  for (int m = 0; m <= max_arity; m++)
    for (int j = 1; j <= m; j++)
      for (int n = 0; n <= max_arity; n++)
        for (int i = 1; i <= n; i++) {
          BaseObject t = ob_tau(m, j, n, i);
          base.push_back({{chan(m, j), gid("t:" + object_key(ob_out(m, j))), gid("eps:" + object_key(t))},
                          {chan(n, i), gid("t:" + object_key(ob_in(n, i))), gid("rho:" + object_key(t))}});
        }

  // Close under single-edge extension on either side (composites never
  // exceed three generators, so one extension step suffices).
  equations_ = base;
  for (const auto& eq : base) {
    ObId src = gens_[eq.lhs.front()].src;
    ObId dst = gens_[eq.lhs.back()].dst;
    if (eq.lhs.size() < 3)
      for (GenId e : out_edges_[dst]) {
        Equation ext = eq;
        ext.lhs.push_back(e);
        ext.rhs.push_back(e);
        equations_.push_back(std::move(ext));
      }
    if (eq.lhs.size() < 3)
      for (const auto& g : gens_)
        if (g.dst == src) {
          Equation ext;
          ext.lhs.reserve(eq.lhs.size() + 1);
          ext.lhs.push_back(g.id);
          ext.lhs.insert(ext.lhs.end(), eq.lhs.begin(), eq.lhs.end());
          ext.rhs.push_back(g.id);
          ext.rhs.insert(ext.rhs.end(), eq.rhs.begin(), eq.rhs.end());
          equations_.push_back(std::move(ext));
        }
  }

  // Enumerate all paths between object pairs and quotient by the equations.
  std::unordered_map<uint64_t, std::vector<std::vector<GenId>>> paths;
  for (ObId a = 0; a < static_cast<ObId>(objects_.size()); a++) {
    paths[pair_key(a, a)].push_back({});
    std::vector<std::pair<ObId, std::vector<GenId>>> frontier{{a, {}}};
    while (!frontier.empty()) {
      std::vector<std::pair<ObId, std::vector<GenId>>> next;
      for (const auto& [at, path] : frontier)
        for (GenId e : out_edges_[at]) {
          auto p2 = path;
          p2.push_back(e);
          ObId b = gens_[e].dst;
          paths[pair_key(a, b)].push_back(p2);
          next.emplace_back(b, std::move(p2));
        }
      frontier = std::move(next);
    }
  }

  for (auto& [key, list] : paths) {
    std::sort(list.begin(), list.end());
    std::map<std::vector<GenId>, int> index;
    for (size_t k = 0; k < list.size(); k++) index.emplace(list[k], static_cast<int>(k));
    UnionFind uf(list.size());
    for (const auto& eq : equations_) {
      auto l = index.find(eq.lhs);
      if (l == index.end()) continue;
      auto r = index.find(eq.rhs);
      if (r == index.end()) continue;
      uf.unite(l->second, r->second);
    }
    HomSet hs;
    std::map<int, int32_t> cls_index;
    for (size_t k = 0; k < list.size(); k++) {
      int root = uf.find(static_cast<int>(k));
      auto it = cls_index.find(root);
      int32_t cls;
      if (it == cls_index.end()) {
        cls = static_cast<int32_t>(hs.reprs.size());
        // lists are sorted, so the first member of a class is its least path
        hs.reprs.push_back(list[k]);
        cls_index.emplace(root, cls);
      } else {
        cls = it->second;
      }
      hs.cls_of.emplace(list[k], cls);
    }
    homs_.emplace(key, std::move(hs));
  }
}

ObId Presentation::object_id(const BaseObject& ob) const {
  auto it = ob_index_.find(ob);
  return it == ob_index_.end() ? -1 : it->second;
}

ObId Presentation::require_object(const BaseObject& ob) const {
  ObId id = object_id(ob);
  if (id < 0) throw std::out_of_range("object outside presentation: " + object_key(ob));
  return id;
}

GenId Presentation::generator_id(const std::string& key) const {
  auto it = gen_index_.find(key);
  return it == gen_index_.end() ? -1 : it->second;
}

const Presentation::HomSet* Presentation::hom_set(ObId a, ObId b) const {
  auto it = homs_.find(pair_key(a, b));
  return it == homs_.end() ? nullptr : &it->second;
}

int Presentation::hom_size(ObId a, ObId b) const {
  const HomSet* hs = hom_set(a, b);
  return hs ? static_cast<int>(hs->reprs.size()) : 0;
}

Morphism Presentation::normalize(ObId src, const std::vector<GenId>& path) const {
  ObId at = src;
  for (GenId e : path) {
    if (gens_.at(e).src != at) throw std::invalid_argument("path does not compose");
    at = gens_.at(e).dst;
  }
  const HomSet* hs = hom_set(src, at);
  if (!hs) throw std::logic_error("missing hom set");
  auto it = hs->cls_of.find(path);
  if (it == hs->cls_of.end()) throw std::logic_error("path missing from hom table");
  return {src, at, it->second};
}

Morphism Presentation::normalize_keys(const BaseObject& src,
                                      const std::vector<std::string>& keys) const {
  std::vector<GenId> path;
  path.reserve(keys.size());
  for (const auto& k : keys) {
    GenId g = generator_id(k);
    if (g < 0) throw std::out_of_range("unknown generator " + k);
    path.push_back(g);
  }
  return normalize(require_object(src), path);
}

const std::vector<GenId>& Presentation::repr_path(const Morphism& m) const {
  const HomSet* hs = hom_set(m.src, m.dst);
  if (!hs || m.cls < 0 || m.cls >= static_cast<int32_t>(hs->reprs.size()))
    throw std::out_of_range("bad morphism");
  return hs->reprs[m.cls];
}

Morphism Presentation::then(const Morphism& f, const Morphism& g) const {
  if (f.dst != g.src) throw std::invalid_argument("morphisms do not compose");
  std::vector<GenId> path = repr_path(f);
  const auto& tail = repr_path(g);
  path.insert(path.end(), tail.begin(), tail.end());
  return normalize(f.src, path);
}

const Presentation& presentation(int max_arity) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<Presentation>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(max_arity);
  if (it == cache.end())
    it = cache.emplace(max_arity, std::make_unique<Presentation>(max_arity)).first;
  return *it->second;
}

// ---------------------------------------------------------------------------
// FinPresheaf

void FinPresheaf::set_size(ObId ob, int size) {
  if (size < 0) throw std::invalid_argument("negative carrier size");
  sizes_[ob] = size;
  support_.clear();
  for (const auto& [o, s] : sizes_)
    if (s > 0) support_.push_back(o);
}

int FinPresheaf::size(ObId ob) const {
  auto it = sizes_.find(ob);
  return it == sizes_.end() ? 0 : it->second;
}

void FinPresheaf::set_action(GenId g, std::vector<int> images) { actions_[g] = std::move(images); }

const std::vector<int>* FinPresheaf::action(GenId g) const {
  auto it = actions_.find(g);
  return it == actions_.end() ? nullptr : &it->second;
}

int FinPresheaf::apply_gen(GenId g, int elt) const {
  const auto* act = action(g);
  if (!act) throw std::out_of_range("missing action");
  return act->at(static_cast<size_t>(elt));
}

int FinPresheaf::apply(const Presentation& pres, const Morphism& m, int elt) const {
  const auto& path = pres.repr_path(m);
  int x = elt;
  for (auto it = path.rbegin(); it != path.rend(); ++it) x = apply_gen(*it, x);
  return x;
}

std::optional<std::string> FinPresheaf::validate(const Presentation& pres) const {
  for (const auto& g : pres.generators()) {
    int nd = size(g.dst), ns = size(g.src);
    const auto* act = action(g.id);
    if (nd == 0) {
      if (act && !act->empty()) return "nonempty action for empty carrier at " + g.key;
      continue;
    }
    if (!act) return "missing action for " + g.key;
    if (static_cast<int>(act->size()) != nd) return "action arity mismatch at " + g.key;
    for (int v : *act)
      if (v < 0 || v >= ns) return "action image out of range at " + g.key;
  }
  return std::nullopt;
}

bool check_presheaf(const Presentation& pres, const FinPresheaf& f) {
  if (f.validate(pres)) return false;
  for (const auto& eq : pres.equations()) {
    ObId dst = pres.generator(eq.lhs.back()).dst;
    int n = f.size(dst);
    for (int x = 0; x < n; x++) {
      int lhs = x, rhs = x;
      for (auto it = eq.lhs.rbegin(); it != eq.lhs.rend(); ++it) lhs = f.apply_gen(*it, lhs);
      for (auto it = eq.rhs.rbegin(); it != eq.rhs.rend(); ++it) rhs = f.apply_gen(*it, rhs);
      if (lhs != rhs) return false;
    }
  }
  return true;
}

FinPresheaf representable(const Presentation& pres, const BaseObject& c) {
  ObId cid = pres.require_object(c);
  FinPresheaf f;
  for (ObId d = 0; d < static_cast<ObId>(pres.objects().size()); d++) {
    int n = pres.hom_size(d, cid);
    if (n > 0) f.set_size(d, n);
  }
  for (const auto& g : pres.generators()) {
    int nd = f.size(g.dst);
    if (nd == 0) continue;
    std::vector<int> act(nd);
    for (int x = 0; x < nd; x++) {
      // precompose the element d' -> c with the generator d -> d'
      Morphism m{g.dst, cid, x};
      std::vector<GenId> path{g.id};
      const auto& tail = pres.repr_path(m);
      path.insert(path.end(), tail.begin(), tail.end());
      act[x] = pres.normalize(g.src, path).cls;
    }
    f.set_action(g.id, std::move(act));
  }
  return f;
}

int ElementCategory::node_of(ObId ob, int elt) const {
  for (size_t k = 0; k < nodes.size(); k++)
    if (nodes[k].ob == ob && nodes[k].elt == elt) return static_cast<int>(k);
  return -1;
}

ElementCategory elements_of_representable(const Presentation& pres, const BaseObject& c,
                                          FinPresheaf* out_presheaf) {
  FinPresheaf f = representable(pres, c);
  ElementCategory cat;
  for (ObId ob : f.support())
    for (int e = 0; e < f.size(ob); e++) cat.nodes.push_back({ob, e});
  for (const auto& g : pres.generators()) {
    const auto* act = f.action(g.id);
    if (!act) continue;
    for (int y = 0; y < static_cast<int>(act->size()); y++) {
      int x = (*act)[y];
      cat.arrows.push_back({g.id, cat.node_of(g.src, x), cat.node_of(g.dst, y)});
    }
  }
  if (out_presheaf) *out_presheaf = std::move(f);
  return cat;
}

int PresheafMorphism::apply(ObId ob, int elt) const {
  auto it = comp.find(ob);
  if (it == comp.end()) throw std::out_of_range("missing component");
  return it->second.at(static_cast<size_t>(elt));
}

bool check_natural(const Presentation& pres, const FinPresheaf& x, const FinPresheaf& y,
                   const PresheafMorphism& phi) {
  for (ObId ob : x.support()) {
    auto it = phi.comp.find(ob);
    if (it == phi.comp.end()) return false;
    if (static_cast<int>(it->second.size()) != x.size(ob)) return false;
    for (int v : it->second)
      if (v < 0 || v >= y.size(ob)) return false;
  }
  for (const auto& g : pres.generators()) {
    int n = x.size(g.dst);
    if (n == 0) continue;
    for (int e = 0; e < n; e++)
      if (phi.apply(g.src, x.apply_gen(g.id, e)) != y.apply_gen(g.id, phi.apply(g.dst, e)))
        return false;
  }
  return true;
}

bool is_mono(const FinPresheaf& x, const PresheafMorphism& phi) {
  for (ObId ob : x.support()) {
    auto it = phi.comp.find(ob);
    if (it == phi.comp.end()) return false;
    auto sorted = it->second;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
  }
  return true;
}

PushoutResult pushout(const Presentation& pres, const FinPresheaf& i, const FinPresheaf& x,
                      const FinPresheaf& y, const PresheafMorphism& f, const PresheafMorphism& g) {
  for (const auto* p : {&i, &x, &y})
    if (auto err = p->validate(pres)) throw std::invalid_argument("invalid presheaf: " + *err);
  if (!check_natural(pres, i, x, f) || !check_natural(pres, i, y, g))
    throw std::invalid_argument("pushout legs are not natural");

  PushoutResult out;
  // per object: class structure on X(c) + Y(c), gluing f(e) ~ g(e)
  std::map<ObId, std::vector<int>> cls_x, cls_y;
  std::vector<ObId> obs;
  for (ObId ob : x.support()) obs.push_back(ob);
  for (ObId ob : y.support())
    if (!std::count(obs.begin(), obs.end(), ob)) obs.push_back(ob);
  std::sort(obs.begin(), obs.end());
  for (ObId ob : obs) {
    int nx = x.size(ob), ny = y.size(ob);
    UnionFind uf(static_cast<size_t>(nx + ny));
    for (int e = 0; e < i.size(ob); e++) uf.unite(f.apply(ob, e), nx + g.apply(ob, e));
    std::map<int, int> index;  // root -> class, ordered by least member
    std::vector<int> cx(nx), cy(ny);
    int next = 0;
    for (int k = 0; k < nx + ny; k++) {
      int root = uf.find(k);
      auto it = index.find(root);
      int cls;
      if (it == index.end()) {
        cls = next++;
        index.emplace(root, cls);
      } else {
        cls = it->second;
      }
      if (k < nx)
        cx[k] = cls;
      else
        cy[k - nx] = cls;
    }
    out.apex.set_size(ob, next);
    cls_x[ob] = std::move(cx);
    cls_y[ob] = std::move(cy);
  }
  for (const auto& g2 : pres.generators()) {
    int nd = out.apex.size(g2.dst);
    if (nd == 0) continue;
    std::vector<int> act(nd, -1);
    auto fill = [&](const FinPresheaf& side, const std::map<ObId, std::vector<int>>& cls) {
      auto itd = cls.find(g2.dst);
      if (itd == cls.end()) return;
      const auto* a = side.action(g2.id);
      if (!a) return;
      const auto& src_cls = cls.at(g2.src);
      for (size_t e = 0; e < a->size(); e++) act[itd->second[e]] = src_cls[(*a)[e]];
    };
    fill(x, cls_x);
    fill(y, cls_y);
    out.apex.set_action(g2.id, std::move(act));
  }
  for (ObId ob : obs) {
    out.in_x.comp[ob] = cls_x[ob];
    out.in_y.comp[ob] = cls_y[ob];
  }
  return out;
}

PresheafMorphism mediating(const Presentation& pres, const FinPresheaf& i, const FinPresheaf& x,
                           const FinPresheaf& y, const PresheafMorphism& f,
                           const PresheafMorphism& g, const PushoutResult& po,
                           const PresheafMorphism& p, const PresheafMorphism& q) {
  (void)pres;
  (void)x;
  (void)y;
  for (ObId ob : i.support())
    for (int e = 0; e < i.size(ob); e++)
      if (p.apply(ob, f.apply(ob, e)) != q.apply(ob, g.apply(ob, e)))
        throw std::invalid_argument("cocone does not commute on the interface");
  PresheafMorphism u;
  for (ObId ob : po.apex.support()) {
    std::vector<int> comp(static_cast<size_t>(po.apex.size(ob)), -1);
    if (auto it = po.in_x.comp.find(ob); it != po.in_x.comp.end())
      for (size_t e = 0; e < it->second.size(); e++) comp[it->second[e]] = p.apply(ob, static_cast<int>(e));
    if (auto it = po.in_y.comp.find(ob); it != po.in_y.comp.end())
      for (size_t e = 0; e < it->second.size(); e++) comp[it->second[e]] = q.apply(ob, static_cast<int>(e));
    u.comp[ob] = std::move(comp);
  }
  return u;
}

Json to_json(const Presentation& pres, const FinPresheaf& f) {
  Json j = Json::object();
  for (ObId ob : f.support()) {
    Json entry;
    entry["size"] = f.size(ob);
    Json actions = Json::object();
    for (const auto& g : pres.generators())
      if (g.dst == ob)
        if (const auto* act = f.action(g.id)) actions[g.key] = *act;
    entry["actions"] = actions;
    j[pres.key_of(ob)] = entry;
  }
  return j;
}

FinPresheaf presheaf_from_json(const Presentation& pres, const Json& j) {
  FinPresheaf f;
  std::map<std::string, ObId> by_key;
  for (ObId ob = 0; ob < static_cast<ObId>(pres.objects().size()); ob++)
    by_key[pres.key_of(ob)] = ob;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto ob = by_key.find(it.key());
    if (ob == by_key.end()) throw std::invalid_argument("unknown object key " + it.key());
    f.set_size(ob->second, it.value().at("size").get<int>());
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    const Json& actions = it.value().at("actions");
    for (auto a = actions.begin(); a != actions.end(); ++a) {
      GenId g = pres.generator_id(a.key());
      if (g < 0) throw std::invalid_argument("unknown generator key " + a.key());
      f.set_action(g, a.value().get<std::vector<int>>());
    }
  }
  return f;
}

}  // namespace ccsgame::presheaf
