#include "ccsgame/ccs.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace ccsgame::ccs {

namespace {

std::string node_key(const Process& n) {
  std::ostringstream os;
  switch (n.kind) {
    case ProcKind::Par:
      os << "P:" << n.left << ":" << n.right;
      break;
    case ProcKind::Nu:
      os << "N:" << n.body;
      break;
    case ProcKind::Sum:
      os << "S";
      for (const auto& b : n.branches)
        os << ":" << static_cast<int>(b.prefix.kind) << "," << b.prefix.channel << "," << b.cont;
      break;
    case ProcKind::RecVar:
      os << "V:" << n.name;
      break;
    case ProcKind::RecDef:
      os << "R:" << n.name << ":" << n.body;
      break;
  }
  return os.str();
}

}  // namespace

ProcId ProcessStore::intern(Process node) {
  std::lock_guard<std::mutex> lock(mu_);
  auto key = node_key(node);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  auto id = static_cast<ProcId>(nodes_.size());
  nodes_.push_back(std::make_unique<Process>(std::move(node)));
  index_.emplace(std::move(key), id);
  return id;
}

ProcId ProcessStore::par(ProcId left, ProcId right) {
  Process n;
  n.kind = ProcKind::Par;
  n.left = left;
  n.right = right;
  return intern(std::move(n));
}

ProcId ProcessStore::nu(ProcId body) {
  Process n;
  n.kind = ProcKind::Nu;
  n.body = body;
  return intern(std::move(n));
}

ProcId ProcessStore::sum(std::vector<Branch> branches) {
  Process n;
  n.kind = ProcKind::Sum;
  n.branches = std::move(branches);
  return intern(std::move(n));
}

ProcId ProcessStore::rec_var(const std::string& name) {
  Process n;
  n.kind = ProcKind::RecVar;
  n.name = name;
  return intern(std::move(n));
}

ProcId ProcessStore::rec_def(const std::string& name, ProcId body) {
  Process n;
  n.kind = ProcKind::RecDef;
  n.name = name;
  n.body = body;
  return intern(std::move(n));
}

const Process& ProcessStore::at(ProcId id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return *nodes_.at(static_cast<size_t>(id));
}

size_t ProcessStore::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return nodes_.size();
}

std::string to_string(const LabelA& l) {
  switch (l.kind) {
    case LabelKind::Id:
      return "id";
    case LabelKind::Tick:
      return "tick";
    case LabelKind::In:
      return "a" + std::to_string(l.channel);
    case LabelKind::Out:
      return "'a" + std::to_string(l.channel);
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Parser {
  ProcessStore& store;
  std::string_view text;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) pos++;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      pos++;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!eat(c)) fail(std::string("expected '") + c + "' " + what);
  }

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(pos, msg); }

  bool peek_word(std::string_view w) {
    skip_ws();
    if (text.substr(pos, w.size()) != w) return false;
    size_t end = pos + w.size();
    if (end < text.size() && std::isalnum(static_cast<unsigned char>(text[end]))) return false;
    return true;
  }

  bool eat_word(std::string_view w) {
    if (!peek_word(w)) return false;
    pos += w.size();
    return true;
  }

  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() && std::isalnum(static_cast<unsigned char>(text[pos]))) pos++;
    if (pos == start) fail("expected identifier");
    return std::string(text.substr(start, pos - start));
  }

  int number() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) pos++;
    if (pos == start) fail("expected number");
    return std::stoi(std::string(text.substr(start, pos - start)));
  }

  // A channel prefix token is 'a' followed by digits, optionally preceded by
  // an apostrophe for output; 'tick' is the success prefix.
  bool peek_prefix() {
    skip_ws();
    if (pos < text.size() && text[pos] == '\'') return true;
    if (peek_word("tick")) return true;
    if (pos + 1 < text.size() && text[pos] == 'a' &&
        std::isdigit(static_cast<unsigned char>(text[pos + 1])))
      return true;
    return false;
  }

  Prefix prefix() {
    skip_ws();
    if (eat('\'')) {
      if (pos >= text.size() || text[pos] != 'a') fail("expected channel after '");
      pos++;
      return {PrefixKind::Out, number()};
    }
    if (eat_word("tick")) return {PrefixKind::Tick, 0};
    if (pos < text.size() && text[pos] == 'a') {
      pos++;
      return {PrefixKind::In, number()};
    }
    fail("expected prefix");
  }

  ProcId body() {
    if (eat_word("new")) {
      ident();  // decorative binder name
      expect('.', "after binder");
      return store.nu(body());
    }
    ProcId first = sum_term();
    std::vector<ProcId> parts{first};
    while (eat('|')) parts.push_back(sum_term());
    ProcId acc = parts.back();
    for (size_t k = parts.size() - 1; k-- > 0;) acc = store.par(parts[k], acc);
    return acc;
  }

  ProcId sum_term() {
    skip_ws();
    if (eat('0')) return store.nil();
    if (eat_word("rec")) {
      std::string x = ident();
      expect('.', "after recursion binder");
      return store.rec_def(x, body());
    }
    if (eat('(')) {
      ProcId inner = body();
      expect(')', "to close group");
      return inner;
    }
    if (peek_prefix()) {
      std::vector<Branch> branches;
      branches.push_back(prefixed());
      while (eat('+')) branches.push_back(prefixed());
      return store.sum(std::move(branches));
    }
    return store.rec_var(ident());
  }

  Branch prefixed() {
    Prefix pre = prefix();
    expect('.', "after prefix");
    return {pre, atom()};
  }

  ProcId atom() {
    skip_ws();
    if (eat('0')) return store.nil();
    if (eat('(')) {
      ProcId inner = body();
      expect(')', "to close group");
      return inner;
    }
    if (peek_prefix()) return store.sum({prefixed()});
    return store.rec_var(ident());
  }
};

}  // namespace

ParsedProcess parse_ccs(ProcessStore& store, std::string_view text) {
  Parser p{store, text};
  p.expect('[', "to open context");
  int gamma = p.number();
  p.expect(']', "to close context");
  ProcId proc = p.body();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  if (gamma < 0) p.fail("negative context");
  if (!wellformed(store, Context{gamma}, proc))
    p.fail("ill-formed process: channel outside [1.." + std::to_string(gamma) +
           "] or unguarded recursion variable");
  return {Context{gamma}, proc};
}

// ---------------------------------------------------------------------------
// Well-formedness

namespace {

bool wf(const ProcessStore& store, int gamma, ProcId p, std::map<std::string, bool>& guarded) {
  const Process& n = store.at(p);
  switch (n.kind) {
    case ProcKind::Par:
      return wf(store, gamma, n.left, guarded) && wf(store, gamma, n.right, guarded);
    case ProcKind::Nu:
      return wf(store, gamma + 1, n.body, guarded);
    case ProcKind::Sum: {
      for (const auto& b : n.branches) {
        if (b.prefix.kind != PrefixKind::Tick &&
            (b.prefix.channel < 1 || b.prefix.channel > gamma))
          return false;
        auto inner = guarded;
        for (auto& [_, g] : inner) g = true;
        if (!wf(store, gamma, b.cont, inner)) return false;
      }
      return true;
    }
    case ProcKind::RecVar: {
      auto it = guarded.find(n.name);
      return it != guarded.end() && it->second;
    }
    case ProcKind::RecDef: {
      auto inner = guarded;
      inner[n.name] = false;
      return wf(store, gamma, n.body, inner);
    }
  }
  return false;
}

}  // namespace

bool wellformed(const ProcessStore& store, Context ctx, ProcId p) {
  std::map<std::string, bool> guarded;
  return wf(store, ctx.gamma, p, guarded);
}

// ---------------------------------------------------------------------------
// Transitions

namespace {

// body[var := rep]; inner binders of the same name shadow.
ProcId subst(ProcessStore& store, ProcId body, const std::string& var, ProcId rep,
             std::unordered_map<ProcId, ProcId>& memo) {
  auto it = memo.find(body);
  if (it != memo.end()) return it->second;
  const Process n = store.at(body);
  ProcId out = body;
  switch (n.kind) {
    case ProcKind::Par:
      out = store.par(subst(store, n.left, var, rep, memo), subst(store, n.right, var, rep, memo));
      break;
    case ProcKind::Nu:
      out = store.nu(subst(store, n.body, var, rep, memo));
      break;
    case ProcKind::Sum: {
      std::vector<Branch> bs;
      bs.reserve(n.branches.size());
      for (const auto& b : n.branches) bs.push_back({b.prefix, subst(store, b.cont, var, rep, memo)});
      out = store.sum(std::move(bs));
      break;
    }
    case ProcKind::RecVar:
      out = (n.name == var) ? rep : body;
      break;
    case ProcKind::RecDef:
      out = (n.name == var) ? body : store.rec_def(n.name, subst(store, n.body, var, rep, memo));
      break;
  }
  memo.emplace(body, out);
  return out;
}

}  // namespace

std::vector<std::pair<LabelA, ProcId>> ccs_transitions(ProcessStore& store, Context ctx, ProcId p) {
  std::vector<std::pair<LabelA, ProcId>> out;
  const Process n = store.at(p);
  switch (n.kind) {
    case ProcKind::Sum: {
      for (const auto& b : n.branches) {
        LabelA l{ctx.gamma, LabelKind::Id, 0};
        switch (b.prefix.kind) {
          case PrefixKind::In:
            l = {ctx.gamma, LabelKind::In, b.prefix.channel};
            break;
          case PrefixKind::Out:
            l = {ctx.gamma, LabelKind::Out, b.prefix.channel};
            break;
          case PrefixKind::Tick:
            l = {ctx.gamma, LabelKind::Tick, 0};
            break;
        }
        out.emplace_back(l, b.cont);
      }
      break;
    }
    case ProcKind::Par: {
      auto ls = ccs_transitions(store, ctx, n.left);
      auto rs = ccs_transitions(store, ctx, n.right);
      for (const auto& [l, t] : ls) out.emplace_back(l, store.par(t, n.right));
      for (const auto& [l, t] : rs) out.emplace_back(l, store.par(n.left, t));
      for (const auto& [ll, lt] : ls)
        for (const auto& [rl, rt] : rs) {
          bool sync = (ll.kind == LabelKind::In && rl.kind == LabelKind::Out &&
                       ll.channel == rl.channel) ||
                      (ll.kind == LabelKind::Out && rl.kind == LabelKind::In &&
                       ll.channel == rl.channel);
          if (sync) out.emplace_back(LabelA{ctx.gamma, LabelKind::Id, 0}, store.par(lt, rt));
        }
      break;
    }
    case ProcKind::Nu: {
      for (const auto& [l, t] : ccs_transitions(store, Context{ctx.gamma + 1}, n.body)) {
        if ((l.kind == LabelKind::In || l.kind == LabelKind::Out) && l.channel == ctx.gamma + 1)
          continue;
        out.emplace_back(LabelA{ctx.gamma, l.kind, l.channel}, store.nu(t));
      }
      break;
    }
    case ProcKind::RecDef: {
      std::unordered_map<ProcId, ProcId> memo;
      ProcId unfolded = subst(store, n.body, n.name, p, memo);
      return ccs_transitions(store, ctx, unfolded);
    }
    case ProcKind::RecVar:
      throw std::logic_error("transition of unbound recursion variable");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Printing

namespace {

void print(const ProcessStore& store, ProcId p, std::ostream& os, bool atom_ctx);

void print_prefix(const Prefix& pre, std::ostream& os) {
  switch (pre.kind) {
    case PrefixKind::In:
      os << "a" << pre.channel;
      break;
    case PrefixKind::Out:
      os << "'a" << pre.channel;
      break;
    case PrefixKind::Tick:
      os << "tick";
      break;
  }
}

void print(const ProcessStore& store, ProcId p, std::ostream& os, bool atom_ctx) {
  const Process& n = store.at(p);
  switch (n.kind) {
    case ProcKind::Par:
      if (atom_ctx) os << "(";
      print(store, n.left, os, true);
      os << " | ";
      print(store, n.right, os, false);
      if (atom_ctx) os << ")";
      break;
    case ProcKind::Nu:
      if (atom_ctx) os << "(";
      os << "new a. ";
      print(store, n.body, os, false);
      if (atom_ctx) os << ")";
      break;
    case ProcKind::Sum: {
      if (n.branches.empty()) {
        os << "0";
        break;
      }
      bool wrap = atom_ctx && n.branches.size() > 1;
      if (wrap) os << "(";
      bool first = true;
      for (const auto& b : n.branches) {
        if (!first) os << " + ";
        first = false;
        print_prefix(b.prefix, os);
        os << ".";
        print(store, b.cont, os, true);
      }
      if (wrap) os << ")";
      break;
    }
    case ProcKind::RecVar:
      os << n.name;
      break;
    case ProcKind::RecDef:
      if (atom_ctx) os << "(";
      os << "rec " << n.name << ". ";
      print(store, n.body, os, false);
      if (atom_ctx) os << ")";
      break;
  }
}

Json proc_json(const ProcessStore& store, ProcId p) {
  const Process& n = store.at(p);
  switch (n.kind) {
    case ProcKind::Par:
      return {{"kind", "par"}, {"left", proc_json(store, n.left)}, {"right", proc_json(store, n.right)}};
    case ProcKind::Nu:
      return {{"kind", "nu"}, {"body", proc_json(store, n.body)}};
    case ProcKind::Sum: {
      Json branches = Json::array();
      for (const auto& b : n.branches) {
        Json pre;
        switch (b.prefix.kind) {
          case PrefixKind::In:
            pre = {{"kind", "in"}, {"channel", b.prefix.channel}};
            break;
          case PrefixKind::Out:
            pre = {{"kind", "out"}, {"channel", b.prefix.channel}};
            break;
          case PrefixKind::Tick:
            pre = {{"kind", "tick"}};
            break;
        }
        branches.push_back({{"prefix", pre}, {"cont", proc_json(store, b.cont)}});
      }
      return {{"kind", "sum"}, {"branches", branches}};
    }
    case ProcKind::RecVar:
      return {{"kind", "recvar"}, {"name", n.name}};
    case ProcKind::RecDef:
      return {{"kind", "recdef"}, {"name", n.name}, {"body", proc_json(store, n.body)}};
  }
  return {};
}

}  // namespace

std::string to_string(const ProcessStore& store, ProcId p) {
  std::ostringstream os;
  print(store, p, os, false);
  return os.str();
}

Json to_json(const ProcessStore& store, Context ctx, ProcId p) {
  return {{"context", ctx.gamma}, {"process", proc_json(store, p)}};
}

}  // namespace ccsgame::ccs
