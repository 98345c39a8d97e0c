#pragma once

// Process calculus front end: interned syntax trees, the concrete grammar,
// well-formedness over an explicit channel context, and the labelled
// transition relation over the channel-action alphabet.

#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace ccsgame::ccs {

using Json = nlohmann::json;

// Channel names are 1-based indices into the ambient context [1..gamma].
using Channel = int;

struct Context {
  int gamma = 0;
};

enum class PrefixKind : uint8_t { In, Out, Tick };

struct Prefix {
  PrefixKind kind;
  Channel channel = 0;  // meaningful for In/Out only

  friend bool operator==(const Prefix&, const Prefix&) = default;
  friend auto operator<=>(const Prefix&, const Prefix&) = default;
};

enum class ProcKind : uint8_t { Par, Nu, Sum, RecVar, RecDef };

using ProcId = int32_t;

struct Branch {
  Prefix prefix;
  ProcId cont;

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct Process {
  ProcKind kind;
  ProcId left = -1, right = -1;  // Par
  ProcId body = -1;              // Nu, RecDef
  std::vector<Branch> branches;  // Sum
  std::string name;              // RecVar, RecDef
};

// Interning arena. Ids are stable and structurally unique, so id equality is
// structural equality. Methods are serialized internally; the arena may be
// shared by worker threads.
class ProcessStore {
 public:
  ProcId par(ProcId left, ProcId right);
  ProcId nu(ProcId body);
  ProcId sum(std::vector<Branch> branches);
  ProcId rec_var(const std::string& name);
  ProcId rec_def(const std::string& name, ProcId body);
  ProcId nil() { return sum({}); }

  const Process& at(ProcId id) const;
  size_t size() const;

 private:
  ProcId intern(Process node);

  mutable std::mutex mu_;
  std::vector<std::unique_ptr<Process>> nodes_;
  std::unordered_map<std::string, ProcId> index_;
};

// Edges of the action alphabet. Vertices are contexts; an edge stays at its
// context. Id is the silent label.
enum class LabelKind : uint8_t { Id, Tick, In, Out };

struct LabelA {
  int context = 0;
  LabelKind kind = LabelKind::Id;
  Channel channel = 0;  // In/Out only

  friend bool operator==(const LabelA&, const LabelA&) = default;
  friend auto operator<=>(const LabelA&, const LabelA&) = default;
};

std::string to_string(const LabelA& l);

struct ParseError : std::runtime_error {
  ParseError(size_t pos, const std::string& what)
      : std::runtime_error("parse error at offset " + std::to_string(pos) + ": " + what),
        position(pos) {}
  size_t position;
};

struct ParsedProcess {
  Context ctx;
  ProcId proc;
};

// Concrete syntax: "[gamma] body" where
//   body  ::= 'new' ident '.' body | par
//   par   ::= sum ('|' sum)*
//   sum   ::= '0' | 'rec' ident '.' body | ident | '(' body ')' | alt
//   alt   ::= prefixed ('+' prefixed)*
//   prefixed ::= prefix '.' atom
//   atom  ::= '0' | ident | '(' body ')' | prefixed
//   prefix ::= 'a'<digits> | '\'' 'a'<digits> | 'tick'
// 'a3' inputs on channel 3, ''a3' outputs on it, 'tick' is the success
// prefix. Identifiers not of the channel form name recursion variables; the
// identifier after 'new' is decorative (the bound channel is gamma+1 inside).
ParsedProcess parse_ccs(ProcessStore& store, std::string_view text);

// Checks channel bounds and that every recursion variable is bound and
// occurs under at least one prefix of its binder.
bool wellformed(const ProcessStore& store, Context ctx, ProcId p);

// One-step transitions. Sum fires a branch; Par interleaves and synchronizes
// complementary In/Out on a shared channel into a silent step; Nu passes
// labels that do not mention its private channel; RecDef unfolds silently
// into its body at lookup (no transition consumed). The result is sorted and
// duplicate-free.
std::vector<std::pair<LabelA, ProcId>> ccs_transitions(ProcessStore& store, Context ctx, ProcId p);

std::string to_string(const ProcessStore& store, ProcId p);
Json to_json(const ProcessStore& store, Context ctx, ProcId p);

}  // namespace ccsgame::ccs
