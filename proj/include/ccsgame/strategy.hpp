#pragma once

// Strategies: formal sums of definite prestrategies, where a definite
// prestrategy of arity n maps every basic move available to an n-ary player
// to a residual strategy (the move after a channel creation lives at arity
// n+1). The graphs may be cyclic (regular), built through placeholders that
// are filled exactly once; acyclic nodes are interned so id equality is
// structural equality there. Process terms are the intermediate fork/
// guarded-sum language between the calculus and strategies.

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "ccsgame/ccs.hpp"
#include "ccsgame/game.hpp"

namespace ccsgame::strat {

using StratId = int32_t;
using DefId = int32_t;
using TermId = int32_t;

// Table layout at arity n: paraL, paraR, tick, nu, then in/out interleaved
// per channel; 4 + 2n entries.
int basic_count(int arity);
int basic_index(int arity, const game::BasicMove& b);
game::BasicMove basic_at(int arity, int index);
int basic_result_arity(int arity, const game::BasicMove& b);

struct Guard {
  enum class Kind : uint8_t { Tick, Nu, In, Out };
  Kind kind = Kind::Tick;
  int channel = 0;  // In/Out: 1-based local index

  friend bool operator==(const Guard&, const Guard&) = default;
  friend auto operator<=>(const Guard&, const Guard&) = default;
};

game::BasicMove guard_basic(const Guard& g);

class StrategyStore {
 public:
  // strategies
  StratId strategy(std::vector<DefId> parts);
  StratId empty_strategy();
  StratId oplus(const std::vector<StratId>& summands);  // flattened sum
  StratId placeholder_strategy();
  void fill_strategy(StratId s, std::vector<DefId> parts);
  const std::vector<DefId>& parts(StratId s) const;
  int strat_arity(StratId s) const;  // -1 when empty

  // definite prestrategies
  DefId definite(int arity, std::vector<StratId> table);
  DefId deadlock(int arity);  // all entries empty
  int def_arity(DefId d) const;
  const std::vector<StratId>& table(DefId d) const;

  // process terms
  TermId fork(int arity, TermId left, TermId right);
  TermId guarded_sum(int arity, std::vector<std::pair<Guard, TermId>> branches);
  TermId placeholder_term(int arity, bool is_fork);
  void fill_fork(TermId t, TermId left, TermId right);
  void fill_guarded_sum(TermId t, std::vector<std::pair<Guard, TermId>> branches);
  bool is_fork(TermId t) const;
  int term_arity(TermId t) const;
  TermId fork_left(TermId t) const;
  TermId fork_right(TermId t) const;
  const std::vector<std::pair<Guard, TermId>>& branches(TermId t) const;

  // interpretation of terms as strategies, stable across calls
  StratId interpret(TermId t);
  StratId interpret_swapped(TermId t);  // fork sides exchanged, for mutation tests

 private:
  struct StratNode {
    std::vector<DefId> parts;
    bool placeholder = false;
    // non-empty when this node is an oplus over summands that still contain
    // unfilled placeholders; flattened once the last summand is filled
    std::vector<StratId> pending_summands;
  };
  struct DefNode {
    int arity;
    std::vector<StratId> table;
  };
  struct TermNode {
    bool fork = false;
    int arity = 0;
    TermId left = -1, right = -1;
    std::vector<std::pair<Guard, TermId>> branches;
    bool placeholder = false;
  };

  StratId intern_strategy(std::vector<DefId> parts);
  StratId interpret_locked(TermId t, std::map<TermId, StratId>& memo, bool swapped);
  void resolve_pending_locked();

  mutable std::recursive_mutex mu_;
  std::vector<std::unique_ptr<StratNode>> strats_;
  std::vector<std::unique_ptr<DefNode>> defs_;
  std::vector<std::unique_ptr<TermNode>> terms_;
  std::map<std::vector<DefId>, StratId> strat_index_;
  std::map<std::vector<StratId>, StratId> pending_index_;
  std::vector<StratId> pending_;
  std::map<std::pair<int, std::vector<StratId>>, DefId> def_index_;
  std::map<std::tuple<int, TermId, TermId>, TermId> fork_index_;
  std::map<std::pair<int, std::vector<std::pair<Guard, TermId>>>, TermId> gsum_index_;
  std::map<TermId, StratId> interp_memo_, interp_swapped_memo_;
};

// Equality of the (possibly infinite) unfoldings of two strategy graphs.
bool struct_equal(const StrategyStore& store, StratId a, StratId b);
bool struct_equal_terms(const StrategyStore& store, TermId a, TermId b);

// Translation of the calculus into strategies and into process terms.
StratId translate_ccs(StrategyStore& store, const ccs::ProcessStore& ps, ccs::Context ctx,
                      ccs::ProcId p);
TermId theta(StrategyStore& store, const ccs::ProcessStore& ps, ccs::Context ctx, ccs::ProcId p);
StratId interpret_term(StrategyStore& store, TermId t);

// residual of a definite prestrategy along one basic move
StratId residual(const StrategyStore& store, DefId d, const game::BasicMove& b);
// initial-state choice: the i-th definite of a strategy
DefId restrict_at(const StrategyStore& store, StratId s, int i);

// Number of states of s over the length-`len` prefix of v (the whole view by
// default); states are ordered lexicographically by the chain of
// initial-state choices, so restriction to a shorter prefix is monotone.
long view_count(const StrategyStore& store, StratId s, const game::ViewPath& v, size_t len);
long value_on_view(const StrategyStore& store, StratId s, const game::ViewPath& v);
long restrict_state(const StrategyStore& store, StratId s, const game::ViewPath& v,
                    size_t from_len, size_t to_len, long idx);
// The definite prestrategy a state of S(v) leaves the player with.
DefId decode_state(const StrategyStore& store, StratId s, const game::ViewPath& v, long idx);

struct StrategyFamily {
  game::Position pos;
  std::vector<StratId> components;  // one per player
};

struct ChannelGlue {
  int interface_channels = 0;
  std::vector<int> into_left, into_right;  // channel images, one per interface channel
};

struct GluedFamily {
  StrategyFamily family;
  std::vector<int> left_chan, right_chan;  // channel maps into the pushout
};

// Pushout of the two positions over a channels-only interface; left players
// come first. Component counts must match the positions.
GluedFamily pair(const StrategyFamily& left, const StrategyFamily& right, const ChannelGlue& glue);

// The trace forest of a play: one node per (initial player, view prefix)
// reached by some lineage; children extend the parent by one basic move.
struct TraceForest {
  struct Node {
    int root;
    game::ViewPath view;
    int parent = -1;
  };
  std::vector<Node> nodes;        // creation order; parents precede children
  std::vector<int> final_nodes;   // node of each final-position player
  int node_of(int root, const std::vector<game::BasicMove>& trace) const;
};

TraceForest trace_forest(const game::Play& play);

// A behaviour element: one state per forest node, compatible with every
// prefix restriction. `elements` lists all of them in lexicographic order of
// their state vectors.
struct ExtendResult {
  TraceForest forest;
  std::vector<std::vector<long>> elements;
};

ExtendResult extend(const StrategyStore& store, const StrategyFamily& f, const game::Play& play);

std::string dump(const StrategyStore& store, StratId s);
ccs::Json strategy_json(const StrategyStore& store, StratId s);

}  // namespace ccsgame::strat
