#pragma once
// Transition systems over reflexive alphabet graphs.
//
// Three alphabets appear here. F has positions as vertices and full moves as
// edges; it carries the systems derived from strategy families and from
// process-term families. L refines F with an interface (a chosen subset of
// channels); input and output moves on channels outside the interface are
// dropped. A is the CCS alphabet: contexts as vertices, with id, tick, a and
// 'a edges. The change of base goes A <- L -> F: pull an F-system back along
// the forgetful map, then push the labels into A.
//
// All derived systems are lazy. States are addressed by printable keys and
// successor lists are produced by step functions; exploration utilities
// (reachability, bounded weak bisimulation, DOT dumps) work on that
// interface only.

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ccsgame/ccs.hpp"
#include "ccsgame/game.hpp"
#include "ccsgame/strategy.hpp"

namespace ccsgame::lts {

// ---------------------------------------------------------------------------
// Generic lazy LTS over the CCS alphabet A

struct LtsEdge {
  std::string label;  // display form of the alphabet edge
  bool silent = false;  // labelled by an identity edge of the alphabet
  std::string dst;  // target state key
};

struct Lts {
  std::string initial;
  // outgoing edges, sorted by (label, dst) and deduplicated
  std::function<std::vector<LtsEdge>(const std::string&)> steps;
  // alphabet vertex under a state (the context, printed)
  std::function<std::string(const std::string&)> vertex_of;
  // human-readable form of a state
  std::function<std::string(const std::string&)> describe;
};

// CCS processes at a fixed context, with tick kept as a visible label and
// synchronizations silent.
Lts ccs_lts(ccs::ProcessStore& store, ccs::Context ctx, ccs::ProcId p);

// ---------------------------------------------------------------------------
// Systems over F

// one definite strategy per player
struct SState {
  game::Position pos;
  std::vector<strat::DefId> defs;
};

// one process term per player
struct TState {
  game::Position pos;
  std::vector<strat::TermId> terms;
};

// An edge of F: a full move together with the players it is anchored at.
struct FullLabel {
  game::MoveKind kind;
  game::Anchor anchor;
};
std::string to_string(const FullLabel& l);

std::string state_key(const SState& s);
std::string state_key(const TState& t);

// Successors of a strategy-family state: every enabled full move whose
// residuals are all non-empty, once per choice of initial states in those
// residuals. Uninvolved players carry over unchanged.
std::vector<std::pair<FullLabel, SState>> strategy_step(const strat::StrategyStore& store,
                                                        const SState& s, int max_arity);

// Successors of a term-family state: forks enable the Para move, guarded
// sums enable one move per branch, and two distinct players offering an
// output and an input on the same position channel enable Tau.
std::vector<std::pair<FullLabel, TState>> term_step(const strat::StrategyStore& store,
                                                    const TState& t, int max_arity);

// the single-player seed state for a process and its interpretation
TState seed_term_state(strat::StrategyStore& store, const ccs::ProcessStore& ps, ccs::Context ctx,
                       ccs::ProcId p);
SState interpret_state(strat::StrategyStore& store, const TState& t);
SState interpret_state_swapped(strat::StrategyStore& store, const TState& t);

// Checks that interpretation is a strong bisimulation between the term
// system and the strategy system, from the seed down to the given depth.
// `swapped` corrupts the interpretation by exchanging fork branches; the
// mutation tests rely on the corruption being caught.
struct BisimReport {
  bool ok = true;
  std::string counterexample;  // first mismatch, empty when ok
};
BisimReport interpret_is_strong_bisim(strat::StrategyStore& store, const TState& seed, int depth,
                                      int max_arity, bool swapped = false);

// ---------------------------------------------------------------------------
// Change of base

// A position together with an interface: an injection of interface channels
// into the position's channels. The interface itself has no players.
struct InterfacedPosition {
  int interface_channels = 0;
  std::vector<int> h;  // size interface_channels, injective into x's channels
  game::Position x;
};

// Full moves permitted at an interfaced position: everything except inputs
// and outputs anchored at a channel outside the image of h.
bool l_edge_allowed(const InterfacedPosition& v, const game::MoveKind& kind,
                    const game::Anchor& anchor);

// The A-label of an L-edge: tick goes to tick, Tau/Para/Nu go to id, and an
// input or output on the interface channel a goes to a or 'a.
ccs::LabelA xi(const InterfacedPosition& v, const game::MoveKind& kind, const game::Anchor& anchor);

// An explicitly enumerated fragment of L and its forgetful map into F,
// restricted to positions within the given bounds. Edges are kept only when
// both endpoints stay within bounds.
struct ChiFragment {
  struct Edge {
    int src;
    game::MoveKind kind;
    game::Anchor anchor;
    int dst;
  };
  std::vector<InterfacedPosition> l_vertices;
  std::vector<Edge> l_edges;
  std::vector<game::Position> f_vertices;
  std::vector<Edge> f_edges;
  std::vector<int> chi_vertex;  // L vertex -> F vertex
  std::vector<int> chi_edge;    // L edge -> F edge
};
ChiFragment build_chi(int max_channels, int max_players, int max_arity);

// A lazy system over F with structured labels, as produced by the steppers.
struct FEdgeOut {
  game::MoveKind kind;
  game::Anchor anchor;
  std::string dst;
};
struct LtsOverF {
  std::string initial;
  std::function<std::vector<FEdgeOut>(const std::string&)> steps;
  std::function<game::Position(const std::string&)> position_of;
  std::function<std::string(const std::string&)> describe;
};

LtsOverF strategy_system(const strat::StrategyStore& store, const SState& start, int max_arity);
LtsOverF term_system(const strat::StrategyStore& store, const TState& start, int max_arity);

// Pullback along the forgetful map: states pair an interfaced position with
// a system state over the same underlying position; edges pair an L-edge
// with a system edge over the same full move.
struct LtsOverL {
  std::string initial;
  std::function<std::vector<FEdgeOut>(const std::string&)> steps;
  std::function<InterfacedPosition(const std::string&)> vertex_of;
  std::function<std::string(const std::string&)> describe;
};
LtsOverL pullback_lts(const LtsOverF& p, const InterfacedPosition& start);

// Postcomposition with xi: same states and transitions, labels in A.
Lts postcompose_lts(const LtsOverL& p);

// ---------------------------------------------------------------------------
// Weak bisimulation

struct BisimVerdict {
  enum class Outcome {
    Bisimilar,         // exact: both reachable graphs finite, approximants stabilized
    BisimilarToDepth,  // bounded positive answer only
    NotBisimilar,      // definite at any depth
    BudgetExceeded,
  };
  Outcome outcome = Outcome::BudgetExceeded;
  int depth_used = 0;
  long states_explored = 0;
  // counterexample trace: alternating state-pair hashes and labels
  std::vector<std::string> trace;
};

// Bounded weak bisimilarity: silent steps are the id-labelled edges, a weak
// step is silent* (label) silent*, and the check runs the standard
// approximant recursion to the given depth. When both reachable graphs fit
// under the state cap the approximants are iterated to stabilization and the
// verdict is exact.
BisimVerdict weak_bisim_bounded(const Lts& a, const Lts& b, int depth, long state_cap);

// ---------------------------------------------------------------------------
// Export

// BFS fragment of at most max_states states; silent edges dashed, tick
// edges bold.
std::string dot(const Lts& l, int max_states);
ccs::Json lts_json(const Lts& l, int max_states);

}  // namespace ccsgame::lts
