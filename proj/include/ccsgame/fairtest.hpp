#pragma once
// Fair testing. The operator bot_s works on any system over the CCS alphabet
// and asks that every tick-free reduction sequence can be extended by one
// containing a tick. The standard equivalence compares two processes against
// a family of CCS test processes; the semantic one glues strategy families
// over a shared interface and checks the bounded behaviour-level condition
// through the extension functor.

#include <string>
#include <vector>

#include "ccsgame/ccs.hpp"
#include "ccsgame/game.hpp"
#include "ccsgame/lts.hpp"
#include "ccsgame/strategy.hpp"

namespace ccsgame::fairtest {

struct Budget {
  long state_cap = 100000;  // explored states / plays before giving up
  int max_arity = 8;        // player arity bound for move generation
  int jobs = 1;             // parallel workers across a test family
};

struct Verdict {
  enum class Kind { Pass, Fail, Inconclusive };
  Kind kind = Kind::Inconclusive;
  ccs::Json witness;        // present on Fail; replayable
  bool saturated = false;   // semantic Fail: the refutation is exhaustive, not depth-bounded
  long budget_used = 0;
  int depth = 0;
  long family_size = 0;
  std::string note;         // details for Inconclusive
};
ccs::Json to_json(const Verdict& v);

// ---------------------------------------------------------------------------
// Standard side

// Pass iff every state silent-reachable from `state` has a silent path to a
// tick edge. The Fail witness is the silent path (as state keys) to a state
// with no such continuation.
Verdict bot_s(const lts::Lts& l, const std::string& state, const Budget& budget);

// test processes sharing the tested context
struct TestFamily {
  ccs::Context ctx{0};
  std::vector<ccs::ProcId> tests;
};

// All guarded-sum trees over the prefixes a, 'a (a in 1..ctx) and tick, of
// depth <= depth and branch width <= width, deduplicated up to branch
// reordering, in a deterministic order.
TestFamily gen_tree_tests(ccs::ProcessStore& store, ccs::Context ctx, int depth, int width);

// Pass iff bot_s(P|T) and bot_s(Q|T) agree for every T in the family. The
// verdict is relative to the family; Fail names the distinguishing test.
Verdict fair_equiv_standard(ccs::ProcessStore& store, ccs::ProcId p, ccs::ProcId q,
                            ccs::Context ctx, const TestFamily& tests, const Budget& budget);

// ---------------------------------------------------------------------------
// Semantic side

// A strategy family with an interface chosen among its channels. Used both
// for tested processes and for tests.
struct InterfacedFamily {
  int interface_channels = 0;
  std::vector<int> embed;  // interface channel -> channel of family.pos
  strat::StrategyFamily family;
};
using SemanticTest = InterfacedFamily;

// the translated single-player family of a process, with the identity
// interface on its context
InterfacedFamily semantic_subject(strat::StrategyStore& ss, const ccs::ProcessStore& ps,
                                  ccs::Context ctx, ccs::ProcId p);

// Bounded behaviour-level testing predicate on the position Z: for every
// closed-world play U from Z of length < k and every element of
// extend(f, U) with U unsuccessful, some closed-world extension of length
// <= k is successful and carries a compatible element. Fail witnesses carry
// the play and the element; `saturated` is set when the residual state
// space was exhausted, making the refutation depth-independent.
Verdict semantic_bot(const strat::StrategyStore& store, const strat::StrategyFamily& f, int k,
                     const Budget& budget);

// Glues subject and test over the shared interface by pushout and runs
// semantic_bot on the result.
Verdict passes(const strat::StrategyStore& store, const InterfacedFamily& subject,
               const SemanticTest& test, int k, const Budget& budget);

// Pass iff `passes` agrees on every supplied test at depth k.
Verdict fair_equiv_semantic(const strat::StrategyStore& store, const InterfacedFamily& s1,
                            const InterfacedFamily& s2, const std::vector<SemanticTest>& tests,
                            int k, const Budget& budget);

}  // namespace ccsgame::fairtest
