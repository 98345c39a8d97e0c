#include "ccsgame/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ccsgame/ccs.hpp"
#include "ccsgame/fairtest.hpp"
#include "ccsgame/game.hpp"
#include "ccsgame/lts.hpp"
#include "ccsgame/strategy.hpp"

namespace ccsgame::cli {

namespace {

long env_long(const char* name, long fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  long parsed = std::strtol(v, &end, 10);
  return (end && *end == '\0') ? parsed : fallback;
}

struct ParsedInput {
  ccs::Context ctx{0};
  ccs::ProcId proc = -1;
};

ParsedInput parse_input(ccs::ProcessStore& store, const std::string& text) {
  ccs::ParsedProcess p = ccs::parse_ccs(store, text);
  if (!ccs::wellformed(store, p.ctx, p.proc))
    throw std::invalid_argument("process is not well-formed at its declared context: " + text);
  return {p.ctx, p.proc};
}

// wraps a structured system over full moves for display purposes
lts::Lts display_f(const lts::LtsOverF& f) {
  auto base = std::make_shared<lts::LtsOverF>(f);
  lts::Lts out;
  out.initial = f.initial;
  out.steps = [base](const std::string& key) {
    std::vector<lts::LtsEdge> edges;
    for (const auto& e : base->steps(key))
      edges.push_back({lts::to_string(lts::FullLabel{e.kind, e.anchor}), false, e.dst});
    return edges;
  };
  out.vertex_of = [base](const std::string& key) {
    game::Position z = base->position_of(key);
    return "channels=" + std::to_string(z.channels) +
           ",players=" + std::to_string(z.players.size());
  };
  out.describe = [base](const std::string& key) { return base->describe(key); };
  return out;
}

lts::Lts display_l(const lts::LtsOverL& l) {
  auto base = std::make_shared<lts::LtsOverL>(l);
  lts::Lts out;
  out.initial = l.initial;
  out.steps = [base](const std::string& key) {
    std::vector<lts::LtsEdge> edges;
    for (const auto& e : base->steps(key))
      edges.push_back({lts::to_string(lts::FullLabel{e.kind, e.anchor}), false, e.dst});
    return edges;
  };
  out.vertex_of = [base](const std::string& key) {
    return "interface=" + std::to_string(base->vertex_of(key).interface_channels);
  };
  out.describe = [base](const std::string& key) { return base->describe(key); };
  return out;
}

lts::InterfacedPosition identity_interface(int gamma) {
  lts::InterfacedPosition v;
  v.interface_channels = gamma;
  for (int c = 0; c < gamma; c++) v.h.push_back(c);
  v.x = game::single_player(gamma);
  return v;
}

int verdict_exit(const fairtest::Verdict& v) {
  switch (v.kind) {
    case fairtest::Verdict::Kind::Pass:
      return 0;
    case fairtest::Verdict::Kind::Fail:
      return 1;
    case fairtest::Verdict::Kind::Inconclusive:
      return 2;
  }
  return 2;
}

void emit_verdict(const fairtest::Verdict& v, bool json, std::ostream& out) {
  if (json) {
    out << fairtest::to_json(v).dump(2) << "\n";
    return;
  }
  switch (v.kind) {
    case fairtest::Verdict::Kind::Pass:
      out << "pass";
      break;
    case fairtest::Verdict::Kind::Fail:
      out << "fail" << (v.saturated ? " (saturated)" : "");
      break;
    case fairtest::Verdict::Kind::Inconclusive:
      out << "inconclusive (" << v.note << ")";
      break;
  }
  out << "  [family=" << v.family_size << ", depth=" << v.depth
      << ", budget_used=" << v.budget_used << "]\n";
  if (!v.witness.is_null()) out << "witness: " << v.witness.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const AcceptHook& accept) {
  CLI::App app{"CCS processes as strategies: translation, derived transition systems, "
               "bisimulation and fair-testing checks"};
  app.require_subcommand(1);

  bool json = false;
  long state_cap = env_long("CCSGAME_STATE_CAP", 100000);
  int max_arity = static_cast<int>(env_long("CCSGAME_MAX_ARITY", 8));
  int jobs = static_cast<int>(env_long("CCSGAME_JOBS", 1));

  app.add_flag("--json", json, "machine-readable JSON output");
  app.add_option("--state-cap", state_cap, "explored state budget")->capture_default_str();
  app.add_option("--max-arity", max_arity, "player arity bound (limits nested new)")
      ->capture_default_str();
  app.add_option("--jobs", jobs, "parallel workers for test families")->capture_default_str();
  app.fallthrough();

  std::string proc_text, left_text, right_text;

  auto* c_translate = app.add_subcommand("translate", "translate a process to its strategy");
  c_translate->add_option("process", proc_text, "process, e.g. \"[1] a1.0 | 'a1.0\"")->required();

  auto* c_lts = app.add_subcommand("lts", "explore a derived transition system");
  std::string source = "strategies", base = "A";
  std::string dot_path;
  c_lts->add_option("process", proc_text)->required();
  c_lts->add_option("--source", source, "ccs, terms or strategies")
      ->check(CLI::IsMember({"ccs", "terms", "strategies"}))
      ->capture_default_str();
  c_lts->add_option("--base", base, "F (full moves), L (interfaced) or A (CCS labels)")
      ->check(CLI::IsMember({"F", "L", "A"}))
      ->capture_default_str();
  c_lts->add_option("--dot", dot_path, "write a DOT rendering to this path");

  auto* c_bisim = app.add_subcommand("bisim", "bisimulation checks");
  bool strong = false, weak = false, against_interp = false;
  int bisim_depth = static_cast<int>(env_long("CCSGAME_DEPTH", 6));
  c_bisim->add_flag("--strong", strong, "term system vs strategy system through interpretation");
  c_bisim->add_flag("--weak", weak, "weak bisimilarity over CCS labels");
  c_bisim->add_option("--depth", bisim_depth, "approximation depth")->capture_default_str();
  c_bisim->add_option("--left-ccs", left_text, "left process");
  c_bisim->add_option("--right-ccs", right_text, "right process");
  c_bisim->add_flag("--against-interpretation", against_interp,
                    "compare the left process with its own strategy semantics");

  auto* c_fair = app.add_subcommand("fairtest", "fair testing equivalence against a family");
  bool standard = false, semantic = false;
  int fair_depth = static_cast<int>(env_long("CCSGAME_DEPTH", 4));
  int gen_depth = 2, gen_width = 2;
  std::vector<std::string> extra_tests;
  c_fair->add_flag("--standard", standard, "bot_s on P|T against CCS test processes");
  c_fair->add_flag("--semantic", semantic, "behaviour-level check on glued strategy families");
  c_fair->add_option("--left", left_text, "left process")->required();
  c_fair->add_option("--right", right_text, "right process")->required();
  c_fair->add_option("--depth", fair_depth, "play depth for the semantic side")
      ->capture_default_str();
  c_fair->add_option("--gen-depth", gen_depth, "generated tree-test depth")->capture_default_str();
  c_fair->add_option("--gen-width", gen_width, "generated tree-test branch width")
      ->capture_default_str();
  c_fair->add_option("--test", extra_tests, "additional test process (repeatable)");

  auto* c_accept = app.add_subcommand("accept", "run the acceptance suite");

  std::vector<const char*> argv;
  argv.push_back("ccsgame");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 3;
  }

  ccs::ProcessStore store;
  strat::StrategyStore strats;
  try {
    if (app.got_subcommand(c_translate)) {
      ParsedInput in = parse_input(store, proc_text);
      strat::StratId s = strat::translate_ccs(strats, store, in.ctx, in.proc);
      if (json) {
        ccs::Json j = {{"context", in.ctx.gamma}, {"strategy", strat::strategy_json(strats, s)}};
        out << j.dump(2) << "\n";
      } else {
        out << strat::dump(strats, s) << "\n";
      }
      return 0;
    }

    if (app.got_subcommand(c_lts)) {
      ParsedInput in = parse_input(store, proc_text);
      lts::Lts system;
      if (source == "ccs") {
        if (base != "A") {
          err << "usage error: --source ccs only supports --base A\n";
          return 3;
        }
        system = lts::ccs_lts(store, in.ctx, in.proc);
      } else if (source == "terms") {
        if (base != "F") {
          err << "usage error: --source terms only supports --base F\n";
          return 3;
        }
        lts::TState seed = lts::seed_term_state(strats, store, in.ctx, in.proc);
        system = display_f(lts::term_system(strats, seed, max_arity));
      } else {
        lts::TState seed = lts::seed_term_state(strats, store, in.ctx, in.proc);
        lts::SState sseed = lts::interpret_state(strats, seed);
        lts::LtsOverF f = lts::strategy_system(strats, sseed, max_arity);
        if (base == "F") {
          system = display_f(f);
        } else {
          lts::LtsOverL l = lts::pullback_lts(f, identity_interface(in.ctx.gamma));
          system = base == "L" ? display_l(l) : lts::postcompose_lts(l);
        }
      }
      int limit = static_cast<int>(state_cap);
      if (!dot_path.empty()) {
        std::ofstream df(dot_path);
        if (!df) {
          err << "cannot write " << dot_path << "\n";
          return 3;
        }
        df << lts::dot(system, limit);
      }
      if (json) {
        out << lts::lts_json(system, limit).dump(2) << "\n";
      } else {
        ccs::Json j = lts::lts_json(system, limit);
        out << j["states"].size() << " states from " << system.initial << "\n";
        for (const auto& e : j["edges"])
          out << "  " << e["src"].get<std::string>() << " --" << e["label"].get<std::string>()
              << (e["silent"].get<bool>() ? " (silent)" : "") << "--> "
              << e["dst"].get<std::string>() << "\n";
      }
      return 0;
    }

    if (app.got_subcommand(c_bisim)) {
      if (strong == weak) {
        err << "usage error: pick exactly one of --strong / --weak\n";
        return 3;
      }
      if (left_text.empty()) {
        err << "usage error: --left-ccs is required\n";
        return 3;
      }
      ParsedInput left = parse_input(store, left_text);
      if (strong) {
        lts::TState seed = lts::seed_term_state(strats, store, left.ctx, left.proc);
        lts::BisimReport r = lts::interpret_is_strong_bisim(strats, seed, bisim_depth, max_arity);
        if (json) {
          ccs::Json j = {{"ok", r.ok}};
          if (!r.ok) j["counterexample"] = r.counterexample;
          out << j.dump(2) << "\n";
        } else {
          out << (r.ok ? "strong bisimulation holds to depth " + std::to_string(bisim_depth)
                       : "mismatch: " + r.counterexample)
              << "\n";
        }
        return r.ok ? 0 : 1;
      }
      lts::Lts a = lts::ccs_lts(store, left.ctx, left.proc);
      lts::Lts b;
      if (against_interp) {
        lts::TState seed = lts::seed_term_state(strats, store, left.ctx, left.proc);
        lts::SState sseed = lts::interpret_state(strats, seed);
        b = lts::postcompose_lts(lts::pullback_lts(lts::strategy_system(strats, sseed, max_arity),
                                                   identity_interface(left.ctx.gamma)));
      } else {
        if (right_text.empty()) {
          err << "usage error: --right-ccs or --against-interpretation is required\n";
          return 3;
        }
        ParsedInput right = parse_input(store, right_text);
        if (right.ctx.gamma != left.ctx.gamma) {
          err << "usage error: contexts differ\n";
          return 3;
        }
        b = lts::ccs_lts(store, right.ctx, right.proc);
      }
      lts::BisimVerdict v = lts::weak_bisim_bounded(a, b, bisim_depth, state_cap);
      const char* outcome = nullptr;
      int code = 2;
      switch (v.outcome) {
        case lts::BisimVerdict::Outcome::Bisimilar:
          outcome = "bisimilar";
          code = 0;
          break;
        case lts::BisimVerdict::Outcome::BisimilarToDepth:
          outcome = "bisimilar-to-depth";
          code = 0;
          break;
        case lts::BisimVerdict::Outcome::NotBisimilar:
          outcome = "not-bisimilar";
          code = 1;
          break;
        case lts::BisimVerdict::Outcome::BudgetExceeded:
          outcome = "budget-exceeded";
          code = 2;
          break;
      }
      if (json) {
        ccs::Json j = {{"outcome", outcome},
                       {"depth_used", v.depth_used},
                       {"states_explored", v.states_explored},
                       {"trace", v.trace}};
        out << j.dump(2) << "\n";
      } else {
        out << outcome << " (depth " << v.depth_used << ", " << v.states_explored << " states)\n";
        for (const auto& t : v.trace) out << "  " << t << "\n";
      }
      return code;
    }

    if (app.got_subcommand(c_fair)) {
      if (standard == semantic) {
        err << "usage error: pick exactly one of --standard / --semantic\n";
        return 3;
      }
      ParsedInput left = parse_input(store, left_text);
      ParsedInput right = parse_input(store, right_text);
      if (left.ctx.gamma != right.ctx.gamma) {
        err << "usage error: contexts differ\n";
        return 3;
      }
      fairtest::Budget budget;
      budget.state_cap = state_cap;
      budget.max_arity = max_arity;
      budget.jobs = jobs;
      fairtest::TestFamily family =
          fairtest::gen_tree_tests(store, left.ctx, gen_depth, gen_width);
      for (const auto& t : extra_tests) {
        ParsedInput ti = parse_input(store, t);
        if (ti.ctx.gamma != left.ctx.gamma) {
          err << "usage error: test context differs: " << t << "\n";
          return 3;
        }
        family.tests.push_back(ti.proc);
      }
      fairtest::Verdict v;
      if (standard) {
        v = fairtest::fair_equiv_standard(store, left.proc, right.proc, left.ctx, family, budget);
      } else {
        fairtest::InterfacedFamily s1 =
            fairtest::semantic_subject(strats, store, left.ctx, left.proc);
        fairtest::InterfacedFamily s2 =
            fairtest::semantic_subject(strats, store, right.ctx, right.proc);
        std::vector<fairtest::SemanticTest> tests;
        for (ccs::ProcId t : family.tests)
          tests.push_back(fairtest::semantic_subject(strats, store, left.ctx, t));
        v = fairtest::fair_equiv_semantic(strats, s1, s2, tests, fair_depth, budget);
      }
      emit_verdict(v, json, out);
      return verdict_exit(v);
    }

    if (app.got_subcommand(c_accept)) {
      if (!accept) {
        err << "acceptance suite is not linked into this entry point\n";
        return 3;
      }
      int failures = accept(out);
      return failures == 0 ? 0 : 1;
    }
  } catch (const ccs::ParseError& e) {
    err << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const game::MaxArityExceeded& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "usage error: no subcommand\n";
  return 3;
}

}  // namespace ccsgame::cli
