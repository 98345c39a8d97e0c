#pragma once

// Positions, moves and plays of the game. A position is a finite set of
// channels plus players, each with an ordered channel assignment; it is the
// concrete form of a presheaf inhabiting only the channel and player
// objects. Moves are instantiated local seeds; plays are composable
// sequences of moves; views project a play onto one player lineage.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ccsgame/presheaf.hpp"

namespace ccsgame::game {

using presheaf::Presentation;

struct Player {
  int arity = 0;
  std::vector<int> assign;  // 0-based channel ids, size == arity

  friend bool operator==(const Player&, const Player&) = default;
};

struct Position {
  int channels = 0;
  std::vector<Player> players;

  friend bool operator==(const Position&, const Position&) = default;
};

// The position [n]: one n-ary player on n distinct channels.
Position single_player(int arity);

enum class MoveTag : uint8_t { In, Out, Nu, ParaL, ParaR, Para, Tick, Tau };

struct MoveKind {
  MoveTag tag = MoveTag::Tick;
  // In/Out: player arity n, channel index 1 <= i <= n. Nu/ParaL/ParaR/Para/
  // Tick: arity n. Tau: output side (m, j), input side (n, i).
  int n = 0, i = 0, m = 0, j = 0;

  friend bool operator==(const MoveKind&, const MoveKind&) = default;
};

std::string to_string(const MoveKind& k);
presheaf::BaseObject move_object(const MoveKind& k);

bool is_full(const MoveKind& k);          // everything but ParaL/ParaR
bool is_closed_world(const MoveKind& k);  // Nu, Tick, Para, Tau

struct Anchor {
  int player = -1;                      // single-anchor kinds
  int out_player = -1, in_player = -1;  // Tau: (output side, input side)

  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct GlobalMove {
  MoveKind kind;
  Position initial, final_pos;
  Anchor anchor;
  // Correspondence: initial player p has avatars player_map[p] in the final
  // position (second slot -1 except for the fork anchor). Channels embed by
  // identity; Nu appends new_channel.
  std::vector<std::array<int, 2>> player_map;
  int new_channel = -1;

  friend bool operator==(const GlobalMove&, const GlobalMove&) = default;
};

// The seed cospan of a move shape at its smallest position, together with
// its presheaf form (the representable at the move object and the two legs)
// for cross-checking instantiation against genuine pushouts.
struct LocalSeed {
  MoveKind kind;
  Position initial, final_pos;
  int interface_channels = 0;  // the channels of the initial position
  presheaf::FinPresheaf mid;
  presheaf::PresheafMorphism leg_final, leg_initial;
};

LocalSeed local_seed(const Presentation& pres, const MoveKind& kind);

struct MaxArityExceeded : std::runtime_error {
  explicit MaxArityExceeded(int arity)
      : std::runtime_error("player arity " + std::to_string(arity) +
                           " exceeds the configured maximum; raise --max-arity") {}
};

// Builds the global move for `kind` anchored at `anchor` inside z. The
// result agrees with pushing the seed cospan along the canonical interface
// into z minus the anchored players; that construction is kept as a test
// oracle. Throws std::invalid_argument on anchor mismatch and
// MaxArityExceeded when a Nu move would leave the tabulated arities.
GlobalMove instantiate(const MoveKind& kind, const Position& z, const Anchor& anchor,
                       int max_arity);

enum class MoveFilter { All, FullOnly, ClosedWorldOnly };

struct EnabledMoves {
  std::vector<GlobalMove> moves;
  bool truncated = false;  // a Nu move was suppressed by the arity bound
};

// All instantiations at all valid anchors, deduplicated by (kind, anchor),
// in canonical order: per player ParaL, ParaR, Para, Tick, Nu, then In/Out
// interleaved per channel; then Tau by (out player, in player, j, i).
EnabledMoves enabled_moves(const Position& z, MoveFilter filter, int max_arity);

struct Play {
  Position initial;
  std::vector<GlobalMove> moves;

  const Position& current() const { return moves.empty() ? initial : moves.back().final_pos; }
};

// Appends a move; its initial position must equal the play's current final
// position structurally.
Play compose(Play play, GlobalMove move);

bool is_successful(const Play& play);  // contains a Tick move

// One step of a player lineage, without ambient anchoring.
struct BasicMove {
  enum class Tag : uint8_t { ParaL, ParaR, Tick, Nu, In, Out };
  Tag tag = Tag::Tick;
  int channel = 0;  // In/Out: 1-based local channel index

  friend bool operator==(const BasicMove&, const BasicMove&) = default;
  friend auto operator<=>(const BasicMove&, const BasicMove&) = default;
};

std::string to_string(const BasicMove& b);

struct ViewPath {
  int start_arity = 0;
  std::vector<BasicMove> moves;

  friend bool operator==(const ViewPath&, const ViewPath&) = default;
};

int arity_after(const ViewPath& v, size_t len);  // Nu steps raise the arity
bool valid_view(const ViewPath& v);

// The view of one final player of the play: the basic moves its lineage
// performed, in order, together with the lineage's initial player index.
struct TracedView {
  int root = -1;
  ViewPath view;
};
TracedView traced_view_of(const Play& play, int final_player);
ViewPath view_of(const Play& play, int final_player);

presheaf::FinPresheaf to_presheaf(const Presentation& pres, const Position& z);
// Reads channels and players back off a presheaf (player order follows the
// per-arity carriers, so the round trip is only up to player reordering).
Position position_of_presheaf(const Presentation& pres, const presheaf::FinPresheaf& f);

// Canonical labeling up to isomorphism (channel and player renaming),
// refined by per-player attachment tags so labelled states can reuse it.
struct Canonical {
  std::string key;
  Position pos;
  std::vector<int> player_perm;   // new index -> old index
  std::vector<int> channel_perm;  // new index -> old index
  std::vector<uint64_t> attach;   // attachments in the new player order
};

Canonical canonical_form(const Position& z, const std::vector<uint64_t>& attach = {});

std::string dot(const Position& z);
std::string dot(const Play& play);
presheaf::Json to_json(const Position& z);
presheaf::Json to_json(const GlobalMove& m);
presheaf::Json to_json(const Play& play);

}  // namespace ccsgame::game
