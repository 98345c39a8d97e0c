#pragma once

// The finitely presented base category underlying positions and moves, and
// finite presheaves over it. Objects are a channel object, player objects
// [n], and one object per move shape; generators embed players and channels
// into moves; four equation schemes identify the overlapping embeddings.
// Every composite has length <= 3, so hom sets are tabulated up front for a
// configured maximum arity and morphisms are stored as (src, dst, class).

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace ccsgame::presheaf {

using Json = nlohmann::json;

enum class ObKind : uint8_t { Star, Player, In, Out, Nu, ParaL, ParaR, Para, Tick, Tau };

struct BaseObject {
  ObKind kind = ObKind::Star;
  // Player/ParaL/ParaR/Para/Tick/Nu: n is the player arity (Nu n is the
  // pre-move arity). In/Out: arity n, channel 1 <= i <= n. Tau: output side
  // (m, j), input side (n, i).
  int n = 0, i = 0, m = 0, j = 0;

  friend bool operator==(const BaseObject&, const BaseObject&) = default;
  friend auto operator<=>(const BaseObject&, const BaseObject&) = default;
};

BaseObject star();
BaseObject player(int n);
BaseObject ob_in(int n, int i);
BaseObject ob_out(int n, int i);
BaseObject ob_nu(int n);
BaseObject ob_paral(int n);
BaseObject ob_parar(int n);
BaseObject ob_para(int n);
BaseObject ob_tick(int n);
BaseObject ob_tau(int m, int j, int n, int i);

std::string object_key(const BaseObject& ob);

using ObId = int32_t;
using GenId = int32_t;

struct Generator {
  GenId id;
  std::string key;
  ObId src, dst;
};

// A morphism of the base category in normal form: an equivalence class of
// generator paths, indexed within the tabulated hom set of its endpoints.
struct Morphism {
  ObId src = -1, dst = -1;
  int32_t cls = -1;

  friend bool operator==(const Morphism&, const Morphism&) = default;
};

class Presentation {
 public:
  explicit Presentation(int max_arity);

  int max_arity() const { return max_arity_; }

  const std::vector<BaseObject>& objects() const { return objects_; }
  const std::vector<Generator>& generators() const { return gens_; }

  ObId object_id(const BaseObject& ob) const;         // -1 if absent
  ObId require_object(const BaseObject& ob) const;    // throws if absent
  const BaseObject& object(ObId id) const { return objects_.at(id); }
  std::string key_of(ObId id) const { return object_key(objects_.at(id)); }

  GenId generator_id(const std::string& key) const;   // -1 if absent
  const Generator& generator(GenId id) const { return gens_.at(id); }

  // Parallel generator paths identified by the presentation, in diagrammatic
  // order (first edge first). Extensions by pre/postcomposition are already
  // included, so checking these pointwise decides presheaf-hood.
  struct Equation {
    std::vector<GenId> lhs, rhs;
  };
  const std::vector<Equation>& equations() const { return equations_; }

  // Hom sets. Classes are ordered by their lexicographically least path.
  int hom_size(ObId a, ObId b) const;
  Morphism identity(ObId a) const { return {a, a, 0}; }
  Morphism normalize(ObId src, const std::vector<GenId>& path) const;
  Morphism normalize_keys(const BaseObject& src, const std::vector<std::string>& keys) const;
  const std::vector<GenId>& repr_path(const Morphism& m) const;
  // Diagrammatic composition: first f, then g.
  Morphism then(const Morphism& f, const Morphism& g) const;

 private:
  struct HomSet {
    std::vector<std::vector<GenId>> reprs;
    std::map<std::vector<GenId>, int32_t> cls_of;
  };
  const HomSet* hom_set(ObId a, ObId b) const;

  int max_arity_;
  std::vector<BaseObject> objects_;
  std::map<BaseObject, ObId> ob_index_;
  std::vector<Generator> gens_;
  std::unordered_map<std::string, GenId> gen_index_;
  std::vector<std::vector<GenId>> out_edges_;  // by src object
  std::vector<Equation> equations_;
  std::unordered_map<uint64_t, HomSet> homs_;
};

// Shared immutable presentation per maximum arity.
const Presentation& presentation(int max_arity);

// A finite presheaf: carrier sizes per object (elements 0..size-1) and, for
// each generator with inhabited target, the contravariant action taking an
// element of the target carrier to one of the source carrier.
class FinPresheaf {
 public:
  void set_size(ObId ob, int size);
  int size(ObId ob) const;
  const std::vector<ObId>& support() const { return support_; }

  void set_action(GenId g, std::vector<int> images);
  const std::vector<int>* action(GenId g) const;

  int apply_gen(GenId g, int elt) const;
  int apply(const Presentation& pres, const Morphism& m, int elt) const;

  // Structural soundness: every generator into an inhabited carrier has a
  // total action landing in its source carrier.
  std::optional<std::string> validate(const Presentation& pres) const;

  friend bool operator==(const FinPresheaf&, const FinPresheaf&) = default;

 private:
  std::map<ObId, int> sizes_;
  std::vector<ObId> support_;
  std::map<GenId, std::vector<int>> actions_;
};

// True iff the carrier data is structurally sound and every equation
// instance of the presentation commutes pointwise.
bool check_presheaf(const Presentation& pres, const FinPresheaf& f);

FinPresheaf representable(const Presentation& pres, const BaseObject& c);

// The category of elements of a representable: one node per (object,
// element), one arrow per generator application.
struct ElementCategory {
  struct Node {
    ObId ob;
    int elt;
  };
  struct Arrow {
    GenId gen;
    int src_node, dst_node;  // (src ob, acted element) -> (dst ob, element)
  };
  std::vector<Node> nodes;
  std::vector<Arrow> arrows;
  int node_of(ObId ob, int elt) const;
};

ElementCategory elements_of_representable(const Presentation& pres, const BaseObject& c,
                                          FinPresheaf* out_presheaf = nullptr);

// Natural transformation data: one component map per object of the source's
// support.
struct PresheafMorphism {
  std::map<ObId, std::vector<int>> comp;

  int apply(ObId ob, int elt) const;
};

bool check_natural(const Presentation& pres, const FinPresheaf& x, const FinPresheaf& y,
                   const PresheafMorphism& phi);
bool is_mono(const FinPresheaf& x, const PresheafMorphism& phi);

struct PushoutResult {
  FinPresheaf apex;
  PresheafMorphism in_x, in_y;
};

// Pointwise pushout of x <-f- i -g-> y. Inputs must be valid presheaves and
// f, g natural; throws std::invalid_argument otherwise.
PushoutResult pushout(const Presentation& pres, const FinPresheaf& i, const FinPresheaf& x,
                      const FinPresheaf& y, const PresheafMorphism& f, const PresheafMorphism& g);

// The unique map out of a pushout apex determined by p: x -> w and q: y -> w
// with p.f == q.g; throws std::invalid_argument if the cocone does not
// commute on i.
PresheafMorphism mediating(const Presentation& pres, const FinPresheaf& i, const FinPresheaf& x,
                           const FinPresheaf& y, const PresheafMorphism& f,
                           const PresheafMorphism& g, const PushoutResult& po,
                           const PresheafMorphism& p, const PresheafMorphism& q);

Json to_json(const Presentation& pres, const FinPresheaf& f);
// named to stay out of the way of the json library's own from_json overloads
FinPresheaf presheaf_from_json(const Presentation& pres, const Json& j);

}  // namespace ccsgame::presheaf
