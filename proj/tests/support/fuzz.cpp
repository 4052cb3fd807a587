#include "fuzz.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace fuzz {

namespace {

constexpr int kNamePool = 6;
const char* const kEventKinds[] = {"action", "selection", "focusGained", "focusLost", "mouseMoved", "valueChanged"};
const char* const kWidgetKinds[] = {"button", "menuItem", "checkbox", "textField", "panel"};

struct Cls {
  std::string id;
  int unit = 0;
  bool library = false;
  bool interface = false;
  std::string extends;
  std::vector<std::string> implements;
  std::vector<int> names;  // method name indices
};

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng); }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))]; }
};

std::string name_of(int k) { return "m" + std::to_string(k); }

struct Builder {
  Gen g;
  Limits lim;
  std::vector<Cls> classes;
  std::map<std::string, std::size_t> byId;
  std::vector<bool> unitLibrary;

  bool isSubtype(const std::string& sub, const std::string& super) const {
    if (sub == super) return true;
    const Cls& c = classes[byId.at(sub)];
    if (!c.extends.empty() && isSubtype(c.extends, super)) return true;
    for (const auto& i : c.implements)
      if (isSubtype(i, super)) return true;
    return false;
  }

  bool resolves(const std::string& cls, int name) const {
    for (const Cls* c = &classes[byId.at(cls)];;) {
      if (std::find(c->names.begin(), c->names.end(), name) != c->names.end()) return true;
      if (c->extends.empty()) return false;
      c = &classes[byId.at(c->extends)];
    }
  }

  std::vector<std::string> resolvers(const std::string& type, int name) const {
    std::vector<std::string> out;
    for (const auto& c : classes)
      if (!c.interface && isSubtype(c.id, type) && resolves(c.id, name)) out.push_back(c.id);
    return out;
  }

  Json expr(int depth) {
    const int r = g.uniform(0, depth > 1 ? 2 : 3);
    if (r == 0) return g.uniform(0, 2);
    if (r == 1) return std::string(g.chance(0.5) ? "$payload" : "v" + std::to_string(g.uniform(0, 2)));
    if (r == 2) return "v" + std::to_string(g.uniform(0, 2));
    static const std::vector<std::string> ops{"+", "-", "==", "<", ">"};
    return Json::array({g.pick(ops), expr(depth + 1), expr(depth + 1)});
  }

  // Call targets for a method at `level` in a library/app context.
  std::vector<std::string> callTargets(int level, bool library) const {
    std::vector<std::string> out;
    for (const auto& c : classes) {
      if (library && !c.library) continue;
      for (int n : c.names)
        if (n > level) out.push_back(c.id + "." + name_of(n));
    }
    return out;
  }

  std::vector<std::pair<std::string, int>> vcallSites(int level, bool library) const {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& c : classes) {
      if (library && !c.library) continue;
      for (int n = level + 1; n < kNamePool; ++n)
        if (!resolvers(c.id, n).empty()) out.emplace_back(c.id, n);
    }
    return out;
  }

  static std::string receiver(const std::string& type, int name) {
    std::string v = "r_" + type + "_" + name_of(name);
    std::replace(v.begin(), v.end(), '.', '_');
    return v;
  }

  Json body(int level, bool library, int depth, std::set<std::pair<std::string, int>>& usedSites,
            const std::string& self) {
    Json out = Json::array();
    const int n = g.uniform(1, depth == 0 ? 5 : 2);
    for (int i = 0; i < n; ++i) {
      const int r = g.uniform(0, 99);
      if (r < 20) {
        out.push_back({{"kind", "exec"}, {"text", "op" + std::to_string(g.uniform(0, 99)) + "()"}});
      } else if (r < 35) {
        out.push_back({{"kind", "set"}, {"var", "v" + std::to_string(g.uniform(0, 2))}, {"expr", expr(0)}});
      } else if (r < 50 && depth < 2) {
        Json s{{"kind", "if"}, {"cond", expr(0)}, {"then", body(level, library, depth + 1, usedSites, self)}};
        if (g.chance(0.6)) s["else"] = body(level, library, depth + 1, usedSites, self);
        out.push_back(std::move(s));
      } else if (r < 68) {
        auto targets = callTargets(level, library);
        if (targets.empty()) continue;
        out.push_back({{"kind", "call"}, {"target", g.pick(targets)}});
      } else if (r < 84) {
        auto sites = vcallSites(level, library);
        if (sites.empty()) continue;
        const auto& [type, name] = g.pick(sites);
        usedSites.insert({type, name});
        out.push_back({{"kind", "vcall"}, {"type", type}, {"method", name_of(name)}, {"receiver", receiver(type, name)}});
      } else if (r < 90 && !library) {
        // Re-point a receiver at another concrete resolver.
        auto sites = vcallSites(-1, false);
        if (sites.empty()) continue;
        const auto& [type, name] = g.pick(sites);
        usedSites.insert({type, name});
        out.push_back({{"kind", "set"}, {"var", receiver(type, name)}, {"new", g.pick(resolvers(type, name))}});
      } else if (r < 94 && !library && depth < 2) {
        // Back edge (possibly recursive), guarded by a global counter.
        std::vector<std::string> targets;
        for (const auto& c : classes)
          if (!c.library)
            for (int nm : c.names)
              if (nm <= level) targets.push_back(c.id + "." + name_of(nm));
        if (level < 0 || g.chance(0.3)) targets.push_back(self);
        if (targets.empty()) continue;
        out.push_back({{"kind", "if"},
                       {"cond", Json::array({"<", "guard", 3})},
                       {"then", Json::array({{{"kind", "set"}, {"var", "guard"}, {"expr", Json::array({"+", "guard", 1})}},
                                             {{"kind", "call"}, {"target", g.pick(targets)}}})}});
      } else if (r < 97 && i > 0) {
        out.push_back({{"kind", "return"}});
        break;
      } else {
        out.push_back({{"kind", "exec"}, {"text", "noop()"}});
      }
    }
    if (out.empty()) out.push_back({{"kind", "exec"}, {"text", "noop()"}});
    return out;
  }

  Json build() {
    const int units = g.uniform(1, lim.maxUnits);
    for (int u = 0; u < units; ++u) unitLibrary.push_back(u > 0 && u == units - 1 && g.chance(0.5));

    // Declarations.
    int methods = 1;  // main
    for (int u = 0; u < units; ++u) {
      const int nc = g.uniform(1, lim.maxClassesPerUnit);
      for (int c = 0; c < nc; ++c) {
        Cls cls;
        cls.id = "u" + std::to_string(u) + ".C" + std::to_string(c);
        cls.unit = u;
        cls.library = unitLibrary[u];
        cls.interface = !(u == 0 && c == 0) && g.chance(0.2);
        std::vector<std::string> ifaces, supers;
        for (const auto& other : classes) {
          if (other.library != cls.library) continue;
          (other.interface ? ifaces : supers).push_back(other.id);
        }
        if (!cls.interface && !supers.empty() && !(u == 0 && c == 0) && g.chance(0.35)) cls.extends = g.pick(supers);
        for (const auto& i : ifaces)
          if (g.chance(cls.interface ? 0.3 : 0.4)) cls.implements.push_back(i);
        if (!cls.interface) {
          const int nm = g.uniform(u == 0 && c == 0 ? 0 : 1, 4);
          std::vector<int> pool(kNamePool);
          for (int i = 0; i < kNamePool; ++i) pool[i] = i;
          std::shuffle(pool.begin(), pool.end(), g.rng);
          for (int i = 0; i < nm && methods < lim.maxMethods; ++i, ++methods) cls.names.push_back(pool[i]);
          std::sort(cls.names.begin(), cls.names.end());
        }
        byId[cls.id] = classes.size();
        classes.push_back(std::move(cls));
      }
    }

    // Bodies.
    std::set<std::pair<std::string, int>> usedSites;
    std::map<std::string, Json> bodies;
    for (const auto& c : classes)
      for (int n : c.names) bodies[c.id + "." + name_of(n)] = body(n, c.library, 0, usedSites, c.id + "." + name_of(n));
    const std::string mainId = "u0.C0.main";
    Json mainBody = body(-1, false, 0, usedSites, mainId);
    Json prefix = Json::array();
    for (const auto& [type, name] : usedSites)
      prefix.push_back({{"kind", "set"}, {"var", receiver(type, name)}, {"new", g.pick(resolvers(type, name))}});
    for (auto& s : mainBody) prefix.push_back(std::move(s));
    bodies[mainId] = std::move(prefix);

    Json unitsJson = Json::array();
    for (int u = 0; u < units; ++u) {
      Json cj = Json::array();
      for (const auto& c : classes) {
        if (c.unit != u) continue;
        Json jc{{"name", c.id.substr(c.id.find('.') + 1)}};
        if (c.interface) jc["interface"] = true;
        if (!c.extends.empty()) jc["extends"] = c.extends;
        if (!c.implements.empty()) jc["implements"] = c.implements;
        Json ms = Json::array();
        if (c.id == "u0.C0") ms.push_back({{"name", "main"}, {"body", bodies[mainId]}});
        for (int n : c.names) ms.push_back({{"name", name_of(n)}, {"body", bodies[c.id + "." + name_of(n)]}});
        if (!c.interface) jc["methods"] = ms;
        cj.push_back(std::move(jc));
      }
      Json uj{{"name", "u" + std::to_string(u)}, {"classes", cj}};
      if (unitLibrary[u]) uj["library"] = true;
      unitsJson.push_back(std::move(uj));
    }

    // Widgets.
    std::vector<std::string> appMethods{mainId};
    for (const auto& c : classes)
      if (!c.library)
        for (int n : c.names) appMethods.push_back(c.id + "." + name_of(n));
    auto handlers = [&] {
      Json h = Json::object();
      const int kinds = g.uniform(0, 2);
      for (int k = 0; k < kinds; ++k) {
        std::vector<std::string> list;
        const int n = g.uniform(1, 2);
        for (int i = 0; i < n; ++i) {
          const auto& m = g.pick(appMethods);
          if (std::find(list.begin(), list.end(), m) == list.end()) list.push_back(m);
        }
        h[kEventKinds[g.uniform(0, 5)]] = list;
      }
      return h;
    };
    Json kids = Json::array();
    const int nw = g.uniform(1, 6);
    for (int i = 0; i < nw; ++i)
      kids.push_back({{"id", "w" + std::to_string(i)},
                      {"kind", kWidgetKinds[g.uniform(0, 4)]},
                      {"label", "W" + std::to_string(i)},
                      {"handlers", handlers()}});
    Json root{{"id", "root"}, {"kind", "window"}, {"label", "Root"}, {"children", kids}, {"handlers", handlers()}};

    return {{"name", "fuzz"}, {"main", mainId}, {"units", unitsJson}, {"widgets", root}};
  }
};

void collect_bindings(const Json& w, std::vector<std::pair<std::string, std::string>>& bound,
                      std::vector<std::string>& ids) {
  ids.push_back(w["id"]);
  if (w.contains("handlers"))
    for (const auto& [kind, list] : w["handlers"].items())
      if (!list.empty()) bound.emplace_back(w["id"], kind);
  if (w.contains("children"))
    for (const auto& c : w["children"]) collect_bindings(c, bound, ids);
}

}  // namespace

Json program(std::uint64_t seed, const Limits& limits) {
  Builder b{Gen(seed), limits, {}, {}, {}};
  return b.build();
}

Json script(const Json& program, std::uint64_t seed, const Limits& limits) {
  Gen g(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::pair<std::string, std::string>> bound;
  std::vector<std::string> ids;
  collect_bindings(program["widgets"], bound, ids);
  Json out = Json::array();
  const int n = g.uniform(0, limits.maxEvents);
  for (int i = 0; i < n; ++i) {
    std::string widget, kind;
    if (!bound.empty() && g.chance(0.8)) {
      std::tie(widget, kind) = g.pick(bound);
    } else {
      widget = g.pick(ids);
      kind = kEventKinds[g.uniform(0, 5)];
    }
    out.push_back({{"widget", widget}, {"kind", kind}, {"payload", g.uniform(0, 2)}});
  }
  return out;
}

}  // namespace fuzz
