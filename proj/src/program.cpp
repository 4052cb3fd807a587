#include "guitrace/program.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <set>
#include <unordered_set>

#include "guitrace/error.hpp"

namespace guitrace {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 6> kEventKinds{{
    {EventKind::action, "action"},
    {EventKind::selection, "selection"},
    {EventKind::focusGained, "focusGained"},
    {EventKind::focusLost, "focusLost"},
    {EventKind::mouseMoved, "mouseMoved"},
    {EventKind::valueChanged, "valueChanged"},
}};

constexpr std::array<std::pair<WidgetKind, std::string_view>, 6> kWidgetKinds{{
    {WidgetKind::window, "window"},
    {WidgetKind::button, "button"},
    {WidgetKind::menuItem, "menuItem"},
    {WidgetKind::checkbox, "checkbox"},
    {WidgetKind::textField, "textField"},
    {WidgetKind::panel, "panel"},
}};

constexpr std::array<std::pair<BinaryOp, std::string_view>, 5> kOps{{
    {BinaryOp::add, "+"},
    {BinaryOp::sub, "-"},
    {BinaryOp::eq, "=="},
    {BinaryOp::lt, "<"},
    {BinaryOp::gt, ">"},
}};

constexpr std::string_view kPayloadRef = "$payload";

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto head = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  auto tail = [&](char c) { return head(c) || (c >= '0' && c <= '9'); };
  if (!head(s.front())) return false;
  return std::all_of(s.begin() + 1, s.end(), tail);
}

bool is_dotted_identifier(std::string_view s) {
  std::size_t start = 0;
  while (true) {
    const auto dot = s.find('.', start);
    if (!is_identifier(s.substr(start, dot == std::string_view::npos ? dot : dot - start))) return false;
    if (dot == std::string_view::npos) return true;
    start = dot + 1;
  }
}

// --- JSON reading helpers -------------------------------------------------

[[noreturn]] void shape_error(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) shape_error(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) shape_error(where, std::string("missing key '") + key + "'");
  return *it;
}

std::string require_string(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_string()) shape_error(where, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

bool optional_bool(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return false;
  if (!it->is_boolean()) shape_error(where, std::string("'") + key + "' must be a boolean");
  return it->get<bool>();
}

const Json& optional_array(const Json& obj, const char* key, const std::string& where) {
  static const Json empty = Json::array();
  auto it = obj.find(key);
  if (it == obj.end()) return empty;
  if (!it->is_array()) shape_error(where, std::string("'") + key + "' must be an array");
  return *it;
}

void check_keys(const Json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [k, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      shape_error(where, "unexpected key '" + k + "'");
  }
}

Expr expr_from_json(const Json& j, const std::string& where) {
  if (j.is_number_integer()) return Expr::lit(j.get<std::int64_t>());
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == kPayloadRef) return Expr::payload();
    if (!is_identifier(s)) shape_error(where, "bad variable name '" + s + "'");
    return Expr::var(s);
  }
  if (j.is_array() && j.size() == 3 && j[0].is_string()) {
    const auto sym = j[0].get<std::string>();
    for (const auto& [op, text] : kOps) {
      if (text == sym) return Expr::bin(op, expr_from_json(j[1], where), expr_from_json(j[2], where));
    }
    shape_error(where, "unknown operator '" + sym + "'");
  }
  shape_error(where, "malformed expression " + j.dump());
}

Json expr_to_json(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::literal: return e.literal;
    case Expr::Kind::variable: return e.variable;
    case Expr::Kind::payload: return std::string(kPayloadRef);
    case Expr::Kind::binary: {
      std::string sym;
      for (const auto& [op, text] : kOps)
        if (op == e.op) sym = text;
      return Json::array({sym, expr_to_json(e.operands[0]), expr_to_json(e.operands[1])});
    }
  }
  return nullptr;
}

std::vector<Stmt> body_from_json(const Json& arr, const std::string& where);

Stmt stmt_from_json(const Json& j, const std::string& where) {
  const std::string kind = require_string(j, "kind", where);
  Stmt s;
  if (kind == "exec") {
    check_keys(j, {"kind", "text"}, where);
    s.node = ExecStmt{require_string(j, "text", where)};
  } else if (kind == "set") {
    check_keys(j, {"kind", "var", "expr", "new"}, where);
    SetStmt set;
    set.var = require_string(j, "var", where);
    if (!is_identifier(set.var)) shape_error(where, "bad variable name '" + set.var + "'");
    const bool hasExpr = j.contains("expr");
    const bool hasNew = j.contains("new");
    if (hasExpr == hasNew) shape_error(where, "set needs exactly one of 'expr' or 'new'");
    if (hasExpr) set.expr = expr_from_json(j["expr"], where);
    else set.newClass = require_string(j, "new", where);
    s.node = std::move(set);
  } else if (kind == "if") {
    check_keys(j, {"kind", "cond", "then", "else"}, where);
    IfStmt ifs;
    ifs.cond = expr_from_json(require(j, "cond", where), where);
    ifs.thenBody = body_from_json(optional_array(j, "then", where), where + ".then");
    ifs.elseBody = body_from_json(optional_array(j, "else", where), where + ".else");
    s.node = std::move(ifs);
  } else if (kind == "call") {
    check_keys(j, {"kind", "target"}, where);
    s.node = CallStmt{require_string(j, "target", where), {}};
  } else if (kind == "vcall") {
    check_keys(j, {"kind", "type", "method", "receiver"}, where);
    VCallStmt v;
    v.declaredType = require_string(j, "type", where);
    v.methodName = require_string(j, "method", where);
    v.receiverVar = require_string(j, "receiver", where);
    if (!is_identifier(v.receiverVar)) shape_error(where, "bad receiver name '" + v.receiverVar + "'");
    s.node = std::move(v);
  } else if (kind == "return") {
    check_keys(j, {"kind"}, where);
    s.node = ReturnStmt{};
  } else {
    shape_error(where, "unknown statement kind '" + kind + "'");
  }
  return s;
}

std::vector<Stmt> body_from_json(const Json& arr, const std::string& where) {
  std::vector<Stmt> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(stmt_from_json(arr[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Json body_to_json(const std::vector<Stmt>& body);

Json stmt_to_json(const Stmt& s) {
  return std::visit(
      [](const auto& n) -> Json {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ExecStmt>) {
          return {{"kind", "exec"}, {"text", n.text}};
        } else if constexpr (std::is_same_v<T, SetStmt>) {
          Json j{{"kind", "set"}, {"var", n.var}};
          if (n.expr) j["expr"] = expr_to_json(*n.expr);
          else j["new"] = *n.newClass;
          return j;
        } else if constexpr (std::is_same_v<T, IfStmt>) {
          return {{"kind", "if"},
                  {"cond", expr_to_json(n.cond)},
                  {"then", body_to_json(n.thenBody)},
                  {"else", body_to_json(n.elseBody)}};
        } else if constexpr (std::is_same_v<T, CallStmt>) {
          return {{"kind", "call"}, {"target", n.target}};
        } else if constexpr (std::is_same_v<T, VCallStmt>) {
          return {{"kind", "vcall"}, {"type", n.declaredType}, {"method", n.methodName}, {"receiver", n.receiverVar}};
        } else {
          return {{"kind", "return"}};
        }
      },
      s.node);
}

Json body_to_json(const std::vector<Stmt>& body) {
  Json arr = Json::array();
  for (const auto& s : body) arr.push_back(stmt_to_json(s));
  return arr;
}

Widget widget_from_json(const Json& j, const std::string& where) {
  check_keys(j, {"id", "kind", "label", "children", "handlers"}, where);
  Widget w;
  w.id = require_string(j, "id", where);
  const auto kind = require_string(j, "kind", where);
  const auto wk = widget_kind_from_string(kind);
  if (!wk) shape_error(where, "unknown widget kind '" + kind + "'");
  w.kind = *wk;
  if (j.contains("label")) w.label = require_string(j, "label", where);
  const auto& kids = optional_array(j, "children", where);
  for (std::size_t i = 0; i < kids.size(); ++i)
    w.children.push_back(widget_from_json(kids[i], where + ".children[" + std::to_string(i) + "]"));
  if (auto it = j.find("handlers"); it != j.end()) {
    if (!it->is_object()) shape_error(where, "'handlers' must be an object");
    for (const auto& [k, v] : it->items()) {
      const auto ek = event_kind_from_string(k);
      if (!ek) shape_error(where, "unknown event kind '" + k + "'");
      if (!v.is_array()) shape_error(where, "handler list must be an array");
      auto& list = w.handlers[*ek];
      for (const auto& h : v) {
        if (!h.is_string()) shape_error(where, "handler must be a method id string");
        list.push_back(h.get<std::string>());
      }
    }
  }
  return w;
}

Json widget_to_json(const Widget& w) {
  Json handlers = Json::object();
  for (const auto& [kind, list] : w.handlers) handlers[std::string(to_string(kind))] = list;
  Json kids = Json::array();
  for (const auto& c : w.children) kids.push_back(widget_to_json(c));
  return {{"id", w.id}, {"kind", std::string(to_string(w.kind))}, {"label", w.label}, {"children", kids}, {"handlers", handlers}};
}

// --- line assignment ----------------------------------------------------------

void number_body(std::vector<Stmt>& body, LineIndex& next) {
  for (auto& s : body) {
    s.line = next++;
    if (auto* ifs = std::get_if<IfStmt>(&s.node)) {
      number_body(ifs->thenBody, next);
      number_body(ifs->elseBody, next);
    }
  }
}

template <class F>
void walk_body(const std::vector<Stmt>& body, int depth, const F& f) {
  for (const auto& s : body) {
    f(s, depth);
    if (const auto* ifs = std::get_if<IfStmt>(&s.node)) {
      walk_body(ifs->thenBody, depth + 1, f);
      walk_body(ifs->elseBody, depth + 1, f);
    }
  }
}

template <class F>
void walk_body_mut(std::vector<Stmt>& body, const F& f) {
  for (auto& s : body) {
    f(s);
    if (auto* ifs = std::get_if<IfStmt>(&s.node)) {
      walk_body_mut(ifs->thenBody, f);
      walk_body_mut(ifs->elseBody, f);
    }
  }
}

}  // namespace

// --- enum names ---------------------------------------------------------------

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kEventKinds)
    if (k == kind) return name;
  return "?";
}

std::string_view to_string(WidgetKind kind) {
  for (const auto& [k, name] : kWidgetKinds)
    if (k == kind) return name;
  return "?";
}

std::optional<EventKind> event_kind_from_string(std::string_view text) {
  for (const auto& [k, name] : kEventKinds)
    if (name == text) return k;
  return std::nullopt;
}

std::optional<WidgetKind> widget_kind_from_string(std::string_view text) {
  for (const auto& [k, name] : kWidgetKinds)
    if (name == text) return k;
  return std::nullopt;
}

// --- Expr / Stmt ----------------------------------------------------------------

Expr Expr::lit(std::int64_t v) {
  Expr e;
  e.kind = Kind::literal;
  e.literal = v;
  return e;
}

Expr Expr::var(std::string name) {
  Expr e;
  e.kind = Kind::variable;
  e.variable = std::move(name);
  return e;
}

Expr Expr::payload() {
  Expr e;
  e.kind = Kind::payload;
  return e;
}

Expr Expr::bin(BinaryOp op, Expr lhs, Expr rhs) {
  Expr e;
  e.kind = Kind::binary;
  e.op = op;
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::literal: return a.literal == b.literal;
    case Expr::Kind::variable: return a.variable == b.variable;
    case Expr::Kind::payload: return true;
    case Expr::Kind::binary: return a.op == b.op && a.operands == b.operands;
  }
  return false;
}

bool operator==(const Stmt& a, const Stmt& b) {
  if (a.line != b.line || a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, ExecStmt>) return x.text == y.text;
        else if constexpr (std::is_same_v<T, SetStmt>) return x.var == y.var && x.expr == y.expr && x.newClass == y.newClass;
        else if constexpr (std::is_same_v<T, IfStmt>) return x.cond == y.cond && x.thenBody == y.thenBody && x.elseBody == y.elseBody;
        else if constexpr (std::is_same_v<T, CallStmt>) return x.target == y.target;
        else if constexpr (std::is_same_v<T, VCallStmt>)
          return x.declaredType == y.declaredType && x.methodName == y.methodName && x.receiverVar == y.receiverVar;
        else return true;
      },
      a.node);
}

namespace {
bool same_widget(const Widget& a, const Widget& b) {
  if (a.id != b.id || a.kind != b.kind || a.label != b.label || a.handlers != b.handlers) return false;
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!same_widget(a.children[i], b.children[i])) return false;
  return true;
}
}  // namespace

bool operator==(const ProgramDocument& a, const ProgramDocument& b) {
  if (a.name != b.name || a.mainMethod != b.mainMethod || a.units.size() != b.units.size()) return false;
  for (std::size_t u = 0; u < a.units.size(); ++u) {
    const auto& ua = a.units[u];
    const auto& ub = b.units[u];
    if (ua.name != ub.name || ua.isLibrary != ub.isLibrary || ua.classes.size() != ub.classes.size()) return false;
    for (std::size_t c = 0; c < ua.classes.size(); ++c) {
      const auto& ca = ua.classes[c];
      const auto& cb = ub.classes[c];
      if (ca.name != cb.name || ca.isInterface != cb.isInterface || ca.extendsClass != cb.extendsClass ||
          ca.implementsInterfaces != cb.implementsInterfaces || ca.methods.size() != cb.methods.size())
        return false;
      for (std::size_t m = 0; m < ca.methods.size(); ++m) {
        const auto& ma = ca.methods[m];
        const auto& mb = cb.methods[m];
        if (ma.name != mb.name || ma.body != mb.body || ma.lineSpan != mb.lineSpan) return false;
      }
    }
  }
  return same_widget(a.widgetRoot, b.widgetRoot);
}

std::size_t assign_lines(ProgramDocument& doc) {
  LineIndex next = 0;
  for (auto& unit : doc.units) {
    for (auto& cls : unit.classes) {
      for (auto& m : cls.methods) {
        const LineIndex first = next;
        number_body(m.body, next);
        // Empty bodies are rejected by validation; the span is then meaningless.
        m.lineSpan = {first, next == first ? first : next - 1};
      }
    }
  }
  return next;
}

// --- document (de)serialization ----------------------------------------------

ProgramDocument document_from_json(const Json& j) {
  const std::string root = "program";
  if (!j.is_object()) shape_error(root, "document must be an object");
  check_keys(j, {"name", "main", "units", "widgets"}, root);
  ProgramDocument doc;
  doc.name = require_string(j, "name", root);
  doc.mainMethod = require_string(j, "main", root);
  const Json& units = require(j, "units", root);
  if (!units.is_array()) shape_error(root, "'units' must be an array");
  for (std::size_t u = 0; u < units.size(); ++u) {
    const std::string uw = "units[" + std::to_string(u) + "]";
    check_keys(units[u], {"name", "library", "classes"}, uw);
    Unit unit;
    unit.name = require_string(units[u], "name", uw);
    unit.isLibrary = optional_bool(units[u], "library", uw);
    const auto& classes = optional_array(units[u], "classes", uw);
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const std::string cw = uw + ".classes[" + std::to_string(c) + "]";
      const Json& cj = classes[c];
      check_keys(cj, {"name", "interface", "extends", "implements", "methods"}, cw);
      ClassDef cls;
      cls.name = require_string(cj, "name", cw);
      cls.isInterface = optional_bool(cj, "interface", cw);
      if (cj.contains("extends")) cls.extendsClass = require_string(cj, "extends", cw);
      for (const auto& i : optional_array(cj, "implements", cw)) {
        if (!i.is_string()) shape_error(cw, "'implements' entries must be strings");
        cls.implementsInterfaces.push_back(i.get<std::string>());
      }
      const auto& methods = optional_array(cj, "methods", cw);
      for (std::size_t m = 0; m < methods.size(); ++m) {
        const std::string mw = cw + ".methods[" + std::to_string(m) + "]";
        check_keys(methods[m], {"name", "body"}, mw);
        MethodDef def;
        def.name = require_string(methods[m], "name", mw);
        def.body = body_from_json(optional_array(methods[m], "body", mw), mw + ".body");
        cls.methods.push_back(std::move(def));
      }
      unit.classes.push_back(std::move(cls));
    }
    doc.units.push_back(std::move(unit));
  }
  doc.widgetRoot = widget_from_json(require(j, "widgets", root), "widgets");
  return doc;
}

Json document_to_json(const ProgramDocument& doc) {
  Json units = Json::array();
  for (const auto& unit : doc.units) {
    Json classes = Json::array();
    for (const auto& cls : unit.classes) {
      Json methods = Json::array();
      for (const auto& m : cls.methods) methods.push_back({{"name", m.name}, {"body", body_to_json(m.body)}});
      Json cj{{"name", cls.name},
              {"interface", cls.isInterface},
              {"implements", cls.implementsInterfaces},
              {"methods", methods}};
      if (cls.extendsClass) cj["extends"] = *cls.extendsClass;
      classes.push_back(std::move(cj));
    }
    units.push_back({{"name", unit.name}, {"library", unit.isLibrary}, {"classes", classes}});
  }
  return {{"name", doc.name}, {"main", doc.mainMethod}, {"units", units}, {"widgets", widget_to_json(doc.widgetRoot)}};
}

std::string serialize_program(const ProgramDocument& doc) { return to_canonical(document_to_json(doc)); }

// --- ProgramModel -------------------------------------------------------------

ProgramModel::ProgramModel(ProgramDocument doc) : doc_(std::move(doc)) {
  if (doc_.name.empty()) throw ValidationError("program name is empty");
  assign_lines(doc_);
  index();
  validateBodies();
  indexWidgets(doc_.widgetRoot);
  hash_ = fnv1a64(serialize_program(doc_));
}

std::string ProgramModel::hashHex() const { return hash_to_hex(hash_); }

void ProgramModel::index() {
  std::unordered_set<std::string> unitNames;
  for (std::size_t u = 0; u < doc_.units.size(); ++u) {
    const Unit& unit = doc_.units[u];
    if (!is_dotted_identifier(unit.name)) throw ValidationError("bad unit name '" + unit.name + "'");
    if (!unitNames.insert(unit.name).second) throw ValidationError("duplicate unit '" + unit.name + "'");
    for (const ClassDef& cls : unit.classes) {
      if (!is_identifier(cls.name)) throw ValidationError("bad class name '" + cls.name + "' in unit " + unit.name);
      const std::string cid = unit.name + "." + cls.name;
      const ClassIndex ci{static_cast<std::uint32_t>(classes_.size())};
      if (!classIds_.emplace(cid, ci).second) throw ValidationError("duplicate class '" + cid + "'");
      if (cls.isInterface && !cls.methods.empty()) throw ValidationError("interface '" + cid + "' declares method bodies");
      if (cls.isInterface && cls.extendsClass) throw ValidationError("interface '" + cid + "' uses extends; use implements");
      ClassInfo info;
      info.id = cid;
      info.unit = u;
      info.def = &cls;
      info.isInterface = cls.isInterface;
      info.isLibrary = unit.isLibrary;
      std::unordered_set<std::string> methodNames;
      for (const MethodDef& m : cls.methods) {
        if (!is_identifier(m.name)) throw ValidationError("bad method name '" + m.name + "' in " + cid);
        if (!methodNames.insert(m.name).second) throw ValidationError("duplicate method '" + cid + "." + m.name + "'");
        if (m.body.empty()) throw ValidationError("method '" + cid + "." + m.name + "' has an empty body");
        const MethodIndex mi{static_cast<std::uint32_t>(methods_.size())};
        methodIds_.emplace(cid + "." + m.name, mi);
        methods_.push_back({cid + "." + m.name, ci, &m, unit.isLibrary});
        info.methods.push_back(mi);
      }
      classes_.push_back(std::move(info));
    }
  }

  // Hierarchy edges.
  for (auto& info : classes_) {
    if (info.def->extendsClass) {
      auto sup = findClass(*info.def->extendsClass);
      if (!sup) throw ValidationError("class '" + info.id + "' extends unknown class '" + *info.def->extendsClass + "'");
      if (classes_[sup->value].isInterface)
        throw ValidationError("class '" + info.id + "' extends interface '" + *info.def->extendsClass + "'");
      info.superclass = *sup;
    }
    for (const auto& name : info.def->implementsInterfaces) {
      auto iface = findClass(name);
      if (!iface) throw ValidationError("class '" + info.id + "' implements unknown interface '" + name + "'");
      if (!classes_[iface->value].isInterface)
        throw ValidationError("class '" + info.id + "' implements non-interface '" + name + "'");
      info.interfaces.push_back(*iface);
    }
  }

  // Cycle detection (white/grey/black DFS) over extends + implements.
  std::vector<int> color(classes_.size(), 0);
  std::function<void(std::uint32_t)> visit = [&](std::uint32_t c) {
    color[c] = 1;
    auto step = [&](ClassIndex s) {
      if (color[s.value] == 1) throw ValidationError("inheritance cycle through '" + classes_[s.value].id + "'");
      if (color[s.value] == 0) visit(s.value);
    };
    if (classes_[c].superclass) step(*classes_[c].superclass);
    for (ClassIndex i : classes_[c].interfaces) step(i);
    color[c] = 2;
  };
  for (std::uint32_t c = 0; c < classes_.size(); ++c)
    if (color[c] == 0) visit(c);

  // Reflexive-transitive supertypes; the hierarchy is a DAG now.
  supertypes_.assign(classes_.size(), {});
  std::function<const std::vector<ClassIndex>&(std::uint32_t)> supers = [&](std::uint32_t c) -> const std::vector<ClassIndex>& {
    auto& out = supertypes_[c];
    if (!out.empty()) return out;
    std::set<ClassIndex> acc{ClassIndex{c}};
    if (classes_[c].superclass)
      for (ClassIndex s : supers(classes_[c].superclass->value)) acc.insert(s);
    for (ClassIndex i : classes_[c].interfaces)
      for (ClassIndex s : supers(i.value)) acc.insert(s);
    out.assign(acc.begin(), acc.end());
    return out;
  };
  for (std::uint32_t c = 0; c < classes_.size(); ++c) supers(c);

  // Line table.
  const std::size_t total = [&] {
    std::size_t n = 0;
    for (const auto& m : methods_) n += m.def->lineSpan.last - m.def->lineSpan.first + 1;
    return n;
  }();
  lines_.resize(total);
  appMask_ = LineBitmap(total);
  for (std::uint32_t mi = 0; mi < methods_.size(); ++mi) {
    walk_body(methods_[mi].def->body, 0, [&](const Stmt& s, int depth) {
      lines_[s.line] = LineInfo{MethodIndex{mi}, &s, depth};
      if (!methods_[mi].isLibrary) {
        appMask_.set(s.line);
        ++appLines_;
      }
    });
  }

  auto main = findMethod(doc_.mainMethod);
  if (!main) throw ValidationError("main method '" + doc_.mainMethod + "' does not exist");
  if (method(*main).isLibrary) throw ValidationError("main method '" + doc_.mainMethod + "' is in a library unit");
  main_ = *main;
}

void ProgramModel::validateBodies() {
  std::vector<MethodDef*> defs;
  for (auto& unit : doc_.units)
    for (auto& cls : unit.classes)
      for (auto& m : cls.methods) defs.push_back(&m);
  for (std::uint32_t mi = 0; mi < methods_.size(); ++mi) {
    const bool inLibrary = methods_[mi].isLibrary;
    const std::string& where = methods_[mi].id;
    walk_body_mut(defs[mi]->body, [&](Stmt& s) {
      const std::string at = where + " line " + std::to_string(s.line);
      if (auto* call = std::get_if<CallStmt>(&s.node)) {
        auto target = findMethod(call->target);
        if (!target) throw ValidationError("dangling call target '" + call->target + "' at " + at);
        if (inLibrary && !method(*target).isLibrary)
          throw ValidationError("library callback into application method '" + call->target + "' at " + at);
        call->targetIndex = *target;
      } else if (auto* v = std::get_if<VCallStmt>(&s.node)) {
        auto type = findClass(v->declaredType);
        if (!type) throw ValidationError("vcall on unknown type '" + v->declaredType + "' at " + at);
        v->declaredTypeIndex = *type;
        bool resolvable = false;
        for (ClassIndex c : concreteSubtypes(*type)) {
          auto target = resolveMethod(c, v->methodName);
          if (!target) continue;
          resolvable = true;
          if (inLibrary && !method(*target).isLibrary)
            throw ValidationError("library callback via vcall " + v->declaredType + "." + v->methodName + " at " + at);
        }
        if (!resolvable) throw ValidationError("unresolvable vcall " + v->declaredType + "." + v->methodName + " at " + at);
      } else if (auto* set = std::get_if<SetStmt>(&s.node)) {
        if (set->newClass) {
          auto cls = findClass(*set->newClass);
          if (!cls) throw ValidationError("new of unknown class '" + *set->newClass + "' at " + at);
          if (classes_[cls->value].isInterface)
            throw ValidationError("new of interface '" + *set->newClass + "' at " + at);
          set->newClassIndex = *cls;
        }
      }
    });
  }
}

void ProgramModel::indexWidgets(const Widget& w) {
  if (w.id.empty()) throw ValidationError("widget with empty id");
  WidgetInfo info{&w, {}};
  for (const auto& [kind, list] : w.handlers) {
    auto& resolved = info.handlers[kind];
    for (const auto& h : list) {
      auto m = findMethod(h);
      if (!m) throw ValidationError("widget '" + w.id + "' binds unknown handler '" + h + "'");
      if (method(*m).isLibrary) throw ValidationError("widget '" + w.id + "' binds library method '" + h + "'");
      if (std::find(resolved.begin(), resolved.end(), *m) != resolved.end())
        throw ValidationError("widget '" + w.id + "' binds '" + h + "' twice for " + std::string(to_string(kind)));
      resolved.push_back(*m);
    }
  }
  if (!widgets_.emplace(w.id, std::move(info)).second) throw ValidationError("duplicate widget id '" + w.id + "'");
  widgetOrder_.push_back(w.id);
  for (const auto& c : w.children) indexWidgets(c);
}

std::optional<MethodIndex> ProgramModel::findMethod(std::string_view id) const {
  auto it = methodIds_.find(std::string(id));
  if (it == methodIds_.end()) return std::nullopt;
  return it->second;
}

std::optional<ClassIndex> ProgramModel::findClass(std::string_view id) const {
  auto it = classIds_.find(std::string(id));
  if (it == classIds_.end()) return std::nullopt;
  return it->second;
}

const WidgetInfo* ProgramModel::findWidget(std::string_view id) const {
  auto it = widgets_.find(std::string(id));
  return it == widgets_.end() ? nullptr : &it->second;
}

bool ProgramModel::isSubtype(ClassIndex sub, ClassIndex super) const {
  const auto& s = supertypes_.at(sub.value);
  return std::binary_search(s.begin(), s.end(), super);
}

std::optional<MethodIndex> ProgramModel::resolveMethod(ClassIndex cls, std::string_view name) const {
  std::optional<ClassIndex> cur = cls;
  while (cur) {
    const auto& info = classes_.at(cur->value);
    for (MethodIndex m : info.methods)
      if (methods_[m.value].def->name == name) return m;
    cur = info.superclass;
  }
  return std::nullopt;
}

std::vector<ClassIndex> ProgramModel::concreteSubtypes(ClassIndex type) const {
  std::vector<ClassIndex> out;
  for (std::uint32_t c = 0; c < classes_.size(); ++c)
    if (!classes_[c].isInterface && isSubtype(ClassIndex{c}, type)) out.push_back(ClassIndex{c});
  return out;
}

std::unique_ptr<ProgramModel> parse_program(std::string_view text) {
  return std::make_unique<ProgramModel>(document_from_json(parse_json(text)));
}

std::unique_ptr<ProgramModel> load_program(const std::string& path) { return parse_program(read_file(path)); }

std::size_t total_app_lines(const ProgramModel& model) { return model.totalAppLines(); }

// --- rendering ------------------------------------------------------------------

std::string render_expr(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::literal: return std::to_string(e.literal);
    case Expr::Kind::variable: return e.variable;
    case Expr::Kind::payload: return std::string(kPayloadRef);
    case Expr::Kind::binary: {
      std::string sym;
      for (const auto& [op, text] : kOps)
        if (op == e.op) sym = text;
      auto side = [](const Expr& x) {
        return x.kind == Expr::Kind::binary ? "(" + render_expr(x) + ")" : render_expr(x);
      };
      return side(e.operands[0]) + " " + sym + " " + side(e.operands[1]);
    }
  }
  return {};
}

std::string render_statement(const Stmt& stmt) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ExecStmt>) return n.text;
        else if constexpr (std::is_same_v<T, SetStmt>)
          return n.var + " = " + (n.expr ? render_expr(*n.expr) : "new " + *n.newClass);
        else if constexpr (std::is_same_v<T, IfStmt>) return "if (" + render_expr(n.cond) + ")";
        else if constexpr (std::is_same_v<T, CallStmt>) return n.target + "()";
        else if constexpr (std::is_same_v<T, VCallStmt>)
          return "((" + n.declaredType + ") " + n.receiverVar + ")." + n.methodName + "()";
        else return "return";
      },
      stmt.node);
}

}  // namespace guitrace
