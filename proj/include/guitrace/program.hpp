#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "guitrace/canonical_json.hpp"
#include "guitrace/ids.hpp"
#include "guitrace/line_bitmap.hpp"

namespace guitrace {

enum class EventKind { action, selection, focusGained, focusLost, mouseMoved, valueChanged };
enum class WidgetKind { window, button, menuItem, checkbox, textField, panel };

std::string_view to_string(EventKind kind);
std::string_view to_string(WidgetKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view text);
std::optional<WidgetKind> widget_kind_from_string(std::string_view text);

// ---------------------------------------------------------------------------
// Modeled language

enum class BinaryOp { add, sub, eq, lt, gt };

/// Integer expression. Comparisons yield 0 or 1; arithmetic wraps.
struct Expr {
  enum class Kind { literal, variable, payload, binary };

  Kind kind = Kind::literal;
  std::int64_t literal = 0;
  std::string variable;
  BinaryOp op = BinaryOp::add;
  std::vector<Expr> operands;  // exactly two for binary

  static Expr lit(std::int64_t v);
  static Expr var(std::string name);
  static Expr payload();
  static Expr bin(BinaryOp op, Expr lhs, Expr rhs);

  friend bool operator==(const Expr&, const Expr&);
};

struct Stmt;

struct ExecStmt {
  std::string text;
};
/// `var = expr` or `var = new Class`.
struct SetStmt {
  std::string var;
  std::optional<Expr> expr;
  std::optional<std::string> newClass;
  ClassIndex newClassIndex{};
};
struct IfStmt {
  Expr cond;
  std::vector<Stmt> thenBody;
  std::vector<Stmt> elseBody;
};
struct CallStmt {
  std::string target;
  MethodIndex targetIndex{};
};
/// Dispatch of `methodName` on the class tag stored in `receiverVar`.
struct VCallStmt {
  std::string declaredType;
  std::string methodName;
  std::string receiverVar;
  ClassIndex declaredTypeIndex{};
};
struct ReturnStmt {};

struct Stmt {
  std::variant<ExecStmt, SetStmt, IfStmt, CallStmt, VCallStmt, ReturnStmt> node;
  LineIndex line = 0;
};

bool operator==(const Stmt& a, const Stmt& b);

struct MethodDef {
  std::string name;
  std::vector<Stmt> body;
  LineRange lineSpan{};
};

struct ClassDef {
  std::string name;
  bool isInterface = false;
  std::optional<std::string> extendsClass;
  std::vector<std::string> implementsInterfaces;
  std::vector<MethodDef> methods;
};

struct Unit {
  std::string name;
  bool isLibrary = false;
  std::vector<ClassDef> classes;
};

struct Widget {
  std::string id;
  WidgetKind kind = WidgetKind::panel;
  std::string label;
  std::vector<Widget> children;
  std::map<EventKind, std::vector<std::string>> handlers;
};

/// The unvalidated program tree exactly as written in a document.
struct ProgramDocument {
  std::string name;
  std::vector<Unit> units;
  std::string mainMethod;
  Widget widgetRoot;
};

bool operator==(const ProgramDocument& a, const ProgramDocument& b);

/// Assigns global line indices: units, classes and methods in document order,
/// statements in depth-first pre-order. Returns the total line count.
std::size_t assign_lines(ProgramDocument& doc);

ProgramDocument document_from_json(const Json& j);
Json document_to_json(const ProgramDocument& doc);

// ---------------------------------------------------------------------------
// Validated model

struct MethodInfo {
  std::string id;  // unit.Class.method
  ClassIndex owner;
  const MethodDef* def = nullptr;
  bool isLibrary = false;
};

struct ClassInfo {
  std::string id;  // unit.Class
  std::size_t unit = 0;
  const ClassDef* def = nullptr;
  bool isInterface = false;
  bool isLibrary = false;
  std::optional<ClassIndex> superclass;
  std::vector<ClassIndex> interfaces;
  std::vector<MethodIndex> methods;
};

struct WidgetInfo {
  const Widget* widget = nullptr;
  std::map<EventKind, std::vector<MethodIndex>> handlers;
};

/// Where a global line lives.
struct LineInfo {
  MethodIndex method;
  const Stmt* stmt = nullptr;
  int depth = 0;  // if-nesting depth inside the method body
};

/// Validated, line-numbered, indexed program. Immutable after construction;
/// not copyable because the index tables point into the owned document.
class ProgramModel {
 public:
  /// Validates and indexes; throws ValidationError.
  explicit ProgramModel(ProgramDocument doc);
  ProgramModel(const ProgramModel&) = delete;
  ProgramModel& operator=(const ProgramModel&) = delete;

  const ProgramDocument& document() const noexcept { return doc_; }
  const std::string& name() const noexcept { return doc_.name; }
  std::uint64_t contentHash() const noexcept { return hash_; }
  std::string hashHex() const;

  MethodIndex mainMethod() const noexcept { return main_; }
  std::size_t totalLines() const noexcept { return lines_.size(); }
  std::size_t totalAppLines() const noexcept { return appLines_; }

  const std::vector<MethodInfo>& methods() const noexcept { return methods_; }
  const std::vector<ClassInfo>& classes() const noexcept { return classes_; }
  const MethodInfo& method(MethodIndex i) const { return methods_.at(i.value); }
  const ClassInfo& cls(ClassIndex i) const { return classes_.at(i.value); }
  const LineInfo& line(LineIndex l) const { return lines_.at(l); }
  bool isAppLine(LineIndex l) const { return !method(lines_.at(l).method).isLibrary; }

  std::optional<MethodIndex> findMethod(std::string_view id) const;
  std::optional<ClassIndex> findClass(std::string_view id) const;
  const WidgetInfo* findWidget(std::string_view id) const;
  /// Widgets in pre-order.
  const std::vector<std::string>& widgetOrder() const noexcept { return widgetOrder_; }

  /// True if `sub` equals `super` or reaches it through extends/implements.
  bool isSubtype(ClassIndex sub, ClassIndex super) const;
  /// Walks the superclass chain from `cls` for a method named `name`.
  std::optional<MethodIndex> resolveMethod(ClassIndex cls, std::string_view name) const;
  /// Concrete classes that are subtypes of `type`, in class-table order.
  std::vector<ClassIndex> concreteSubtypes(ClassIndex type) const;

  /// Bitmap with every application (non-library) line set.
  const LineBitmap& appLineMask() const noexcept { return appMask_; }

 private:
  void index();
  void validateBodies();
  void indexWidgets(const Widget& w);

  ProgramDocument doc_;
  std::uint64_t hash_ = 0;
  MethodIndex main_{};
  std::size_t appLines_ = 0;
  std::vector<MethodInfo> methods_;
  std::vector<ClassInfo> classes_;
  std::vector<LineInfo> lines_;
  std::unordered_map<std::string, MethodIndex> methodIds_;
  std::unordered_map<std::string, ClassIndex> classIds_;
  std::unordered_map<std::string, WidgetInfo> widgets_;
  std::vector<std::string> widgetOrder_;
  std::vector<std::vector<ClassIndex>> supertypes_;  // reflexive-transitive
  LineBitmap appMask_;
};

/// Parses and validates a `.edp` document. Throws ParseError or
/// ValidationError.
std::unique_ptr<ProgramModel> parse_program(std::string_view text);
std::unique_ptr<ProgramModel> load_program(const std::string& path);

/// Canonical `.edp` text for a document (line numbers are derived and not
/// written).
std::string serialize_program(const ProgramDocument& doc);

/// Number of statement lines in non-library units.
std::size_t total_app_lines(const ProgramModel& model);

/// One-line rendering of a statement in the modeled language.
std::string render_statement(const Stmt& stmt);
std::string render_expr(const Expr& e);

}  // namespace guitrace
