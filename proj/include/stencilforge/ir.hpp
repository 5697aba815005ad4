#pragma once

#include <cstdint>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "stencilforge/bounds.hpp"
#include "stencilforge/error.hpp"

namespace sf {

enum class TypeKind { F64, Index, I64, Array, Temp, Ptr };

/// Value type. Arrays carry static extents, temps carry their bounds; every
/// element type is f64.
struct Type {
  TypeKind kind = TypeKind::F64;
  std::vector<int64_t> shape;
  Bounds bounds;

  static Type f64() { return {TypeKind::F64, {}, {}}; }
  static Type index() { return {TypeKind::Index, {}, {}}; }
  static Type i64() { return {TypeKind::I64, {}, {}}; }
  static Type ptr() { return {TypeKind::Ptr, {}, {}}; }
  static Type array(std::vector<int64_t> shape) { return {TypeKind::Array, std::move(shape), {}}; }
  static Type temp(Bounds b) { return {TypeKind::Temp, {}, std::move(b)}; }

  bool isArray() const { return kind == TypeKind::Array; }
  bool isTemp() const { return kind == TypeKind::Temp; }
  size_t rank() const { return kind == TypeKind::Array ? shape.size() : bounds.rank(); }
  int64_t elements() const {
    int64_t n = 1;
    for (int64_t e : shape) n *= e;
    return n;
  }

  std::string str() const;
  friend bool operator==(const Type&, const Type&) = default;
};

using IntList = std::vector<int64_t>;
using Attribute = std::variant<int64_t, double, std::string, IntList, Bounds>;

std::string attributeStr(const Attribute& a);

class Operation;
class Region;

/// SSA value: either an operation result or a region (block) argument.
class Value {
 public:
  Value(Type t, Operation* def, Region* owner, unsigned index)
      : type(std::move(t)), def_(def), owner_(owner), index_(index) {}

  Type type;

  Operation* definingOp() const { return def_; }
  Region* ownerRegion() const { return owner_; }
  bool isBlockArgument() const { return def_ == nullptr; }
  unsigned index() const { return index_; }

 private:
  Operation* def_;
  Region* owner_;
  unsigned index_;
};

using OpList = std::list<std::unique_ptr<Operation>>;

/// Single-block region. The block arguments are the region's parameters.
class Region {
 public:
  explicit Region(Operation* parent) : parent_(parent) {}

  Value* addArgument(Type t);
  Value* arg(size_t i) const { return args_[i].get(); }
  size_t numArgs() const { return args_.size(); }
  const std::vector<std::unique_ptr<Value>>& args() const { return args_; }

  OpList& ops() { return ops_; }
  const OpList& ops() const { return ops_; }
  bool empty() const { return ops_.empty(); }

  Operation* parentOp() const { return parent_; }

  Operation* append(std::unique_ptr<Operation> op);
  Operation* insert(OpList::iterator pos, std::unique_ptr<Operation> op);
  OpList::iterator find(const Operation* op);
  std::unique_ptr<Operation> remove(Operation* op);

 private:
  Operation* parent_;
  std::vector<std::unique_ptr<Value>> args_;
  OpList ops_;
};

class Operation {
 public:
  static std::unique_ptr<Operation> create(std::string name, std::vector<Value*> operands = {},
                                           std::vector<Type> resultTypes = {},
                                           std::map<std::string, Attribute> attrs = {},
                                           unsigned numRegions = 0);

  const std::string& name() const { return name_; }
  std::string_view dialect() const;

  std::vector<Value*>& operands() { return operands_; }
  const std::vector<Value*>& operands() const { return operands_; }
  Value* operand(size_t i) const { return operands_[i]; }
  size_t numOperands() const { return operands_.size(); }

  Value* result(size_t i = 0) const { return results_[i].get(); }
  size_t numResults() const { return results_.size(); }
  const std::vector<std::unique_ptr<Value>>& results() const { return results_; }
  Value* addResult(Type t);

  std::map<std::string, Attribute>& attrs() { return attrs_; }
  const std::map<std::string, Attribute>& attrs() const { return attrs_; }
  bool hasAttr(const std::string& key) const { return attrs_.count(key) != 0; }
  void setAttr(const std::string& key, Attribute value) { attrs_[key] = std::move(value); }

  template <typename T>
  const T* attr(const std::string& key) const {
    auto it = attrs_.find(key);
    return it == attrs_.end() ? nullptr : std::get_if<T>(&it->second);
  }
  int64_t intAttr(const std::string& key) const;
  double floatAttr(const std::string& key) const;
  const std::string& strAttr(const std::string& key) const;
  const IntList& intListAttr(const std::string& key) const;
  const Bounds& boundsAttr(const std::string& key) const;

  Region& region(size_t i = 0) { return *regions_[i]; }
  const Region& region(size_t i = 0) const { return *regions_[i]; }
  size_t numRegions() const { return regions_.size(); }
  Region& addRegion();

  Region* parentRegion() const { return parent_; }
  Operation* parentOp() const { return parent_ ? parent_->parentOp() : nullptr; }
  bool isAncestorOf(const Operation* other) const;

  SourceLoc loc;

 private:
  friend class Region;
  explicit Operation(std::string name) : name_(std::move(name)) {}

  std::string name_;
  std::vector<Value*> operands_;
  std::vector<std::unique_ptr<Value>> results_;
  std::map<std::string, Attribute> attrs_;
  std::vector<std::unique_ptr<Region>> regions_;
  Region* parent_ = nullptr;
};

/// Maps values of a source IR onto a clone.
class ValueMapping {
 public:
  void map(const Value* from, Value* to) { map_[from] = to; }
  Value* lookup(const Value* v) const {
    auto it = map_.find(v);
    return it == map_.end() ? nullptr : it->second;
  }
  Value* lookupOrSelf(Value* v) const {
    Value* m = lookup(v);
    return m ? m : v;
  }

 private:
  std::unordered_map<const Value*, Value*> map_;
};

/// Deep-copies `op`; operands are remapped through `mapping` (values not in
/// the mapping are kept). Every value defined by the clone is added to it.
std::unique_ptr<Operation> cloneOp(const Operation& op, ValueMapping& mapping);

/// Ordered list of `func.func` operations with a flat symbol namespace.
class IRModule {
 public:
  IRModule() = default;
  explicit IRModule(std::string name) : name_(std::move(name)) {}
  IRModule(IRModule&&) = default;
  IRModule& operator=(IRModule&&) = default;

  IRModule clone() const;

  const std::string& name() const { return name_; }
  void setName(std::string n) { name_ = std::move(n); }

  std::vector<std::unique_ptr<Operation>>& functions() { return functions_; }
  const std::vector<std::unique_ptr<Operation>>& functions() const { return functions_; }
  bool empty() const { return functions_.empty(); }

  /// Appends `func.func @name` with the given parameter types.
  Operation& addFunction(const std::string& name, const std::vector<Type>& params = {});
  void addFunction(std::unique_ptr<Operation> fn) { functions_.push_back(std::move(fn)); }

  Operation* lookup(std::string_view symbol) const;
  std::map<std::string, Operation*> symbols() const;

 private:
  std::string name_;
  std::vector<std::unique_ptr<Operation>> functions_;
};

/// Pre-order traversal of `op` and everything nested in its regions.
void walk(Operation& op, const std::function<void(Operation&)>& fn);
void walk(const Operation& op, const std::function<void(const Operation&)>& fn);

/// Pre-order list of operations named `filter` ("*" matches everything,
/// "dialect.*" a whole dialect).
std::vector<Operation*> walk(const IRModule& m, std::string_view filter = "*");

/// Number of uses of every value defined under `root`.
std::unordered_map<const Value*, int> countUses(const Operation& root);

/// Rewrites every use of `from` under `root` to `to`.
void replaceAllUses(Operation& root, const Value* from, Value* to);

/// Erases unused pure operations under `root` until a fixpoint.
void eliminateDeadCode(Operation& root);

/// Enclosing operations of `op`, innermost first.
std::vector<Operation*> ancestors(const Operation& op);

/// Convenience builder with an insertion point inside a region.
class OpBuilder {
 public:
  OpBuilder(Region& region, OpList::iterator pos) : region_(&region), pos_(pos) {}
  static OpBuilder atEnd(Region& r) { return OpBuilder(r, r.ops().end()); }
  static OpBuilder before(Operation& op);
  static OpBuilder after(Operation& op);

  Operation* create(std::string name, std::vector<Value*> operands = {},
                    std::vector<Type> results = {}, std::map<std::string, Attribute> attrs = {},
                    unsigned numRegions = 0);
  Operation* insert(std::unique_ptr<Operation> op);

  Value* constantIndex(int64_t v);
  Value* constantF64(double v);

  Region& region() const { return *region_; }

 private:
  Region* region_;
  OpList::iterator pos_;
};

// -- printing / parsing / verification -------------------------------------

/// Canonical text; `%N` numbering follows definition order.
std::string printIR(const IRModule& m);
std::string printOp(const Operation& op);

/// Parses one module in the printer's grammar.
IRModule parseIR(std::string_view text);

/// Parses one or more consecutive modules (a host/device dump).
std::vector<IRModule> parseIRModules(std::string_view text);

/// Structural diagnostics; empty iff the module is well formed. Each
/// message is prefixed with the op path (`@fn/loop.for/mem.store`).
/// `linked` resolves calls into a second module (host -> device).
std::vector<std::string> verify(const IRModule& m, const IRModule* linked = nullptr);

/// Registered signature of an operation.
struct OpInfo {
  std::string name;
  int minOperands = 0;
  int maxOperands = 0;  // -1: variadic
  int minResults = 0;
  int maxResults = 0;   // -1: variadic
  int numRegions = 0;
  std::vector<std::string> requiredAttrs;
  bool pure = false;  // removable when unused
};

const OpInfo* lookupOp(std::string_view name);
const std::vector<OpInfo>& registeredOps();

}  // namespace sf
