#include "stencilforge/ir.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace sf {

std::string Type::str() const {
  switch (kind) {
    case TypeKind::F64: return "f64";
    case TypeKind::Index: return "index";
    case TypeKind::I64: return "i64";
    case TypeKind::Ptr: return "ptr";
    case TypeKind::Array: {
      std::string s = "array<";
      for (int64_t e : shape) s += std::to_string(e) + "x";
      return s + "f64>";
    }
    case TypeKind::Temp: return "!stencil.temp<" + bounds.str() + "xf64>";
  }
  return "?";
}

namespace {

std::string formatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

std::string attributeStr(const Attribute& a) {
  struct Printer {
    std::string operator()(int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return formatDouble(v); }
    std::string operator()(const std::string& s) const {
      std::string out = "\"";
      for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      return out + "\"";
    }
    std::string operator()(const IntList& l) const {
      std::string out = "[";
      for (size_t i = 0; i < l.size(); ++i) out += (i ? ", " : "") + std::to_string(l[i]);
      return out + "]";
    }
    std::string operator()(const Bounds& b) const { return "#bounds<" + b.str() + ">"; }
  };
  return std::visit(Printer{}, a);
}

// -- Region -----------------------------------------------------------------

Value* Region::addArgument(Type t) {
  args_.push_back(std::make_unique<Value>(std::move(t), nullptr, this, args_.size()));
  return args_.back().get();
}

Operation* Region::append(std::unique_ptr<Operation> op) { return insert(ops_.end(), std::move(op)); }

Operation* Region::insert(OpList::iterator pos, std::unique_ptr<Operation> op) {
  op->parent_ = this;
  return ops_.insert(pos, std::move(op))->get();
}

OpList::iterator Region::find(const Operation* op) {
  return std::find_if(ops_.begin(), ops_.end(), [op](const auto& p) { return p.get() == op; });
}

std::unique_ptr<Operation> Region::remove(Operation* op) {
  auto it = find(op);
  if (it == ops_.end()) return nullptr;
  std::unique_ptr<Operation> owned = std::move(*it);
  ops_.erase(it);
  owned->parent_ = nullptr;
  return owned;
}

// -- Operation --------------------------------------------------------------

std::unique_ptr<Operation> Operation::create(std::string name, std::vector<Value*> operands,
                                             std::vector<Type> resultTypes,
                                             std::map<std::string, Attribute> attrs,
                                             unsigned numRegions) {
  std::unique_ptr<Operation> op(new Operation(std::move(name)));
  op->operands_ = std::move(operands);
  for (auto& t : resultTypes) op->addResult(std::move(t));
  op->attrs_ = std::move(attrs);
  for (unsigned i = 0; i < numRegions; ++i) op->addRegion();
  return op;
}

std::string_view Operation::dialect() const {
  std::string_view n = name_;
  return n.substr(0, n.find('.'));
}

Value* Operation::addResult(Type t) {
  results_.push_back(std::make_unique<Value>(std::move(t), this, nullptr, results_.size()));
  return results_.back().get();
}

Region& Operation::addRegion() {
  regions_.push_back(std::make_unique<Region>(this));
  return *regions_.back();
}

bool Operation::isAncestorOf(const Operation* other) const {
  for (const Operation* p = other ? other->parentOp() : nullptr; p; p = p->parentOp())
    if (p == this) return true;
  return false;
}

namespace {
template <typename T>
const T& requireAttr(const Operation& op, const std::string& key, const char* what) {
  const T* v = op.attr<T>(key);
  if (!v)
    throw VerificationError(op.name() + ": missing or mistyped " + what + " attribute '" + key + "'");
  return *v;
}
}  // namespace

int64_t Operation::intAttr(const std::string& key) const { return requireAttr<int64_t>(*this, key, "int"); }
double Operation::floatAttr(const std::string& key) const { return requireAttr<double>(*this, key, "float"); }
const std::string& Operation::strAttr(const std::string& key) const {
  return requireAttr<std::string>(*this, key, "string");
}
const IntList& Operation::intListAttr(const std::string& key) const {
  return requireAttr<IntList>(*this, key, "int-list");
}
const Bounds& Operation::boundsAttr(const std::string& key) const {
  return requireAttr<Bounds>(*this, key, "bounds");
}

std::unique_ptr<Operation> cloneOp(const Operation& op, ValueMapping& mapping) {
  std::vector<Value*> operands;
  operands.reserve(op.numOperands());
  for (Value* v : op.operands()) operands.push_back(mapping.lookupOrSelf(v));
  std::vector<Type> types;
  for (const auto& r : op.results()) types.push_back(r->type);
  auto copy = Operation::create(op.name(), std::move(operands), std::move(types), op.attrs());
  copy->loc = op.loc;
  for (size_t i = 0; i < op.numResults(); ++i) mapping.map(op.result(i), copy->result(i));
  for (size_t r = 0; r < op.numRegions(); ++r) {
    const Region& src = op.region(r);
    Region& dst = copy->addRegion();
    for (const auto& a : src.args()) mapping.map(a.get(), dst.addArgument(a->type));
    for (const auto& inner : src.ops()) dst.append(cloneOp(*inner, mapping));
  }
  return copy;
}

// -- IRModule ---------------------------------------------------------------

IRModule IRModule::clone() const {
  IRModule m(name_);
  ValueMapping mapping;
  for (const auto& fn : functions_) m.functions_.push_back(cloneOp(*fn, mapping));
  return m;
}

Operation& IRModule::addFunction(const std::string& name, const std::vector<Type>& params) {
  auto fn = Operation::create("func.func", {}, {}, {{"sym_name", name}}, 1);
  for (const auto& t : params) fn->region().addArgument(t);
  functions_.push_back(std::move(fn));
  return *functions_.back();
}

Operation* IRModule::lookup(std::string_view symbol) const {
  for (const auto& fn : functions_)
    if (const auto* n = fn->attr<std::string>("sym_name"); n && *n == symbol) return fn.get();
  return nullptr;
}

std::map<std::string, Operation*> IRModule::symbols() const {
  std::map<std::string, Operation*> out;
  for (const auto& fn : functions_)
    if (const auto* n = fn->attr<std::string>("sym_name")) out[*n] = fn.get();
  return out;
}

// -- traversal --------------------------------------------------------------

void walk(Operation& op, const std::function<void(Operation&)>& fn) {
  fn(op);
  for (size_t r = 0; r < op.numRegions(); ++r) {
    // Collect first so callbacks may erase the visited op's siblings safely.
    std::vector<Operation*> children;
    for (auto& c : op.region(r).ops()) children.push_back(c.get());
    for (Operation* c : children) walk(*c, fn);
  }
}

void walk(const Operation& op, const std::function<void(const Operation&)>& fn) {
  fn(op);
  for (size_t r = 0; r < op.numRegions(); ++r)
    for (const auto& c : op.region(r).ops()) walk(static_cast<const Operation&>(*c), fn);
}

namespace {
bool matchesFilter(std::string_view name, std::string_view filter) {
  if (filter == "*") return true;
  if (filter.size() > 2 && filter.substr(filter.size() - 2) == ".*")
    return name.substr(0, filter.size() - 1) == filter.substr(0, filter.size() - 1);
  return name == filter;
}
}  // namespace

std::vector<Operation*> walk(const IRModule& m, std::string_view filter) {
  std::vector<Operation*> out;
  for (const auto& fn : m.functions())
    walk(*fn, [&](Operation& op) {
      if (matchesFilter(op.name(), filter)) out.push_back(&op);
    });
  return out;
}

std::unordered_map<const Value*, int> countUses(const Operation& root) {
  std::unordered_map<const Value*, int> uses;
  walk(root, [&](const Operation& op) {
    for (const Value* v : op.operands()) ++uses[v];
  });
  return uses;
}

void replaceAllUses(Operation& root, const Value* from, Value* to) {
  walk(root, [&](Operation& op) {
    for (Value*& v : op.operands())
      if (v == from) v = to;
  });
}

void eliminateDeadCode(Operation& root) {
  bool changed = true;
  while (changed) {
    changed = false;
    auto uses = countUses(root);
    std::vector<Operation*> dead;
    walk(root, [&](Operation& op) {
      if (&op == &root || op.numResults() == 0) return;
      const OpInfo* info = lookupOp(op.name());
      if (!info || !info->pure) return;
      for (const auto& r : op.results())
        if (uses[r.get()] != 0) return;
      dead.push_back(&op);
    });
    for (Operation* op : dead) op->parentRegion()->remove(op);
    changed = !dead.empty();
  }
}

std::vector<Operation*> ancestors(const Operation& op) {
  std::vector<Operation*> out;
  for (Operation* p = op.parentOp(); p; p = p->parentOp()) out.push_back(p);
  return out;
}

// -- builder ----------------------------------------------------------------

OpBuilder OpBuilder::before(Operation& op) {
  Region& r = *op.parentRegion();
  return OpBuilder(r, r.find(&op));
}

OpBuilder OpBuilder::after(Operation& op) {
  Region& r = *op.parentRegion();
  return OpBuilder(r, std::next(r.find(&op)));
}

Operation* OpBuilder::create(std::string name, std::vector<Value*> operands,
                             std::vector<Type> results, std::map<std::string, Attribute> attrs,
                             unsigned numRegions) {
  return insert(Operation::create(std::move(name), std::move(operands), std::move(results),
                                  std::move(attrs), numRegions));
}

Operation* OpBuilder::insert(std::unique_ptr<Operation> op) { return region_->insert(pos_, std::move(op)); }

Value* OpBuilder::constantIndex(int64_t v) {
  return create("arith.constant", {}, {Type::index()}, {{"value", v}})->result();
}

Value* OpBuilder::constantF64(double v) {
  return create("arith.constant", {}, {Type::f64()}, {{"value", v}})->result();
}

}  // namespace sf
