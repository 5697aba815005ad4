#include <sstream>

#include "ir_internal.hpp"

namespace sf {

void ValueNumbering::number(const Operation& op) {
  for (const auto& r : op.results()) ids_[r.get()] = next_++;
  for (size_t i = 0; i < op.numRegions(); ++i) {
    const Region& region = op.region(i);
    for (const auto& a : region.args()) ids_[a.get()] = next_++;
    for (const auto& inner : region.ops()) number(*inner);
  }
}

std::string ValueNumbering::name(const Value* v) const {
  auto it = ids_.find(v);
  return it == ids_.end() ? std::string("%<undef>") : "%" + std::to_string(it->second);
}

namespace {

class Printer {
 public:
  Printer(std::ostream& os, const ValueNumbering& names) : os_(os), names_(names) {}

  void printOp(const Operation& op, int indent) {
    pad(indent);
    if (op.numResults()) {
      for (size_t i = 0; i < op.numResults(); ++i) os_ << (i ? ", " : "") << names_.name(op.result(i));
      os_ << " = ";
    }
    os_ << '"' << op.name() << "\"(";
    for (size_t i = 0; i < op.numOperands(); ++i) os_ << (i ? ", " : "") << names_.name(op.operand(i));
    os_ << ")";
    if (op.numRegions()) {
      os_ << " (";
      for (size_t r = 0; r < op.numRegions(); ++r) {
        if (r) os_ << ", ";
        printRegion(op.region(r), indent);
      }
      os_ << ")";
    }
    if (!op.attrs().empty()) {
      os_ << " {";
      bool first = true;
      for (const auto& [k, v] : op.attrs()) {
        os_ << (first ? "" : ", ") << k << " = " << attributeStr(v);
        first = false;
      }
      os_ << "}";
    }
    os_ << " : (";
    for (size_t i = 0; i < op.numOperands(); ++i) os_ << (i ? ", " : "") << op.operand(i)->type.str();
    os_ << ") -> (";
    for (size_t i = 0; i < op.numResults(); ++i) os_ << (i ? ", " : "") << op.result(i)->type.str();
    os_ << ")\n";
  }

 private:
  void printRegion(const Region& region, int indent) {
    os_ << "{\n";
    if (region.numArgs()) {
      pad(indent);
      os_ << "^bb0(";
      for (size_t i = 0; i < region.numArgs(); ++i)
        os_ << (i ? ", " : "") << names_.name(region.arg(i)) << ": " << region.arg(i)->type.str();
      os_ << "):\n";
    }
    for (const auto& inner : region.ops()) printOp(*inner, indent + 1);
    pad(indent);
    os_ << "}";
  }

  void pad(int indent) {
    for (int i = 0; i < indent; ++i) os_ << "  ";
  }

  std::ostream& os_;
  const ValueNumbering& names_;
};

}  // namespace

std::string printIR(const IRModule& m) {
  ValueNumbering names;
  for (const auto& fn : m.functions()) names.number(*fn);
  std::ostringstream os;
  os << "module";
  if (!m.name().empty()) os << " @" << m.name();
  os << " {\n";
  Printer p(os, names);
  for (const auto& fn : m.functions()) p.printOp(*fn, 1);
  os << "}\n";
  return os.str();
}

std::string printOp(const Operation& op) {
  ValueNumbering names;
  names.number(op);
  std::ostringstream os;
  Printer(os, names).printOp(op, 0);
  return os.str();
}

}  // namespace sf
