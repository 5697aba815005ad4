#include <algorithm>

#include "stencilforge/discovery.hpp"

namespace sf::discovery {

namespace {

bool isScalarLoad(const Operation& op) { return op.name() == "mem.load" && op.operand(0)->type.rank() == 0; }

class Extractor {
 public:
  Extractor(IRModule& host, IRModule& device) : host_(host), device_(device) {}

  void run() {
    for (auto& fn : host_.functions()) visit(*fn);
  }

 private:
  void visit(Operation& op) {
    for (size_t r = 0; r < op.numRegions(); ++r) {
      Region& region = op.region(r);
      std::vector<std::vector<Operation*>> segments;
      std::vector<Operation*> seg;
      auto flush = [&] {
        if (std::any_of(seg.begin(), seg.end(), [](Operation* o) { return o->dialect() == "stencil"; }))
          segments.push_back(seg);
        seg.clear();
      };
      for (auto& inner : region.ops()) {
        if (inner->dialect() == "stencil" || isScalarLoad(*inner)) seg.push_back(inner.get());
        else flush();
      }
      flush();
      for (const auto& s : segments) outline(region, s);
      for (auto& inner : region.ops()) visit(*inner);
    }
  }

  void outline(Region& region, const std::vector<Operation*>& seg) {
    std::vector<Value*> arrays;
    std::vector<Value*> scalars;
    auto addArray = [&](Value* a) {
      if (std::find(arrays.begin(), arrays.end(), a) == arrays.end()) arrays.push_back(a);
    };
    for (Operation* op : seg) {
      if (op->name() == "stencil.load") addArray(op->operand(0));
      if (op->name() == "stencil.store") addArray(op->operand(1));
      if (op->name() == "stencil.apply")
        for (Value* v : op->operands())
          if (v->type.kind == TypeKind::F64 && std::find(scalars.begin(), scalars.end(), v) == scalars.end())
            scalars.push_back(v);
    }

    std::string name = "stencil_" + std::to_string(counter_++);
    std::vector<Type> params;
    for (size_t i = 0; i < arrays.size(); ++i) params.push_back(Type::ptr());
    for (Value* a : arrays)
      for (size_t d = 0; d < a->type.rank(); ++d) params.push_back(Type::index());
    for (size_t i = 0; i < scalars.size(); ++i) params.push_back(Type::f64());
    Operation& fn = device_.addFunction(name, params);
    Region& body = fn.region();
    OpBuilder db = OpBuilder::atEnd(body);
    ValueMapping map;
    size_t extentArg = arrays.size();
    for (size_t i = 0; i < arrays.size(); ++i) {
      std::vector<Value*> operands{body.arg(i)};
      for (size_t d = 0; d < arrays[i]->type.rank(); ++d) operands.push_back(body.arg(extentArg++));
      std::map<std::string, Attribute> attrs{{"name", arrayName(arrays[i])}};
      if (const Operation* def = arrays[i]->definingOp())
        if (const IntList* lower = def->attr<IntList>("lower")) attrs["lower"] = *lower;
      map.map(arrays[i], db.create("mem.from_ptr", operands, {arrays[i]->type}, std::move(attrs))->result());
    }
    for (size_t k = 0; k < scalars.size(); ++k) map.map(scalars[k], body.arg(extentArg + k));
    for (Operation* op : seg)
      if (op->dialect() == "stencil") db.insert(cloneOp(*op, map))->loc = op->loc;

    // host side: scalar loads stay, the rest becomes a call
    Operation* anchor = seg.front();
    for (Operation* op : seg)
      if (op->dialect() == "stencil") {
        anchor = op;
        break;
      }
    OpBuilder hb = OpBuilder::before(*anchor);
    std::vector<Value*> args;
    for (Value* a : arrays) args.push_back(hb.create("mem.to_ptr", {a}, {Type::ptr()})->result());
    for (Value* a : arrays)
      for (int64_t e : a->type.shape) args.push_back(hb.constantIndex(e));
    // scalar loads that sit after the first stencil op must move ahead of the call
    for (Operation* op : seg)
      if (isScalarLoad(*op) && std::find(seg.begin(), seg.end(), op) > std::find(seg.begin(), seg.end(), anchor)) {
        auto owned = region.remove(op);
        hb.insert(std::move(owned));
      }
    for (Value* s : scalars) args.push_back(s);
    Operation* call = hb.create("func.call", args, {}, {{"callee", name}});
    call->loc = anchor->loc;
    for (auto it = seg.rbegin(); it != seg.rend(); ++it)
      if ((*it)->dialect() == "stencil") region.remove(*it);
  }

  IRModule& host_;
  IRModule& device_;
  int counter_ = 0;
};

}  // namespace

ExtractedModules extractStencilModule(IRModule m) {
  ExtractedModules out{std::move(m), IRModule("device")};
  Extractor(out.host, out.device).run();
  return out;
}

}  // namespace sf::discovery
