#include <algorithm>

#include "stencilforge/lowering.hpp"

namespace sf::lowering {

namespace {

/// Outermost loop.for enclosing `op` inside its function, or `op` itself.
Operation* hoistAnchor(Operation* op) {
  Operation* anchor = op;
  for (Operation* p : ancestors(*op))
    if (p->name() == "loop.for") anchor = p;
  return anchor;
}

bool hostTouches(Operation& anchor, const Value* array) {
  bool touched = false;
  walk(anchor, [&](Operation& op) {
    if ((op.name() == "mem.load" && op.operand(0) == array) || (op.name() == "mem.store" && op.operand(1) == array))
      touched = true;
  });
  return touched;
}

}  // namespace

ModulePair placeDeviceData(IRModule host, IRModule device, Placement strategy) {
  for (auto& fn : host.functions()) {
    std::vector<Operation*> calls;
    walk(*fn, [&](Operation& op) {
      if (op.name() == "func.call" && device.lookup(op.strAttr("callee"))) calls.push_back(&op);
    });

    if (strategy == Placement::Naive) {
      for (Operation* call : calls) {
        OpBuilder b = OpBuilder::before(*call);
        for (Value*& v : call->operands()) {
          const Operation* def = v->definingOp();
          if (!def || def->name() != "mem.to_ptr") continue;
          Operation* reg = b.create("dev.register", {def->operand(0)}, {Type::ptr()});
          reg->loc = call->loc;
          v = reg->result();
        }
      }
      eliminateDeadCode(*fn);
      continue;
    }

    // one device buffer per (anchor, array)
    struct Buffer {
      Operation* anchor;
      Value* array;
      Value* handle;
      bool perCall;
    };
    std::vector<Buffer> buffers;
    for (Operation* call : calls) {
      Operation* anchor = hoistAnchor(call);
      for (Value*& v : call->operands()) {
        const Operation* def = v->definingOp();
        if (!def || def->name() != "mem.to_ptr") continue;
        Value* array = def->operand(0);
        auto it = std::find_if(buffers.begin(), buffers.end(),
                               [&](const Buffer& buf) { return buf.anchor == anchor && buf.array == array; });
        if (it == buffers.end()) {
          OpBuilder b = OpBuilder::before(*anchor);
          Operation* alloc = b.create("dev.alloc", {array}, {Type::ptr()});
          alloc->loc = call->loc;
          bool perCall = anchor != call && hostTouches(*anchor, array);
          if (!perCall) b.create("dev.copy_in", {array, alloc->result()})->loc = call->loc;
          OpBuilder a = OpBuilder::after(*anchor);
          if (!perCall) a.create("dev.copy_out", {alloc->result(), array})->loc = call->loc;
          a.create("dev.free", {alloc->result()})->loc = call->loc;
          buffers.push_back({anchor, array, alloc->result(), perCall});
          it = std::prev(buffers.end());
        }
        v = it->handle;
        if (it->perCall) {
          OpBuilder::before(*call).create("dev.copy_in", {array, it->handle})->loc = call->loc;
          OpBuilder::after(*call).create("dev.copy_out", {it->handle, array})->loc = call->loc;
        }
      }
    }
    eliminateDeadCode(*fn);
  }
  return {std::move(host), std::move(device)};
}

}  // namespace sf::lowering
