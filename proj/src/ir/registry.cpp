#include "stencilforge/ir.hpp"

namespace sf {

const std::vector<OpInfo>& registeredOps() {
  // name, operands [min,max], results [min,max], regions, required attrs, pure
  static const std::vector<OpInfo> ops = {
      {"func.func", 0, 0, 0, 0, 1, {"sym_name"}, false},
      {"func.call", 0, -1, 0, 0, 0, {"callee"}, false},

      {"arith.constant", 0, 0, 1, 1, 0, {"value"}, true},
      {"arith.addf", 2, 2, 1, 1, 0, {}, true},
      {"arith.subf", 2, 2, 1, 1, 0, {}, true},
      {"arith.mulf", 2, 2, 1, 1, 0, {}, true},
      {"arith.divf", 2, 2, 1, 1, 0, {}, true},
      {"arith.powf", 2, 2, 1, 1, 0, {}, true},
      {"arith.negf", 1, 1, 1, 1, 0, {}, true},
      {"arith.addi", 2, 2, 1, 1, 0, {}, true},
      {"arith.subi", 2, 2, 1, 1, 0, {}, true},
      {"arith.muli", 2, 2, 1, 1, 0, {}, true},
      {"arith.divsi", 2, 2, 1, 1, 0, {}, true},
      {"arith.minsi", 2, 2, 1, 1, 0, {}, true},
      {"arith.sitofp", 1, 1, 1, 1, 0, {}, true},

      {"mem.alloc", 0, 0, 1, 1, 0, {"name", "lower"}, false},
      {"mem.load", 1, -1, 1, 1, 0, {}, true},
      {"mem.store", 2, -1, 0, 0, 0, {}, false},
      {"mem.to_ptr", 1, 1, 1, 1, 0, {}, true},
      {"mem.from_ptr", 1, -1, 1, 1, 0, {}, true},
      {"mem.snapshot", 1, 1, 1, 1, 0, {"box"}, false},

      {"loop.for", 3, 3, 0, 0, 1, {}, false},
      {"par.for", 0, 0, 0, 0, 1, {"bounds", "steps"}, false},

      {"stencil.load", 1, 1, 1, 1, 0, {"origin"}, true},
      {"stencil.apply", 0, -1, 1, -1, 1, {"bounds"}, false},
      {"stencil.access", 1, 1, 1, 1, 0, {"offset"}, true},
      {"stencil.index", 0, 0, 1, 1, 0, {"dim"}, true},
      {"stencil.return", 0, -1, 0, 0, 0, {}, false},
      {"stencil.store", 2, 2, 0, 0, 0, {"bounds", "origin"}, false},

      {"dev.register", 1, 1, 1, 1, 0, {}, false},
      {"dev.alloc", 1, 1, 1, 1, 0, {}, false},
      {"dev.copy_in", 2, 2, 0, 0, 0, {}, false},
      {"dev.copy_out", 2, 2, 0, 0, 0, {}, false},
      {"dev.free", 1, 1, 0, 0, 0, {}, false},

      {"dmp.halo_swap", 1, 1, 0, 0, 0, {"swap"}, false},
      {"msg.send", 1, 1, 0, 0, 0, {"swap", "to", "tag"}, false},
      {"msg.recv", 1, 1, 0, 0, 0, {"swap", "from", "tag"}, false},
  };
  return ops;
}

const OpInfo* lookupOp(std::string_view name) {
  for (const auto& info : registeredOps())
    if (info.name == name) return &info;
  return nullptr;
}

}  // namespace sf
