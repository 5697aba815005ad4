#pragma once

#include <string>
#include <unordered_map>

#include "stencilforge/ir.hpp"

namespace sf {

/// Assigns `%N` names in textual definition order.
class ValueNumbering {
 public:
  void number(const Operation& op);
  std::string name(const Value* v) const;

 private:
  std::unordered_map<const Value*, int> ids_;
  int next_ = 0;
};

}  // namespace sf
