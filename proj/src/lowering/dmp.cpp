#include <algorithm>

#include "stencilforge/discovery.hpp"
#include "stencilforge/lowering.hpp"
#include "stencilforge/stencil.hpp"

namespace sf::lowering {

namespace {

std::vector<Operation*> storesOf(const Operation& apply) {
  std::vector<Operation*> out;
  for (auto& op : apply.parentRegion()->ops())
    if (op->name() == "stencil.store" && op->operand(0)->definingOp() == &apply) out.push_back(op.get());
  return out;
}

/// Block split of [0, n) into k parts; the last n % k parts get one extra cell.
Interval blockPart(int64_t n, int k, int i) {
  int64_t base = n / k, rem = n % k;
  int64_t small = k - rem;
  int64_t lb = i < small ? i * base : small * base + (i - small) * (base + 1);
  int64_t len = i < small ? base : base + 1;
  return {lb, lb + len};
}

std::vector<Operation*> loadsInOrder(const IRModule& m) {
  std::vector<Operation*> loads;
  for (const auto& fn : m.functions())
    walk(*fn, [&](Operation& op) {
      if (op.name() == "stencil.load") loads.push_back(&op);
    });
  return loads;
}

}  // namespace

const std::vector<std::array<int, 2>>& exchangeDirections() {
  static const std::vector<std::array<int, 2>> dirs = {{-1, 0}, {1, 0},  {0, -1}, {0, 1},
                                                       {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  return dirs;
}

int64_t haloTag(int swap, std::array<int, 2> dir) { return int64_t{swap} * 9 + (dir[0] + 1) * 3 + (dir[1] + 1); }

int64_t haloTagStride(const DecompositionPlan& plan) {
  return 9 * std::max<int64_t>(1, static_cast<int64_t>(plan.swaps.size()));
}

const HaloMessage* DecompositionPlan::message(int swap, int src, int dst) const {
  if (swap < 0 || swap >= static_cast<int>(swaps.size())) return nullptr;
  for (const auto& msg : swaps[swap].messages)
    if (msg.src == src && msg.dst == dst) return &msg;
  return nullptr;
}

Bounds rankApplyBounds(const Operation& apply, const Bounds& interior) {
  const Bounds& b = apply.boundsAttr("bounds");
  Bounds out;
  for (Operation* s : storesOf(apply)) {
    IntList neg = s->intListAttr("origin");
    for (auto& v : neg) v = -v;
    Bounds part = b.intersect(s->boundsAttr("bounds")).intersect(interior.shifted(neg));
    if (part.empty()) continue;
    out = out.rank() == 0 ? part : out.hull(part);
  }
  if (out.rank() == 0) {
    out = b;
    for (size_t d = 0; d < out.rank(); ++d) out[d].ub = out[d].lb;
  }
  return out;
}

DecompositionPlan planDecomposition(const IRModule& device, int P, int Q) {
  if (P < 1 || Q < 1)
    throw InvalidProcessGrid("process grid " + std::to_string(P) + "x" + std::to_string(Q) + " is not positive");
  DecompositionPlan plan;
  plan.P = P;
  plan.Q = Q;

  for (const auto& fn : device.functions())
    walk(*fn, [&](const Operation& op) {
      if (op.name() != "mem.from_ptr" && op.name() != "mem.alloc") return;
      const Type& t = op.result()->type;
      if (t.rank() == 0) return;
      if (plan.extents.empty()) plan.extents = t.shape;
      else if (plan.extents != t.shape)
        throw GridMismatch("arrays of different shapes cannot share one decomposition");
    });
  const size_t rank = plan.extents.size();
  plan.gridRows = rank <= 1 ? P * Q : P;
  plan.gridCols = rank <= 1 ? 1 : Q;
  plan.haloLow.assign(rank, 0);
  plan.haloHigh.assign(rank, 0);

  for (const auto& fn : device.functions())
    walk(*fn, [&](const Operation& apply) {
      if (apply.name() != "stencil.apply") return;
      auto offsets = stencil::accessOffsets(apply);
      auto stores = storesOf(apply);
      for (size_t k = 0; k < apply.numOperands(); ++k) {
        const Operation* load = apply.operand(k)->definingOp();
        if (!load || load->name() != "stencil.load") continue;
        const IntList& origin = load->intListAttr("origin");
        for (const Operation* s : stores) {
          const IntList& so = s->intListAttr("origin");
          for (const auto& off : offsets[k])
            for (size_t d = 0; d < rank && d < off.size(); ++d) {
              int64_t eff = origin[d] + off[d] - so[d];
              plan.haloLow[d] = std::max(plan.haloLow[d], -eff);
              plan.haloHigh[d] = std::max(plan.haloHigh[d], eff);
            }
        }
      }
    });

  Bounds domain = Bounds::fromExtents(plan.extents);
  for (int p = 0; p < plan.gridRows; ++p)
    for (int q = 0; q < plan.gridCols; ++q) {
      RankInfo r;
      r.id = plan.rankAt(p, q);
      r.p = p;
      r.q = q;
      r.interior = domain;
      if (rank >= 1) r.interior[0] = blockPart(plan.extents[0], plan.gridRows, p);
      if (rank >= 2) r.interior[1] = blockPart(plan.extents[1], plan.gridCols, q);
      for (size_t d = 0; d < rank && d < 2; ++d) {
        int parts = d == 0 ? plan.gridRows : plan.gridCols;
        int64_t width = r.interior.extent(d);
        if (width < 1)
          throw InvalidProcessGrid("rank " + std::to_string(r.id) + " has an empty interior in dimension " +
                                   std::to_string(d));
        if (parts > 1 && width < std::max(plan.haloLow[d], plan.haloHigh[d]))
          throw InvalidProcessGrid("rank " + std::to_string(r.id) + " interior is " + std::to_string(width) +
                                   " cells wide in dimension " + std::to_string(d) + ", narrower than its halo");
      }
      r.local = r.interior;
      for (size_t d = 0; d < rank; ++d) {
        r.local[d].lb = std::max<int64_t>(0, r.interior.lb(d) - plan.haloLow[d]);
        r.local[d].ub = std::min(plan.extents[d], r.interior.ub(d) + plan.haloHigh[d]);
      }
      plan.ranks.push_back(std::move(r));
    }
  if (plan.numRanks() == 1) return plan;

  auto loads = loadsInOrder(device);
  for (size_t li = 0; li < loads.size(); ++li) {
    const Operation* load = loads[li];
    const IntList& origin = load->intListAttr("origin");
    SwapInfo swap;
    swap.id = static_cast<int>(plan.swaps.size());
    swap.load = static_cast<int>(li);
    swap.array = discovery::arrayName(load->operand(0));
    for (const auto& dst : plan.ranks)
      for (const auto& dir : exchangeDirections()) {
        int src = plan.rankAt(dst.p - dir[0], dst.q - dir[1]);
        if (src < 0) continue;
        const Bounds& srcInterior = plan.ranks[src].interior;
        Bounds box;
        for (auto& use : load->parentRegion()->ops()) {
          if (use->name() != "stencil.apply") continue;
          auto offsets = stencil::accessOffsets(*use);
          Bounds pts = rankApplyBounds(*use, dst.interior);
          if (pts.empty()) continue;
          for (size_t k = 0; k < use->numOperands(); ++k) {
            if (use->operand(k) != load->result()) continue;
            for (const auto& off : offsets[k]) {
              IntList shift = origin;
              for (size_t d = 0; d < shift.size(); ++d) shift[d] += off[d];
              Bounds part = pts.shifted(shift).intersect(srcInterior);
              if (!part.empty()) box = box.rank() == 0 ? part : box.hull(part);
            }
          }
        }
        if (box.rank() != 0 && !box.empty()) swap.messages.push_back({swap.id, src, dst.id, box});
      }
    if (!swap.messages.empty()) plan.swaps.push_back(std::move(swap));
  }
  return plan;
}

DmpResult lowerToDmp(IRModule device, int P, int Q) {
  DecompositionPlan plan = planDecomposition(device, P, Q);
  if (plan.numRanks() > 1) {
    auto loads = loadsInOrder(device);
    for (const auto& swap : plan.swaps) {
      Operation* load = loads[swap.load];
      Operation* op = OpBuilder::before(*load).create("dmp.halo_swap", {load->operand(0)}, {},
                                                      {{"swap", static_cast<int64_t>(swap.id)}});
      op->loc = load->loc;
    }
    for (auto& fn : device.functions()) fn->setAttr("grid", IntList{P, Q});
  }
  return {std::move(device), std::move(plan)};
}

IRModule lowerDmpToMsg(IRModule m, const DecompositionPlan& plan) {
  for (auto& fn : m.functions()) {
    std::vector<Operation*> swaps;
    walk(*fn, [&](Operation& op) {
      if (op.name() == "dmp.halo_swap") swaps.push_back(&op);
    });
    for (Operation* op : swaps) {
      int id = static_cast<int>(op->intAttr("swap"));
      std::vector<std::array<int, 2>> used;
      if (id >= 0 && id < static_cast<int>(plan.swaps.size()))
        for (const auto& dir : exchangeDirections())
          for (const auto& msg : plan.swaps[id].messages) {
            const RankInfo& s = plan.ranks[msg.src];
            const RankInfo& d = plan.ranks[msg.dst];
            if (d.p - s.p == dir[0] && d.q - s.q == dir[1]) {
              used.push_back(dir);
              break;
            }
          }
      OpBuilder b = OpBuilder::before(*op);
      for (const auto& dir : used)
        b.create("msg.send", {op->operand(0)}, {},
                 {{"swap", int64_t{id}}, {"to", IntList{dir[0], dir[1]}}, {"tag", haloTag(id, dir)}})
            ->loc = op->loc;
      for (const auto& dir : used)
        b.create("msg.recv", {op->operand(0)}, {},
                 {{"swap", int64_t{id}}, {"from", IntList{-dir[0], -dir[1]}}, {"tag", haloTag(id, dir)}})
            ->loc = op->loc;
      op->parentRegion()->remove(op);
    }
  }
  return m;
}

}  // namespace sf::lowering
