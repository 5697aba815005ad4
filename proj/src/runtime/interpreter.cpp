#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <unordered_map>

#include "stencilforge/discovery.hpp"
#include "stencilforge/runtime.hpp"
#include "stencilforge/stencil.hpp"
#include "thread_pool.hpp"

namespace sf::runtime {

namespace {

// -- storage -----------------------------------------------------------------

enum class Space { Host, Device };

struct Storage {
  std::string name;
  std::vector<int64_t> shape;  // global extents
  IntList lower;
  Bounds box;                  // stored region, global coordinates
  std::vector<int64_t> stride;
  std::vector<double> data;
  Space space = Space::Host;
  bool valid = true;
  bool distributed = false;

  Storage(std::string n, std::vector<int64_t> s, Bounds b) : name(std::move(n)), shape(std::move(s)), box(std::move(b)) {
    int64_t st = 1;
    for (size_t d = 0; d < box.rank(); ++d) {
      stride.push_back(st);
      st *= std::max<int64_t>(0, box.extent(d));
    }
    data.assign(static_cast<size_t>(box.rank() ? st : 1), 0.0);
  }

  int64_t lin(const int64_t* idx) const {
    int64_t l = 0;
    for (size_t d = 0; d < stride.size(); ++d) l += (idx[d] - box.lb(d)) * stride[d];
    return l;
  }
  bool holds(const int64_t* idx) const {
    for (size_t d = 0; d < stride.size(); ++d)
      if (idx[d] < box.lb(d) || idx[d] >= box.ub(d)) return false;
    return true;
  }
  int64_t bytes() const {
    int64_t n = 8;
    for (int64_t e : shape) n *= e;
    return n;
  }
};

struct Temp {
  Bounds box;
  std::vector<int64_t> stride;
  std::vector<double> data;

  explicit Temp(Bounds b) : box(std::move(b)) {
    int64_t st = 1;
    for (size_t d = 0; d < box.rank(); ++d) {
      stride.push_back(st);
      st *= std::max<int64_t>(0, box.extent(d));
    }
    data.assign(static_cast<size_t>(st), 0.0);
  }
  int64_t lin(const std::vector<int64_t>& p) const {
    int64_t l = 0;
    for (size_t d = 0; d < stride.size(); ++d) l += (p[d] - box.lb(d)) * stride[d];
    return l;
  }
};

struct Slot {
  double f = 0;
  int64_t i = 0;
  Storage* a = nullptr;
  std::shared_ptr<Temp> t;
  std::shared_ptr<Storage> own;
};

// -- compiled form -------------------------------------------------------------

enum class Code : uint8_t {
  ConstF, ConstI, AddF, SubF, MulF, DivF, PowF, NegF, AddI, SubI, MulI, DivI, MinI, SiToFp,
  Alloc, Load, Store, ToPtr, FromPtr, Snapshot, For, ParFor,
  SLoad, Apply, SStore, Access, Index, Return, Call,
  DevRegister, DevAlloc, CopyIn, CopyOut, DevFree, HaloSwap, Send, Recv,
};

const std::unordered_map<std::string, Code>& codes() {
  static const std::unordered_map<std::string, Code> m = {
      {"arith.addf", Code::AddF},       {"arith.subf", Code::SubF},       {"arith.mulf", Code::MulF},
      {"arith.divf", Code::DivF},       {"arith.powf", Code::PowF},       {"arith.negf", Code::NegF},
      {"arith.addi", Code::AddI},       {"arith.subi", Code::SubI},       {"arith.muli", Code::MulI},
      {"arith.divsi", Code::DivI},      {"arith.minsi", Code::MinI},      {"arith.sitofp", Code::SiToFp},
      {"mem.alloc", Code::Alloc},       {"mem.load", Code::Load},         {"mem.store", Code::Store},
      {"mem.to_ptr", Code::ToPtr},      {"mem.from_ptr", Code::FromPtr},  {"mem.snapshot", Code::Snapshot},
      {"loop.for", Code::For},          {"par.for", Code::ParFor},        {"stencil.load", Code::SLoad},
      {"stencil.apply", Code::Apply},   {"stencil.store", Code::SStore},  {"stencil.access", Code::Access},
      {"stencil.index", Code::Index},   {"stencil.return", Code::Return}, {"func.call", Code::Call},
      {"dev.register", Code::DevRegister}, {"dev.alloc", Code::DevAlloc}, {"dev.copy_in", Code::CopyIn},
      {"dev.copy_out", Code::CopyOut},  {"dev.free", Code::DevFree},      {"dmp.halo_swap", Code::HaloSwap},
      {"msg.send", Code::Send},         {"msg.recv", Code::Recv},
  };
  return m;
}

/// Flat program for one stencil.apply body, evaluated per point.
struct KOp {
  Code code;
  int r = -1, a = -1, b = -1;
  double f = 0;
  int64_t i = 0;
  IntList off;
};

struct Kernel {
  int slots = 0;
  std::vector<int> args;  // slot of each block argument
  std::vector<KOp> ops;
  std::vector<int> rets;
};

struct CRegion;

struct COp {
  Code code;
  const Operation* op = nullptr;
  int r = -1;
  std::vector<int> in;
  std::vector<int> results;
  double f = 0;
  int64_t i = 0;
  IntList ints;
  Bounds box;
  IntList steps;
  std::string name;
  std::vector<CRegion> regions;
  std::shared_ptr<Kernel> kernel;
};

struct CRegion {
  std::vector<int> args;
  std::vector<COp> ops;
};

struct CFunc {
  std::string name;
  const Operation* op = nullptr;
  int slots = 0;
  CRegion body;
};

struct CModule {
  std::vector<CFunc> funcs;
  const CFunc* lookup(const std::string& n) const {
    for (const auto& f : funcs)
      if (f.name == n) return &f;
    return nullptr;
  }
};

class Compiler {
 public:
  CFunc function(const Operation& fn) {
    slots_.clear();
    CFunc out;
    out.name = fn.strAttr("sym_name");
    out.op = &fn;
    out.body = region(fn.region());
    out.slots = static_cast<int>(slots_.size());
    return out;
  }

 private:
  int slot(const Value* v) {
    auto it = slots_.find(v);
    if (it != slots_.end()) return it->second;
    int s = static_cast<int>(slots_.size());
    slots_[v] = s;
    return s;
  }

  CRegion region(const Region& r) {
    CRegion out;
    for (const auto& a : r.args()) out.args.push_back(slot(a.get()));
    for (const auto& op : r.ops()) out.ops.push_back(compile(*op));
    return out;
  }

  COp compile(const Operation& op) {
    COp c;
    c.op = &op;
    if (op.name() == "arith.constant") {
      if (const double* f = op.attr<double>("value")) {
        c.code = Code::ConstF;
        c.f = *f;
      } else {
        c.code = Code::ConstI;
        c.i = op.intAttr("value");
      }
    } else {
      auto it = codes().find(op.name());
      if (it == codes().end()) throw RuntimeFault("no executor for operation '" + op.name() + "'");
      c.code = it->second;
    }
    for (const Value* v : op.operands()) c.in.push_back(slot(v));
    for (const auto& r : op.results()) c.results.push_back(slot(r.get()));
    if (!c.results.empty()) c.r = c.results[0];
    switch (c.code) {
      case Code::Alloc:
        c.name = op.strAttr("name");
        c.ints = op.intListAttr("lower");
        c.i = op.hasAttr("dummy") ? op.intAttr("dummy") : 0;
        break;
      case Code::FromPtr:
        if (const std::string* n = op.attr<std::string>("name")) c.name = *n;
        break;
      case Code::Snapshot: c.box = op.boundsAttr("box"); break;
      case Code::ParFor:
        c.box = op.boundsAttr("bounds");
        c.steps = op.intListAttr("steps");
        break;
      case Code::SLoad: c.ints = op.intListAttr("origin"); break;
      case Code::SStore:
        c.box = op.boundsAttr("bounds");
        c.ints = op.intListAttr("origin");
        break;
      case Code::Apply:
        c.box = op.boundsAttr("bounds");
        c.kernel = kernel(op);
        break;
      case Code::Call: c.name = op.strAttr("callee"); break;
      case Code::HaloSwap: c.i = op.intAttr("swap"); break;
      case Code::Send:
      case Code::Recv:
        c.i = op.intAttr("swap");
        c.f = static_cast<double>(op.intAttr("tag"));
        c.ints = op.intListAttr(c.code == Code::Send ? "to" : "from");
        break;
      default: break;
    }
    if (c.code != Code::Apply)
      for (size_t r = 0; r < op.numRegions(); ++r) c.regions.push_back(region(op.region(r)));
    return c;
  }

  std::shared_ptr<Kernel> kernel(const Operation& apply) {
    auto k = std::make_shared<Kernel>();
    std::unordered_map<const Value*, int> ks;
    auto ksl = [&](const Value* v) {
      auto it = ks.find(v);
      if (it != ks.end()) return it->second;
      int s = static_cast<int>(ks.size());
      ks[v] = s;
      return s;
    };
    const Region& body = apply.region();
    for (const auto& a : body.args()) k->args.push_back(ksl(a.get()));
    for (const auto& op : body.ops()) {
      KOp o;
      if (op->name() == "arith.constant") {
        if (const double* f = op->attr<double>("value")) {
          o.code = Code::ConstF;
          o.f = *f;
        } else {
          o.code = Code::ConstI;
          o.i = op->intAttr("value");
        }
      } else {
        auto it = codes().find(op->name());
        if (it == codes().end()) throw RuntimeFault("operation '" + op->name() + "' cannot appear in a stencil body");
        o.code = it->second;
      }
      if (o.code == Code::Return) {
        for (const Value* v : op->operands()) k->rets.push_back(ksl(v));
        continue;
      }
      if (o.code == Code::Access) {
        o.a = static_cast<int>(op->operand(0)->index());
        o.off = op->intListAttr("offset");
      } else if (o.code == Code::Index) {
        o.i = op->intAttr("dim");
      } else {
        if (op->numOperands() > 0) o.a = ksl(op->operand(0));
        if (op->numOperands() > 1) o.b = ksl(op->operand(1));
      }
      if (op->numResults()) o.r = ksl(op->result());
      k->ops.push_back(std::move(o));
    }
    k->slots = static_cast<int>(ks.size());
    return k;
  }

  std::unordered_map<const Value*, int> slots_;
};

CModule compileModule(const IRModule& m) {
  CModule out;
  for (const auto& fn : m.functions()) out.funcs.push_back(Compiler().function(*fn));
  return out;
}

// -- message layer ---------------------------------------------------------------

class Network {
 public:
  explicit Network(int ranks)
      : ranks_(ranks), inbox_(static_cast<size_t>(ranks)), waiting_(static_cast<size_t>(ranks)) {}

  void send(int src, int dst, int64_t tag, std::vector<double> payload) {
    std::lock_guard<std::mutex> lock(mu_);
    inbox_[dst][{src, tag}].push_back(std::move(payload));
    cv_.notify_all();
  }

  std::vector<double> recv(int self, int src, int64_t tag) {
    std::unique_lock<std::mutex> lock(mu_);
    waiting_[self] = {src, tag};
    while (true) {
      if (deadlock_) {
        waiting_[self].reset();
        throw DeadlockDetected("rank " + std::to_string(self) + " aborted: the rank set deadlocked");
      }
      auto& box = inbox_[self];
      auto it = box.find({src, tag});
      if (it != box.end() && !it->second.empty()) {
        std::vector<double> msg = std::move(it->second.front());
        it->second.pop_front();
        waiting_[self].reset();
        return msg;
      }
      if (stuck()) {
        deadlock_ = true;
        waiting_[self].reset();
        cv_.notify_all();
        throw DeadlockDetected("all ranks are blocked: rank " + std::to_string(self) + " waits for tag " +
                               std::to_string(tag) + " from rank " + std::to_string(src));
      }
      cv_.wait(lock);
    }
  }

  // every live rank waits for a message that is not in its inbox
  bool stuck() const {
    int waiting = 0;
    for (int r = 0; r < ranks_; ++r) {
      if (!waiting_[r]) continue;
      auto it = inbox_[r].find(*waiting_[r]);
      if (it != inbox_[r].end() && !it->second.empty()) return false;
      ++waiting;
    }
    return waiting + finished_ == ranks_;
  }

  void finish() {
    std::lock_guard<std::mutex> lock(mu_);
    ++finished_;
    cv_.notify_all();
  }

 private:
  int ranks_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::map<std::pair<int, int64_t>, std::deque<std::vector<double>>>> inbox_;
  std::vector<std::optional<std::pair<int, int64_t>>> waiting_;
  int finished_ = 0;
  bool deadlock_ = false;
};

// -- machine -----------------------------------------------------------------

enum class Mode { Serial, DeviceSim, Rank };

thread_local bool tInParallel = false;

class Machine {
 public:
  Machine(const IRModule& host, const IRModule* device, const ExecOptions& opts, Mode mode)
      : hostIR_(host), deviceIR_(device), opts_(opts), mode_(mode) {
    host_ = compileModule(host);
    if (device) device_ = compileModule(*device);
    if (opts.threads > 1) pool_ = std::make_unique<ThreadPool>(opts.threads);
  }

  void setRank(const lowering::DecompositionPlan* plan, int rank, Network* net) {
    plan_ = plan;
    rank_ = rank;
    net_ = net;
  }

  /// Runs the entry function and returns its named arrays.
  std::vector<Storage*> run(const GridMap& inputs) {
    inputs_ = &inputs;
    const CFunc* entry = opts_.entry.empty() ? (host_.funcs.empty() ? nullptr : &host_.funcs.front())
                                             : host_.lookup(opts_.entry);
    if (!entry) throw MissingBinding("entry function '" + opts_.entry + "' not found");
    for (const auto& [name, g] : inputs) {
      bool found = false;
      walk(*entry->op, [&](const Operation& op) {
        if (op.name() == "mem.alloc" && op.strAttr("name") == name) found = true;
      });
      if (!found) throw GridMismatch("no array named '" + name + "' in function @" + entry->name);
    }
    entryAllocs_.clear();
    collect_ = true;
    std::vector<Slot> frame(static_cast<size_t>(entry->slots));
    exec(entry->body, frame);
    std::vector<Storage*> out;
    for (auto& [name, s] : entryAllocs_) out.push_back(s);
    return out;
  }

  TransferStats stats;

 private:
  // -- helpers

  [[noreturn]] void trap(const std::string& what, const Storage& s, const int64_t* idx) {
    std::string pos;
    for (size_t d = 0; d < s.shape.size(); ++d) pos += (d ? "," : "") + std::to_string(idx[d]);
    throw TrapOutOfBounds(what + " of '" + s.name + "' at (" + pos + ") outside " + s.box.str());
  }

  void requireValid(const Storage& s) {
    if (s.space == Space::Device && !s.valid)
      throw DeviceDataMissing("device buffer for '" + s.name + "' is read before any copy_in");
  }

  Storage* newStorage(std::string name, std::vector<int64_t> shape, Bounds box) {
    std::lock_guard<std::mutex> lock(storeMu_);
    owned_.push_back(std::make_unique<Storage>(std::move(name), std::move(shape), std::move(box)));
    return owned_.back().get();
  }

  const Operation* applyOf(const COp& c) { return c.op; }

  // -- execution

  void exec(const CRegion& region, std::vector<Slot>& s) {
    for (const COp& c : region.ops) step(c, s);
  }

  void step(const COp& c, std::vector<Slot>& s) {
    switch (c.code) {
      case Code::ConstF: s[c.r].f = c.f; break;
      case Code::ConstI: s[c.r].i = c.i; break;
      case Code::AddF: s[c.r].f = s[c.in[0]].f + s[c.in[1]].f; break;
      case Code::SubF: s[c.r].f = s[c.in[0]].f - s[c.in[1]].f; break;
      case Code::MulF: s[c.r].f = s[c.in[0]].f * s[c.in[1]].f; break;
      case Code::DivF: s[c.r].f = s[c.in[0]].f / s[c.in[1]].f; break;
      case Code::PowF: s[c.r].f = std::pow(s[c.in[0]].f, s[c.in[1]].f); break;
      case Code::NegF: s[c.r].f = -s[c.in[0]].f; break;
      case Code::AddI: s[c.r].i = s[c.in[0]].i + s[c.in[1]].i; break;
      case Code::SubI: s[c.r].i = s[c.in[0]].i - s[c.in[1]].i; break;
      case Code::MulI: s[c.r].i = s[c.in[0]].i * s[c.in[1]].i; break;
      case Code::DivI: {
        int64_t d = s[c.in[1]].i;
        if (d == 0) throw RuntimeFault("integer division by zero");
        s[c.r].i = s[c.in[0]].i / d;
        break;
      }
      case Code::MinI: s[c.r].i = std::min(s[c.in[0]].i, s[c.in[1]].i); break;
      case Code::SiToFp: s[c.r].f = static_cast<double>(s[c.in[0]].i); break;
      case Code::Alloc: alloc(c, s); break;
      case Code::Load: {
        Storage& a = *s[c.in[0]].a;
        int64_t idx[3] = {0, 0, 0};
        for (size_t d = 1; d < c.in.size(); ++d) idx[d - 1] = s[c.in[d]].i;
        if (a.distributed) throw GridMismatch("host code reads distributed array '" + a.name + "' element-wise");
        if (a.space == Space::Device && !a.valid) requireValid(a);
        if (opts_.checked && !a.holds(idx)) trap("load", a, idx);
        s[c.r].f = a.data[a.lin(idx)];
        break;
      }
      case Code::Store: {
        Storage& a = *s[c.in[1]].a;
        int64_t idx[3] = {0, 0, 0};
        for (size_t d = 2; d < c.in.size(); ++d) idx[d - 2] = s[c.in[d]].i;
        if (a.distributed) throw GridMismatch("host code writes distributed array '" + a.name + "' element-wise");
        if (opts_.checked && !a.holds(idx)) trap("store", a, idx);
        a.data[a.lin(idx)] = s[c.in[0]].f;
        break;
      }
      case Code::ToPtr: s[c.r].a = s[c.in[0]].a; break;
      case Code::FromPtr: {
        Storage* a = s[c.in[0]].a;
        if (!a) throw RuntimeFault("null pointer passed to mem.from_ptr");
        const Type& t = c.op->result()->type;
        for (size_t d = 0; d < t.shape.size(); ++d)
          if (s[c.in[1 + d]].i != t.shape[d] || a->shape[d] != t.shape[d])
            throw GridMismatch("pointer for '" + c.name + "' does not match the declared extents");
        s[c.r].a = a;
        break;
      }
      case Code::Snapshot: {
        Storage& src = *s[c.in[0]].a;
        requireValid(src);
        Bounds box = c.box.intersect(src.box);
        auto snap = std::make_shared<Storage>(src.name, src.shape, box);
        forEachPoint(box, [&](const std::vector<int64_t>& p) { snap->data[snap->lin(p.data())] = src.data[src.lin(p.data())]; });
        s[c.r].a = snap.get();
        s[c.r].own = std::move(snap);
        break;
      }
      case Code::For: {
        const CRegion& body = c.regions[0];
        int64_t lb = s[c.in[0]].i, ub = s[c.in[1]].i, st = s[c.in[2]].i;
        if (st <= 0) throw RuntimeFault("loop.for step must be positive");
        for (int64_t iv = lb; iv <= ub; iv += st) {
          s[body.args[0]].i = iv;
          exec(body, s);
        }
        break;
      }
      case Code::ParFor: parFor(c, s); break;
      case Code::SLoad: stencilLoad(c, s); break;
      case Code::Apply: apply(c, s); break;
      case Code::SStore: stencilStore(c, s); break;
      case Code::Call: call(c, s); break;
      case Code::DevRegister: {
        Storage* a = s[c.in[0]].a;
        auto& st = stats.arrays[a->name];
        ++st.registers;
        st.bytesIn += a->bytes();
        st.bytesOut += a->bytes();
        registered_.insert(a);
        s[c.r].a = a;
        break;
      }
      case Code::DevAlloc: {
        Storage* a = s[c.in[0]].a;
        Storage* d = newStorage(a->name, a->shape, a->box);
        d->lower = a->lower;
        d->space = Space::Device;
        d->valid = false;
        ++stats.arrays[a->name].allocs;
        s[c.r].a = d;
        break;
      }
      case Code::CopyIn: {
        Storage* a = s[c.in[0]].a;
        Storage* d = s[c.in[1]].a;
        d->data = a->data;
        d->valid = true;
        auto& st = stats.arrays[a->name];
        ++st.copyIn;
        st.bytesIn += a->bytes();
        break;
      }
      case Code::CopyOut: {
        Storage* d = s[c.in[0]].a;
        Storage* a = s[c.in[1]].a;
        requireValid(*d);
        a->data = d->data;
        auto& st = stats.arrays[a->name];
        ++st.copyOut;
        st.bytesOut += a->bytes();
        break;
      }
      case Code::DevFree: {
        Storage* d = s[c.in[0]].a;
        d->valid = false;
        ++stats.arrays[d->name].frees;
        break;
      }
      case Code::HaloSwap: haloSwap(c, s); break;
      case Code::Send: sendOp(c, s); break;
      case Code::Recv: recvOp(c, s); break;
      case Code::Access:
      case Code::Index:
      case Code::Return: throw RuntimeFault("stencil body operation outside stencil.apply");
    }
  }

  void alloc(const COp& c, std::vector<Slot>& s) {
    const Type& t = c.op->result()->type;
    Bounds full = Bounds::fromExtents(t.shape);
    bool distributed = mode_ == Mode::Rank && t.rank() > 0;
    if (distributed && t.shape != plan_->extents)
      throw GridMismatch("array '" + c.name + "' does not match the decomposed domain");
    Bounds box = distributed ? plan_->ranks[rank_].local : full;
    Storage* a = newStorage(c.name, t.shape, box);
    a->lower = c.ints;
    a->distributed = distributed;
    auto it = inputs_->find(c.name);
    if (it != inputs_->end()) {
      const GridBuffer& g = it->second;
      if (g.extents != t.shape)
        throw GridMismatch("input '" + c.name + "' has the wrong extents for its declaration");
      forEachPoint(box, [&](const std::vector<int64_t>& p) { a->data[a->lin(p.data())] = g.data[g.linear(p)]; });
      if (t.rank() == 0) a->data[0] = g.data[0];
    } else if (c.i) {
      throw MissingBinding("dummy argument '" + c.name + "' has no input binding");
    }
    s[c.r].a = a;
    if (collect_ && c.op->parentOp() && c.op->parentOp()->name() == "func.func") entryAllocs_[c.name] = a;
  }

  void parFor(const COp& c, std::vector<Slot>& s) {
    const CRegion& body = c.regions[0];
    const size_t rank = c.box.rank();
    if (c.box.empty()) return;
    // number of steps along dim 0, split across workers
    int64_t n0 = (c.box.extent(0) + c.steps[0] - 1) / c.steps[0];
    auto runRange = [&](std::vector<Slot>& frame, int64_t from, int64_t to) {
      std::vector<int64_t> p(rank);
      for (int64_t k = from; k < to; ++k) {
        p[0] = c.box.lb(0) + k * c.steps[0];
        if (rank == 1) {
          frame[body.args[0]].i = p[0];
          exec(body, frame);
          continue;
        }
        // remaining dims lexicographic, last dim fastest
        for (size_t d = 1; d < rank; ++d) p[d] = c.box.lb(d);
        while (true) {
          for (size_t d = 0; d < rank; ++d) frame[body.args[d]].i = p[d];
          exec(body, frame);
          size_t d = rank - 1;
          while (d >= 1) {
            p[d] += c.steps[d];
            if (p[d] < c.box.ub(d)) break;
            p[d] = c.box.lb(d);
            --d;
          }
          if (d == 0) break;
        }
      }
    };
    if (!pool_ || tInParallel || n0 < 2) {
      runRange(s, 0, n0);
      return;
    }
    int64_t chunks = std::min<int64_t>(pool_->size(), n0);
    pool_->run(chunks, [&](int64_t t) {
      std::vector<Slot> frame = s;
      tInParallel = true;
      try {
        runRange(frame, n0 * t / chunks, n0 * (t + 1) / chunks);
      } catch (...) {
        tInParallel = false;
        throw;
      }
      tInParallel = false;
    });
  }

  /// Array-coordinate region a stencil.load must provide on this rank.
  Bounds rankLoadBox(const COp& c) {
    auto it = loadBox_.find(c.op);
    if (it != loadBox_.end()) return it->second;
    const Operation& load = *c.op;
    const Bounds& interior = plan_->ranks[rank_].interior;
    Bounds box;
    for (auto& use : load.parentRegion()->ops()) {
      if (use->name() != "stencil.apply") continue;
      auto offs = stencil::accessOffsets(*use);
      Bounds pts = lowering::rankApplyBounds(*use, interior);
      if (pts.empty()) continue;
      for (size_t k = 0; k < use->numOperands(); ++k) {
        if (use->operand(k) != load.result()) continue;
        for (const auto& off : offs[k]) {
          IntList shift = c.ints;
          for (size_t d = 0; d < shift.size(); ++d) shift[d] += off[d];
          Bounds part = pts.shifted(shift);
          box = box.rank() == 0 ? part : box.hull(part);
        }
      }
    }
    if (box.rank() == 0) {
      box = load.result()->type.bounds.shifted(c.ints);
      for (size_t d = 0; d < box.rank(); ++d) box[d].ub = box[d].lb;
    }
    loadBox_[c.op] = box;
    return box;
  }

  void stencilLoad(const COp& c, std::vector<Slot>& s) {
    Storage& a = *s[c.in[0]].a;
    requireValid(a);
    Bounds arrBox;
    if (mode_ == Mode::Rank) {
      arrBox = rankLoadBox(c);
    } else {
      arrBox = c.op->result()->type.bounds.shifted(c.ints);
    }
    IntList neg = c.ints;
    for (auto& v : neg) v = -v;
    auto t = std::make_shared<Temp>(arrBox.shifted(neg));
    std::vector<int64_t> q(arrBox.rank());
    forEachPoint(arrBox, [&](const std::vector<int64_t>& p) {
      if (opts_.checked && !a.holds(p.data())) trap("stencil.load", a, p.data());
      for (size_t d = 0; d < p.size(); ++d) q[d] = p[d] - c.ints[d];
      t->data[t->lin(q)] = a.data[a.lin(p.data())];
    });
    s[c.r].t = std::move(t);
  }

  void apply(const COp& c, std::vector<Slot>& s) {
    const Kernel& k = *c.kernel;
    const size_t rank = c.box.rank();
    Bounds pts = mode_ == Mode::Rank ? lowering::rankApplyBounds(*c.op, plan_->ranks[rank_].interior) : c.box;

    std::vector<const Temp*> temps(c.in.size(), nullptr);
    std::vector<double> scalars(c.in.size(), 0.0);
    for (size_t a = 0; a < c.in.size(); ++a) {
      if (c.op->operand(a)->type.isTemp()) temps[a] = s[c.in[a]].t.get();
      else scalars[a] = s[c.in[a]].f;
      if (c.op->operand(a)->type.isTemp() && !temps[a]) throw RuntimeFault("stencil.apply operand has no value");
    }
    std::vector<std::shared_ptr<Temp>> outs;
    for (size_t r = 0; r < c.results.size(); ++r) outs.push_back(std::make_shared<Temp>(pts));

    // per access: constant part of the linear index
    struct Acc {
      const Temp* t;
      int64_t base;
    };
    std::vector<Acc> acc(k.ops.size(), {nullptr, 0});
    for (size_t o = 0; o < k.ops.size(); ++o) {
      const KOp& op = k.ops[o];
      if (op.code != Code::Access) continue;
      const Temp* t = temps[op.a];
      int64_t base = 0;
      for (size_t d = 0; d < rank; ++d) base += (op.off[d] - t->box.lb(d)) * t->stride[d];
      acc[o] = {t, base};
    }

    auto evalRange = [&](int64_t from, int64_t to) {
      // points with the outermost dimension in [from, to)
      if (pts.empty() || from >= to) return;
      Bounds sub = pts;
      sub[rank - 1] = {from, to};
      std::vector<double> fv(static_cast<size_t>(k.slots));
      std::vector<int64_t> iv(static_cast<size_t>(k.slots));
      for (size_t a = 0; a < k.args.size(); ++a) fv[k.args[a]] = scalars[a];
      forEachPoint(sub, [&](const std::vector<int64_t>& p) {
        for (size_t o = 0; o < k.ops.size(); ++o) {
          const KOp& op = k.ops[o];
          switch (op.code) {
            case Code::ConstF: fv[op.r] = op.f; break;
            case Code::ConstI: iv[op.r] = op.i; break;
            case Code::Access: {
              const Temp* t = acc[o].t;
              if (opts_.checked) {
                for (size_t d = 0; d < rank; ++d)
                  if (p[d] + op.off[d] < t->box.lb(d) || p[d] + op.off[d] >= t->box.ub(d))
                    throw TrapOutOfBounds("stencil.access outside its input temp " + t->box.str());
              }
              int64_t l = acc[o].base;
              for (size_t d = 0; d < rank; ++d) l += p[d] * t->stride[d];
              fv[op.r] = t->data[l];
              break;
            }
            case Code::Index: iv[op.r] = p[op.i]; break;
            case Code::AddF: fv[op.r] = fv[op.a] + fv[op.b]; break;
            case Code::SubF: fv[op.r] = fv[op.a] - fv[op.b]; break;
            case Code::MulF: fv[op.r] = fv[op.a] * fv[op.b]; break;
            case Code::DivF: fv[op.r] = fv[op.a] / fv[op.b]; break;
            case Code::PowF: fv[op.r] = std::pow(fv[op.a], fv[op.b]); break;
            case Code::NegF: fv[op.r] = -fv[op.a]; break;
            case Code::AddI: iv[op.r] = iv[op.a] + iv[op.b]; break;
            case Code::SubI: iv[op.r] = iv[op.a] - iv[op.b]; break;
            case Code::MulI: iv[op.r] = iv[op.a] * iv[op.b]; break;
            case Code::DivI:
              if (iv[op.b] == 0) throw RuntimeFault("integer division by zero");
              iv[op.r] = iv[op.a] / iv[op.b];
              break;
            case Code::MinI: iv[op.r] = std::min(iv[op.a], iv[op.b]); break;
            case Code::SiToFp: fv[op.r] = static_cast<double>(iv[op.a]); break;
            default: throw RuntimeFault("unsupported operation in stencil body");
          }
        }
        int64_t l = outs.empty() ? 0 : outs[0]->lin(p);
        for (size_t r = 0; r < outs.size(); ++r) outs[r]->data[l] = fv[k.rets[r]];
      });
    };

    if (pts.empty()) {
      // nothing to evaluate on this rank
    } else if (!pool_ || tInParallel || pts.extent(rank - 1) < 2) {
      evalRange(pts.lb(rank - 1), pts.ub(rank - 1));
    } else {
      int64_t lo = pts.lb(rank - 1), n = pts.extent(rank - 1);
      int64_t chunks = std::min<int64_t>(pool_->size(), n);
      pool_->run(chunks, [&](int64_t t) {
        tInParallel = true;
        try {
          evalRange(lo + n * t / chunks, lo + n * (t + 1) / chunks);
        } catch (...) {
          tInParallel = false;
          throw;
        }
        tInParallel = false;
      });
    }
    for (size_t r = 0; r < outs.size(); ++r) s[c.results[r]].t = std::move(outs[r]);
  }

  void stencilStore(const COp& c, std::vector<Slot>& s) {
    const Temp& t = *s[c.in[0]].t;
    Storage& a = *s[c.in[1]].a;
    Bounds region = c.box.intersect(t.box);
    if (mode_ == Mode::Rank) {
      IntList neg = c.ints;
      for (auto& v : neg) v = -v;
      region = region.intersect(plan_->ranks[rank_].interior.shifted(neg));
    } else if (!t.box.containsBox(c.box)) {
      throw RuntimeFault("stencil.store bounds " + c.box.str() + " exceed the stored temp " + t.box.str());
    }
    std::vector<int64_t> q(region.rank());
    forEachPoint(region, [&](const std::vector<int64_t>& p) {
      for (size_t d = 0; d < p.size(); ++d) q[d] = p[d] + c.ints[d];
      if (opts_.checked && !a.holds(q.data())) trap("stencil.store", a, q.data());
      a.data[a.lin(q.data())] = t.data[t.lin(p)];
    });
  }

  void call(const COp& c, std::vector<Slot>& s) {
    const CFunc* fn = host_.lookup(c.name);
    bool onDevice = false;
    if (!fn && deviceIR_) {
      fn = device_.lookup(c.name);
      onDevice = fn != nullptr;
    }
    if (!fn) throw RuntimeFault("call to unknown function @" + c.name);
    if (onDevice && mode_ == Mode::DeviceSim) {
      for (size_t a = 0; a < c.in.size(); ++a) {
        Storage* st = s[c.in[a]].a;
        if (c.op->operand(a)->type.kind != TypeKind::Ptr || !st) continue;
        if (st->space != Space::Device && !registered_.count(st))
          throw DeviceDataMissing("array '" + st->name + "' is passed to @" + c.name +
                                  " without being registered or copied to the device");
      }
    }
    std::vector<Slot> frame(static_cast<size_t>(fn->slots));
    for (size_t a = 0; a < c.in.size() && a < fn->body.args.size(); ++a) frame[fn->body.args[a]] = s[c.in[a]];
    bool saved = collect_;
    collect_ = false;
    exec(fn->body, frame);
    collect_ = saved;
  }

  // -- halo exchange

  std::vector<double> pack(const Storage& a, const Bounds& box) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(box.cells()));
    forEachPoint(box, [&](const std::vector<int64_t>& p) {
      if (!a.holds(p.data())) throw RuntimeFault("halo message box leaves the sender's storage");
      out.push_back(a.data[a.lin(p.data())]);
    });
    return out;
  }

  void unpack(Storage& a, const Bounds& box, const std::vector<double>& data) {
    if (static_cast<int64_t>(data.size()) != box.cells()) throw RuntimeFault("halo message has the wrong size");
    size_t i = 0;
    forEachPoint(box, [&](const std::vector<int64_t>& p) {
      if (!a.holds(p.data())) throw RuntimeFault("halo message box leaves the receiver's storage");
      a.data[a.lin(p.data())] = data[i++];
    });
  }

  int64_t dynamicTag(const COp& c, int64_t tag) {
    int64_t n = execCount_[&c]++;
    return tag + n * lowering::haloTagStride(*plan_);
  }

  void sendDir(const COp& c, Storage& a, int swap, std::array<int, 2> dir, int64_t tag) {
    const auto& me = plan_->ranks[rank_];
    int dst = plan_->rankAt(me.p + dir[0], me.q + dir[1]);
    if (dst < 0) return;
    const lowering::HaloMessage* msg = plan_->message(swap, rank_, dst);
    if (!msg) return;
    int64_t t = tag + (rank_ == 0 ? opts_.faultTagOffset : 0);
    (void)c;
    net_->send(rank_, dst, t, pack(a, msg->box));
  }

  void recvDir(Storage& a, int swap, std::array<int, 2> from, int64_t tag) {
    const auto& me = plan_->ranks[rank_];
    int src = plan_->rankAt(me.p + from[0], me.q + from[1]);
    if (src < 0) return;
    const lowering::HaloMessage* msg = plan_->message(swap, src, rank_);
    if (!msg) return;
    unpack(a, msg->box, net_->recv(rank_, src, tag));
  }

  void haloSwap(const COp& c, std::vector<Slot>& s) {
    if (mode_ != Mode::Rank || !plan_ || plan_->numRanks() == 1) return;
    Storage& a = *s[c.in[0]].a;
    int swap = static_cast<int>(c.i);
    int64_t n = execCount_[&c]++;
    int64_t stride = lowering::haloTagStride(*plan_);
    for (const auto& dir : lowering::exchangeDirections())
      sendDir(c, a, swap, dir, lowering::haloTag(swap, dir) + n * stride);
    for (const auto& dir : lowering::exchangeDirections())
      recvDir(a, swap, {-dir[0], -dir[1]}, lowering::haloTag(swap, dir) + n * stride);
  }

  void sendOp(const COp& c, std::vector<Slot>& s) {
    if (mode_ != Mode::Rank || !plan_) return;
    int64_t tag = dynamicTag(c, static_cast<int64_t>(c.f));
    sendDir(c, *s[c.in[0]].a, static_cast<int>(c.i), {static_cast<int>(c.ints[0]), static_cast<int>(c.ints[1])},
            tag);
  }

  void recvOp(const COp& c, std::vector<Slot>& s) {
    if (mode_ != Mode::Rank || !plan_) return;
    int64_t tag = dynamicTag(c, static_cast<int64_t>(c.f));
    recvDir(*s[c.in[0]].a, static_cast<int>(c.i), {static_cast<int>(c.ints[0]), static_cast<int>(c.ints[1])}, tag);
  }

  const IRModule& hostIR_;
  const IRModule* deviceIR_;
  ExecOptions opts_;
  Mode mode_;
  CModule host_;
  CModule device_;
  std::unique_ptr<ThreadPool> pool_;
  const GridMap* inputs_ = nullptr;
  std::mutex storeMu_;
  std::vector<std::unique_ptr<Storage>> owned_;
  std::set<const Storage*> registered_;
  std::map<std::string, Storage*> entryAllocs_;
  bool collect_ = false;

  const lowering::DecompositionPlan* plan_ = nullptr;
  int rank_ = 0;
  Network* net_ = nullptr;
  std::map<const Operation*, Bounds> loadBox_;
  std::map<const COp*, int64_t> execCount_;
};

GridBuffer toGrid(const Storage& s) {
  GridBuffer g(s.shape);
  g.lower = s.lower;
  if (s.shape.empty()) {
    g.data[0] = s.data[0];
    return g;
  }
  forEachPoint(s.box, [&](const std::vector<int64_t>& p) { g.data[g.linear(p)] = s.data[s.lin(p.data())]; });
  return g;
}

GridMap runMachine(Machine& m, const GridMap& inputs) {
  GridMap out;
  for (Storage* s : m.run(inputs)) out[s->name] = toGrid(*s);
  return out;
}

}  // namespace

GridMap runSerial(const IRModule& host, const IRModule* device, const GridMap& inputs, const ExecOptions& opts) {
  ExecOptions o = opts;
  o.threads = 1;
  Machine m(host, device, o, Mode::Serial);
  return runMachine(m, inputs);
}

GridMap runThreaded(const IRModule& host, const IRModule* device, const GridMap& inputs, int threads,
                    const ExecOptions& opts) {
  if (threads < 1) throw UsageError("thread count must be at least 1");
  ExecOptions o = opts;
  o.threads = threads;
  Machine m(host, device, o, Mode::Serial);
  return runMachine(m, inputs);
}

DeviceRun runDeviceSim(const IRModule& host, const IRModule& device, const GridMap& inputs, const ExecOptions& opts) {
  Machine m(host, &device, opts, Mode::DeviceSim);
  DeviceRun r;
  r.outputs = runMachine(m, inputs);
  r.stats = m.stats;
  return r;
}

GridMap runRanksSim(const IRModule& host, const IRModule& device, const GridMap& inputs,
                    const lowering::DecompositionPlan& plan, const ExecOptions& opts) {
  const int n = plan.numRanks();
  for (const auto& fn : device.functions())
    if (const IntList* grid = fn->attr<IntList>("grid"))
      if ((*grid)[0] != plan.P || (*grid)[1] != plan.Q)
        throw GridMismatch("device module was decomposed for a " + std::to_string((*grid)[0]) + "x" +
                           std::to_string((*grid)[1]) + " grid, not " + std::to_string(plan.P) + "x" +
                           std::to_string(plan.Q));
  Network net(n);
  std::vector<std::unique_ptr<Machine>> machines;
  std::vector<std::vector<Storage*>> results(static_cast<size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  ExecOptions o = opts;
  o.threads = 1;
  for (int r = 0; r < n; ++r) {
    machines.push_back(std::make_unique<Machine>(host, &device, o, Mode::Rank));
    machines.back()->setRank(&plan, r, &net);
  }
  std::vector<std::thread> threads;
  for (int r = 0; r < n; ++r)
    threads.emplace_back([&, r] {
      try {
        results[r] = machines[r]->run(inputs);
      } catch (...) {
        errors[r] = std::current_exception();
      }
      net.finish();
    });
  for (auto& t : threads) t.join();
  // a real failure outranks the deadlock it causes on the other ranks
  std::exception_ptr first;
  for (auto& e : errors) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const DeadlockDetected&) {
      if (!first) first = e;
    } catch (...) {
      std::rethrow_exception(e);
    }
  }
  if (first) std::rethrow_exception(first);

  GridMap out;
  for (int r = 0; r < n; ++r) {
    for (Storage* s : results[r]) {
      if (!s->distributed) {
        if (r == 0) out[s->name] = toGrid(*s);
        continue;
      }
      auto it = out.find(s->name);
      if (it == out.end()) {
        GridBuffer g(s->shape);
        g.lower = s->lower;
        it = out.emplace(s->name, std::move(g)).first;
      }
      const Bounds& interior = plan.ranks[r].interior;
      forEachPoint(interior, [&](const std::vector<int64_t>& p) {
        it->second.data[it->second.linear(p)] = s->data[s->lin(p.data())];
      });
    }
  }
  return out;
}

}  // namespace sf::runtime
