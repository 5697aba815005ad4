#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "stencilforge/bench.hpp"
#include "stencilforge/discovery.hpp"
#include "stencilforge/driver.hpp"
#include "stencilforge/frontend.hpp"
#include "stencilforge/stencil.hpp"

namespace sf::driver {

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct PassInfo {
  const char* name;
  int stage;
  std::vector<std::string> options;
};

const std::vector<PassInfo>& passTable() {
  static const std::vector<PassInfo> t = {
      {"discover-stencils", 0, {}},
      {"merge-stencils", 1, {}},
      {"extract-stencils", 2, {}},
      {"stencil-to-loops", 3, {"mode"}},
      {"lower-dmp", 3, {"grid"}},
      {"tile-parallel", 4, {"sizes"}},
      {"dmp-to-msg", 4, {}},
      {"device-data", 5, {"strategy"}},
  };
  return t;
}

const PassInfo* passInfo(const std::string& name) {
  for (const auto& p : passTable())
    if (name == p.name) return &p;
  return nullptr;
}

int64_t parseInt(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("-0123456789") != std::string::npos || s.size() > 18)
    throw PipelineParseError("bad integer '" + s + "' in " + what);
  return std::stoll(s);
}

std::vector<int64_t> parseIntList(const std::string& s, const std::string& what) {
  std::vector<int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parseInt(trim(item), what));
  if (out.empty()) throw PipelineParseError("empty list in " + what);
  return out;
}

std::pair<int, int> parseGrid(const std::string& s) {
  auto x = s.find('x');
  if (x == std::string::npos) throw PipelineParseError("process grid '" + s + "' is not of the form PxQ");
  return {static_cast<int>(parseInt(s.substr(0, x), "grid")), static_cast<int>(parseInt(s.substr(x + 1), "grid"))};
}

void validateOrder(const Pipeline& p) {
  std::set<std::string> seen;
  int stage = -1;
  std::string prev;
  for (const auto& pass : p.passes) {
    const PassInfo* info = passInfo(pass.name);
    if (seen.count(pass.name)) throw StageOrderError("pass '" + pass.name + "' appears more than once");
    if (info->stage < stage) throw StageOrderError("'" + pass.name + "' cannot run after '" + prev + "'");
    seen.insert(pass.name);
    stage = info->stage;
    prev = pass.name;
  }
  auto has = [&](const char* n) { return seen.count(n) != 0; };
  if (has("lower-dmp") && has("stencil-to-loops"))
    throw StageOrderError("lower-dmp keeps stencil ops for the rank executor and excludes stencil-to-loops");
  if (has("lower-dmp") && has("tile-parallel")) throw StageOrderError("tile-parallel has no loops to tile after lower-dmp");
  if (has("lower-dmp") && has("device-data")) throw StageOrderError("device-data cannot be combined with lower-dmp");
}

void verifyOrThrow(const Artifacts& a, const std::string& after) {
  std::vector<std::string> errs = verify(a.host, a.device ? &*a.device : nullptr);
  if (a.device) {
    auto d = verify(*a.device);
    errs.insert(errs.end(), d.begin(), d.end());
  }
  auto s = stencil::verifyStencil(a.host);
  errs.insert(errs.end(), s.begin(), s.end());
  if (a.device) {
    s = stencil::verifyStencil(*a.device);
    errs.insert(errs.end(), s.begin(), s.end());
  }
  if (!errs.empty()) throw VerificationError("IR invalid after " + after + ": " + errs.front());
}

void updateMetrics(Artifacts& a) {
  const IRModule& m = a.device ? *a.device : a.host;
  if (!walk(m, "stencil.apply").empty()) {
    a.cells = bench::stencilCells(m);
    a.flops = bench::flopsPerCell(m);
  }
}

std::pair<int, int> moduleGrid(const IRModule& device) {
  for (const auto& fn : device.functions())
    if (const IntList* g = fn->attr<IntList>("grid")) return {static_cast<int>((*g)[0]), static_cast<int>((*g)[1])};
  return {1, 1};
}

void requireDevice(const Artifacts& a, const std::string& pass) {
  if (!a.device) throw StageOrderError(pass + " needs extract-stencils to run first");
}

void applyPass(Artifacts& a, const PassSpec& pass) {
  const std::string& n = pass.name;
  auto opt = [&](const std::string& k, const std::string& def) {
    auto it = pass.options.find(k);
    return it == pass.options.end() ? def : it->second;
  };
  if (n == "discover-stencils" || n == "merge-stencils" || n == "extract-stencils") {
    if (a.device) throw StageOrderError(n + " cannot run after extract-stencils");
    if (n == "discover-stencils") {
      discovery::DiscoveryReport rep;
      a.host = discovery::discoverStencils(std::move(a.host), &rep);
      a.diagnostics.insert(a.diagnostics.end(), rep.diagnostics.begin(), rep.diagnostics.end());
    } else if (n == "merge-stencils") {
      a.host = discovery::mergeStencils(std::move(a.host));
    } else {
      auto ex = discovery::extractStencilModule(std::move(a.host));
      a.host = std::move(ex.host);
      a.device = std::move(ex.device);
    }
    return;
  }
  IRModule& target = a.device ? *a.device : a.host;
  if (n == "stencil-to-loops") {
    std::string mode = opt("mode", "cpu");
    if (mode != "cpu" && mode != "gpu") throw PipelineParseError("stencil-to-loops mode must be cpu or gpu, got '" + mode + "'");
    if (!walk(target, "dmp.halo_swap").empty() || !walk(target, "msg.send").empty())
      throw StageOrderError("stencil-to-loops cannot lower a module decomposed by lower-dmp");
    target = lowering::lowerStencilToLoops(std::move(target), mode == "cpu" ? lowering::LoopMode::Cpu
                                                                            : lowering::LoopMode::Gpu);
  } else if (n == "tile-parallel") {
    target = lowering::tileParallelLoops(std::move(target), parseIntList(opt("sizes", "32,32,1"), "tile-parallel sizes"));
  } else if (n == "device-data") {
    requireDevice(a, n);
    std::string s = opt("strategy", "optimized");
    if (s != "naive" && s != "optimized")
      throw PipelineParseError("device-data strategy must be naive or optimized, got '" + s + "'");
    auto pr = lowering::placeDeviceData(std::move(a.host), std::move(*a.device),
                                        s == "naive" ? lowering::Placement::Naive : lowering::Placement::Optimized);
    a.host = std::move(pr.host);
    a.device = std::move(pr.device);
  } else if (n == "lower-dmp") {
    requireDevice(a, n);
    if (!walk(*a.device, "par.for").empty()) throw StageOrderError("lower-dmp needs stencil ops, not lowered loops");
    auto [P, Q] = parseGrid(opt("grid", "1x1"));
    a.device = lowering::lowerToDmp(std::move(*a.device), P, Q).module;
  } else if (n == "dmp-to-msg") {
    requireDevice(a, n);
    auto [P, Q] = moduleGrid(*a.device);
    lowering::DecompositionPlan plan = lowering::planDecomposition(*a.device, P, Q);
    a.device = lowering::lowerDmpToMsg(std::move(*a.device), plan);
  }
}

}  // namespace

const std::vector<std::string>& passNames() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& p : passTable()) v.push_back(p.name);
    return v;
  }();
  return names;
}

Pipeline parsePipeline(std::string_view text) {
  Pipeline p;
  std::vector<std::string> items;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '{') ++depth;
    if (c == '}' && --depth < 0) throw PipelineParseError("unbalanced '}' in pipeline");
    if (c == ',' && depth == 0) {
      items.push_back(cur);
      cur.clear();
      continue;
    }
    cur += c;
  }
  if (depth != 0) throw PipelineParseError("unbalanced '{' in pipeline");
  items.push_back(cur);
  if (items.size() == 1 && trim(items[0]).empty()) return p;

  for (const std::string& raw : items) {
    std::string item = trim(raw);
    if (item.empty()) throw PipelineParseError("empty pass name in pipeline");
    PassSpec spec;
    auto brace = item.find('{');
    spec.name = trim(item.substr(0, brace));
    if (spec.name.empty()) throw PipelineParseError("empty pass name in pipeline");
    for (char c : spec.name)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-')
        throw PipelineParseError("bad pass name '" + spec.name + "'");
    const PassInfo* info = passInfo(spec.name);
    if (!info) throw UnknownPass("unknown pass '" + spec.name + "'");
    if (brace != std::string::npos) {
      if (item.back() != '}') throw PipelineParseError("text after options of '" + spec.name + "'");
      std::stringstream opts(item.substr(brace + 1, item.size() - brace - 2));
      std::string kv;
      while (opts >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size())
          throw PipelineParseError("option '" + kv + "' of '" + spec.name + "' is not key=value");
        std::string key = kv.substr(0, eq);
        if (std::find(info->options.begin(), info->options.end(), key) == info->options.end())
          throw PipelineParseError("pass '" + spec.name + "' has no option '" + key + "'");
        if (spec.options.count(key)) throw PipelineParseError("option '" + key + "' given twice");
        spec.options[key] = kv.substr(eq + 1);
      }
    }
    if (spec.name == "tile-parallel" && spec.options.count("sizes"))
      parseIntList(spec.options["sizes"], "tile-parallel sizes");
    if (spec.name == "lower-dmp" && spec.options.count("grid")) parseGrid(spec.options["grid"]);
    p.passes.push_back(std::move(spec));
  }
  validateOrder(p);
  return p;
}

std::string pipelineStr(const Pipeline& p) {
  std::string out;
  for (const auto& pass : p.passes) {
    if (!out.empty()) out += ",";
    out += pass.name;
    if (pass.options.empty()) continue;
    out += "{";
    bool first = true;
    for (const auto& [k, v] : pass.options) {
      out += (first ? "" : " ") + k + "=" + v;
      first = false;
    }
    out += "}";
  }
  return out;
}

Target parseTarget(const std::string& name) {
  if (name == "serial") return Target::Serial;
  if (name == "threads") return Target::Threads;
  if (name == "device-sim") return Target::DeviceSim;
  if (name == "ranks-sim") return Target::RanksSim;
  throw UsageError("unknown target '" + name + "' (serial, threads, device-sim, ranks-sim)");
}

const char* targetName(Target t) {
  switch (t) {
    case Target::Serial: return "serial";
    case Target::Threads: return "threads";
    case Target::DeviceSim: return "device-sim";
    case Target::RanksSim: return "ranks-sim";
  }
  return "serial";
}

Pipeline defaultPipeline(const PipelineConfig& cfg) {
  std::string text = "discover-stencils,merge-stencils,extract-stencils,";
  std::string sizes;
  for (int64_t s : cfg.tileSizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
  switch (cfg.target) {
    case Target::Serial:
    case Target::Threads: text += "stencil-to-loops{mode=cpu}"; break;
    case Target::DeviceSim:
      text += "stencil-to-loops{mode=gpu},tile-parallel{sizes=" + sizes + "},device-data{strategy=" + cfg.deviceData + "}";
      break;
    case Target::RanksSim:
      text += "lower-dmp{grid=" + std::to_string(cfg.P) + "x" + std::to_string(cfg.Q) + "},dmp-to-msg";
      break;
  }
  return parsePipeline(text);
}

Artifacts runPipeline(Artifacts a, const Pipeline& p, const DumpHook& dump) {
  validateOrder(p);
  updateMetrics(a);
  for (const auto& pass : p.passes) {
    applyPass(a, pass);
    verifyOrThrow(a, pass.name);
    updateMetrics(a);
    if (dump) dump(pass.name, a);
  }
  return a;
}

std::string printArtifacts(const Artifacts& a) {
  std::string out = printIR(a.host);
  if (a.device) out += printIR(*a.device);
  return out;
}

Artifacts parseArtifacts(std::string_view text) {
  auto modules = parseIRModules(text);
  Artifacts a;
  bool hostSet = false;
  for (auto& m : modules) {
    if (m.name() == "device") {
      if (a.device) throw IRParseError("more than one device module");
      a.device = std::move(m);
    } else {
      if (hostSet) throw IRParseError("more than one host module");
      a.host = std::move(m);
      hostSet = true;
    }
  }
  if (!hostSet) throw IRParseError("no host module");
  std::vector<std::string> errs = verify(a.host, a.device ? &*a.device : nullptr);
  if (a.device) {
    auto d = verify(*a.device);
    errs.insert(errs.end(), d.begin(), d.end());
  }
  if (!errs.empty()) throw IRParseError("input IR does not verify: " + errs.front());
  updateMetrics(a);
  return a;
}

Artifacts loadInput(const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".sir") {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parseArtifacts(ss.str());
  }
  frontend::SourceProgram src = frontend::readSource(path);
  Artifacts a;
  a.host = frontend::compileSource(src);
  return a;
}

void wrapIterations(IRModule& host, int64_t n) {
  if (host.empty()) return;
  Operation& fn = *host.functions().front();
  Region& body = fn.region();
  std::vector<std::unique_ptr<Operation>> moved;
  std::vector<Operation*> toMove;
  for (auto& op : body.ops())
    if (op->name() != "mem.alloc") toMove.push_back(op.get());
  for (Operation* op : toMove) moved.push_back(body.remove(op));
  OpBuilder b = OpBuilder::atEnd(body);
  Value* lb = b.constantIndex(1);
  Value* ub = b.constantIndex(n);
  Value* step = b.constantIndex(1);
  Operation* loop = b.create("loop.for", {lb, ub, step}, {}, {}, 1);
  loop->loc = fn.loc;
  loop->region().addArgument(Type::index());
  for (auto& op : moved) loop->region().append(std::move(op));
}

std::map<std::string, std::vector<int64_t>> entryArrays(const IRModule& host) {
  std::map<std::string, std::vector<int64_t>> out;
  if (host.empty()) return out;
  for (const auto& op : host.functions().front()->region().ops())
    if (op->name() == "mem.alloc") out[op->strAttr("name")] = op->result()->type.shape;
  return out;
}

runtime::GridMap bindInputs(const IRModule& host, const std::vector<std::string>& bindings) {
  auto arrays = entryArrays(host);
  runtime::GridMap out;
  for (const std::string& b : bindings) {
    auto eq = b.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("grid binding '" + b + "' is not name=init");
    std::string name = b.substr(0, eq), init = b.substr(eq + 1);
    auto it = arrays.find(name);
    if (it == arrays.end()) throw GridMismatch("no array named '" + name + "' in the entry function");
    runtime::GridBuffer g;
    if (init.size() >= 5 && init.substr(init.size() - 5) == ".grid") {
      g = runtime::readGrid(init);
      if (g.extents != it->second) throw GridMismatch("grid file '" + init + "' does not match the extents of '" + name + "'");
    } else {
      g = runtime::makeGrid(it->second, init);
    }
    out[name] = std::move(g);
  }
  return out;
}

ExecResult execute(const Artifacts& a, const runtime::GridMap& inputs, const ExecConfig& cfg) {
  runtime::ExecOptions o;
  o.checked = cfg.checked;
  o.threads = cfg.threads;
  o.faultTagOffset = cfg.faultTagOffset;
  const IRModule* dev = a.device ? &*a.device : nullptr;
  ExecResult r;
  switch (cfg.target) {
    case Target::Serial: r.outputs = runtime::runSerial(a.host, dev, inputs, o); break;
    case Target::Threads:
      if (cfg.threads < 1) throw UsageError("thread count must be at least 1");
      r.outputs = runtime::runThreaded(a.host, dev, inputs, cfg.threads, o);
      break;
    case Target::DeviceSim: {
      IRModule empty("device");
      if (dev && !walk(a.host, "func.call").empty() && walk(a.host, "dev.*").empty())
        throw UsageError("the device-sim target needs the device-data pass");
      auto d = runtime::runDeviceSim(a.host, dev ? *dev : empty, inputs, o);
      r.outputs = std::move(d.outputs);
      r.stats = std::move(d.stats);
      break;
    }
    case Target::RanksSim: {
      if (!dev) throw UsageError("the ranks-sim target needs extract-stencils and lower-dmp");
      if (!walk(*dev, "par.for").empty()) throw UsageError("the ranks-sim target cannot run loop-lowered device code");
      auto [P, Q] = moduleGrid(*dev);
      auto plan = lowering::planDecomposition(*dev, P, Q);
      r.outputs = runtime::runRanksSim(a.host, *dev, inputs, plan, o);
      break;
    }
  }
  return r;
}

}  // namespace sf::driver
