#include "generator.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <random>

namespace sf::testkit {

namespace {

const char* kLiterals[] = {"0.5d0", "0.25d0", "1.5d0", "2.0d0", "0.1d0", "0.3d0", "3.0d0", "0.125d0", "0.7d0"};
const char* kIndexVars[] = {"i", "j", "k"};

double literalValue(const std::string& lit) {
  std::string s = lit;
  std::replace(s.begin(), s.end(), 'd', 'e');
  return std::strtod(s.c_str(), nullptr);
}

class Gen {
 public:
  Gen(uint64_t seed, const GenLimits& lim) : rng_(seed), lim_(lim) {}

  GenProgram run(uint64_t seed) {
    GenProgram p;
    p.seed = seed;
    p.rank = pick(1, lim_.maxRank);
    maxOff_ = pick(0, static_cast<int>(lim_.maxOffset));
    for (int d = 0; d < p.rank; ++d) {
      int parts = p.rank == 1 ? 4 : (d < 2 ? 2 : 1);
      int64_t minExt = std::max<int64_t>(2 * maxOff_ + 1, parts * std::max<int64_t>(maxOff_, 1));
      minExt = std::min(minExt, lim_.maxExtent);
      p.extents.push_back(pick(minExt, lim_.maxExtent));
    }
    int narrays = pick(1, lim_.maxArrays);
    for (int a = 0; a < narrays; ++a) p.arrays.push_back(std::string(1, static_cast<char>('a' + a)));
    int nparams = pick(0, 2);
    for (int k = 0; k < nparams; ++k) {
      std::string lit = kLiterals[pick(0, 8)];
      p.params.push_back({"c" + std::to_string(k), literalValue(lit)});
      p.paramLiterals.push_back(lit);
    }
    nparams_ = nparams;
    narrays_ = narrays;
    rank_ = p.rank;

    int nnests = pick(1, lim_.maxNests);
    // shared margins make adjacent nests fusable
    std::vector<int64_t> sharedLo(p.rank), sharedHi(p.rank);
    for (int d = 0; d < p.rank; ++d) {
      sharedLo[d] = maxOff_ + pick(0, 1);
      sharedHi[d] = maxOff_ + pick(0, 1);
    }
    for (int n = 0; n < nnests; ++n) {
      GenNest nest;
      nest.target = pick(0, narrays - 1);
      bool shared = coin(0.6);
      for (int d = 0; d < p.rank; ++d) {
        int64_t mlo = shared ? sharedLo[d] : maxOff_ + pick(0, 2);
        int64_t mhi = shared ? sharedHi[d] : maxOff_ + pick(0, 2);
        int64_t lo = 1 + mlo, hi = p.extents[d] - mhi;
        if (hi < lo) {
          lo = 1 + maxOff_;
          hi = p.extents[d] - maxOff_;
        }
        nest.lo.push_back(lo);
        nest.hi.push_back(hi);
      }
      nest.order.resize(p.rank);
      std::iota(nest.order.begin(), nest.order.end(), 0);
      std::shuffle(nest.order.begin(), nest.order.end(), rng_);
      reads_ = 0;
      nest.rhs = expr(0);
      if (reads_ == 0) {
        auto b = std::make_unique<GenExpr>();
        b->kind = GenExpr::Bin;
        b->op = '+';
        b->lhs = read();
        b->rhs = std::move(nest.rhs);
        nest.rhs = std::move(b);
      }
      p.nests.push_back(std::move(nest));
    }
    p.source = print(p);
    return p;
  }

 private:
  int64_t pick(int64_t lo, int64_t hi) { return std::uniform_int_distribution<int64_t>(lo, hi)(rng_); }
  int pick(int lo, int hi) { return static_cast<int>(std::uniform_int_distribution<int>(lo, hi)(rng_)); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }

  std::unique_ptr<GenExpr> read() {
    auto e = std::make_unique<GenExpr>();
    e->kind = GenExpr::Read;
    e->array = pick(0, narrays_ - 1);
    for (int d = 0; d < rank_; ++d) e->offset.push_back(pick(-maxOff_, maxOff_));
    ++reads_;
    return e;
  }

  std::unique_ptr<GenExpr> leaf() {
    double r = std::uniform_real_distribution<double>(0, 1)(rng_);
    if (r < 0.7) return read();
    auto e = std::make_unique<GenExpr>();
    if (r < 0.9 || nparams_ == 0) {
      e->kind = GenExpr::Const;
      e->literal = kLiterals[pick(0, 8)];
      e->value = literalValue(e->literal);
    } else {
      e->kind = GenExpr::Param;
      e->param = pick(0, nparams_ - 1);
    }
    return e;
  }

  std::unique_ptr<GenExpr> expr(int depth) {
    if (depth >= 3 || (depth > 0 && coin(0.35))) return leaf();
    auto e = std::make_unique<GenExpr>();
    e->kind = GenExpr::Bin;
    double r = std::uniform_real_distribution<double>(0, 1)(rng_);
    e->op = r < 0.4 ? '+' : r < 0.65 ? '-' : r < 0.9 ? '*' : '/';
    e->lhs = expr(depth + 1);
    if (e->op == '/') {
      e->rhs = std::make_unique<GenExpr>();
      e->rhs->kind = GenExpr::Const;
      e->rhs->literal = kLiterals[pick(0, 8)];
      e->rhs->value = literalValue(e->rhs->literal);
    } else {
      e->rhs = expr(depth + 1);
    }
    return e;
  }

  std::string index(int d, int64_t off) const {
    std::string s = kIndexVars[d];
    if (off > 0) s += "+" + std::to_string(off);
    if (off < 0) s += "-" + std::to_string(-off);
    return s;
  }

  std::string printExpr(const GenProgram& p, const GenExpr& e) const {
    switch (e.kind) {
      case GenExpr::Read: {
        std::string s = p.arrays[e.array] + "(";
        for (int d = 0; d < p.rank; ++d) s += (d ? "," : "") + index(d, e.offset[d]);
        return s + ")";
      }
      case GenExpr::Const: return e.literal;
      case GenExpr::Param: return p.params[e.param].first;
      case GenExpr::Bin:
        return "(" + printExpr(p, *e.lhs) + " " + std::string(1, e.op) + " " + printExpr(p, *e.rhs) + ")";
    }
    return "";
  }

  std::string print(const GenProgram& p) const {
    std::string s = "program gen" + std::to_string(p.seed) + "\n  implicit none\n";
    for (size_t k = 0; k < p.params.size(); ++k)
      s += "  real(kind=8), parameter :: " + p.params[k].first + " = " + p.paramLiterals[k] + "\n";
    s += "  real(kind=8), dimension(";
    for (int d = 0; d < p.rank; ++d) s += (d ? "," : "") + std::to_string(p.extents[d]);
    s += ") :: ";
    for (size_t a = 0; a < p.arrays.size(); ++a) s += (a ? ", " : "") + p.arrays[a];
    s += "\n  integer :: ";
    for (int d = 0; d < p.rank; ++d) s += std::string(d ? ", " : "") + kIndexVars[d];
    s += "\n";
    for (const auto& n : p.nests) {
      std::string indent = "  ";
      for (int d : n.order) {
        s += indent + "do " + kIndexVars[d] + " = " + std::to_string(n.lo[d]) + ", " + std::to_string(n.hi[d]) + "\n";
        indent += "  ";
      }
      s += indent + p.arrays[n.target] + "(";
      for (int d = 0; d < p.rank; ++d) s += (d ? "," : "") + std::string(kIndexVars[d]);
      s += ") = " + printExpr(p, *n.rhs) + "\n";
      for (size_t d = 0; d < n.order.size(); ++d) {
        indent.resize(indent.size() - 2);
        s += indent + "end do\n";
      }
    }
    s += "end program gen" + std::to_string(p.seed) + "\n";
    return s;
  }

  std::mt19937_64 rng_;
  GenLimits lim_;
  int64_t maxOff_ = 0;
  int nparams_ = 0;
  int narrays_ = 1;
  int rank_ = 1;
  int reads_ = 0;
};

double eval(const GenProgram& p, const GenExpr& e, const std::vector<runtime::GridBuffer>& snap,
            const std::vector<int64_t>& pt) {
  switch (e.kind) {
    case GenExpr::Read: {
      std::vector<int64_t> q(pt.size());
      for (size_t d = 0; d < pt.size(); ++d) q[d] = pt[d] + e.offset[d];
      return snap[e.array].at(q);
    }
    case GenExpr::Const: return e.value;
    case GenExpr::Param: return p.params[e.param].second;
    case GenExpr::Bin: {
      double l = eval(p, *e.lhs, snap, pt);
      double r = eval(p, *e.rhs, snap, pt);
      switch (e.op) {
        case '+': return l + r;
        case '-': return l - r;
        case '*': return l * r;
        default: return l / r;
      }
    }
  }
  return 0;
}

}  // namespace

GenProgram generateProgram(uint64_t seed, const GenLimits& limits) { return Gen(seed, limits).run(seed); }

runtime::GridMap programInputs(const GenProgram& p) {
  runtime::GridMap in;
  for (size_t a = 0; a < p.arrays.size(); ++a)
    in[p.arrays[a]] = runtime::makeGrid(p.extents, "seeded:" + std::to_string(p.seed * 16 + a));
  return in;
}

runtime::GridMap evaluateProgram(const GenProgram& p, const runtime::GridMap& inputs, int sweeps) {
  std::vector<runtime::GridBuffer> cur;
  for (const auto& name : p.arrays) {
    auto it = inputs.find(name);
    cur.push_back(it != inputs.end() ? it->second : runtime::GridBuffer(p.extents));
  }
  for (int s = 0; s < sweeps; ++s)
    for (const auto& n : p.nests) {
      std::vector<runtime::GridBuffer> snap = cur;
      std::vector<int64_t> pt(p.rank);
      // 0-based point, walked with dimension 0 fastest
      for (int d = 0; d < p.rank; ++d) pt[d] = n.lo[d] - 1;
      while (true) {
        cur[n.target].at(pt) = eval(p, *n.rhs, snap, pt);
        int d = 0;
        for (; d < p.rank; ++d) {
          if (++pt[d] <= n.hi[d] - 1) break;
          pt[d] = n.lo[d] - 1;
        }
        if (d == p.rank) break;
      }
    }
  runtime::GridMap out;
  for (size_t a = 0; a < p.arrays.size(); ++a) {
    out[p.arrays[a]] = std::move(cur[a]);
    out[p.arrays[a]].lower.assign(p.rank, 1);
  }
  return out;
}

}  // namespace sf::testkit
