#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stencilforge/runtime.hpp"

namespace sf::runtime {

namespace {

constexpr char kMagic[12] = {'S', 'T', 'E', 'N', 'C', 'I', 'L', 'F', 'O', 'R', 'G', 'E'};
constexpr uint32_t kVersion = 1;

template <typename T>
void putLE(std::string& out, T v) {
  uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(T));
  for (size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

template <typename T>
T getLE(const std::string& in, size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw GridFormatError("truncated grid file");
  uint64_t bits = 0;
  for (size_t i = 0; i < sizeof(T); ++i) bits |= uint64_t{static_cast<unsigned char>(in[pos + i])} << (8 * i);
  pos += sizeof(T);
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

}  // namespace

GridBuffer::GridBuffer(std::vector<int64_t> ext, double fill) : extents(std::move(ext)) {
  lower.assign(extents.size(), 1);
  data.assign(static_cast<size_t>(size()), fill);
}

int64_t GridBuffer::size() const {
  int64_t n = 1;
  for (int64_t e : extents) n *= e;
  return n;
}

int64_t GridBuffer::linear(const std::vector<int64_t>& index) const {
  int64_t lin = 0, stride = 1;
  for (size_t d = 0; d < extents.size(); ++d) {
    lin += index[d] * stride;
    stride *= extents[d];
  }
  return lin;
}

bool bitwiseEqual(const GridBuffer& a, const GridBuffer& b) {
  return a.extents == b.extents && a.data.size() == b.data.size() &&
         std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

bool bitwiseEqual(const GridMap& a, const GridMap& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, g] : a) {
    auto it = b.find(name);
    if (it == b.end() || !bitwiseEqual(g, it->second)) return false;
  }
  return true;
}

uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

GridBuffer makeGrid(const std::vector<int64_t>& extents, const std::string& init) {
  GridBuffer g(extents);
  if (init == "zeros") return g;
  if (init == "ones") {
    std::fill(g.data.begin(), g.data.end(), 1.0);
    return g;
  }
  if (init == "gradient") {
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] = static_cast<double>(i);
    return g;
  }
  if (init.rfind("seeded:", 0) == 0) {
    std::string digits = init.substr(7);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
      throw GridFormatError("bad seed in initializer '" + init + "'");
    uint64_t state = std::stoull(digits);
    for (double& v : g.data) v = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
    return g;
  }
  throw GridFormatError("unknown grid initializer '" + init + "'");
}

std::string encodeGrid(const GridBuffer& g) {
  std::string out(kMagic, sizeof(kMagic));
  putLE<uint32_t>(out, kVersion);
  putLE<uint32_t>(out, static_cast<uint32_t>(g.extents.size()));
  for (int64_t e : g.extents) putLE<uint64_t>(out, static_cast<uint64_t>(e));
  out.reserve(out.size() + g.data.size() * 8);
  for (double v : g.data) putLE<double>(out, v);
  return out;
}

GridBuffer decodeGrid(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw GridFormatError("not a grid file (bad magic)");
  size_t pos = sizeof(kMagic);
  uint32_t version = getLE<uint32_t>(bytes, pos);
  if (version != kVersion) throw GridFormatError("unsupported grid version " + std::to_string(version));
  uint32_t rank = getLE<uint32_t>(bytes, pos);
  if (rank > 3) throw GridFormatError("grid rank " + std::to_string(rank) + " exceeds 3");
  std::vector<int64_t> extents;
  for (uint32_t d = 0; d < rank; ++d) {
    uint64_t e = getLE<uint64_t>(bytes, pos);
    if (e == 0 || e > (1ULL << 32)) throw GridFormatError("bad grid extent");
    extents.push_back(static_cast<int64_t>(e));
  }
  GridBuffer g(extents);
  if (bytes.size() - pos != g.data.size() * 8)
    throw GridFormatError("grid payload has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                          std::to_string(g.data.size() * 8));
  for (double& v : g.data) v = getLE<double>(bytes, pos);
  return g;
}

void writeGrid(const std::string& path, const GridBuffer& g) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw GridFormatError("cannot write '" + path + "'");
  std::string bytes = encodeGrid(g);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

GridBuffer readGrid(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw GridFormatError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return decodeGrid(ss.str());
}

TransferCounts TransferStats::total() const {
  TransferCounts t;
  for (const auto& [name, c] : arrays) {
    t.registers += c.registers;
    t.allocs += c.allocs;
    t.copyIn += c.copyIn;
    t.copyOut += c.copyOut;
    t.frees += c.frees;
    t.bytesIn += c.bytesIn;
    t.bytesOut += c.bytesOut;
  }
  return t;
}

bool TransferStats::empty() const {
  TransferCounts t = total();
  return t.registers == 0 && t.allocs == 0 && t.copyIn == 0 && t.copyOut == 0 && t.frees == 0;
}

}  // namespace sf::runtime
