#include "cases.hpp"

#include "testing.hpp"

namespace sf::testkit {

namespace {

using runtime::GridBuffer;
using runtime::GridMap;

// Fortran-style 1-based element access on a column-major buffer.
double& f(GridBuffer& g, int64_t i) { return g.at({i - 1}); }
double& f(GridBuffer& g, int64_t i, int64_t j) { return g.at({i - 1, j - 1}); }
double& f(GridBuffer& g, int64_t i, int64_t j, int64_t k) { return g.at({i - 1, j - 1, k - 1}); }

std::string replaceAll(std::string s, const std::string& from, const std::string& to) {
  for (size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

std::vector<HandCase> build() {
  std::vector<HandCase> cases;

  {
    HandCase c;
    c.name = "average-6x6-seeded";
    c.source =
        "program avg\n  real(kind=8), dimension(6,6) :: data\n  integer :: i, j\n"
        "  do i = 2, 5\n    do j = 2, 5\n"
        "      data(j,i) = (data(j,i-1)+data(j,i+1)+data(j-1,i)+data(j+1,i)) * 0.25\n"
        "    end do\n  end do\nend program avg\n";
    c.inputs["data"] = runtime::makeGrid({6, 6}, "seeded:42");
    c.oracle = [](const GridMap& in) {
      GridBuffer s = in.at("data"), out = s;
      for (int64_t i = 2; i <= 5; ++i)
        for (int64_t j = 2; j <= 5; ++j)
          f(out, j, i) = (f(s, j, i - 1) + f(s, j, i + 1) + f(s, j - 1, i) + f(s, j + 1, i)) * 0.25;
      return GridMap{{"data", out}};
    };
    cases.push_back(std::move(c));
  }
  {
    HandCase c;
    c.name = "copy-1d";
    c.source =
        "program copy\n  real(kind=8), dimension(4) :: a, b\n  integer :: i\n"
        "  do i = 1, 4\n    b(i) = a(i)\n  end do\nend program copy\n";
    GridBuffer a({4});
    a.data = {1, 2, 3, 4};
    c.inputs["a"] = a;
    c.oracle = [](const GridMap& in) { return GridMap{{"a", in.at("a")}, {"b", in.at("a")}}; };
    cases.push_back(std::move(c));
  }
  {
    HandCase c;
    c.name = "average-4x4-ones";
    c.source =
        "program avg\n  real(kind=8), dimension(4,4) :: data\n  integer :: i, j\n"
        "  do i = 2, 3\n    do j = 2, 3\n"
        "      data(j,i) = (data(j,i-1)+data(j,i+1)+data(j-1,i)+data(j+1,i)) * 0.25\n"
        "    end do\n  end do\nend program avg\n";
    c.inputs["data"] = runtime::makeGrid({4, 4}, "ones");
    c.oracle = [](const GridMap& in) { return in; };
    cases.push_back(std::move(c));
  }
  {
    HandCase c;
    c.name = "jacobi-3d-8-three-steps";
    c.source = jacobi3dSource(8, 3);
    c.inputs["u"] = runtime::makeGrid({8, 8, 8}, "seeded:5");
    c.oracle = [](const GridMap& in) { return GridMap{{"u", jacobi3dOracle(in.at("u"), 3)}}; };
    cases.push_back(std::move(c));
  }
  {
    HandCase c;
    c.name = "pw-advection-8";
    c.source = replaceAll(readSample("pw_advection.f90"), "n = 32", "n = 8");
    c.inputs["u"] = runtime::makeGrid({8, 8, 8}, "seeded:11");
    c.oracle = [](const GridMap& in) {
      GridBuffer u = in.at("u");
      GridBuffer su({8, 8, 8}), sv({8, 8, 8}), sw({8, 8, 8});
      const double tcx = 0.1, tcy = 0.2, tcz = 0.3;
      auto term = [&](double w, int64_t i, int64_t j, int64_t k, int di, int dj, int dk) {
        double c0 = f(u, i, j, k);
        double lo = f(u, i - di, j - dj, k - dk), hi = f(u, i + di, j + dj, k + dk);
        return w * (lo * (c0 + lo) - hi * (c0 + hi));
      };
      for (int64_t k = 2; k <= 7; ++k)
        for (int64_t j = 2; j <= 7; ++j)
          for (int64_t i = 2; i <= 7; ++i) {
            f(su, i, j, k) = 0.5 * (term(tcx, i, j, k, 1, 0, 0) + term(tcy, i, j, k, 0, 1, 0) +
                                    term(tcz, i, j, k, 0, 0, 1));
            f(sv, i, j, k) = 0.25 * (term(tcy, i, j, k, 1, 0, 0) + term(tcz, i, j, k, 0, 1, 0) +
                                     term(tcx, i, j, k, 0, 0, 1));
            f(sw, i, j, k) = 0.125 * (term(tcz, i, j, k, 1, 0, 0) + term(tcx, i, j, k, 0, 1, 0) +
                                      term(tcy, i, j, k, 0, 0, 1));
          }
      return GridMap{{"u", u}, {"su", su}, {"sv", sv}, {"sw", sw}};
    };
    cases.push_back(std::move(c));
  }
  {
    HandCase c;
    c.name = "wide-1d-smoother";
    c.source =
        "program smooth\n  real(kind=8), dimension(16) :: a, b\n  integer :: i\n"
        "  do i = 3, 14\n    b(i) = 0.25d0*(a(i-2) + 2.0d0*a(i) + a(i+2))\n  end do\nend program smooth\n";
    c.inputs["a"] = runtime::makeGrid({16}, "gradient");
    c.inputs["b"] = runtime::makeGrid({16}, "seeded:3");
    c.oracle = [](const GridMap& in) {
      GridBuffer a = in.at("a"), b = in.at("b");
      for (int64_t i = 3; i <= 14; ++i) f(b, i) = 0.25 * (f(a, i - 2) + 2.0 * f(a, i) + f(a, i + 2));
      return GridMap{{"a", a}, {"b", b}};
    };
    cases.push_back(std::move(c));
  }
  {
    HandCase c;
    c.name = "producer-consumer-2d";
    c.source =
        "program pc\n  real(kind=8), dimension(10,10) :: a, b, c\n  integer :: i, j\n"
        "  do j = 2, 9\n    do i = 2, 9\n      b(i,j) = a(i+1,j) - a(i-1,j)\n    end do\n  end do\n"
        "  do j = 3, 8\n    do i = 2, 9\n      c(i,j) = b(i,j+1) + b(i,j-1)\n    end do\n  end do\n"
        "end program pc\n";
    c.inputs["a"] = runtime::makeGrid({10, 10}, "seeded:8");
    c.oracle = [](const GridMap& in) {
      GridBuffer a = in.at("a"), b({10, 10}), cc({10, 10});
      for (int64_t j = 2; j <= 9; ++j)
        for (int64_t i = 2; i <= 9; ++i) f(b, i, j) = f(a, i + 1, j) - f(a, i - 1, j);
      for (int64_t j = 3; j <= 8; ++j)
        for (int64_t i = 2; i <= 9; ++i) f(cc, i, j) = f(b, i, j + 1) + f(b, i, j - 1);
      return GridMap{{"a", a}, {"b", b}, {"c", cc}};
    };
    cases.push_back(std::move(c));
  }
  {
    HandCase c;
    c.name = "parameter-and-division";
    c.source =
        "program scaled\n  real(kind=8), parameter :: alpha = 0.3d0\n"
        "  real(kind=8), dimension(7,5) :: a, b\n  integer :: i, j\n"
        "  do j = 2, 5\n    do i = 2, 7\n      b(i,j) = (a(i,j) - alpha*a(i-1,j-1)) / 1.5d0\n    end do\n  end do\n"
        "end program scaled\n";
    c.inputs["a"] = runtime::makeGrid({7, 5}, "seeded:21");
    c.oracle = [](const GridMap& in) {
      GridBuffer a = in.at("a"), b({7, 5});
      for (int64_t j = 2; j <= 5; ++j)
        for (int64_t i = 2; i <= 7; ++i) f(b, i, j) = (f(a, i, j) - 0.3 * f(a, i - 1, j - 1)) / 1.5;
      return GridMap{{"a", a}, {"b", b}};
    };
    cases.push_back(std::move(c));
  }
  {
    HandCase c;
    c.name = "subroutine-shifted-bounds";
    c.source =
        "subroutine shift(a, b)\n  implicit none\n  real(kind=8), dimension(0:9, -1:6) :: a, b\n  integer :: i, j\n"
        "  do j = 0, 5\n    do i = 1, 8\n      b(i,j) = a(i-1,j+1) * 2.0d0 + i - j\n    end do\n  end do\n"
        "end subroutine shift\n";
    c.inputs["a"] = runtime::makeGrid({10, 8}, "seeded:13");
    c.inputs["b"] = runtime::makeGrid({10, 8}, "zeros");
    c.oracle = [](const GridMap& in) {
      GridBuffer a = in.at("a"), b = in.at("b");
      // declared lower bounds (0, -1)
      auto at = [](GridBuffer& g, int64_t i, int64_t j) -> double& { return g.at({i - 0, j + 1}); };
      for (int64_t j = 0; j <= 5; ++j)
        for (int64_t i = 1; i <= 8; ++i)
          at(b, i, j) = at(a, i - 1, j + 1) * 2.0 + static_cast<double>(i) - static_cast<double>(j);
      return GridMap{{"a", a}, {"b", b}};
    };
    cases.push_back(std::move(c));
  }
  {
    HandCase c;
    c.name = "fused-outputs-3d";
    c.source =
        "program fused\n  real(kind=8), dimension(6,5,4) :: a, b, c\n  integer :: i, j, k\n"
        "  do k = 2, 3\n    do j = 2, 4\n      do i = 2, 5\n        b(i,j,k) = a(i-1,j,k) + a(i+1,j,k+1)\n"
        "      end do\n    end do\n  end do\n"
        "  do k = 2, 3\n    do j = 2, 4\n      do i = 2, 5\n        c(i,j,k) = a(i,j,k) * a(i,j-1,k-1)\n"
        "      end do\n    end do\n  end do\nend program fused\n";
    c.inputs["a"] = runtime::makeGrid({6, 5, 4}, "seeded:99");
    c.sweeps = 2;
    c.oracle = [](const GridMap& in) {
      GridBuffer a = in.at("a"), b({6, 5, 4}), cc({6, 5, 4});
      for (int64_t k = 2; k <= 3; ++k)
        for (int64_t j = 2; j <= 4; ++j)
          for (int64_t i = 2; i <= 5; ++i) {
            f(b, i, j, k) = f(a, i - 1, j, k) + f(a, i + 1, j, k + 1);
            f(cc, i, j, k) = f(a, i, j, k) * f(a, i, j - 1, k - 1);
          }
      return GridMap{{"a", a}, {"b", b}, {"c", cc}};
    };
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace

std::string jacobi3dSource(int n, int sweeps) {
  std::string s = "program jacobi\n  implicit none\n  integer, parameter :: n = " + std::to_string(n) +
                  "\n  real(kind=8), dimension(n,n,n) :: u\n  integer :: i, j, k, t\n";
  std::string body =
      "      do j = 2, n-1\n        do i = 2, n-1\n"
      "          u(i,j,k) = (u(i-1,j,k) + u(i+1,j,k) + u(i,j-1,k) + u(i,j+1,k) &\n"
      "                    + u(i,j,k-1) + u(i,j,k+1)) / 6.0d0\n"
      "        end do\n      end do\n";
  s += "  do t = 1, " + std::to_string(sweeps) + "\n    do k = 2, n-1\n" + body + "    end do\n  end do\n";
  return s + "end program jacobi\n";
}

runtime::GridBuffer jacobi3dOracle(const runtime::GridBuffer& u0, int sweeps) {
  GridBuffer cur = u0, next = u0;
  const int64_t n = u0.extents[0];
  for (int t = 0; t < sweeps; ++t) {
    for (int64_t k = 2; k <= n - 1; ++k)
      for (int64_t j = 2; j <= n - 1; ++j)
        for (int64_t i = 2; i <= n - 1; ++i)
          f(next, i, j, k) = (f(cur, i - 1, j, k) + f(cur, i + 1, j, k) + f(cur, i, j - 1, k) + f(cur, i, j + 1, k) +
                              f(cur, i, j, k - 1) + f(cur, i, j, k + 1)) /
                             6.0;
    cur = next;
  }
  return cur;
}

const std::vector<HandCase>& handCases() {
  static const std::vector<HandCase> cases = build();
  return cases;
}

}  // namespace sf::testkit
