#include "dimvar/dyadic.hpp"

#include <cmath>
#include <sstream>

#include "dimvar/error.hpp"

namespace dimvar {

namespace {

// Common resolution for comparisons; numerators stay well inside int64 for rho <= 40.
std::pair<std::int64_t, std::int64_t> aligned(const Dyadic& a, const Dyadic& b) {
  int r = std::max(a.rho, b.rho);
  return {a.num << (r - a.rho), b.num << (r - b.rho)};
}

}  // namespace

Dyadic Dyadic::from_double(double x, int rho) {
  require(rho >= 0 && rho <= 52, "dyadic resolution must lie in [0, 52]");
  double scaled = std::ldexp(x, rho);
  require(std::isfinite(scaled) && std::fabs(scaled) < 0x1p62, "dyadic value out of range");
  require(scaled == std::floor(scaled),
          "value " + std::to_string(x) + " is not a multiple of 2^-" + std::to_string(rho));
  return Dyadic{static_cast<std::int64_t>(scaled), rho};
}

Dyadic Dyadic::pow2(int n, int rho) {
  require(n + rho >= 0 && n + rho < 62, "2^n not representable at this resolution");
  return Dyadic{std::int64_t{1} << (n + rho), rho};
}

double Dyadic::to_double() const { return std::ldexp(static_cast<double>(num), -rho); }

Dyadic Dyadic::at_resolution(int new_rho) const {
  if (new_rho >= rho) return Dyadic{num << (new_rho - rho), new_rho};
  std::int64_t mask = (std::int64_t{1} << (rho - new_rho)) - 1;
  require((num & mask) == 0, "dyadic value loses precision at the requested resolution");
  return Dyadic{num >> (rho - new_rho), new_rho};
}

bool operator==(const Dyadic& a, const Dyadic& b) {
  auto [x, y] = aligned(a, b);
  return x == y;
}

bool operator<(const Dyadic& a, const Dyadic& b) {
  auto [x, y] = aligned(a, b);
  return x < y;
}

double DyadicInterval::left() const { return std::ldexp(1.0, n) + std::ldexp(double(k), -m); }
double DyadicInterval::right() const { return std::ldexp(1.0, n) + std::ldexp(double(k + 1), -m); }
double DyadicInterval::length() const { return std::ldexp(1.0, -m); }

Dyadic DyadicInterval::left_at(int rho) const {
  return Dyadic{(std::int64_t{1} << (n + rho)) + (k << (rho - m)), rho};
}

Dyadic DyadicInterval::right_at(int rho) const {
  return Dyadic{(std::int64_t{1} << (n + rho)) + ((k + 1) << (rho - m)), rho};
}

std::string DyadicInterval::str() const {
  std::ostringstream os;
  os.precision(17);
  os << '[' << left() << ',' << right() << ')';
  return os.str();
}

std::vector<DyadicInterval> dyadic_decompose(const Dyadic& s, const Dyadic& t, int n) {
  int rho = std::max(s.rho, t.rho);
  require(n + rho >= 0 && n + rho < 61, "block exponent incompatible with the endpoint resolution");
  Dyadic lo = s.at_resolution(rho), hi = t.at_resolution(rho);
  const std::int64_t base = std::int64_t{1} << (n + rho);
  require(base <= lo.num && lo.num < hi.num && hi.num <= 2 * base,
          "need 2^n <= s < t <= 2^(n+1)");

  // Work with offsets from the block start, in units of 2^-rho. A dyadic interval of
  // length 2^j is aligned to a multiple of 2^j, for 0 <= j <= n + rho.
  const std::int64_t a = lo.num - base, b = hi.num - base;
  auto make = [&](std::int64_t start, int j) {
    return DyadicInterval{n, rho - j, start >> j};
  };

  // Largest j admitting an aligned interval inside [a, b); leftmost one.
  int jmax = -1;
  std::int64_t c = 0;
  for (int j = n + rho; j >= 0; --j) {
    std::int64_t len = std::int64_t{1} << j;
    std::int64_t first = ((a + len - 1) >> j) << j;
    if (first + len <= b) {
      jmax = j;
      c = first;
      break;
    }
  }
  require(jmax >= 0, "internal: no dyadic interval fits");  // unreachable: unit intervals always fit

  std::vector<DyadicInterval> left, right;
  const std::int64_t e = c + (std::int64_t{1} << jmax);

  // Left remainder [a, c): adjacent pieces moving leftwards, halving each time.
  std::int64_t cur = c;
  for (int j = jmax - 1; j >= 0 && cur > a; --j) {
    std::int64_t len = std::int64_t{1} << j;
    if (cur - len >= a) {
      cur -= len;
      left.push_back(make(cur, j));
    }
  }
  // Right remainder [e, b): moving rightwards; the first piece may repeat the maximal length.
  cur = e;
  for (int j = jmax; j >= 0 && cur < b; --j) {
    std::int64_t len = std::int64_t{1} << j;
    if (cur + len <= b) {
      right.push_back(make(cur, j));
      cur += len;
    }
  }

  std::vector<DyadicInterval> out(left.rbegin(), left.rend());
  out.push_back(make(c, jmax));
  out.insert(out.end(), right.begin(), right.end());
  return out;
}

}  // namespace dimvar
