#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dimvar {

// Binary fixed point number num * 2^-rho.
struct Dyadic {
  std::int64_t num = 0;
  int rho = 20;

  static Dyadic from_double(double x, int rho = 20);
  static Dyadic pow2(int n, int rho = 20);
  double to_double() const;
  Dyadic at_resolution(int new_rho) const;
};

bool operator==(const Dyadic& a, const Dyadic& b);
bool operator<(const Dyadic& a, const Dyadic& b);
inline bool operator<=(const Dyadic& a, const Dyadic& b) { return !(b < a); }

// [2^n + k/2^m, 2^n + (k+1)/2^m)
struct DyadicInterval {
  int n = 0;
  int m = 0;
  std::int64_t k = 0;

  double left() const;
  double right() const;
  double length() const;
  Dyadic left_at(int rho) const;
  Dyadic right_at(int rho) const;
  std::string str() const;
  bool operator==(const DyadicInterval&) const = default;
};

// Greedy maximal decomposition of [s, t) inside the block [2^n, 2^(n+1)).
// Output is sorted left to right.
std::vector<DyadicInterval> dyadic_decompose(const Dyadic& s, const Dyadic& t, int n);

}  // namespace dimvar
