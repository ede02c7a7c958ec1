#include "mmvae/rational.hpp"

#include <charconv>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mmvae {
namespace {

using i128 = __int128;
using u128 = unsigned __int128;

u128 uabs(i128 v) { return v < 0 ? u128(-v) : u128(v); }

u128 ugcd(u128 a, u128 b) {
  while (b != 0) {
    u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

std::int64_t narrow(i128 v, const char* what) {
  if (v > i128(std::numeric_limits<std::int64_t>::max()) ||
      v < i128(std::numeric_limits<std::int64_t>::min())) {
    throw std::overflow_error(std::string("rational overflow in ") + what);
  }
  return static_cast<std::int64_t>(v);
}

struct Parts {
  std::int64_t num;
  std::int64_t den;
};

Parts reduced(i128 n, i128 d, const char* what) {
  if (d == 0) throw std::invalid_argument("rational: zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  if (n == 0) return {0, 1};
  u128 g = ugcd(uabs(n), u128(d));
  n /= i128(g);
  d /= i128(g);
  return {narrow(n, what), narrow(d, what)};
}

Rational from_parts(Parts p) { return Rational(p.num, p.den); }

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  const Parts p = reduced(num, den, "constructor");
  num_ = p.num;
  den_ = p.den;
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(const std::string& text) {
  const auto parse_int = [](const char* first, const char* last) {
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) {
      throw std::invalid_argument("rational: malformed integer");
    }
    return out;
  };
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin == end) throw std::invalid_argument("rational: empty string");
  const auto slash = text.find('/');
  if (slash == std::string::npos) return Rational(parse_int(begin, end));
  std::int64_t num = parse_int(begin, begin + slash);
  std::int64_t den = parse_int(begin + slash + 1, end);
  return Rational(num, den);
}

Rational operator+(const Rational& a, const Rational& b) {
  i128 n = i128(a.num_) * b.den_ + i128(b.num_) * a.den_;
  i128 d = i128(a.den_) * b.den_;
  return from_parts(reduced(n, d, "addition"));
}

Rational operator-(const Rational& a, const Rational& b) {
  i128 n = i128(a.num_) * b.den_ - i128(b.num_) * a.den_;
  i128 d = i128(a.den_) * b.den_;
  return from_parts(reduced(n, d, "subtraction"));
}

Rational operator*(const Rational& a, const Rational& b) {
  return from_parts(reduced(i128(a.num_) * b.num_, i128(a.den_) * b.den_, "multiplication"));
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw std::invalid_argument("rational: division by zero");
  return from_parts(reduced(i128(a.num_) * b.den_, i128(a.den_) * b.num_, "division"));
}

}  // namespace mmvae
