#pragma once

// Exact rational scalars. GMP keeps every value reduced with a positive
// denominator, and zero is stored as 0/1.

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <string_view>

namespace courant {

using Rational = mpq_class;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t pos)
      : std::runtime_error(what + " (at offset " + std::to_string(pos) + ")"), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

inline Rational make_rational(long num, long den = 1) {
  if (den == 0) throw std::domain_error("zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

/// Parses `p` or `p/q` with optional sign.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw ParseError("empty rational", 0);
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  bool seen_slash = false;
  bool digit_before = false;
  bool digit_after = false;
  for (std::size_t k = i; k < s.size(); ++k) {
    char c = s[k];
    if (c == '/') {
      if (seen_slash || !digit_before) throw ParseError("malformed rational '" + s + "'", k);
      seen_slash = true;
    } else if (c >= '0' && c <= '9') {
      (seen_slash ? digit_after : digit_before) = true;
    } else {
      throw ParseError("malformed rational '" + s + "'", k);
    }
  }
  if (!digit_before || (seen_slash && !digit_after)) throw ParseError("malformed rational '" + s + "'", 0);
  if (s[0] == '+') s.erase(0, 1);
  Rational q;
  if (q.set_str(s, 10) != 0) throw ParseError("malformed rational '" + s + "'", 0);
  if (q.get_den() == 0) throw ParseError("zero denominator in '" + s + "'", 0);
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }

inline bool is_zero(const Rational& q) { return sgn(q) == 0; }

}  // namespace courant
