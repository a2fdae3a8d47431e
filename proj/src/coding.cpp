#include "ifsda/coding.hpp"

#include "ifsda/errors.hpp"
#include "ifsda/parallel.hpp"

#include <algorithm>
#include <stdexcept>

namespace ifsda {

std::size_t primitive_root_length(std::span<const Symbol> w) {
  std::size_t n = w.size();
  for (std::size_t d = 1; d < n; ++d) {
    if (n % d) continue;
    bool ok = true;
    for (std::size_t i = d; i < n && ok; ++i) ok = w[i] == w[i - d];
    if (ok) return d;
  }
  return n;
}

EpCode canonicalize(Word u, Word v) {
  if (v.empty()) throw std::invalid_argument("canonicalize: empty period");
  v.resize(primitive_root_length(v));
  while (!u.empty() && u.back() == v.back()) {
    std::rotate(v.rbegin(), v.rbegin() + 1, v.rend());
    u.pop_back();
  }
  return {std::move(u), std::move(v)};
}

EpCode code_of(const Representation& rep) {
  if (rep.l < 0 || rep.n <= rep.l || static_cast<std::size_t>(rep.n) != rep.word.size())
    throw std::invalid_argument("code_of: malformed representation");
  Word u(rep.word.begin(), rep.word.begin() + rep.l);
  Word v(rep.word.begin() + rep.l, rep.word.end());
  return canonicalize(std::move(u), std::move(v));
}

Word unroll(const EpCode& code, std::size_t length) {
  Word w;
  w.reserve(length);
  for (std::size_t i = 0; i < length; ++i)
    w.push_back(i < code.u.size() ? code.u[i] : code.v[(i - code.u.size()) % code.v.size()]);
  return w;
}

RationalVector project_exact(const IFSystem& ifs, const EpCode& code) {
  if (!ifs.exact_mode()) throw std::invalid_argument("project_exact: system has no exact form");
  if (code.v.empty()) throw std::invalid_argument("project_exact: empty period");
  auto fixed = compose_exact(ifs, code.v).fixed_point();
  return compose_exact(ifs, code.u).apply(fixed);
}

FloatProjection project_float(const IFSystem& ifs, std::span<const Symbol> prefix, DiamProxy proxy) {
  if (prefix.empty()) throw std::invalid_argument("project_float: empty prefix");
  auto c = compose_float(ifs, prefix);
  return {c.apply(ifs.bounds().center), c.ratio * ifs.diam(proxy)};
}

double cylinder_measure(const ProbabilityVector& p, std::span<const Symbol> a) {
  double m = 1;
  for (Symbol s : a) m *= p[s];
  return m;
}

Rational cylinder_measure_exact(const ProbabilityVector& p, std::span<const Symbol> a) {
  std::vector<unsigned long> counts(p.size(), 0);
  for (Symbol s : a) ++counts[s];
  Rational m = 1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!counts[i]) continue;
    Rational w = p.exact() ? (*p.exact())[i] : to_rational(p[i]);
    Rational pw;
    mpz_pow_ui(pw.get_num_mpz_t(), w.get_num_mpz_t(), counts[i]);
    mpz_pow_ui(pw.get_den_mpz_t(), w.get_den_mpz_t(), counts[i]);
    m *= pw;
  }
  return m;
}

double cylinder_ratio(const IFSystem& ifs, std::span<const Symbol> a) {
  double r = 1;
  for (Symbol s : a) r *= ifs.ratios()[s];
  return r;
}

double cylinder_diam(const IFSystem& ifs, std::span<const Symbol> a, DiamProxy proxy) {
  return cylinder_ratio(ifs, a) * ifs.diam(proxy);
}

Word sample_code(const ProbabilityVector& p, std::size_t length, std::uint64_t seed) {
  std::vector<double> cdf(p.size());
  double acc = 0;
  for (std::size_t a = 0; a < p.size(); ++a) cdf[a] = acc += p[a];
  Word w(length);
  std::uint64_t key = mix64(seed);
  for (std::size_t i = 0; i < length; ++i) {
    double u = uniform01(key, i) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    w[i] = static_cast<Symbol>(std::min<std::size_t>(it - cdf.begin(), p.size() - 1));
  }
  return w;
}

namespace {

bool single_char_labels(const IFSystem& ifs) {
  for (const auto& l : ifs.alphabet())
    if (l.size() != 1) return false;
  return true;
}

Symbol lookup(const IFSystem& ifs, std::string_view label) {
  const auto& al = ifs.alphabet();
  auto it = std::find(al.begin(), al.end(), label);
  if (it == al.end()) throw ValidationError("code", "unknown symbol '" + std::string(label) + "'");
  return static_cast<Symbol>(it - al.begin());
}

}  // namespace

std::string format_word(const IFSystem& ifs, std::span<const Symbol> w) {
  bool compact = single_char_labels(ifs);
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!compact && i) out += ",";
    out += ifs.alphabet()[w[i]];
  }
  return out;
}

Word parse_word(const IFSystem& ifs, std::string_view text) {
  Word w;
  if (text.empty()) return w;
  if (single_char_labels(ifs)) {
    for (char ch : text) {
      if (ch == ' ' || ch == ',') continue;
      w.push_back(lookup(ifs, std::string_view(&ch, 1)));
    }
    return w;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!piece.empty() && piece.front() == ' ') piece.remove_prefix(1);
    while (!piece.empty() && piece.back() == ' ') piece.remove_suffix(1);
    w.push_back(lookup(ifs, piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return w;
}

std::string format_code(const IFSystem& ifs, const EpCode& code) {
  return format_word(ifs, code.u) + "|" + format_word(ifs, code.v);
}

EpCode parse_code(const IFSystem& ifs, std::string_view text) {
  auto bar = text.find('|');
  if (bar == std::string_view::npos) throw ValidationError("code", "expected 'u|v'");
  Word v = parse_word(ifs, text.substr(bar + 1));
  if (v.empty()) throw ValidationError("code", "empty period");
  return canonicalize(parse_word(ifs, text.substr(0, bar)), std::move(v));
}

}  // namespace ifsda
