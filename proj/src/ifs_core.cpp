#include "ifsda/ifs_core.hpp"

#include "ifsda/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace ifsda {

namespace {

constexpr double kOrthoTol = 1e-12;

bool is_identity(const std::vector<double>& o, std::size_t d) {
  if (o.empty()) return true;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (o[i * d + j] != (i == j ? 1.0 : 0.0)) return false;
  return true;
}

std::vector<double> mat_mul(const std::vector<double>& a, const std::vector<double>& b, std::size_t d) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  std::vector<double> out(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] += a[i * d + k] * b[k * d + j];
  return out;
}

std::vector<double> mat_vec(const std::vector<double>& o, std::span<const double> x) {
  if (o.empty()) return {x.begin(), x.end()};
  std::size_t d = x.size();
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i] += o[i * d + j] * x[j];
  return out;
}

// Fixed point of x -> ratio * O x + t.
std::vector<double> solve_fixed_point(double ratio, const std::vector<double>& o, const std::vector<double>& t) {
  std::size_t d = t.size();
  if (o.empty()) {
    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = t[i] / (1.0 - ratio);
    return x;
  }
  Eigen::MatrixXd m(d, d);
  Eigen::VectorXd b(d);
  for (std::size_t i = 0; i < d; ++i) {
    b(i) = t[i];
    for (std::size_t j = 0; j < d; ++j) m(i, j) = (i == j ? 1.0 : 0.0) - ratio * o[i * d + j];
  }
  Eigen::VectorXd x = m.partialPivLu().solve(b);
  return {x.data(), x.data() + d};
}

double norm(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::string hexfloat(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

}  // namespace

SimilarityMap SimilarityMap::from_exact(std::vector<long> p, long q) {
  SimilarityMap m;
  m.ratio = 1.0 / static_cast<double>(q);
  m.translation.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m.translation[i] = static_cast<double>(p[i]) / static_cast<double>(q);
  m.exact = ExactForm{std::move(p), q};
  return m;
}

SimilarityMap SimilarityMap::from_float(double ratio, std::vector<double> translation, std::vector<double> orthogonal) {
  SimilarityMap m;
  m.ratio = ratio;
  m.translation = std::move(translation);
  m.orthogonal = std::move(orthogonal);
  return m;
}

bool SimilarityMap::has_rotation() const { return !is_identity(orthogonal, dimension()); }

std::vector<double> SimilarityMap::apply(std::span<const double> x) const {
  auto y = mat_vec(orthogonal, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ratio * y[i] + translation[i];
  return y;
}

std::vector<double> SimilarityMap::fixed_point() const {
  return solve_fixed_point(ratio, has_rotation() ? orthogonal : std::vector<double>{}, translation);
}

// ---------------------------------------------------------------------------
// Composition helpers

void ExactComposite::append(const ExactForm& f) {
  if (p.empty()) p.assign(f.p.size(), Integer(0));
  Integer qf(static_cast<long>(f.q));
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = Integer(static_cast<long>(f.p[i])) + qf * p[i];
  q *= qf;
}

void ExactComposite::prepend(const ExactForm& f) {
  if (p.empty()) p.assign(f.p.size(), Integer(0));
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += q * Integer(static_cast<long>(f.p[i]));
  q *= Integer(static_cast<long>(f.q));
}

RationalVector ExactComposite::apply(const RationalVector& x) const {
  RationalVector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = (x[i] + Rational(p[i])) / Rational(q);
    y[i].canonicalize();
  }
  return y;
}

RationalVector ExactComposite::fixed_point() const {
  RationalVector y(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    y[i] = Rational(p[i], q - 1);
    y[i].canonicalize();
  }
  return y;
}

ExactComposite compose_exact(const IFSystem& ifs, std::span<const Symbol> w) {
  ExactComposite c;
  c.p.assign(static_cast<std::size_t>(ifs.dimension()), Integer(0));
  for (Symbol s : w) c.append(*ifs.map(s).exact);
  return c;
}

void FloatComposite::append(const SimilarityMap& f) {
  std::size_t d = f.dimension();
  if (t.empty()) t.assign(d, 0.0);
  auto rt = mat_vec(orthogonal, f.translation);
  for (std::size_t i = 0; i < d; ++i) t[i] += ratio * rt[i];
  if (f.has_rotation()) orthogonal = mat_mul(orthogonal, f.orthogonal, d);
  ratio *= f.ratio;
}

std::vector<double> FloatComposite::apply(std::span<const double> x) const {
  auto y = mat_vec(orthogonal, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = ratio * y[i] + t[i];
  return y;
}

std::vector<double> FloatComposite::fixed_point() const { return solve_fixed_point(ratio, orthogonal, t); }

FloatComposite compose_float(const IFSystem& ifs, std::span<const Symbol> w) {
  FloatComposite c;
  c.t.assign(static_cast<std::size_t>(ifs.dimension()), 0.0);
  for (Symbol s : w) c.append(ifs.map(s));
  return c;
}

void RationalComposite::append(const SimilarityMap& f) {
  std::size_t d = f.dimension();
  if (t.empty()) t.assign(d, Rational(0));
  if (f.exact) {
    Rational r(1, f.exact->q);
    for (std::size_t i = 0; i < d; ++i) t[i] += ratio * Rational(f.exact->p[i], f.exact->q);
    ratio *= r;
  } else {
    for (std::size_t i = 0; i < d; ++i) t[i] += ratio * to_rational(f.translation[i]);
    ratio *= to_rational(f.ratio);
  }
}

RationalVector RationalComposite::apply(const RationalVector& x) const {
  RationalVector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = ratio * x[i] + t[i];
  return y;
}

RationalVector RationalComposite::fixed_point() const {
  RationalVector y(t.size());
  Rational den = 1 - ratio;
  for (std::size_t i = 0; i < t.size(); ++i) y[i] = t[i] / den;
  return y;
}

RationalComposite compose_rational(const IFSystem& ifs, std::span<const Symbol> w) {
  RationalComposite c;
  c.t.assign(static_cast<std::size_t>(ifs.dimension()), Rational(0));
  for (Symbol s : w) c.append(ifs.map(s));
  return c;
}

// ---------------------------------------------------------------------------
// IFSystem

namespace {

AttractorBounds compute_bounds(const IFSystem& ifs);

}  // namespace

IFSystem::IFSystem(std::vector<std::string> alphabet, std::vector<SimilarityMap> maps)
    : alphabet_(std::move(alphabet)), maps_(std::move(maps)) {
  if (alphabet_.size() < 2) throw ValidationError("ifs.alphabet", "at least two maps are required");
  if (alphabet_.size() > 255) throw ValidationError("ifs.alphabet", "at most 255 maps are supported");
  if (alphabet_.size() != maps_.size()) throw ValidationError("ifs.alphabet", "one map per symbol is required");
  std::set<std::string> seen;
  for (const auto& label : alphabet_) {
    if (label.empty()) throw ValidationError("ifs.alphabet", "empty symbol label");
    if (!seen.insert(label).second) throw ValidationError("ifs.alphabet", "duplicate label '" + label + "'");
  }
  dimension_ = static_cast<int>(maps_.front().dimension());
  if (dimension_ < 1) throw ValidationError("map:" + alphabet_[0] + ".translation", "dimension must be positive");
  exact_mode_ = true;
  for (std::size_t a = 0; a < maps_.size(); ++a) {
    auto& m = maps_[a];
    const std::string field = "map:" + alphabet_[a];
    std::size_t d = static_cast<std::size_t>(dimension_);
    if (m.dimension() != d) throw ValidationError(field + ".translation", "dimension mismatch");
    if (m.exact) {
      if (m.exact->q < 2) throw ValidationError(field + ".q", "q must be an integer >= 2");
      if (m.exact->p.size() != d) throw ValidationError(field + ".p", "dimension mismatch");
      if (!is_identity(m.orthogonal, d))
        throw ValidationError(field + ".orthogonal", "exact maps cannot carry an orthogonal part");
      m.orthogonal.clear();
      m.ratio = 1.0 / static_cast<double>(m.exact->q);
    } else {
      exact_mode_ = false;
    }
    if (!(m.ratio > 0.0 && m.ratio < 1.0)) throw ValidationError(field + ".ratio", "ratio must lie in (0,1)");
    for (double t : m.translation)
      if (!std::isfinite(t)) throw ValidationError(field + ".translation", "non-finite entry");
    if (!m.orthogonal.empty()) {
      if (m.orthogonal.size() != d * d) throw ValidationError(field + ".orthogonal", "expected a d x d matrix");
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          double s = 0;
          for (std::size_t k = 0; k < d; ++k) s += m.orthogonal[k * d + i] * m.orthogonal[k * d + j];
          if (std::abs(s - (i == j ? 1.0 : 0.0)) > kOrthoTol)
            throw ValidationError(field + ".orthogonal", "matrix is not orthogonal");
        }
      if (is_identity(m.orthogonal, d)) m.orthogonal.clear();
    }
    if (m.has_rotation()) axis_aligned_ = false;
    ratios_.push_back(m.ratio);
  }
  equicontractive_ = true;
  for (const auto& m : maps_) {
    if (exact_mode_ ? m.exact->q != maps_[0].exact->q : m.ratio != maps_[0].ratio) equicontractive_ = false;
  }
  bounds_ = compute_bounds(*this);
}

double IFSystem::min_ratio() const { return *std::min_element(ratios_.begin(), ratios_.end()); }
double IFSystem::max_ratio() const { return *std::max_element(ratios_.begin(), ratios_.end()); }

double IFSystem::diam(DiamProxy proxy) const {
  return proxy == DiamProxy::Upper ? bounds_.diam_upper : bounds_.diam_refined;
}

std::string IFSystem::canonical_text() const {
  std::string out = "d=" + std::to_string(dimension_) + "\n";
  for (std::size_t a = 0; a < maps_.size(); ++a) {
    const auto& m = maps_[a];
    out += alphabet_[a] + ":";
    if (m.exact) {
      out += "q=" + std::to_string(m.exact->q) + ";p=";
      for (auto v : m.exact->p) out += std::to_string(v) + ",";
    } else {
      out += "r=" + hexfloat(m.ratio) + ";t=";
      for (auto v : m.translation) out += hexfloat(v) + ",";
      out += ";o=";
      for (auto v : m.orthogonal) out += hexfloat(v) + ",";
    }
    out += "\n";
  }
  return out;
}

const AttractorBounds& attractor_bounds(const IFSystem& ifs) { return ifs.bounds(); }

namespace {

struct PairNode {
  double upper;
  Word u, v;
  bool operator<(const PairNode& o) const { return upper < o.upper; }
};

// Lower and upper bounds for Diam(X) by branch-and-bound over pairs of
// cylinders. Cylinder w sits inside B(phi_w(c), r_w R) and contains phi_w(z0).
void refine_diameter(const IFSystem& ifs, AttractorBounds& b) {
  std::size_t d = static_cast<std::size_t>(ifs.dimension());
  if (d == 1 && b.mode == HullMode::Box) {
    b.diam_refined = b.diam_upper;
    b.refine_error = 0;
    return;
  }
  const auto z0 = ifs.map(0).fixed_point();
  const double R = b.radius;
  auto center_of = [&](const Word& w) { return compose_float(ifs, w).apply(b.center); };
  auto rep_of = [&](const Word& w) { return compose_float(ifs, w).apply(z0); };
  auto ratio_of = [&](const Word& w) {
    double r = 1;
    for (Symbol s : w) r *= ifs.ratios()[s];
    return r;
  };

  double best = 0;
  std::priority_queue<PairNode> pq;
  auto push = [&](Word u, Word v) {
    auto cu = center_of(u), cv = center_of(v);
    double up = norm(cu, cv) + (ratio_of(u) + ratio_of(v)) * R;
    best = std::max(best, norm(rep_of(u), rep_of(v)));
    if (up > best) pq.push({up, std::move(u), std::move(v)});
  };
  push({}, {});
  const double target = 1e-6 * R;
  std::size_t pops = 0;
  double top_upper = best;
  while (!pq.empty()) {
    auto node = pq.top();
    top_upper = node.upper;
    if (node.upper - best <= target || ++pops > 200000) break;
    pq.pop();
    bool split_u = ratio_of(node.u) >= ratio_of(node.v);
    bool same = node.u == node.v;
    for (std::size_t a = 0; a < ifs.size(); ++a) {
      if (same) {
        for (std::size_t c = a; c < ifs.size(); ++c) {
          Word u = node.u, v = node.v;
          u.push_back(static_cast<Symbol>(a));
          v.push_back(static_cast<Symbol>(c));
          push(std::move(u), std::move(v));
        }
      } else if (split_u) {
        Word u = node.u;
        u.push_back(static_cast<Symbol>(a));
        push(std::move(u), node.v);
      } else {
        Word v = node.v;
        v.push_back(static_cast<Symbol>(a));
        push(node.u, std::move(v));
      }
    }
  }
  if (pq.empty()) top_upper = best;
  b.diam_refined = std::min(best, b.diam_upper);
  b.refine_error = std::max(0.0, std::min(top_upper, b.diam_upper) - b.diam_refined);
}

AttractorBounds compute_bounds(const IFSystem& ifs) {
  AttractorBounds b;
  std::size_t d = static_cast<std::size_t>(ifs.dimension());
  if (ifs.axis_aligned()) {
    // Each coordinate extreme of X is attained at a fixed point of some map.
    b.mode = HullMode::Box;
    b.exact_lo.assign(d, Rational(0));
    b.exact_hi.assign(d, Rational(0));
    for (std::size_t a = 0; a < ifs.size(); ++a) {
      Word w{static_cast<Symbol>(a)};
      RationalVector f = ifs.exact_mode() ? compose_exact(ifs, w).fixed_point() : compose_rational(ifs, w).fixed_point();
      for (std::size_t i = 0; i < d; ++i) {
        if (a == 0 || f[i] < b.exact_lo[i]) b.exact_lo[i] = f[i];
        if (a == 0 || f[i] > b.exact_hi[i]) b.exact_hi[i] = f[i];
      }
    }
    b.lo.resize(d);
    b.hi.resize(d);
    b.center.resize(d);
    b.exact_center.resize(d);
    double diag2 = 0;
    for (std::size_t i = 0; i < d; ++i) {
      b.lo[i] = to_double(b.exact_lo[i]);
      b.hi[i] = to_double(b.exact_hi[i]);
      b.exact_center[i] = (b.exact_lo[i] + b.exact_hi[i]) / 2;
      b.center[i] = to_double(b.exact_center[i]);
      diag2 += to_double((b.exact_hi[i] - b.exact_lo[i]) * (b.exact_hi[i] - b.exact_lo[i]));
    }
    b.diam_upper = std::sqrt(diag2);
    b.radius = b.diam_upper / 2;
  } else {
    b.mode = HullMode::Ball;
    b.center.assign(d, 0.0);
    for (const auto& m : ifs.maps()) {
      auto f = m.fixed_point();
      for (std::size_t i = 0; i < d; ++i) b.center[i] += f[i] / static_cast<double>(ifs.size());
    }
    double R = 0;
    for (const auto& m : ifs.maps()) R = std::max(R, norm(m.apply(b.center), b.center) / (1.0 - m.ratio));
    // Guard against rounding in the defining inequality.
    b.radius = R * (1 + 1e-12) + 1e-300;
    b.diam_upper = 2 * b.radius;
    b.exact_center.resize(d);
    for (std::size_t i = 0; i < d; ++i) b.exact_center[i] = to_rational(b.center[i]);
  }
  refine_diameter(ifs, b);
  return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// ProbabilityVector

ProbabilityVector::ProbabilityVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.size() < 2) throw ValidationError("weights", "at least two weights are required");
  double sum = 0;
  for (double w : weights_) {
    if (!(w > 0.0 && w < 1.0)) throw ValidationError("weights", "each weight must lie in (0,1)");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("weights", "weights must sum to 1");
}

ProbabilityVector::ProbabilityVector(std::vector<Rational> weights) {
  if (weights.size() < 2) throw ValidationError("weights", "at least two weights are required");
  Rational sum = 0;
  for (auto& w : weights) {
    w.canonicalize();
    if (!(w > 0 && w < 1)) throw ValidationError("weights", "each weight must lie in (0,1)");
    sum += w;
    weights_.push_back(to_double(w));
  }
  if (sum != 1) throw ValidationError("weights", "weights must sum to exactly 1");
  exact_ = std::move(weights);
}

ProbabilityVector ProbabilityVector::uniform(std::size_t n) {
  return ProbabilityVector(std::vector<Rational>(n, Rational(1, static_cast<unsigned long>(n))));
}

double ProbabilityVector::sum_squares() const {
  double s = 0;
  for (double w : weights_) s += w * w;
  return s;
}

double ProbabilityVector::max_weight() const { return *std::max_element(weights_.begin(), weights_.end()); }

// ---------------------------------------------------------------------------
// Invariants

double similarity_dimension(const IFSystem& ifs, double tol) {
  if (!(tol > 0)) throw std::invalid_argument("similarity_dimension: tol must be positive");
  if (ifs.equicontractive()) return std::log(static_cast<double>(ifs.size())) / -std::log(ifs.ratios()[0]);
  auto f = [&](double s) {
    double acc = 0;
    for (double r : ifs.ratios()) acc += std::pow(r, s);
    return acc - 1.0;
  };
  double lo = 1e-9, hi = ifs.dimension() + 10.0;
  while (f(hi) > 0) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 0; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (f(mid) > 0 ? lo : hi) = mid;
  }
  double s = 0.5 * (lo + hi);
  return s;
}

ProbabilityVector natural_weights(const IFSystem& ifs) {
  if (ifs.equicontractive()) return ProbabilityVector::uniform(ifs.size());
  double s = similarity_dimension(ifs);
  std::vector<double> w;
  double sum = 0;
  for (double r : ifs.ratios()) {
    w.push_back(std::pow(r, s));
    sum += w.back();
  }
  for (double& x : w) x /= sum;
  return ProbabilityVector(std::move(w));
}

double entropy(const ProbabilityVector& p) {
  double h = 0;
  for (double w : p.weights()) h -= w * std::log(w);
  return h;
}

double lyapunov(const IFSystem& ifs, const ProbabilityVector& p) {
  if (p.size() != ifs.size()) throw std::invalid_argument("lyapunov: weights and maps differ in length");
  double chi = 0;
  for (std::size_t a = 0; a < p.size(); ++a) chi -= p[a] * std::log(ifs.ratios()[a]);
  return chi;
}

MeasureInequality check_measure_inequality(const ProbabilityVector& p) {
  double margin = -2.0 * std::log(p.sum_squares()) - entropy(p);
  return {margin > 0, margin};
}

BoundaryWeights boundary_weight_two_maps(double tol) {
  if (!(tol > 0)) throw std::invalid_argument("boundary_weight_two_maps: tol must be positive");
  auto margin = [](double p) {
    double q = 1 - p;
    return -2.0 * std::log(p * p + q * q) + p * std::log(p) + q * std::log(q);
  };
  // Positive at 1/2, negative near the ends.
  auto bisect = [&](double pos, double neg) {
    while (std::abs(neg - pos) > tol) {
      double mid = 0.5 * (pos + neg);
      (margin(mid) > 0 ? pos : neg) = mid;
    }
    return 0.5 * (pos + neg);
  };
  return {bisect(0.5, 0.01), bisect(0.5, 0.99)};
}

double epsilon_star(const IFSystem& ifs, const ProbabilityVector& p) {
  auto ineq = check_measure_inequality(p);
  if (!ineq.holds)
    throw std::domain_error("epsilon_star: h_p < -2 log sum p^2 fails (margin " + std::to_string(ineq.margin) + ")");
  double h = entropy(p);
  double chi = lyapunov(ifs, p);
  double L = -std::log(p.sum_squares());
  return 0.5 * std::min(2 * L - h, chi * (2 * L - h) / h);
}

OverlapSearch detect_exact_overlap(const IFSystem& ifs, int max_depth) {
  if (max_depth < 1) throw std::invalid_argument("detect_exact_overlap: max_depth must be >= 1");
  constexpr std::size_t kCap = std::size_t{1} << 22;
  OverlapSearch out;
  std::unordered_map<std::string, Word> table;

  auto key_exact = [](const ExactComposite& c) {
    std::string k = c.q.get_str(16);
    for (const auto& v : c.p) k += "," + v.get_str(16);
    return k;
  };
  auto key_float = [](const FloatComposite& c) {
    auto grid = [](double x) { return std::to_string(std::llround(x * 1e12)); };
    std::string k = grid(c.ratio);
    for (double v : c.t) k += "," + grid(v);
    k += ";";
    for (double v : c.orthogonal) k += "," + grid(v);
    return k;
  };

  struct Node {
    Word w;
    ExactComposite e;
    FloatComposite f;
  };
  std::vector<Node> frontier;
  Node root;
  root.e.p.assign(static_cast<std::size_t>(ifs.dimension()), Integer(0));
  root.f.t.assign(static_cast<std::size_t>(ifs.dimension()), 0.0);
  frontier.push_back(std::move(root));
  for (int depth = 1; depth <= max_depth; ++depth) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      for (std::size_t a = 0; a < ifs.size(); ++a) {
        Node child{node.w, node.e, node.f};
        child.w.push_back(static_cast<Symbol>(a));
        std::string key;
        if (ifs.exact_mode()) {
          child.e.append(*ifs.map(a).exact);
          key = key_exact(child.e);
        } else {
          child.f.append(ifs.map(a));
          key = key_float(child.f);
        }
        auto [it, inserted] = table.try_emplace(key, child.w);
        if (!inserted) {
          out.witness = std::make_pair(child.w, it->second);
          out.depth_searched = depth;
          return out;
        }
        if (table.size() >= kCap) {
          out.capped = true;
          out.depth_searched = depth - 1;
          return out;
        }
        next.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
    out.depth_searched = depth;
  }
  return out;
}

}  // namespace ifsda
