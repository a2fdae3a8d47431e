#include "ifsda/cli.hpp"

#include "ifsda/config.hpp"
#include "ifsda/dimension_mtp.hpp"
#include "ifsda/errors.hpp"
#include "ifsda/limsup_lab.hpp"
#include "ifsda/parallel.hpp"
#include "ifsda/word_stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace ifsda {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

struct Context {
  ExperimentSpec spec;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool has_seed = false;
  int threads = 1;
  std::optional<long> budget;
  std::optional<std::string> value;
  bool partial = false;

  std::uint64_t require_seed() const {
    if (!has_seed) throw ValidationError("experiment.seed", "a seed is required (spec entry or --seed)");
    return seed;
  }
  Json meta() const {
    Json m;
    m["tool"] = "ifsda";
    m["version"] = kVersion;
    m["spec_hash"] = hex64(fnv1a64(spec.text));
    m["seed"] = has_seed ? Json(seed) : Json(nullptr);
    return m;
  }
};

std::string timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_csv(const Context& ctx, const std::string& name, const std::vector<std::string>& header,
               const std::vector<std::string>& units, const std::vector<std::vector<std::string>>& rows) {
  fs::create_directories(ctx.out_dir);
  std::ofstream f(fs::path(ctx.out_dir) / (name + ".csv"), std::ios::binary);
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) f << (i ? "," : "") << cells[i];
    f << "\n";
  };
  // the only line that differs between replays
  f << "# generated_at=" << timestamp() << "\n";
  f << "# ifsda " << kVersion << " spec_hash=" << hex64(fnv1a64(ctx.spec.text))
    << " seed=" << (ctx.has_seed ? std::to_string(ctx.seed) : "none") << "\n";
  line(header);
  line(units);
  for (const auto& r : rows) line(r);
}

void write_json(const Context& ctx, const std::string& name, Json body, std::ostream& out) {
  Json doc;
  doc["meta"] = ctx.meta();
  doc["command"] = name;
  for (auto& [k, v] : body.items()) doc[k] = v;
  fs::create_directories(ctx.out_dir);
  std::ofstream f(fs::path(ctx.out_dir) / (name + ".json"), std::ios::binary);
  f << doc.dump(2) << "\n";
  out << doc.dump(2) << "\n";
}

Json word_json(const IFSystem& ifs, std::span<const Symbol> w) { return format_word(ifs, w); }

double default_eps(const Context& ctx) {
  if (ctx.spec.has("eps")) return ctx.spec.get_double("eps", 0);
  try {
    return epsilon_star(ctx.spec.system(), ctx.spec.p());
  } catch (const std::domain_error& e) {
    throw ValidationError("weights", e.what());
  }
}

const RateFunction& require_rate(const Context& ctx) {
  if (!ctx.spec.rate) throw ValidationError("rate", "this command needs a [rate] section");
  return *ctx.spec.rate;
}

// ---- analyze ----

void cmd_analyze(Context& ctx, std::ostream& out) {
  const auto& ifs = ctx.spec.system();
  const auto& p = ctx.spec.p();
  Json j;
  j["alphabet"] = ifs.alphabet();
  j["dimension"] = ifs.dimension();
  j["exact_mode"] = ifs.exact_mode();
  j["equicontractive"] = ifs.equicontractive();
  j["ratios"] = ifs.ratios();
  double s = similarity_dimension(ifs);
  j["dim_S"] = s;
  j["weights_mode"] = ctx.spec.weights_mode;
  j["weights"] = p.weights();
  double h = entropy(p), chi = lyapunov(ifs, p);
  j["entropy"] = h;
  j["lyapunov"] = chi;
  j["entropy_over_lyapunov"] = h / chi;
  auto mi = check_measure_inequality(p);
  j["measure_inequality"] = {{"holds", mi.holds}, {"margin", mi.margin}};
  try {
    j["epsilon_star"] = epsilon_star(ifs, p);
  } catch (const std::domain_error&) {
    j["epsilon_star"] = nullptr;
  }
  int depth = static_cast<int>(ctx.spec.get_long("depth", 6));
  auto sep = separation_check(ifs, depth);
  Json sj;
  sj["verdict"] = to_string(sep.verdict);
  sj["gap_lower"] = sep.gap_lower;
  sj["depth"] = sep.depth_used;
  if (sep.overlap) sj["overlap"] = {word_json(ifs, sep.overlap->first), word_json(ifs, sep.overlap->second)};
  j["separation"] = sj;
  const auto& b = ifs.bounds();
  Json hull;
  hull["mode"] = b.mode == HullMode::Box ? "box" : "ball";
  if (b.mode == HullMode::Box) {
    hull["lo"] = b.lo;
    hull["hi"] = b.hi;
  }
  hull["center"] = b.center;
  hull["radius"] = b.radius;
  j["hull"] = hull;
  j["diam"] = {{"upper", b.diam_upper}, {"refined", b.diam_refined}, {"refine_error", b.refine_error}};
  write_json(ctx, "analyze", j, out);
}

// ---- enumerate ----

Enumeration enumerate_cached(Context& ctx, int depth, std::string& status) {
  const auto& ifs = ctx.spec.system();
  fs::path dir = fs::path(ctx.out_dir) / "cache";
  fs::create_directories(dir);
  std::string file = (dir / ("enum-" + hex64(fnv1a64(ifs.canonical_text())) + "-d" + std::to_string(depth) + ".bin")).string();
  if (auto cached = read_enumeration_cache(file, ifs, depth)) {
    if (cached->points.empty()) {
      status = "hit";
      return std::move(*cached);
    }
    std::size_t i = derive_seed(ctx.seed, 0) % cached->points.size();
    const auto& pt = cached->points[i];
    bool ok = project_exact(ifs, pt.canonical_code) == pt.value &&
              intrinsic_denominator(ifs, pt.canonical_code, depth + 1).q_int == pt.q_int;
    if (ok) {
      status = "hit";
      return std::move(*cached);
    }
    status = "rebuilt";
  } else {
    status = "miss";
  }
  std::size_t cap = ctx.budget ? static_cast<std::size_t>(*ctx.budget) : 10'000'000;
  auto e = enumerate_rationals(ifs, depth, cap, ctx.threads);
  write_enumeration_cache(file, ifs, depth, e);
  return e;
}

void cmd_enumerate(Context& ctx, std::ostream& out) {
  const auto& ifs = ctx.spec.system();
  if (!ifs.exact_mode()) throw ValidationError("map", "enumerate needs maps given by p, q");
  int depth = static_cast<int>(ctx.spec.get_long("depth", 6));
  if (depth < 1) throw ValidationError("experiment.depth", "must be >= 1");
  std::string status;
  auto e = enumerate_cached(ctx, depth, status);
  std::vector<std::vector<std::string>> rows;
  long certified = 0;
  for (const auto& pt : e.points) {
    std::string codes;
    for (std::size_t i = 0; i < pt.codes.size(); ++i) codes += (i ? " " : "") + format_code(ifs, pt.codes[i]);
    rows.push_back({"\"" + to_string(pt.value) + "\"", format_code(ifs, pt.canonical_code), pt.q_int.get_str(),
                    std::to_string(pt.n_param), std::to_string(pt.l_param), pt.reduced_q.get_str(),
                    pt.certified ? "1" : "0", "\"" + codes + "\""});
    certified += pt.certified;
  }
  write_csv(ctx, "enumerate", {"value", "canonical_code", "q_int", "n", "l", "reduced_q", "certified", "codes"},
            {"exact rational", "u|v", "intrinsic denominator", "symbols", "preperiod length", "lcm of reduced denominators",
             "1 if minimal over all lengths", "all codes within depth"},
            rows);
  Json j;
  j["depth"] = depth;
  j["points"] = e.points.size();
  j["certified"] = certified;
  j["codes_visited"] = e.codes_visited;
  j["partial"] = e.partial;
  j["cache"] = status;
  if (e.partial) ctx.partial = true;
  write_json(ctx, "enumerate", j, out);
}

// ---- qint ----

void cmd_qint(Context& ctx, std::ostream& out) {
  const auto& ifs = ctx.spec.system();
  if (!ifs.exact_mode()) throw ValidationError("map", "qint needs maps given by p, q");
  std::string text = ctx.value ? *ctx.value : ctx.spec.get_string("value", "");
  if (text.empty()) throw ValidationError("value", "give --value or experiment.value");
  RationalVector x;
  try {
    x = parse_rational_vector(text);
  } catch (const std::exception& e) {
    throw ValidationError("value", e.what());
  }
  if (x.size() != static_cast<std::size_t>(ifs.dimension())) throw ValidationError("value", "dimension mismatch");
  int max_len = static_cast<int>(ctx.spec.get_long("max_len", 32));
  std::size_t budget = ctx.budget ? static_cast<std::size_t>(*ctx.budget) : 1'000'000;
  auto code = code_of_point(ifs, x, max_len, budget);
  if (!code) throw ValidationError("value", "no eventually periodic code of length <= " + std::to_string(max_len));
  auto q = intrinsic_denominator_auto(ifs, *code, static_cast<int>(ctx.spec.get_long("max_cap", 64)));
  Json j;
  j["value"] = to_string(x);
  j["code"] = format_code(ifs, *code);
  j["q_int"] = q.q_int.get_str();
  j["n"] = q.n;
  j["l"] = q.l;
  j["word"] = format_word(ifs, q.word);
  j["certified"] = q.certified;
  j["complete"] = q.complete;
  j["reduced_q"] = reduced_denominator(x).get_str();
  if (!q.complete) ctx.partial = true;
  write_json(ctx, "qint", j, out);
}

// ---- series ----

void cmd_series(Context& ctx, std::ostream& out) {
  const auto& ifs = ctx.spec.system();
  const auto& g = require_rate(ctx);
  double dim = similarity_dimension(ifs);
  double s = ctx.spec.get_double("s", dim);
  long horizon = ctx.spec.get_long("horizon", 100'000);
  if (horizon < 2) throw ValidationError("experiment.horizon", "must be >= 2");
  auto r = series_classify(g, ifs, s, horizon);
  auto d = series_classify_direct(g, s, horizon);
  std::vector<std::vector<std::string>> rows;
  for (auto [n, v] : r.partial_sums) rows.push_back({std::to_string(n), num(v)});
  write_csv(ctx, "series", {"n", "partial_sum"}, {"level", "sum_{m<=n} sum_{|a|=m} m (Diam(X_a) g(m))^s"}, rows);
  Json j;
  j["rate"] = g.describe();
  j["s"] = s;
  j["dim_S"] = dim;
  j["rho"] = r.rho;
  j["verdict"] = to_string(r.verdict);
  j["reason"] = r.reason;
  j["direct_verdict"] = to_string(d.verdict);
  j["critical_power_exponent"] = critical_power_exponent(s);
  write_json(ctx, "series", j, out);
}

// ---- word statistics ----

void cmd_frequent(Context& ctx, std::ostream& out) {
  const auto& p = ctx.spec.p();
  long n = ctx.spec.get_long("n", 200);
  long samples = ctx.spec.get_long("samples", 10'000);
  if (n < 1 || samples < 1) throw ValidationError("experiment", "n and samples must be positive");
  auto e = estimate_frequent_measure(p, n, samples, ctx.require_seed(), ctx.threads);
  Json j;
  j["n"] = n;
  j["k_n"] = k_n(p, n);
  j["samples"] = samples;
  j["hits"] = e.hits;
  j["estimate"] = e.estimate;
  j["stderr"] = e.stderr_;
  j["threshold"] = 7.0 / 32.0;
  j["passes"] = e.estimate >= 7.0 / 32.0 - 3 * e.stderr_;
  write_json(ctx, "lemma31", j, out);
}

void cmd_bad(Context& ctx, std::ostream& out) {
  const auto& ifs = ctx.spec.system();
  const auto& p = ctx.spec.p();
  double eps = default_eps(ctx);
  auto ns = ctx.spec.get_long_list("n_list", {50, 100, 200, 400});
  long samples = ctx.spec.get_long("samples", 10'000);
  auto rep = estimate_bad_measure(ifs, p, eps, ns, samples, ctx.require_seed(), ctx.threads);
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : rep.rows)
    rows.push_back({std::to_string(r.n), std::to_string(r.k), num(r.est.estimate), num(r.est.stderr_)});
  write_csv(ctx, "lemma32", {"n", "k_n", "estimate", "stderr"},
            {"word length", "window length", "fraction of words in Bad(n, eps)", "binomial standard error"}, rows);
  Json j;
  j["eps"] = eps;
  j["samples"] = samples;
  j["fitted_gamma"] = rep.fitted_gamma ? Json(*rep.fitted_gamma) : Json(nullptr);
  write_json(ctx, "lemma32", j, out);
}

void cmd_good_sets(Context& ctx, std::ostream& out) {
  const auto& ifs = ctx.spec.system();
  const auto& p = ctx.spec.p();
  double eps = default_eps(ctx);
  long n = ctx.spec.get_long("n", 200);
  long samples = ctx.spec.get_long("samples", 10'000);
  auto rep = estimate_good_measure(ifs, p, eps, n, samples, ctx.require_seed(), ctx.threads);
  Json j;
  j["n"] = n;
  j["eps"] = eps;
  j["samples"] = samples;
  j["estimate"] = rep.est.estimate;
  j["stderr"] = rep.est.stderr_;
  j["invalid_witnesses"] = rep.invalid_witnesses;
  j["mean_witness_size"] = rep.mean_witness_size;
  j["threshold"] = 7.0 / 64.0;
  j["passes"] = rep.invalid_witnesses == 0 && rep.est.estimate >= 7.0 / 64.0 - 3 * rep.est.stderr_;
  write_json(ctx, "good-sets", j, out);
}

// ---- level sets ----

struct Levels {
  std::vector<LevelSet> sets;
  RateFunction g2;
  double eps = 0;
  double dim = 0;
  DepthThreshold threshold;
};

Levels build_levels(Context& ctx) {
  const auto& ifs = ctx.spec.system();
  const auto& p = ctx.spec.p();
  Levels L;
  L.dim = similarity_dimension(ifs);
  L.eps = default_eps(ctx);
  RateFunction g = ctx.spec.rate ? *ctx.spec.rate : RateFunction::constant(1.0);
  bool equi = ctx.spec.get_long("equi_variant", 0) != 0;
  L.g2 = g2_transform(g1_transform(g, L.dim, equi), L.dim);
  Word c;
  try {
    c = parse_word(ifs, ctx.spec.get_string("prefix", ifs.alphabet().front()));
  } catch (const std::exception& e) {
    throw ValidationError("experiment.prefix", e.what());
  }
  long n0 = ctx.spec.get_long("n0", 12), n1 = ctx.spec.get_long("n1", 18);
  if (n0 < 1 || n1 < n0) throw ValidationError("experiment.n0", "need 1 <= n0 <= n1");
  L.threshold = choose_depth_threshold(ifs, p, L.eps, static_cast<int>(n1));
  LevelSetOptions opt;
  opt.threads = ctx.threads;
  opt.sample_budget = static_cast<std::size_t>(ctx.spec.get_long("samples", 100'000));
  opt.seed = ctx.seed;
  for (long n = n0; n <= n1; ++n) {
    if (std::pow(static_cast<double>(ifs.size()), static_cast<double>(n)) > static_cast<double>(opt.exact_limit))
      ctx.require_seed();
    L.sets.push_back(build_level_set(ifs, p, c, static_cast<int>(n), L.eps, L.g2, opt));
  }
  return L;
}

Json levels_json(const Levels& L) {
  Json j;
  j["eps"] = L.eps;
  j["dim_S"] = L.dim;
  j["g2"] = L.g2.describe();
  j["threshold_N"] = L.threshold.N;
  j["gamma"] = L.threshold.gamma;
  j["threshold_ok"] = L.threshold.ok;
  return j;
}

void cmd_levelsets(Context& ctx, std::ostream& out) {
  const auto& ifs = ctx.spec.system();
  const auto& p = ctx.spec.p();
  auto L = build_levels(ctx);
  std::vector<std::vector<std::string>> rows;
  Json levels = Json::array();
  double lo = INFINITY, hi = 0;
  for (const auto& E : L.sets) {
    Rational m = level_set_measure(E, p, ctx.threads);
    double rho = level_set_density(E, p, L.dim);
    if (rho > 0) {
      lo = std::min(lo, rho);
      hi = std::max(hi, rho);
    }
    long short_ext = 0;
    for (const auto& cyl : E.cylinders) {
      auto e = E.params(cyl);
      if (e.h == 1 && !(e.j > cyl.l + E.k)) ++short_ext;
    }
    rows.push_back({std::to_string(E.n), std::to_string(E.k), num(E.g2_value), E.exact ? "exact" : "sampled",
                    std::to_string(E.bases.size()), std::to_string(E.cylinders.size()), to_string(m),
                    num(to_double(m)), num(rho)});
    levels.push_back({{"n", E.n}, {"mode", E.exact ? "exact" : "sampled"}, {"cylinders", E.cylinders.size()},
                      {"measure", to_string(m)}, {"density", rho}, {"short_extension_violations", short_ext}});
  }
  write_csv(ctx, "levelsets",
            {"n", "k_n", "g2", "mode", "bases", "cylinders", "measure", "measure_float", "density"},
            {"level", "window length", "g2(|c|+n)", "exact or sampled", "Good words", "disjoint cylinders",
             "m(E_n) exact", "m(E_n)", "m(E_n)/(m([c]) n g2^dim_S)"},
            rows);
  Json j = levels_json(L);
  j["prefix"] = format_word(ifs, L.sets.front().c);
  j["levels"] = levels;
  j["density_spread"] = lo > 0 && std::isfinite(lo) ? Json(hi / lo) : Json(nullptr);
  write_json(ctx, "levelsets", j, out);
}

void cmd_kochen_stone(Context& ctx, std::ostream& out) {
  const auto& p = ctx.spec.p();
  auto L = build_levels(ctx);
  if (L.sets.size() < 2) throw ValidationError("experiment.n1", "need at least two levels");
  auto ks = kochen_stone_bound(L.sets, p, ctx.threads);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < L.sets.size(); ++i)
    rows.push_back({std::to_string(L.sets[i].n), to_string(ks.level_measures[i]), num(ks.prefix_bounds[i])});
  write_csv(ctx, "kochen-stone", {"n", "measure", "bound_through_n"},
            {"level", "m(E_n) exact", "(sum m)^2 / sum m(E_i cap E_j) over levels up to n"}, rows);
  Json j = levels_json(L);
  j["bound"] = ks.bound;
  j["normalized"] = ks.normalized;
  j["numerator"] = to_string(ks.numerator);
  j["denominator"] = to_string(ks.denominator);
  j["cauchy_schwarz_ok"] = ks.cauchy_schwarz_ok;
  j["increments_ok"] = ks.increments_ok;
  write_json(ctx, "kochen-stone", j, out);
}

// ---- hit rate ----

void cmd_hitrate(Context& ctx, std::ostream& out) {
  const auto& ifs = ctx.spec.system();
  const auto& p = ctx.spec.p();
  require_rate(ctx);
  long n0 = ctx.spec.get_long("n0", 1), n1 = ctx.spec.get_long("n1", 20);
  long samples = ctx.spec.get_long("samples", 1000);
  std::size_t budget = ctx.budget ? static_cast<std::size_t>(*ctx.budget) : 1'000'000;
  auto curve = hit_rate(ifs, p, ctx.spec.target, static_cast<int>(n0), static_cast<int>(n1), samples,
                        ctx.require_seed(), ctx.threads, budget);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < curve.cumulative.size(); ++i)
    rows.push_back({std::to_string(n0 + static_cast<long>(i)), num(curve.cumulative[i])});
  write_csv(ctx, "hitrate", {"n", "cumulative_fraction"}, {"level", "fraction of samples hit at some level <= n"},
            rows);
  Json j;
  j["mode"] = to_string(ctx.spec.target.mode);
  j["rate"] = ctx.spec.target.rate.describe();
  j["power"] = ctx.spec.target.power;
  j["samples"] = samples;
  j["final_fraction"] = curve.cumulative.back();
  j["stderr"] = curve.stderr_final;
  j["partial"] = curve.partial;
  if (auto fm = first_moment_bound(ifs, p, ctx.spec.target, static_cast<int>(n0), static_cast<int>(n1)))
    j["first_moment_bound"] = {{"constant", fm->constant}, {"exponent", fm->exponent}, {"bound", fm->bound}};
  else
    j["first_moment_bound"] = nullptr;
  if (curve.partial) ctx.partial = true;
  write_json(ctx, "hitrate", j, out);
}

// ---- dimension ----

void cmd_dimension(Context& ctx, std::ostream& out) {
  const auto& ifs = ctx.spec.system();
  long k0 = ctx.spec.get_long("k_min", 2), k1 = ctx.spec.get_long("k_max", 10);
  std::size_t cap = ctx.budget ? static_cast<std::size_t>(*ctx.budget) : 20'000'000;
  auto b = box_dimension(ifs, static_cast<int>(k0), static_cast<int>(k1), ctx.threads, cap);
  std::vector<std::vector<std::string>> rows;
  for (auto [delta, count] : b.counts) rows.push_back({num(delta), std::to_string(count)});
  write_csv(ctx, "dimension", {"delta", "count"}, {"scale r_max^k", "distinct maps in the Moran cut"}, rows);
  double s = similarity_dimension(ifs);
  auto sep = separation_check(ifs, static_cast<int>(ctx.spec.get_long("depth", 6)));
  Json j;
  j["estimate"] = b.estimate;
  j["residual"] = b.residual;
  j["dim_S"] = s;
  j["upper_bound"] = std::min(s, static_cast<double>(ifs.dimension()));
  j["separation"] = to_string(sep.verdict);
  bool ssc = sep.verdict == Separation::SSCWitnessed;
  j["dim_H"] = ssc ? s : b.estimate;
  j["dim_H_source"] = ssc ? "similarity" : "box-estimate";
  write_json(ctx, "dimension", j, out);
}

void cmd_covering(Context& ctx, std::ostream& out) {
  const auto& ifs = ctx.spec.system();
  require_rate(ctx);
  double s = ctx.spec.get_double("s", similarity_dimension(ifs));
  long n0 = ctx.spec.get_long("n0", 1), n1 = ctx.spec.get_long("n1", 50);
  auto c = covering_sum(ifs, ctx.spec.target, s, static_cast<int>(n0), static_cast<int>(n1));
  std::vector<std::vector<std::string>> rows;
  double acc = 0;
  for (auto [n, v] : c.terms) {
    acc += v;
    rows.push_back({std::to_string(n), num(v), num(acc)});
  }
  write_csv(ctx, "covering", {"n", "term", "partial_sum"},
            {"level", "sum over level-n targets of n radius^s", "sum of terms from n0"}, rows);
  Json j;
  j["s"] = s;
  j["mode"] = to_string(ctx.spec.target.mode);
  j["finite_sum"] = c.finite_sum;
  j["tail_limit"] = c.tail_limit ? finite_or_null(*c.tail_limit) : Json(nullptr);
  j["verdict"] = to_string(c.verdict);
  j["hausdorff_measure_zero"] = c.measure_zero;
  write_json(ctx, "covering", j, out);
}

// ---- cache io ----

void put_u32(std::ostream& o, std::uint32_t v) { o.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_u64(std::ostream& o, std::uint64_t v) { o.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_i32(std::ostream& o, std::int32_t v) { o.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_str(std::ostream& o, const std::string& s) {
  put_u32(o, static_cast<std::uint32_t>(s.size()));
  o.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
bool get(std::istream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}
bool get_str(std::istream& in, std::string& s) {
  std::uint32_t n = 0;
  if (!get(in, n) || n > (1u << 26)) return false;
  s.resize(n);
  return static_cast<bool>(in.read(s.data(), n));
}

constexpr char kMagic[8] = {'I', 'F', 'S', 'D', 'A', 'E', 'N', 'U'};
constexpr std::uint32_t kCacheVersion = 1;

}  // namespace

void write_enumeration_cache(const std::string& path, const IFSystem& ifs, int depth, const Enumeration& e) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary);
    o.write(kMagic, sizeof kMagic);
    put_u32(o, kCacheVersion);
    put_u64(o, fnv1a64(ifs.canonical_text()));
    put_i32(o, depth);
    o.put(e.partial ? 1 : 0);
    put_u64(o, e.codes_visited);
    put_u64(o, e.points.size());
    for (const auto& pt : e.points) {
      put_str(o, to_string(pt.value));
      put_str(o, format_code(ifs, pt.canonical_code));
      put_str(o, pt.q_int.get_str());
      put_i32(o, pt.n_param);
      put_i32(o, pt.l_param);
      put_str(o, pt.reduced_q.get_str());
      o.put(pt.certified ? 1 : 0);
      put_u32(o, static_cast<std::uint32_t>(pt.codes.size()));
      for (const auto& c : pt.codes) put_str(o, format_code(ifs, c));
    }
  }
  fs::rename(tmp, path);
}

std::optional<Enumeration> read_enumeration_cache(const std::string& path, const IFSystem& ifs, int depth) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kMagic)) return std::nullopt;
  std::uint32_t version = 0;
  std::uint64_t hash = 0, visited = 0, count = 0;
  std::int32_t d = 0;
  if (!get(in, version) || version != kCacheVersion) return std::nullopt;
  if (!get(in, hash) || hash != fnv1a64(ifs.canonical_text())) return std::nullopt;
  if (!get(in, d) || d != depth) return std::nullopt;
  char partial = 0;
  if (!in.get(partial) || !get(in, visited) || !get(in, count)) return std::nullopt;
  Enumeration e;
  e.partial = partial != 0;
  e.codes_visited = visited;
  try {
    for (std::uint64_t i = 0; i < count; ++i) {
      RationalPoint pt;
      std::string s;
      if (!get_str(in, s)) return std::nullopt;
      pt.value = parse_rational_vector(s);
      if (!get_str(in, s)) return std::nullopt;
      pt.canonical_code = parse_code(ifs, s);
      if (!get_str(in, s)) return std::nullopt;
      pt.q_int = Integer(s);
      if (!get(in, pt.n_param) || !get(in, pt.l_param)) return std::nullopt;
      if (!get_str(in, s)) return std::nullopt;
      pt.reduced_q = Integer(s);
      char cert = 0;
      if (!in.get(cert)) return std::nullopt;
      pt.certified = cert != 0;
      std::uint32_t nc = 0;
      if (!get(in, nc)) return std::nullopt;
      for (std::uint32_t c = 0; c < nc; ++c) {
        if (!get_str(in, s)) return std::nullopt;
        pt.codes.push_back(parse_code(ifs, s));
      }
      e.points.push_back(std::move(pt));
    }
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return e;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ifsda: experiments on self-similar sets, their rational points and limsup sets"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string spec_path, out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<long> budget;
  std::optional<std::string> value;
  app.add_option("--spec", spec_path, "experiment spec file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "seed (overrides the spec)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--budget", budget, "node budget for searches")->check(CLI::PositiveNumber);

  using Handler = void (*)(Context&, std::ostream&);
  const std::vector<std::pair<std::string, Handler>> commands = {
      {"analyze", cmd_analyze},     {"enumerate", cmd_enumerate},   {"qint", cmd_qint},
      {"series", cmd_series},       {"lemma31", cmd_frequent},       {"lemma32", cmd_bad},
      {"good-sets", cmd_good_sets}, {"levelsets", cmd_levelsets},   {"kochen-stone", cmd_kochen_stone},
      {"hitrate", cmd_hitrate},     {"dimension", cmd_dimension},   {"covering", cmd_covering}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, h] : commands) {
    auto* sub = app.add_subcommand(name, "run " + name);
    if (name == "qint") sub->add_option("--value", value, "rational point, e.g. 1/4 or (1/2, 1/3)");
    subs.push_back(sub);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  Context ctx;
  try {
    ctx.spec = load_spec(spec_path);
    ctx.out_dir = out_dir;
    ctx.has_seed = ctx.spec.has_seed || seed.has_value();
    ctx.seed = seed ? *seed : ctx.spec.seed;
    ctx.threads = threads ? *threads : static_cast<int>(ctx.spec.get_long("threads", 1));
    if (ctx.threads < 1) throw ValidationError("experiment.threads", "must be >= 1");
    ctx.budget = budget;
    if (!ctx.budget && ctx.spec.has("budget")) ctx.budget = ctx.spec.get_long("budget", 0);
    if (ctx.budget && *ctx.budget < 1) throw ValidationError("experiment.budget", "must be >= 1");
    ctx.value = value;
    for (std::size_t i = 0; i < commands.size(); ++i)
      if (subs[i]->parsed()) commands[i].second(ctx, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return ctx.partial ? 3 : 0;
}

}  // namespace ifsda
