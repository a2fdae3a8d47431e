#include "ifsda/config.hpp"

#include "ifsda/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace ifsda {

namespace {

using Section = std::map<std::string, std::string>;

std::string trim(std::string s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

long to_long(const std::string& field, const std::string& v) {
  long x = 0;
  auto t = trim(v);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ValidationError(field, "expected an integer, got '" + v + "'");
  return x;
}

double to_double_field(const std::string& field, const std::string& v) {
  auto t = trim(v);
  if (t.find('/') != std::string::npos) {
    try {
      return ifsda::to_double(parse_rational(t));
    } catch (const std::exception&) {
      throw ValidationError(field, "expected a number, got '" + v + "'");
    }
  }
  try {
    std::size_t pos = 0;
    double x = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ValidationError(field, "expected a number, got '" + v + "'");
  }
}

std::vector<double> to_doubles(const std::string& field, const std::string& v) {
  std::vector<double> out;
  for (const auto& part : split(v, ',')) out.push_back(to_double_field(field, part));
  return out;
}

const std::string* find(const Section& s, const std::string& key) {
  auto it = s.find(key);
  return it == s.end() ? nullptr : &it->second;
}

const std::string& require(const Section& s, const std::string& section, const std::string& key) {
  auto v = find(s, key);
  if (!v) throw ValidationError(section + "." + key, "missing entry");
  return *v;
}

void check_keys(const Section& s, const std::string& section, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : s)
    if (!allowed.count(k)) throw ValidationError(section + "." + k, "unknown entry");
}

SimilarityMap parse_map(const Section& s, const std::string& section, int dim) {
  check_keys(s, section, {"p", "q", "ratio", "translation", "orthogonal"});
  if (find(s, "q")) {
    if (find(s, "ratio") || find(s, "translation") || find(s, "orthogonal"))
      throw ValidationError(section, "give either p, q or ratio, translation");
    long q = to_long(section + ".q", require(s, section, "q"));
    std::vector<long> p;
    for (const auto& part : split(require(s, section, "p"), ',')) p.push_back(to_long(section + ".p", part));
    if (static_cast<int>(p.size()) != dim) throw ValidationError(section + ".p", "expected " + std::to_string(dim) + " entries");
    if (q < 2) throw ValidationError(section + ".q", "q must be an integer >= 2");
    return SimilarityMap::from_exact(std::move(p), q);
  }
  if (find(s, "p")) throw ValidationError(section + ".q", "missing entry");
  double ratio = to_double_field(section + ".ratio", require(s, section, "ratio"));
  auto t = to_doubles(section + ".translation", require(s, section, "translation"));
  if (static_cast<int>(t.size()) != dim)
    throw ValidationError(section + ".translation", "expected " + std::to_string(dim) + " entries");
  std::vector<double> orth;
  if (auto o = find(s, "orthogonal")) {
    for (const auto& row : split(*o, ';')) {
      auto r = to_doubles(section + ".orthogonal", row);
      if (static_cast<int>(r.size()) != dim) throw ValidationError(section + ".orthogonal", "row length mismatch");
      orth.insert(orth.end(), r.begin(), r.end());
    }
  }
  return SimilarityMap::from_float(ratio, std::move(t), std::move(orth));
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

RateFunction parse_rate(const Section& s, double diam) {
  check_keys(s, "rate", {"family", "t", "u", "base", "multiplier", "values", "q", "tau"});
  std::string family = trim(require(s, "rate", "family"));
  auto num = [&](const std::string& key, double fallback) {
    auto v = find(s, key);
    return v ? to_double_field("rate." + key, *v) : fallback;
  };
  double mult = num("multiplier", 1.0);
  if (family == "power") return RateFunction::power(num("t", 1.0), mult);
  if (family == "power-log") return RateFunction::power_log(num("t", 1.0), num("u", 0.0), mult);
  if (family == "geometric") {
    double base = num("base", 0.5);
    if (base < 0) throw ValidationError("rate.base", "must be >= 0");
    return RateFunction::geometric(base, mult);
  }
  if (family == "constant") return RateFunction::constant(num("multiplier", 1.0));
  if (family == "table") {
    auto values = to_doubles("rate.values", require(s, "rate", "values"));
    for (double v : values)
      if (!(v >= 0) || !std::isfinite(v)) throw ValidationError("rate.values", "values must be finite and >= 0");
    return RateFunction::table(values);
  }
  if (family == "tww") {
    long q = to_long("rate.q", require(s, "rate", "q"));
    if (q < 2) throw ValidationError("rate.q", "q must be >= 2");
    return tww_rate(q, num("tau", 1.0), diam);
  }
  throw ValidationError("rate.family", "unknown family '" + family + "'");
}

ExperimentSpec parse_spec_text(const std::string& text, const std::string& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError("spec", std::string("cannot parse: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  ExperimentSpec spec;
  spec.path = path;
  spec.text = text;

  std::vector<std::pair<std::string, Section>> maps;
  Section ifs_sec, weights_sec, rate_sec, target_sec;
  bool have_rate = false;
  for (const auto& [name, node] : tree) {
    Section sec;
    for (const auto& [k, v] : node) sec[k] = trim(v.data());
    if (name.rfind("map:", 0) == 0) {
      if (name.size() == 4) throw ValidationError(name, "missing map label");
      maps.emplace_back(name.substr(4), std::move(sec));
    } else if (name == "ifs") {
      ifs_sec = std::move(sec);
    } else if (name == "weights") {
      weights_sec = std::move(sec);
    } else if (name == "rate") {
      rate_sec = std::move(sec);
      have_rate = true;
    } else if (name == "target") {
      target_sec = std::move(sec);
    } else if (name == "experiment") {
      spec.experiment = std::move(sec);
    } else {
      throw ValidationError(name, "unknown section");
    }
  }

  check_keys(ifs_sec, "ifs", {"dimension", "alphabet"});
  int dim = static_cast<int>(to_long("ifs.dimension", require(ifs_sec, "ifs", "dimension")));
  if (dim < 1) throw ValidationError("ifs.dimension", "must be >= 1");
  if (maps.empty()) throw ValidationError("map", "no [map:<label>] sections");
  std::vector<std::string> alphabet;
  if (auto a = find(ifs_sec, "alphabet")) {
    alphabet = split(*a, ',');
  } else {
    for (const auto& m : maps) alphabet.push_back(m.first);
  }
  std::vector<SimilarityMap> fs;
  for (const auto& label : alphabet) {
    auto it = std::find_if(maps.begin(), maps.end(), [&](const auto& m) { return m.first == label; });
    if (it == maps.end()) throw ValidationError("ifs.alphabet", "no section [map:" + label + "]");
    fs.push_back(parse_map(it->second, "map:" + label, dim));
  }
  if (fs.size() != maps.size()) throw ValidationError("ifs.alphabet", "map sections not listed in the alphabet");
  spec.ifs.emplace(alphabet, std::move(fs));

  check_keys(weights_sec, "weights", {"mode", "values"});
  spec.weights_mode = find(weights_sec, "mode") ? weights_sec["mode"] : "natural";
  if (spec.weights_mode == "natural") {
    spec.weights.emplace(natural_weights(*spec.ifs));
  } else if (spec.weights_mode == "uniform") {
    spec.weights.emplace(ProbabilityVector::uniform(spec.ifs->size()));
  } else if (spec.weights_mode == "explicit") {
    auto parts = split(require(weights_sec, "weights", "values"), ',');
    if (parts.size() != spec.ifs->size()) throw ValidationError("weights.values", "one weight per map is required");
    bool rational = true;
    for (const auto& v : parts) rational = rational && v.find_first_of(".eE") == std::string::npos;
    if (rational) {
      std::vector<Rational> w;
      for (const auto& v : parts) {
        try {
          w.push_back(parse_rational(v));
        } catch (const std::exception&) {
          throw ValidationError("weights.values", "cannot parse '" + v + "'");
        }
      }
      spec.weights.emplace(std::move(w));
    } else {
      spec.weights.emplace(to_doubles("weights.values", weights_sec["values"]));
    }
  } else {
    throw ValidationError("weights.mode", "expected natural, uniform or explicit");
  }

  if (have_rate) spec.rate = parse_rate(rate_sec, spec.ifs->diam());

  check_keys(target_sec, "target", {"mode", "proxy", "power"});
  if (spec.rate) spec.target.rate = *spec.rate;
  if (auto m = find(target_sec, "mode")) {
    if (*m == "cylinder") spec.target.mode = TargetMode::Cylinder;
    else if (*m == "intrinsic-equi") spec.target.mode = TargetMode::IntrinsicEqui;
    else if (*m == "intrinsic-general") spec.target.mode = TargetMode::IntrinsicGeneral;
    else throw ValidationError("target.mode", "expected cylinder, intrinsic-equi or intrinsic-general");
  }
  if (auto m = find(target_sec, "proxy")) {
    if (*m == "upper") spec.target.proxy = DiamProxy::Upper;
    else if (*m == "refined") spec.target.proxy = DiamProxy::Refined;
    else throw ValidationError("target.proxy", "expected upper or refined");
  }
  if (auto m = find(target_sec, "power")) {
    spec.target.power = to_double_field("target.power", *m);
    if (!(spec.target.power > 0)) throw ValidationError("target.power", "must be positive");
  }

  if (spec.has("seed")) {
    auto v = trim(spec.experiment["seed"]);
    std::uint64_t s = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
      throw ValidationError("experiment.seed", "expected a non-negative integer");
    spec.seed = s;
    spec.has_seed = true;
  }
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("spec", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec_text(ss.str(), path);
}

long ExperimentSpec::get_long(const std::string& key, long fallback) const {
  auto it = experiment.find(key);
  return it == experiment.end() ? fallback : to_long("experiment." + key, it->second);
}

double ExperimentSpec::get_double(const std::string& key, double fallback) const {
  auto it = experiment.find(key);
  return it == experiment.end() ? fallback : to_double_field("experiment." + key, it->second);
}

std::string ExperimentSpec::get_string(const std::string& key, const std::string& fallback) const {
  auto it = experiment.find(key);
  return it == experiment.end() ? fallback : it->second;
}

std::vector<long> ExperimentSpec::get_long_list(const std::string& key, const std::vector<long>& fallback) const {
  auto it = experiment.find(key);
  if (it == experiment.end()) return fallback;
  std::vector<long> out;
  for (const auto& part : split(it->second, ',')) out.push_back(to_long("experiment." + key, part));
  return out;
}

}  // namespace ifsda
