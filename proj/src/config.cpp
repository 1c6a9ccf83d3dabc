#include "resbound/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "resbound/errors.hpp"
#include "resbound/numeric.hpp"

namespace resbound {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + s + "' is not a number");
  }
}

long long to_int(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': '" + s + "' is not an integer");
  }
}

std::vector<double> to_doubles(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& w : words(s)) out.push_back(to_double(key, w));
  return out;
}

}  // namespace

ExperimentConfig parse_config(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
    kv[key] = trim(t.substr(eq + 1));
  }

  ExperimentConfig c;
  bool have_seed = false;
  double huber_q = 0.9;
  double student_nu = 4.0;
  bool tyler_known = true;
  FixedPointOptions fp;
  std::vector<std::string> estimator_names;
  for (const auto& [key, value] : kv) {
    if (key == "dimension") {
      c.dimension = static_cast<int>(to_int(key, value));
    } else if (key == "mu") {
      c.mu = to_doubles(key, value);
    } else if (key == "sigma") {
      c.sigma = to_doubles(key, value);
    } else if (key == "generator") {
      c.generator = value;
    } else if (key == "shape") {
      c.shape = to_double(key, value);
    } else if (key == "constraint") {
      if (value == "trace") {
        c.constraint = Constraint::TraceN;
      } else if (value == "det") {
        c.constraint = Constraint::Det1;
      } else {
        throw ConfigError("constraint must be trace or det");
      }
    } else if (key == "interest") {
      c.interest = parse_interest(value);
    } else if (key == "seed") {
      try {
        std::size_t pos = 0;
        c.seed = std::stoull(value, &pos);
        if (pos != value.size() || value[0] == '-') throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError("seed must be an unsigned integer");
      }
      have_seed = true;
    } else if (key == "M") {
      c.m = to_int(key, value);
    } else if (key == "R") {
      c.r = static_cast<int>(to_int(key, value));
    } else if (key == "bound_M") {
      c.bound_m = to_int(key, value);
    } else if (key == "schedule") {
      c.schedule.clear();
      for (const auto& w : words(value)) c.schedule.push_back(static_cast<int>(to_int(key, w)));
    } else if (key == "family") {
      c.family = parse_family(value);
    } else if (key == "rtol") {
      c.rtol = to_double(key, value);
    } else if (key == "estimators") {
      estimator_names = words(value);
    } else if (key == "huber_q") {
      huber_q = to_double(key, value);
    } else if (key == "student_nu") {
      student_nu = to_double(key, value);
    } else if (key == "tyler_center") {
      if (value != "known" && value != "joint") throw ConfigError("tyler_center must be known or joint");
      tyler_known = value == "known";
    } else if (key == "tol") {
      fp.tol = to_double(key, value);
    } else if (key == "max_iter") {
      fp.max_iter = static_cast<int>(to_int(key, value));
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }

  if (c.dimension < 1) throw ConfigError("dimension must be given and >= 1");
  if (c.generator.empty()) throw ConfigError("generator must be given");
  if (!have_seed) throw ConfigError("seed must be given");
  if (c.mu.empty()) c.mu.assign(static_cast<std::size_t>(c.dimension), 0.0);
  if (c.sigma.empty()) {
    c.sigma.assign(static_cast<std::size_t>(c.dimension * c.dimension), 0.0);
    for (int i = 0; i < c.dimension; ++i) c.sigma[static_cast<std::size_t>(i * c.dimension + i)] = 1.0;
  }
  if (static_cast<int>(c.mu.size()) != c.dimension) throw ConfigError("mu needs dimension entries");
  if (static_cast<int>(c.sigma.size()) != c.dimension * c.dimension) {
    throw ConfigError("sigma needs dimension^2 entries");
  }
  if (c.m < 2) throw ConfigError("M must be >= 2");
  if (c.bound_m < 2) throw ConfigError("bound_M must be >= 2");
  if (c.schedule.empty()) throw ConfigError("schedule must not be empty");
  if (estimator_names.empty()) estimator_names = {"sample_moments", "tyler"};
  for (const auto& name : estimator_names) {
    EstimatorSpec spec;
    spec.id = parse_estimator(name);
    spec.huber_q = huber_q;
    spec.student_nu = student_nu;
    spec.tyler_known_center = tyler_known;
    spec.options = fp;
    c.estimators.push_back(spec);
  }
  c.model();  // validates the generator and scatter
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config '" + path + "'");
  return parse_config(is);
}

ResModel ExperimentConfig::model() const {
  const int n = dimension;
  DensityGenerator g = [&] {
    if (generator == "gaussian") return DensityGenerator::gaussian(n);
    if (generator == "student_t") return DensityGenerator::student_t(shape, n);
    if (generator == "generalized_gaussian") return DensityGenerator::generalized_gaussian(shape, n);
    throw ConfigError("unknown generator '" + generator + "'");
  }();
  Vector m(n);
  for (int i = 0; i < n; ++i) m(i) = mu[static_cast<std::size_t>(i)];
  Matrix s(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s(i, j) = sigma[static_cast<std::size_t>(i * n + j)];
  }
  return ResModel(m, s, g, constraint);
}

ParamPartition ExperimentConfig::partition() const { return ParamPartition::make(dimension, interest); }

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  auto list = [&os](const auto& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << format_double(static_cast<double>(v[i]));
  };
  os << "dimension=" << dimension << "\nmu=";
  list(mu);
  os << "\nsigma=";
  list(sigma);
  os << "\ngenerator=" << generator << "\nshape=" << format_double(shape)
     << "\nconstraint=" << to_string(constraint) << "\ninterest=" << to_string(interest)
     << "\nseed=" << seed << "\nM=" << m << "\nR=" << r << "\nbound_M=" << bound_m << "\nschedule=";
  list(schedule);
  os << "\nfamily=" << to_string(family) << "\nrtol=" << format_double(rtol) << "\nestimators=";
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    const auto& e = estimators[i];
    os << (i ? " " : "") << to_string(e.id) << '(' << format_double(e.huber_q) << ','
       << format_double(e.student_nu) << ',' << (e.tyler_known_center ? "known" : "joint") << ','
       << format_double(e.options.tol) << ',' << e.options.max_iter << ')';
  }
  os << '\n';
  return os.str();
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

}  // namespace resbound
