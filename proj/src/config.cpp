#include "solspeck/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace solspeck {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(trim(tok));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

double parse_double(const std::string& v, const std::string& file, int line,
                    const std::string& key) {
  size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(file, line, "value '" + v + "' for " + key + " is not a number");
  }
  if (pos != v.size())
    throw ConfigError(file, line, "trailing junk after number in " + key + ": '" + v + "'");
  if (!std::isfinite(x))
    throw ConfigError(file, line, key + " must be finite");
  return x;
}

long parse_long(const std::string& v, const std::string& file, int line,
                const std::string& key) {
  size_t pos = 0;
  long x;
  try {
    x = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(file, line, "value '" + v + "' for " + key + " is not an integer");
  }
  if (pos != v.size())
    throw ConfigError(file, line, "trailing junk after integer in " + key + ": '" + v + "'");
  return x;
}

bool parse_bool(const std::string& v, const std::string& file, int line,
                const std::string& key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError(file, line, key + " expects true/false, got '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& v, const std::string& file,
                                      int line, const std::string& key) {
  std::vector<double> out;
  for (const auto& tok : split(v, ',')) {
    if (tok.empty())
      throw ConfigError(file, line, "empty entry in " + key + " list");
    out.push_back(parse_double(tok, file, line, key));
  }
  if (out.empty()) throw ConfigError(file, line, key + " list is empty");
  return out;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += fmt(xs[i]);
  }
  return out;
}

}  // namespace

std::vector<uint64_t> parse_seed_list(const std::string& text) {
  std::vector<uint64_t> out;
  std::set<uint64_t> seen;
  auto push = [&](uint64_t s) {
    if (!seen.insert(s).second)
      throw std::runtime_error("duplicate seed " + std::to_string(s) + " in seed list");
    out.push_back(s);
  };
  auto one = [&](const std::string& tok) -> uint64_t {
    size_t pos = 0;
    uint64_t v;
    try {
      v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
      throw std::runtime_error("bad seed '" + tok + "'");
    }
    if (pos != tok.size()) throw std::runtime_error("bad seed '" + tok + "'");
    return v;
  };
  for (const auto& tok : split(text, ',')) {
    if (tok.empty()) throw std::runtime_error("empty entry in seed list");
    size_t dots = tok.find("..");
    if (dots == std::string::npos) {
      push(one(tok));
    } else {
      uint64_t a = one(trim(tok.substr(0, dots)));
      uint64_t b = one(trim(tok.substr(dots + 2)));
      if (b < a) throw std::runtime_error("descending seed range '" + tok + "'");
      if (b - a >= 1000000) throw std::runtime_error("seed range '" + tok + "' is implausibly large");
      for (uint64_t s = a; s <= b; ++s) push(s);
    }
  }
  if (out.empty()) throw std::runtime_error("seed list is empty");
  return out;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& name) {
  ExperimentConfig cfg;
  bool xi_given = false, g_given = false;
  double xi_value = 0;
  int xi_line = 0;

  static const std::set<std::string> kSections = {
      "physics", "lattice", "ground_state", "evolution",
      "measurement", "eob", "ensemble", "output"};

  std::string section;
  std::set<std::string> seen_keys;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(name, lineno, "unterminated section header '" + raw + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!kSections.count(section))
        throw ConfigError(name, lineno, "unknown section [" + section + "]");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name, lineno, "expected key = value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(name, lineno, "missing key before '='");
    if (value.empty()) throw ConfigError(name, lineno, "missing value for " + key);
    if (section.empty())
      throw ConfigError(name, lineno, "key " + key + " appears before any [section]");
    std::string qual = section + "." + key;
    if (!seen_keys.insert(qual).second)
      throw ConfigError(name, lineno, "duplicate key " + qual);

    auto dnum = [&] { return parse_double(value, name, lineno, qual); };
    auto inum = [&] { return parse_long(value, name, lineno, qual); };
    auto require = [&](bool ok, const std::string& msg) {
      if (!ok) throw ConfigError(name, lineno, qual + " " + msg);
    };

    if (section == "physics") {
      if (key == "n") {
        cfg.n = static_cast<int>(inum());
        require(cfg.n >= 1, "must be >= 1");
      } else if (key == "g") {
        cfg.g = dnum();
        require(cfg.g <= 0, "must be <= 0 (attractive)");
        g_given = true;
      } else if (key == "xi") {
        xi_value = dnum();
        require(xi_value > 0, "must be > 0");
        xi_given = true;
        xi_line = lineno;
      } else if (key == "omega") {
        cfg.omega = dnum();
        require(cfg.omega >= 0, "must be >= 0");
      } else if (key == "v0") {
        cfg.v0 = dnum();
        require(cfg.v0 >= 0, "must be >= 0");
      } else if (key == "sigma0") {
        cfg.sigma0 = dnum();
        require(cfg.sigma0 > 0, "must be > 0");
      } else {
        throw ConfigError(name, lineno, "unknown key " + qual);
      }
    } else if (section == "lattice") {
      if (key == "m") {
        cfg.m = static_cast<int>(inum());
        require(cfg.m >= 3 && cfg.m % 2 == 1, "must be odd and >= 3");
      } else if (key == "delta") {
        cfg.delta = dnum();
        require(cfg.delta > 0, "must be > 0");
      } else if (key == "nmax") {
        cfg.nmax = static_cast<int>(inum());
        require(cfg.nmax >= 0, "must be >= 0 (0 picks the default cap)");
      } else {
        throw ConfigError(name, lineno, "unknown key " + qual);
      }
    } else if (section == "ground_state") {
      if (key == "chi") {
        cfg.gs_chi = static_cast<int>(inum());
        require(cfg.gs_chi >= 1, "must be >= 1");
      } else if (key == "schedule") {
        cfg.schedule = parse_double_list(value, name, lineno, qual);
        for (size_t i = 0; i < cfg.schedule.size(); ++i) {
          require(cfg.schedule[i] > 0, "entries must be > 0");
          if (i) require(cfg.schedule[i] < cfg.schedule[i - 1], "entries must decrease");
        }
      } else if (key == "tolerance") {
        cfg.gs_tolerance = dnum();
        require(cfg.gs_tolerance > 0, "must be > 0");
      } else if (key == "max_steps") {
        cfg.gs_max_steps = inum();
        require(cfg.gs_max_steps >= 1, "must be >= 1");
      } else {
        throw ConfigError(name, lineno, "unknown key " + qual);
      }
    } else if (section == "evolution") {
      if (key == "dt") {
        cfg.dt = dnum();
        require(cfg.dt > 0, "must be > 0");
      } else if (key == "t_max") {
        cfg.t_max = dnum();
        require(cfg.t_max >= 0, "must be >= 0");
      } else if (key == "chi") {
        cfg.chi = static_cast<int>(inum());
        require(cfg.chi >= 1, "must be >= 1");
      } else if (key == "observe_stride") {
        cfg.observe_stride = inum();
        require(cfg.observe_stride >= 1, "must be >= 1");
      } else if (key == "checkpoint_every") {
        cfg.checkpoint_every = inum();
        require(cfg.checkpoint_every >= 0, "must be >= 0");
      } else if (key == "discarded_budget") {
        cfg.discarded_budget = dnum();
        require(cfg.discarded_budget > 0, "must be > 0");
      } else if (key == "obdm_every") {
        cfg.obdm_every = inum();
        require(cfg.obdm_every >= 0, "must be >= 0");
      } else {
        throw ConfigError(name, lineno, "unknown key " + qual);
      }
    } else if (section == "measurement") {
      if (key == "samples") {
        cfg.samples = inum();
        require(cfg.samples >= 0, "must be >= 0");
      } else if (key == "direction") {
        if (value == "left_to_right") cfg.direction = SweepDirection::kLeftToRight;
        else if (value == "right_to_left") cfg.direction = SweepDirection::kRightToLeft;
        else throw ConfigError(name, lineno, qual + " expects left_to_right or right_to_left");
      } else if (key == "bin_width") {
        cfg.bin_width = dnum();
        require(cfg.bin_width > 0, "must be > 0");
      } else {
        throw ConfigError(name, lineno, "unknown key " + qual);
      }
    } else if (section == "eob") {
      if (key == "enabled") {
        cfg.eob_enabled = parse_bool(value, name, lineno, qual);
      } else if (key == "dt") {
        cfg.eob_dt = dnum();
        require(cfg.eob_dt > 0, "must be > 0");
      } else if (key == "t_max") {
        cfg.eob_t_max = dnum();
        require(cfg.eob_t_max >= 0, "must be >= 0");
      } else if (key == "box_factor") {
        cfg.box_factor = dnum();
        require(cfg.box_factor >= 1, "must be >= 1");
      } else if (key == "tm_realizations") {
        cfg.tm_realizations = static_cast<int>(inum());
        require(cfg.tm_realizations >= 1, "must be >= 1");
      } else if (key == "k_points") {
        cfg.k_points = parse_double_list(value, name, lineno, qual);
        for (double k : cfg.k_points) require(k >= 0, "entries must be >= 0");
      } else {
        throw ConfigError(name, lineno, "unknown key " + qual);
      }
    } else if (section == "ensemble") {
      if (key == "seeds") {
        try {
          cfg.seeds = parse_seed_list(value);
        } catch (const std::exception& e) {
          throw ConfigError(name, lineno, e.what());
        }
      } else if (key == "workers") {
        cfg.workers = static_cast<int>(inum());
        require(cfg.workers >= 1, "must be >= 1");
      } else {
        throw ConfigError(name, lineno, "unknown key " + qual);
      }
    } else if (section == "output") {
      if (key == "out_dir") {
        cfg.out_dir = value;
      } else {
        throw ConfigError(name, lineno, "unknown key " + qual);
      }
    }
  }

  if (xi_given && g_given)
    throw ConfigError(name, xi_line, "give physics.g or physics.xi, not both");
  if (xi_given) cfg.g = -2.0 / (cfg.n * xi_value);
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

ContinuumParams ExperimentConfig::continuum() const {
  return ContinuumParams::from_g(n, g, omega, v0, sigma0);
}

int ExperimentConfig::effective_nmax() const {
  if (nmax > 0) return nmax;
  return default_nmax(continuum(), delta);
}

namespace {

std::string render(const ExperimentConfig& c, bool with_identity) {
  std::string s;
  s += "[physics]\n";
  s += "n = " + std::to_string(c.n) + "\n";
  s += "g = " + fmt(c.g) + "\n";
  s += "omega = " + fmt(c.omega) + "\n";
  s += "v0 = " + fmt(c.v0) + "\n";
  s += "sigma0 = " + fmt(c.sigma0) + "\n";
  s += "[lattice]\n";
  s += "m = " + std::to_string(c.m) + "\n";
  s += "delta = " + fmt(c.delta) + "\n";
  s += "nmax = " + std::to_string(c.nmax) + "\n";
  s += "[ground_state]\n";
  s += "chi = " + std::to_string(c.gs_chi) + "\n";
  s += "schedule = " + join(c.schedule) + "\n";
  s += "tolerance = " + fmt(c.gs_tolerance) + "\n";
  s += "max_steps = " + std::to_string(c.gs_max_steps) + "\n";
  s += "[evolution]\n";
  s += "dt = " + fmt(c.dt) + "\n";
  s += "t_max = " + fmt(c.t_max) + "\n";
  s += "chi = " + std::to_string(c.chi) + "\n";
  s += "observe_stride = " + std::to_string(c.observe_stride) + "\n";
  s += "checkpoint_every = " + std::to_string(c.checkpoint_every) + "\n";
  s += "discarded_budget = " + fmt(c.discarded_budget) + "\n";
  s += "obdm_every = " + std::to_string(c.obdm_every) + "\n";
  s += "[measurement]\n";
  s += "samples = " + std::to_string(c.samples) + "\n";
  s += std::string("direction = ") +
       (c.direction == SweepDirection::kLeftToRight ? "left_to_right" : "right_to_left") + "\n";
  s += "bin_width = " + fmt(c.bin_width) + "\n";
  s += "[eob]\n";
  s += std::string("enabled = ") + (c.eob_enabled ? "true" : "false") + "\n";
  s += "dt = " + fmt(c.eob_dt) + "\n";
  s += "t_max = " + fmt(c.eob_t_max) + "\n";
  s += "box_factor = " + fmt(c.box_factor) + "\n";
  s += "tm_realizations = " + std::to_string(c.tm_realizations) + "\n";
  s += "k_points = " + join(c.k_points) + "\n";
  if (with_identity) {
    s += "[ensemble]\n";
    std::string seeds;
    for (size_t i = 0; i < c.seeds.size(); ++i) {
      if (i) seeds += ",";
      seeds += std::to_string(c.seeds[i]);
    }
    s += "seeds = " + seeds + "\n";
    s += "workers = " + std::to_string(c.workers) + "\n";
    s += "[output]\n";
    s += "out_dir = " + c.out_dir + "\n";
  }
  return s;
}

}  // namespace

std::string canonical_config(const ExperimentConfig& cfg) { return render(cfg, true); }

std::string config_hash(const ExperimentConfig& cfg) {
  std::string s = render(cfg, false);
  uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string resolve_preset(const std::string& name_or_path) {
  namespace fs = std::filesystem;
  std::vector<std::string> tried;
  auto probe = [&](const fs::path& p) -> std::string {
    tried.push_back(p.string());
    return fs::exists(p) && fs::is_regular_file(p) ? p.string() : "";
  };
  if (auto p = probe(name_or_path); !p.empty()) return p;
  if (name_or_path.find('/') == std::string::npos &&
      name_or_path.find(".cfg") == std::string::npos) {
    if (auto p = probe(fs::path("presets") / (name_or_path + ".cfg")); !p.empty()) return p;
#ifdef SOLSPECK_PRESET_DIR
    if (auto p = probe(fs::path(SOLSPECK_PRESET_DIR) / (name_or_path + ".cfg")); !p.empty())
      return p;
#endif
  }
  std::string msg = "preset '" + name_or_path + "' not found; tried:";
  for (const auto& t : tried) msg += "\n  " + t;
  throw std::runtime_error(msg);
}

}  // namespace solspeck
