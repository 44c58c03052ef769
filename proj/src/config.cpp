#include "bdlp/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "bdlp/errors.hpp"

namespace bdlp {

// ---------------------------------------------------------------------------
// TOML subset

namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : s_(text) {}

  std::vector<TomlSection> parse() {
    std::vector<TomlSection> out(1);
    out[0].line = 1;
    out[0].column = 1;
    std::set<std::string> seen_sections{""};
    while (true) {
      skip_blank();
      if (eof()) break;
      if (peek() == '\n') {
        advance();
        continue;
      }
      if (peek() == '[') {
        const auto line = line_, col = col_;
        advance();
        skip_blank();
        std::string name = dotted_key();
        skip_blank();
        expect(']');
        end_of_line();
        if (!seen_sections.insert(name).second) throw ConfigError("duplicate section [" + name + "]", line, col);
        out.push_back({name, line, col, {}});
        continue;
      }
      const auto line = line_, col = col_;
      std::string key = bare_key();
      for (const auto& e : out.back().entries)
        if (e.key == key) throw ConfigError("duplicate key '" + key + "'", line, col);
      skip_blank();
      expect('=');
      skip_blank();
      TomlValue v = value();
      end_of_line();
      out.back().entries.push_back({key, std::move(v), line, col});
    }
    return out;
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  void advance() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(msg, line_, col_); }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }
  void skip_blank() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
    if (peek() == '#')
      while (!eof() && peek() != '\n') advance();
  }
  void skip_blank_lines() {
    while (true) {
      skip_blank();
      if (peek() != '\n') return;
      advance();
    }
  }
  void end_of_line() {
    skip_blank();
    if (!eof() && peek() != '\n') fail("unexpected text after value");
  }
  static bool key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }
  std::string bare_key() {
    std::string k;
    while (!eof() && key_char(peek())) {
      k += peek();
      advance();
    }
    if (k.empty()) fail("expected a key");
    return k;
  }
  std::string dotted_key() {
    std::string k = bare_key();
    while (peek() == '.') {
      advance();
      k += '.' + bare_key();
    }
    return k;
  }

  TomlValue value() {
    TomlValue v;
    v.line = line_;
    v.column = col_;
    const char c = peek();
    if (c == '"') {
      v.kind = TomlValue::Kind::String;
      advance();
      while (true) {
        if (eof() || peek() == '\n') fail("unterminated string");
        char ch = peek();
        advance();
        if (ch == '"') break;
        if (ch == '\\') {
          char esc = peek();
          advance();
          switch (esc) {
            case '"': ch = '"'; break;
            case '\\': ch = '\\'; break;
            case 'n': ch = '\n'; break;
            case 't': ch = '\t'; break;
            default: fail("unsupported escape sequence");
          }
        }
        v.text += ch;
      }
      return v;
    }
    if (c == '[') {
      v.kind = TomlValue::Kind::Array;
      advance();
      skip_blank_lines();
      while (peek() != ']') {
        v.items.push_back(value());
        skip_blank_lines();
        if (peek() == ',') {
          advance();
          skip_blank_lines();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      advance();
      return v;
    }
    std::string tok;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == '+' ||
                      peek() == '-' || peek() == '_')) {
      tok += peek();
      advance();
    }
    if (tok.empty()) fail("expected a value");
    if (tok == "true" || tok == "false") {
      v.kind = TomlValue::Kind::Bool;
      v.boolean = tok == "true";
      return v;
    }
    v.kind = TomlValue::Kind::Number;
    v.text = tok;
    std::string digits;
    for (char ch : tok)
      if (ch != '_') digits += ch;
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v.number);
    if (ec != std::errc() || ptr != last) throw ConfigError("malformed value '" + tok + "'", v.line, v.column);
    v.integral = digits.find_first_of(".eEin") == std::string::npos;
    return v;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace

std::vector<TomlSection> parse_toml(const std::string& text) { return TomlParser(text).parse(); }

// ---------------------------------------------------------------------------
// schema

Kernel KernelSpec::build(int dim) const {
  if (type == "tophat") return Kernel::top_hat(c, radius, dim);
  if (type == "gaussian") return Kernel::gaussian(c, sigma, dim);
  if (type == "zero") return Kernel::zero(dim);
  if (type == "tabulated") {
    std::vector<double> r, v;
    for (const auto& [x, y] : table) {
      r.push_back(x);
      v.push_back(y);
    }
    return Kernel::tabulated(std::move(r), std::move(v), dim);
  }
  throw ConfigError("unknown kernel type '" + type + "' (expected tophat, gaussian, tabulated or zero)");
}

namespace {

using Positions = std::map<std::string, std::pair<std::size_t, std::size_t>>;
using Fail = std::function<void(const std::string& key, const std::string& msg)>;

double as_number(const TomlEntry& e) {
  if (e.value.kind != TomlValue::Kind::Number)
    throw ConfigError("'" + e.key + "' must be a number", e.value.line, e.value.column);
  return e.value.number;
}

double as_finite(const TomlEntry& e) {
  double x = as_number(e);
  if (!std::isfinite(x)) throw ConfigError("'" + e.key + "' must be finite", e.value.line, e.value.column);
  return x;
}

template <class Int>
Int as_integer(const TomlEntry& e) {
  if (e.value.kind != TomlValue::Kind::Number || !e.value.integral)
    throw ConfigError("'" + e.key + "' must be an integer", e.value.line, e.value.column);
  std::string digits;
  for (char ch : e.value.text)
    if (ch != '_' && ch != '+') digits += ch;
  Int out{};
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  if (ec != std::errc() || ptr != digits.data() + digits.size())
    throw ConfigError("'" + e.key + "' is out of range", e.value.line, e.value.column);
  return out;
}

bool as_bool(const TomlEntry& e) {
  if (e.value.kind != TomlValue::Kind::Bool)
    throw ConfigError("'" + e.key + "' must be true or false", e.value.line, e.value.column);
  return e.value.boolean;
}

std::string as_string(const TomlEntry& e) {
  if (e.value.kind != TomlValue::Kind::String)
    throw ConfigError("'" + e.key + "' must be a quoted string", e.value.line, e.value.column);
  return e.value.text;
}

std::vector<std::pair<double, double>> as_table(const TomlEntry& e) {
  const TomlValue& v = e.value;
  if (v.kind != TomlValue::Kind::Array) throw ConfigError("'table' must be an array of [r, value] pairs", v.line, v.column);
  std::vector<std::pair<double, double>> out;
  for (const auto& row : v.items) {
    if (row.kind != TomlValue::Kind::Array || row.items.size() != 2 ||
        row.items[0].kind != TomlValue::Kind::Number || row.items[1].kind != TomlValue::Kind::Number)
      throw ConfigError("table rows must be [r, value] number pairs", row.line, row.column);
    out.emplace_back(row.items[0].number, row.items[1].number);
  }
  return out;
}

void check(const ExperimentConfig& cfg, const Fail& fail) {
  if (cfg.dim < 1 || cfg.dim > kMaxDim) fail("domain.d", "d must be 1, 2 or 3");
  if (!(cfg.L > 0.0 && std::isfinite(cfg.L))) fail("domain.L", "L must be positive and finite");
  if (!(cfg.cell_size >= 0.0)) fail("domain.cell_size", "cell_size must be >= 0");
  if (!(cfg.m >= 0.0 && std::isfinite(cfg.m))) fail("model.m", "m must be >= 0");

  auto build = [&](const KernelSpec& spec, const std::string& section) -> std::optional<Kernel> {
    try {
      return spec.build(cfg.dim);
    } catch (const ConfigError& e) {
      fail(section, section + ": " + e.what());
    }
    return std::nullopt;
  };
  auto minus = build(cfg.minus, "kernel.minus");
  auto plus = build(cfg.plus, "kernel.plus");
  if (minus && plus) {
    KernelPair pair{*minus, *plus, cfg.m};
    try {
      pair.validate(cfg.allow_no_competition);
    } catch (const ConfigError& e) {
      fail("kernel.minus", e.what());
    }
    auto range_key = [](const KernelSpec& s, const std::string& sec) {
      return sec + (s.type == "tabulated" ? ".table" : ".radius");
    };
    try {
      check_torus_admissible(*minus, cfg.L, "competition");
    } catch (const ConfigError& e) {
      fail(range_key(cfg.minus, "kernel.minus"), e.what());
    }
    try {
      check_torus_admissible(*plus, cfg.L, "dispersal");
    } catch (const ConfigError& e) {
      fail(range_key(cfg.plus, "kernel.plus"), e.what());
    }
    const double plus_mass = plus->l1_norm();
    if (cfg.bounds.delta) {
      const double d = *cfg.bounds.delta;
      if (cfg.stability.b == 0.0 ? d > cfg.m : !(d < cfg.m))
        fail("bounds.delta", cfg.stability.b == 0.0 ? "delta must satisfy delta <= m when b = 0"
                                                    : "delta must satisfy delta < m when b > 0");
    }
    if (cfg.bounds.epsilon) {
      const double e = *cfg.bounds.epsilon;
      if (!(e > 0.0 && e < cfg.m - plus_mass))
        fail("bounds.epsilon", "epsilon must lie in the open interval (0, m - <a+>)");
    }
  }

  const auto& s = cfg.simulate;
  if (!(s.t_end >= 0.0 && std::isfinite(s.t_end))) fail("simulate.t_end", "t_end must be >= 0 and finite");
  if (!(s.observe_every >= 0.0)) fail("simulate.observe_every", "observe_every must be >= 0");
  if (s.replicas < 1) fail("simulate.replicas", "replicas must be >= 1");
  if (s.max_points < 1) fail("simulate.max_points", "max_points must be >= 1");
  if (!(s.initial_intensity >= 0.0 && std::isfinite(s.initial_intensity)))
    fail("simulate.initial_intensity", "initial_intensity must be >= 0");
  if (s.bins < 2) fail("simulate.bins", "bins must be >= 2");

  const auto& h = cfg.hierarchy;
  if (h.grid_points < 4) fail("hierarchy.grid_points", "grid_points must be >= 4");
  if (!(h.dt > 0.0)) fail("hierarchy.dt", "dt must be positive");
  if (!(h.t_end >= 0.0 && std::isfinite(h.t_end))) fail("hierarchy.t_end", "t_end must be >= 0 and finite");
  if (!(h.observe_every >= 0.0)) fail("hierarchy.observe_every", "observe_every must be >= 0");
  if (h.closure != "poisson" && h.closure != "kirkwood") fail("hierarchy.closure", "closure must be poisson or kirkwood");
  if (!(h.rtol >= 0.0)) fail("hierarchy.rtol", "rtol must be >= 0");

  if (!(cfg.stability.b >= 0.0 && std::isfinite(cfg.stability.b))) fail("stability.b", "b must be >= 0");
  if (cfg.stability.n_max < 2) fail("stability.n_max", "n_max must be >= 2");
  if (cfg.stability.trials < 1) fail("stability.trials", "trials must be >= 1");

  const auto& b = cfg.bounds;
  if (!(b.alpha2 > b.alpha1)) fail("bounds.alpha2", "alpha2 must exceed alpha1");
  if (b.variant != "full" && b.variant != "positive") fail("bounds.variant", "variant must be full or positive");
  if (!(b.t >= 0.0)) fail("bounds.t", "t must be >= 0");
  if (b.k0_sup_root && !(*b.k0_sup_root >= 0.0)) fail("bounds.k0_sup_root", "k0_sup_root must be >= 0");
  if (cfg.compare.r0 && !(*cfg.compare.r0 > 0.0)) fail("compare.r0", "r0 must be positive");
}

void read_kernel(const TomlSection& sec, KernelSpec& k, bool& dim_given, int& kernel_dim,
                 std::pair<std::size_t, std::size_t>& dim_pos) {
  bool have_type = false;
  for (const auto& e : sec.entries) {
    if (e.key == "type") {
      k.type = as_string(e);
      have_type = true;
    }
  }
  if (!have_type) throw ConfigError("[" + sec.name + "] needs a 'type'", sec.line, sec.column);
  std::set<std::string> allowed{"type", "d"};
  if (k.type == "tophat") allowed.insert({"c", "radius"});
  else if (k.type == "gaussian") allowed.insert({"c", "sigma"});
  else if (k.type == "tabulated") allowed.insert("table");
  else if (k.type != "zero")
    for (const auto& e : sec.entries)
      if (e.key == "type")
        throw ConfigError("unknown kernel type '" + k.type + "' (expected tophat, gaussian, tabulated or zero)",
                          e.value.line, e.value.column);
  std::set<std::string> present;
  for (const auto& e : sec.entries) {
    if (!allowed.count(e.key))
      throw ConfigError("key '" + e.key + "' is not valid for a " + k.type + " kernel", e.line, e.column);
    present.insert(e.key);
    if (e.key == "c") k.c = as_finite(e);
    else if (e.key == "radius") k.radius = as_finite(e);
    else if (e.key == "sigma") k.sigma = as_finite(e);
    else if (e.key == "table") k.table = as_table(e);
    else if (e.key == "d") {
      dim_given = true;
      kernel_dim = as_integer<int>(e);
      dim_pos = {e.value.line, e.value.column};
    }
  }
  for (const auto& key : allowed)
    if (key != "d" && !present.count(key))
      throw ConfigError("[" + sec.name + "] is missing '" + key + "'", sec.line, sec.column);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  auto sections = parse_toml(text);
  ExperimentConfig cfg;
  Positions pos;
  std::size_t last_line = 1;
  for (char ch : text)
    if (ch == '\n') ++last_line;

  std::set<std::string> found;
  struct KernelDim {
    bool given = false;
    int dim = 0;
    std::pair<std::size_t, std::size_t> where;
  } minus_dim, plus_dim;

  for (const auto& sec : sections) {
    found.insert(sec.name);
    pos[sec.name] = {sec.line, sec.column};
    for (const auto& e : sec.entries) pos[sec.name + "." + e.key] = {e.value.line, e.value.column};
    auto unknown = [&](const TomlEntry& e) -> void {
      throw ConfigError("unknown key '" + e.key + "' in " + (sec.name.empty() ? "top level" : "[" + sec.name + "]"),
                        e.line, e.column);
    };
    const std::string& n = sec.name;
    if (n == "kernel.minus") {
      read_kernel(sec, cfg.minus, minus_dim.given, minus_dim.dim, minus_dim.where);
      continue;
    }
    if (n == "kernel.plus") {
      read_kernel(sec, cfg.plus, plus_dim.given, plus_dim.dim, plus_dim.where);
      continue;
    }
    for (const auto& e : sec.entries) {
      const std::string& k = e.key;
      if (n.empty()) {
        unknown(e);
      } else if (n == "domain") {
        if (k == "d") cfg.dim = as_integer<int>(e);
        else if (k == "L") cfg.L = as_finite(e);
        else if (k == "cell_size") cfg.cell_size = as_finite(e);
        else unknown(e);
      } else if (n == "model") {
        if (k == "m") cfg.m = as_finite(e);
        else if (k == "allow_no_competition") cfg.allow_no_competition = as_bool(e);
        else unknown(e);
      } else if (n == "simulate") {
        auto& s = cfg.simulate;
        if (k == "t_end") s.t_end = as_finite(e);
        else if (k == "observe_every") s.observe_every = as_finite(e);
        else if (k == "replicas") s.replicas = as_integer<std::size_t>(e);
        else if (k == "seed") s.seed = as_integer<std::uint64_t>(e);
        else if (k == "max_points") s.max_points = as_integer<std::size_t>(e);
        else if (k == "initial_intensity") s.initial_intensity = as_finite(e);
        else if (k == "bins") s.bins = as_integer<int>(e);
        else if (k == "write_points") s.write_points = as_bool(e);
        else unknown(e);
      } else if (n == "hierarchy") {
        auto& h = cfg.hierarchy;
        if (k == "grid_points") h.grid_points = as_integer<int>(e);
        else if (k == "dt") h.dt = as_finite(e);
        else if (k == "t_end") h.t_end = as_finite(e);
        else if (k == "observe_every") h.observe_every = as_finite(e);
        else if (k == "closure") h.closure = as_string(e);
        else if (k == "rtol") h.rtol = as_finite(e);
        else unknown(e);
      } else if (n == "stability") {
        auto& s = cfg.stability;
        if (k == "b") s.b = as_finite(e);
        else if (k == "n_max") s.n_max = as_integer<int>(e);
        else if (k == "trials") s.trials = as_integer<long>(e);
        else unknown(e);
      } else if (n == "bounds") {
        auto& b = cfg.bounds;
        if (k == "alpha1") b.alpha1 = as_finite(e);
        else if (k == "alpha2") b.alpha2 = as_finite(e);
        else if (k == "variant") b.variant = as_string(e);
        else if (k == "t") b.t = as_finite(e);
        else if (k == "delta") b.delta = as_finite(e);
        else if (k == "epsilon") b.epsilon = as_finite(e);
        else if (k == "k0_sup_root") b.k0_sup_root = as_finite(e);
        else unknown(e);
      } else if (n == "compare") {
        if (k == "r0") cfg.compare.r0 = as_finite(e);
        else unknown(e);
      } else {
        throw ConfigError("unknown section [" + n + "]", sec.line, sec.column);
      }
    }
    if (!n.empty() && n != "domain" && n != "model" && n != "simulate" && n != "hierarchy" && n != "stability" &&
        n != "bounds" && n != "compare")
      throw ConfigError("unknown section [" + n + "]", sec.line, sec.column);
  }

  for (const char* required : {"domain", "model", "kernel.minus", "kernel.plus"})
    if (!found.count(required)) throw ConfigError(std::string("missing section [") + required + "]", last_line, 1);
  for (const char* required : {"domain.d", "domain.L", "model.m"})
    if (!pos.count(required)) {
      std::string key(required);
      auto [l, c] = pos[key.substr(0, key.find('.'))];
      throw ConfigError("missing required key '" + key + "'", l, c);
    }
  for (const auto* kd : {&minus_dim, &plus_dim})
    if (kd->given && kd->dim != cfg.dim)
      throw ConfigError("kernel dimension " + std::to_string(kd->dim) + " differs from domain d = " +
                            std::to_string(cfg.dim),
                        kd->where.first, kd->where.second);

  check(cfg, [&](const std::string& key, const std::string& msg) {
    std::string k = key;
    while (!pos.count(k) && k.find('.') != std::string::npos) k = k.substr(0, k.rfind('.'));
    auto it = pos.find(k);
    if (it == pos.end()) throw ConfigError(msg, 1, 1);
    throw ConfigError(msg, it->second.first, it->second.second);
  });
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const ExperimentConfig& cfg) {
  check(cfg, [](const std::string& key, const std::string& msg) { throw ConfigError(key + ": " + msg); });
}

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

void render_kernel(std::ostream& os, const std::string& name, const KernelSpec& k) {
  os << "\n[" << name << "]\n";
  os << "type = " << quoted(k.type) << "\n";
  if (k.type == "tophat") os << "c = " << num(k.c) << "\nradius = " << num(k.radius) << "\n";
  if (k.type == "gaussian") os << "c = " << num(k.c) << "\nsigma = " << num(k.sigma) << "\n";
  if (k.type == "tabulated") {
    os << "table = [";
    for (std::size_t i = 0; i < k.table.size(); ++i)
      os << (i ? ", " : "") << "[" << num(k.table[i].first) << ", " << num(k.table[i].second) << "]";
    os << "]\n";
  }
}

}  // namespace

std::string resolved_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[domain]\nd = " << cfg.dim << "\nL = " << num(cfg.L) << "\ncell_size = " << num(cfg.cell_size) << "\n";
  os << "\n[model]\nm = " << num(cfg.m) << "\nallow_no_competition = " << (cfg.allow_no_competition ? "true" : "false")
     << "\n";
  render_kernel(os, "kernel.minus", cfg.minus);
  render_kernel(os, "kernel.plus", cfg.plus);
  const auto& s = cfg.simulate;
  os << "\n[simulate]\nt_end = " << num(s.t_end) << "\nobserve_every = " << num(s.observe_every)
     << "\nreplicas = " << s.replicas << "\nseed = " << s.seed << "\nmax_points = " << s.max_points
     << "\ninitial_intensity = " << num(s.initial_intensity) << "\nbins = " << s.bins
     << "\nwrite_points = " << (s.write_points ? "true" : "false") << "\n";
  const auto& h = cfg.hierarchy;
  os << "\n[hierarchy]\ngrid_points = " << h.grid_points << "\ndt = " << num(h.dt) << "\nt_end = " << num(h.t_end)
     << "\nobserve_every = " << num(h.observe_every) << "\nclosure = " << quoted(h.closure)
     << "\nrtol = " << num(h.rtol) << "\n";
  os << "\n[stability]\nb = " << num(cfg.stability.b) << "\nn_max = " << cfg.stability.n_max
     << "\ntrials = " << cfg.stability.trials << "\n";
  const auto& b = cfg.bounds;
  os << "\n[bounds]\nalpha1 = " << num(b.alpha1) << "\nalpha2 = " << num(b.alpha2)
     << "\nvariant = " << quoted(b.variant) << "\nt = " << num(b.t) << "\n";
  if (b.delta) os << "delta = " << num(*b.delta) << "\n";
  if (b.epsilon) os << "epsilon = " << num(*b.epsilon) << "\n";
  os << "k0_sup_root = " << num(cfg.k0_sup_root()) << "\n";
  if (cfg.compare.r0) os << "\n[compare]\nr0 = " << num(*cfg.compare.r0) << "\n";
  return os.str();
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a(resolved_config(cfg)); }

}  // namespace bdlp
