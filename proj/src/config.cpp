#include "retsim/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace retsim {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bail(const std::string& origin, int line,
                       const std::string& msg) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << msg;
  throw std::invalid_argument(os.str());
}

struct RawValue {
  std::vector<std::string> items;  // one entry unless the value was an array
  bool is_array = false;
  int line = 0;
};

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

std::string unquote(const std::string& origin, int line, std::string v) {
  v = trim(v);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
    return v.substr(1, v.size() - 2);
  if (!v.empty() && (v.front() == '"' || v.back() == '"'))
    bail(origin, line, "unterminated string: " + v);
  return v;
}

RawValue parse_value(const std::string& origin, int line, std::string v) {
  RawValue out;
  out.line = line;
  v = trim(v);
  if (v.empty()) bail(origin, line, "missing value");
  if (v.front() == '[') {
    if (v.back() != ']') bail(origin, line, "unterminated array: " + v);
    out.is_array = true;
    std::string body = v.substr(1, v.size() - 2);
    std::string cur;
    bool in_str = false;
    for (char c : body) {
      if (c == '"') in_str = !in_str;
      if (c == ',' && !in_str) {
        out.items.push_back(unquote(origin, line, cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!trim(cur).empty() || !out.items.empty())
      out.items.push_back(unquote(origin, line, cur));
    for (auto& item : out.items)
      if (item.empty()) bail(origin, line, "empty array element");
  } else {
    out.items.push_back(unquote(origin, line, v));
  }
  return out;
}

double to_double(const std::string& origin, const RawValue& rv,
                 const std::string& key, const std::string& s) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || errno == ERANGE)
    bail(origin, rv.line, "key '" + key + "': not a number: " + s);
  return x;
}

long long to_int(const std::string& origin, const RawValue& rv,
                 const std::string& key, const std::string& s) {
  const double x = to_double(origin, rv, key, s);
  const long long i = static_cast<long long>(x);
  if (static_cast<double>(i) != x)
    bail(origin, rv.line, "key '" + key + "': expects an integer, got " + s);
  return i;
}

void expect_scalar(const std::string& origin, const RawValue& rv,
                   const std::string& key) {
  if (rv.is_array)
    bail(origin, rv.line, "key '" + key + "': expects a single value");
}

}  // namespace

ExperimentConfig SweepSpec::cell_config(int index, double* epsilon_out) const {
  if (index < 0 || index >= cells())
    throw std::out_of_range("cell_config: index out of range");
  const int ne = static_cast<int>(epsilons.size());
  const int nl = static_cast<int>(L_qs.size());
  const int nr = static_cast<int>(Rs.size());
  const int ie = index % ne;
  const int il = (index / ne) % nl;
  const int ir = (index / (ne * nl)) % nr;
  const int in = index / (ne * nl * nr);

  ExperimentConfig cfg = base;
  cfg.epsilons = {epsilons[ie]};
  cfg.L_q = L_qs[il];
  cfg.R = Rs[ir];
  cfg.n = ns[in];
  if (epsilon_out) *epsilon_out = epsilons[ie];
  return cfg;
}

void SweepSpec::validate() const {
  auto fail = [](const char* key, const char* why) {
    throw std::invalid_argument(std::string("config: key '") + key + "' " +
                                why);
  };
  if (epsilons.empty()) fail("epsilon", "grid must be non-empty");
  if (L_qs.empty()) fail("L_q", "grid must be non-empty");
  if (Rs.empty()) fail("R", "grid must be non-empty");
  if (ns.empty()) fail("n", "grid must be non-empty");
  if (workers < 1) fail("workers", "must be >= 1");
  if (format != "csv" && format != "json" && format != "both")
    fail("format", "must be 'csv', 'json', or 'both'");
  for (int i = 0; i < cells(); ++i) cell_config(i, nullptr).validate();
}

SweepSpec parse_sweep_text(const std::string& text,
                           const std::string& origin) {
  SweepSpec spec;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') continue;  // section header
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      bail(origin, lineno, "expected 'key = value', got: " + line);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) bail(origin, lineno, "missing key before '='");
    const RawValue rv = parse_value(origin, lineno, line.substr(eq + 1));
    const std::string& s0 = rv.items.front();

    auto one_int = [&](const char* k) {
      expect_scalar(origin, rv, k);
      return to_int(origin, rv, k, s0);
    };
    auto one_double = [&](const char* k) {
      expect_scalar(origin, rv, k);
      return to_double(origin, rv, k, s0);
    };
    auto one_string = [&](const char* k) {
      expect_scalar(origin, rv, k);
      return s0;
    };

    if (key == "N") {
      spec.base.N = static_cast<int>(one_int("N"));
    } else if (key == "alpha") {
      spec.base.alpha = one_double("alpha");
    } else if (key == "n") {
      spec.ns.clear();
      for (const auto& s : rv.items)
        spec.ns.push_back(static_cast<int>(to_int(origin, rv, "n", s)));
    } else if (key == "L_doc") {
      spec.base.L_doc = static_cast<int>(one_int("L_doc"));
    } else if (key == "L_q") {
      spec.L_qs.clear();
      for (const auto& s : rv.items)
        spec.L_qs.push_back(static_cast<int>(to_int(origin, rv, "L_q", s)));
    } else if (key == "l_s") {
      spec.base.l_s = static_cast<int>(one_int("l_s"));
    } else if (key == "R") {
      spec.Rs.clear();
      for (const auto& s : rv.items)
        spec.Rs.push_back(to_double(origin, rv, "R", s));
    } else if (key == "epsilon") {
      spec.epsilons.clear();
      for (const auto& s : rv.items)
        spec.epsilons.push_back(to_double(origin, rv, "epsilon", s));
    } else if (key == "trials") {
      spec.base.trials = static_cast<int>(one_int("trials"));
    } else if (key == "Q") {
      spec.base.Q = static_cast<int>(one_int("Q"));
    } else if (key == "seed") {
      const long long s = one_int("seed");
      if (s < 0) bail(origin, rv.line, "key 'seed': must be >= 0");
      spec.base.seed = static_cast<std::uint64_t>(s);
    } else if (key == "mode") {
      const std::string m = one_string("mode");
      if (m == "tfidf")
        spec.base.mode = SimMode::kTfidf;
      else if (m == "token-dp")
        spec.base.mode = SimMode::kTokenDp;
      else
        bail(origin, rv.line,
             "key 'mode': must be 'tfidf' or 'token-dp', got '" + m + "'");
    } else if (key == "workers") {
      spec.workers = static_cast<int>(one_int("workers"));
    } else if (key == "format") {
      spec.format = one_string("format");
    } else if (key == "out") {
      spec.out = one_string("out");
    } else if (key == "with_bounds") {
      const std::string b = one_string("with_bounds");
      if (b == "true")
        spec.with_bounds = true;
      else if (b == "false")
        spec.with_bounds = false;
      else
        bail(origin, rv.line, "key 'with_bounds': must be true or false");
    } else if (key == "qmc_target_se") {
      spec.base.qmc.target_se = one_double("qmc_target_se");
    } else if (key == "qmc_max_samples") {
      const long long v = one_int("qmc_max_samples");
      if (v < 1) bail(origin, rv.line, "key 'qmc_max_samples': must be >= 1");
      spec.base.qmc.max_samples = static_cast<std::uint64_t>(v);
    } else if (key == "qmc_randomizations") {
      spec.base.qmc.randomizations =
          static_cast<int>(one_int("qmc_randomizations"));
    } else if (key == "qmc_threads") {
      spec.base.qmc.threads = static_cast<int>(one_int("qmc_threads"));
    } else if (key == "token_scorer") {
      spec.base.token_scorer = one_string("token_scorer");
    } else if (key == "embed_dim") {
      spec.base.embed_dim = static_cast<int>(one_int("embed_dim"));
    } else {
      bail(origin, lineno, "unknown key '" + key + "'");
    }
  }
  spec.base.epsilons = spec.epsilons;
  spec.base.with_bounds = spec.with_bounds;
  spec.validate();
  return spec;
}

SweepSpec parse_sweep_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::invalid_argument("config: cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sweep_text(buf.str(), path);
}

}  // namespace retsim
