#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gaugelab/cli.hpp"
#include "gaugelab/error.hpp"

namespace gaugelab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  return std::all_of(k.begin(), k.end(), [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.'; });
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(v);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (!v.empty() && v.back() == ',') out.push_back("");
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::Config, "config key '" + key + "': " + what);
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) bad(key, "'" + s + "' is not a number");
  return v;
}

long parse_long(const std::string& key, const std::string& s) {
  long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) bad(key, "'" + s + "' is not an integer");
  return v;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + f(v[i]);
  return s;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorKind::Config, where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) throw Error(ErrorKind::Config, where + ": invalid section name '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, where + ": expected key = value");
    const std::string k = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (!valid_key(k)) throw Error(ErrorKind::Config, where + ": invalid key '" + k + "'");
    if (v.empty()) throw Error(ErrorKind::Config, where + ": empty value for '" + k + "'");
    const std::string key = section.empty() ? k : section + "." + k;
    if (c.raw_.count(key)) throw Error(ErrorKind::Config, where + ": duplicate key '" + key + "'");
    c.raw_[key] = v;
    c.origin_[key] = where;
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw Error(ErrorKind::Config, "invalid override key '" + key + "'");
  if (trim(value).empty()) throw Error(ErrorKind::Config, "empty override for '" + key + "'");
  raw_[key] = trim(value);
  origin_[key] = "flag";
}

std::string Config::take(const std::string& key) const { return raw_.at(key); }

std::string Config::str(const std::string& key, const std::string& def) {
  const std::string v = has(key) ? take(key) : def;
  resolve(key, v);
  return v;
}

std::string Config::choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
  const std::string v = str(key, def);
  if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
    bad(key, "'" + v + "' is not one of " + join(allowed, [](const std::string& s) { return s; }));
  return v;
}

double Config::num(const std::string& key, double def) {
  const double v = has(key) ? parse_double(key, take(key)) : def;
  resolve(key, format_number(v));
  return v;
}

long Config::integer(const std::string& key, long def) {
  const long v = has(key) ? parse_long(key, take(key)) : def;
  resolve(key, std::to_string(v));
  return v;
}

bool Config::flag(const std::string& key, bool def) {
  bool v = def;
  if (has(key)) {
    const std::string s = take(key);
    if (s == "true" || s == "yes" || s == "1") v = true;
    else if (s == "false" || s == "no" || s == "0") v = false;
    else bad(key, "'" + s + "' is not a boolean");
  }
  resolve(key, v ? "true" : "false");
  return v;
}

std::vector<double> Config::nums(const std::string& key, const std::vector<double>& def) {
  std::vector<double> v = def;
  if (has(key)) {
    v.clear();
    for (const std::string& s : split_list(take(key))) v.push_back(parse_double(key, s));
  }
  resolve(key, join(v, [](double x) { return format_number(x); }));
  return v;
}

std::vector<int> Config::ints(const std::string& key, const std::vector<int>& def) {
  std::vector<int> v = def;
  if (has(key)) {
    v.clear();
    for (const std::string& s : split_list(take(key))) {
      const long x = parse_long(key, s);
      if (x < -(1L << 30) || x > (1L << 30)) bad(key, "value out of range");
      v.push_back(static_cast<int>(x));
    }
  }
  resolve(key, join(v, [](int x) { return std::to_string(x); }));
  return v;
}

std::vector<std::string> Config::words(const std::string& key, const std::vector<std::string>& def) {
  std::vector<std::string> v = has(key) ? split_list(take(key)) : def;
  for (const std::string& s : v)
    if (s.empty()) bad(key, "empty list entry");
  resolve(key, join(v, [](const std::string& s) { return s; }));
  return v;
}

void Config::finish() const {
  for (const auto& [k, v] : raw_)
    if (!resolved_.count(k)) throw Error(ErrorKind::Config, origin_.at(k) + ": unknown key '" + k + "' for this subcommand");
}

std::string Config::canonical() const {
  std::string s;
  for (const auto& [k, v] : resolved_) {
    if (k == "run.out" || k == "run.workers") continue;
    s += k + "=" + v + "\n";
  }
  return s;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string svg_plot(const PlotSpec& p, const std::string& fingerprint) {
  const double W = 640, H = 420, ml = 72, mr = 150, mt = 40, mb = 56;
  auto tx = [&](double x) { return p.logx ? std::log10(x) : x; };
  auto ty = [&](double y) { return p.logy ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!p.logx || x > 0) && (!p.logy || y > 0);
  };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const Series& s : p.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-300) y0 -= 0.5, y1 += 0.5;
  const double pw = W - ml - mr, ph = H - mt - mb;
  auto px = [&](double x) { return ml + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + ph - (ty(y) - y0) / (y1 - y0) * ph; };
  auto label = [](double v, bool log) { return log ? fmt("%.3g", std::pow(10.0, v)) : fmt("%.4g", v); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<desc>fingerprint " << fingerprint << "</desc>\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(p.title) << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    const double X = ml + pw * k / 4.0, Y = mt + ph - ph * k / 4.0;
    o << "<line x1=\"" << fmt("%.2f", X) << "\" y1=\"" << mt + ph << "\" x2=\"" << fmt("%.2f", X) << "\" y2=\"" << mt + ph + 5
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << fmt("%.2f", X) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">" << label(fx, p.logx) << "</text>\n";
    o << "<line x1=\"" << ml - 5 << "\" y1=\"" << fmt("%.2f", Y) << "\" x2=\"" << ml << "\" y2=\"" << fmt("%.2f", Y)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << ml - 8 << "\" y=\"" << fmt("%.2f", Y + 4) << "\" text-anchor=\"end\">" << label(fy, p.logy) << "</text>\n";
  }
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xml_escape(p.xlabel) << "</text>\n";
  o << "<text transform=\"translate(16," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << xml_escape(p.ylabel)
    << "</text>\n";
  for (std::size_t s = 0; s < p.series.size(); ++s) {
    const Series& se = p.series[s];
    const char* col = kPalette[s % 8];
    std::string pts;
    for (std::size_t i = 0; i < se.x.size() && i < se.y.size(); ++i) {
      if (!usable(se.x[i], se.y[i])) continue;
      pts += fmt("%.2f", px(se.x[i])) + "," + fmt("%.2f", py(se.y[i])) + " ";
    }
    if (!pts.empty()) pts.pop_back();
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
    for (std::size_t i = 0; i < se.x.size() && i < se.y.size() && se.x.size() <= 64; ++i)
      if (usable(se.x[i], se.y[i]))
        o << "<circle cx=\"" << fmt("%.2f", px(se.x[i])) << "\" cy=\"" << fmt("%.2f", py(se.y[i])) << "\" r=\"2.5\" fill=\"" << col << "\"/>\n";
    const double ly = mt + 14 + 18.0 * static_cast<double>(s);
    o << "<line x1=\"" << W - mr + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - mr + 32 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << col
      << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << W - mr + 38 << "\" y=\"" << ly << "\">" << xml_escape(se.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

Artifacts::Artifacts(std::string dir, std::string fingerprint) : dir_(std::move(dir)), fp_(std::move(fingerprint)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot create output directory " + dir_ + ": " + ec.message());
}

std::string Artifacts::path(const std::string& name) const { return (std::filesystem::path(dir_) / name).string(); }

void Artifacts::write(const std::string& name, const std::string& body) {
  std::ofstream os(path(name), std::ios::binary);
  if (!os) throw Error(ErrorKind::Config, "cannot write " + path(name));
  os << body;
  files_.push_back(name);
}

void Artifacts::csv(const std::string& name, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string s;
  for (const std::string& h : header) s += h + ",";
  s += "fingerprint\n";
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw Error(ErrorKind::Dimension, "csv row width differs from the header");
    for (double v : r) s += format_number(v) + ",";
    s += fp_ + "\n";
  }
  write(name, s);
}

void Artifacts::json(const std::string& name, nlohmann::json j) {
  j["fingerprint"] = fp_;
  write(name, j.dump(2) + "\n");
}

void Artifacts::svg(const std::string& name, const PlotSpec& p) { write(name, svg_plot(p, fp_)); }

}  // namespace gaugelab::cli
