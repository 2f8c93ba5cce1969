#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace gaugelab::cli {

// Plain-text tree config:
//   # comment
//   [section]           prefixes following keys with "section."
//   key = value         value: number, word, or comma-separated list
// Keys are [a-z0-9_.]; a key may appear once. Every key must be consumed by the subcommand.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);  // flag override
  bool has(const std::string& key) const { return raw_.count(key) != 0; }

  std::string str(const std::string& key, const std::string& def);
  std::string choice(const std::string& key, const std::string& def, const std::vector<std::string>& allowed);
  double num(const std::string& key, double def);
  long integer(const std::string& key, long def);
  bool flag(const std::string& key, bool def);
  std::vector<double> nums(const std::string& key, const std::vector<double>& def);
  std::vector<int> ints(const std::string& key, const std::vector<int>& def);
  std::vector<std::string> words(const std::string& key, const std::vector<std::string>& def);

  // throws Config naming the first key no getter asked for
  void finish() const;
  // resolved "key=value" lines of every consumed key, sorted; run.out and run.workers excluded
  std::string canonical() const;

 private:
  std::string take(const std::string& key) const;
  void resolve(const std::string& key, const std::string& value) { resolved_[key] = value; }

  std::map<std::string, std::string> raw_;
  std::map<std::string, std::string> resolved_;
  std::map<std::string, std::string> origin_;
};

// shortest round-trip decimal for CSV and canonical values
std::string format_number(double x);

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  std::vector<Series> series;
  bool logx = false, logy = false;
};

std::string svg_plot(const PlotSpec& p, const std::string& fingerprint);

// Output directory writer. Every file carries the fingerprint: a trailing CSV column,
// a top-level JSON key, an SVG <desc>.
class Artifacts {
 public:
  Artifacts(std::string dir, std::string fingerprint);
  const std::string& dir() const { return dir_; }
  const std::string& fingerprint() const { return fp_; }
  std::string path(const std::string& name) const;

  void csv(const std::string& name, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);
  void json(const std::string& name, nlohmann::json j);
  void svg(const std::string& name, const PlotSpec& p);
  void note(const std::string& name) { files_.push_back(name); }  // externally written file
  const std::vector<std::string>& files() const { return files_; }

 private:
  void write(const std::string& name, const std::string& body);
  std::string dir_, fp_;
  std::vector<std::string> files_;
};

using Plan = std::function<nlohmann::json(Artifacts&)>;

// reads and validates every parameter of the subcommand; the returned plan does the work
Plan make_plan(const std::string& subcommand, Config& cfg);

struct RunOutcome {
  int exit_code = 0;
  std::string out_dir;
  std::string fingerprint;
};

// one config through one subcommand; writes run.json, or error.json on numerical failure
RunOutcome run_config(const std::string& subcommand, Config cfg, const std::string& out_dir, std::ostream& err);

// full command line; exit 0 success, 2 config error, 3 numerical failure
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace gaugelab::cli
