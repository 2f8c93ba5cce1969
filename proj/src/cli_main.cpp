#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "gaugelab/cli.hpp"
#include "gaugelab/estimates.hpp"

namespace gaugelab::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char b[32];
  std::strftime(b, sizeof b, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return b;
}

json canonical_json(const std::string& canonical) {
  json j = json::object();
  std::istringstream in(canonical);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

void write_error(const std::string& dir, const json& j) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream os(fs::path(dir) / "error.json");
  if (os) os << j.dump(2) << "\n";
}

struct Job {
  Config cfg;
  std::string label;
};

}  // namespace

RunOutcome run_config(const std::string& sub, Config cfg, const std::string& out_dir, std::ostream& err) {
  RunOutcome o;
  o.out_dir = out_dir;
  Plan plan;
  try {
    plan = make_plan(sub, cfg);
    cfg.finish();
  } catch (const Error& e) {
    err << "gaugelab " << sub << ": config error: " << e.what() << "\n";
    o.exit_code = 2;
    return o;
  }
  o.fingerprint = fingerprint_hex(sub + "\n" + cfg.canonical());
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Artifacts art(out_dir, o.fingerprint);
    json results = plan(art);
    art.json("summary.json", {{"subcommand", sub}, {"results", results}});
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const json run = {{"subcommand", sub},
                      {"fingerprint", o.fingerprint},
                      {"config", canonical_json(cfg.canonical())},
                      {"outputs", art.files()},
                      {"results", results},
                      {"exit_code", 0},
                      {"timing", {{"started_utc", started}, {"finished_utc", utc_now()}, {"elapsed_s", elapsed}}}};
    std::ofstream os(art.path("run.json"));
    if (!os) throw Error(ErrorKind::Config, "cannot write " + art.path("run.json"));
    os << run.dump(2) << "\n";
  } catch (const Error& e) {
    o.exit_code = e.kind() == ErrorKind::Config ? 2 : 3;
    err << "gaugelab " << sub << ": " << to_string(e.kind()) << " error: " << e.what() << "\n";
    write_error(out_dir, {{"subcommand", sub},
                          {"fingerprint", o.fingerprint},
                          {"kind", to_string(e.kind())},
                          {"message", e.what()},
                          {"index", e.index()},
                          {"exit_code", o.exit_code}});
  } catch (const std::exception& e) {
    o.exit_code = 3;
    err << "gaugelab " << sub << ": internal error: " << e.what() << "\n";
    write_error(out_dir, {{"subcommand", sub},
                          {"fingerprint", o.fingerprint},
                          {"kind", "Internal"},
                          {"message", e.what()},
                          {"index", -1},
                          {"exit_code", 3}});
  }
  return o;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"gaugelab: lattice gauge theory experiments on tori"};
  app.require_subcommand(1);

  struct Flags {
    std::vector<std::string> configs;
    std::string batch;
    std::int64_t seed = -1;
    std::string out;
    int workers = 0;
    std::vector<std::string> sets;
    std::string eps, suite, inputs;
    long trials = -1;
    double tau = -1.0;
  } f;

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"flow", "Yang-Mills gradient flow, optionally on the doubled manifold"},
      {"ns", "Newton projection to the flat connection in the complexified orbit"},
      {"adiabatic", "curvature scaling of relaxed eps-ASD connections"},
      {"estimates", "estimate harness suites"},
      {"charge", "topological charge and Chern-Simons profile"},
      {"report", "aggregate run directories into SVG plots"}};
  for (const auto& [name, desc] : subs) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->add_option("--config", f.configs, "config file; repeat for a batch")->check(CLI::ExistingFile);
    s->add_option("--batch", f.batch, "file listing one config path per line")->check(CLI::ExistingFile);
    s->add_option("--seed", f.seed, "overrides run.seed")->check(CLI::NonNegativeNumber);
    s->add_option("--out", f.out, "output directory");
    s->add_option("--workers", f.workers, "concurrent runs in a batch")->check(CLI::PositiveNumber);
    s->add_option("--set", f.sets, "key=value override, repeatable");
    if (name == "adiabatic") s->add_option("--eps", f.eps, "comma-separated eps list, overrides adiabatic.eps");
    if (name == "estimates") {
      s->add_option("--suite", f.suite, "overrides estimates.suite");
      s->add_option("--trials", f.trials, "overrides estimates.trials")->check(CLI::PositiveNumber);
    }
    if (name == "flow") s->add_option("--tau", f.tau, "overrides flow.tau")->check(CLI::PositiveNumber);
    if (name == "report") s->add_option("--in", f.inputs, "comma-separated run directories, overrides report.inputs");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  std::vector<Job> jobs;
  try {
    std::vector<std::string> paths = f.configs;
    if (!f.batch.empty()) {
      std::ifstream in(f.batch);
      std::string line;
      while (std::getline(in, line)) {
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line.erase(line.find_last_not_of(" \t\r") + 1);
        line.erase(0, line.find_first_not_of(" \t"));
        if (line.empty()) continue;
        fs::path p(line);
        if (p.is_relative()) p = fs::path(f.batch).parent_path() / p;
        paths.push_back(p.string());
      }
    }
    if (paths.empty()) jobs.push_back({Config{}, ""});
    for (const std::string& p : paths) jobs.push_back({Config::load(p), fs::path(p).stem().string()});
    for (Job& j : jobs) {
      for (const std::string& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::Config, "--set expects key=value, got '" + s + "'");
        j.cfg.set(s.substr(0, eq), s.substr(eq + 1));
      }
      if (f.seed >= 0) j.cfg.set("run.seed", std::to_string(f.seed));
      if (!f.eps.empty()) j.cfg.set("adiabatic.eps", f.eps);
      if (!f.suite.empty()) j.cfg.set("estimates.suite", f.suite);
      if (f.trials > 0) j.cfg.set("estimates.trials", std::to_string(f.trials));
      if (f.tau > 0) j.cfg.set("flow.tau", format_number(f.tau));
      if (!f.inputs.empty()) j.cfg.set("report.inputs", f.inputs);
    }
  } catch (const Error& e) {
    err << "gaugelab " << sub << ": config error: " << e.what() << "\n";
    return 2;
  }

  // output directory: --out, then GAUGELAB_OUT, then run.out
  std::vector<std::string> dirs;
  int workers = f.workers;
  try {
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      Job& j = jobs[k];
      std::string base = j.cfg.str("run.out", "gaugelab_out");
      if (const char* env = std::getenv("GAUGELAB_OUT"); env && *env) base = env;
      if (!f.out.empty()) base = f.out;
      const long w = j.cfg.integer("run.workers", 1);
      if (w < 1) throw Error(ErrorKind::Config, "run.workers must be >= 1");
      if (workers == 0) workers = static_cast<int>(w);
      dirs.push_back(jobs.size() == 1 ? base : (fs::path(base) / (std::to_string(k) + "_" + j.label)).string());
    }
  } catch (const Error& e) {
    err << "gaugelab " << sub << ": config error: " << e.what() << "\n";
    return 2;
  }

  std::vector<RunOutcome> outcomes(jobs.size());
  std::vector<std::string> messages(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < jobs.size();) {
      std::ostringstream e;
      outcomes[k] = run_config(sub, jobs[k].cfg, dirs[k], e);
      messages[k] = e.str();
    }
  };
  const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  int code = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    err << messages[k];
    const RunOutcome& o = outcomes[k];
    if (o.exit_code == 0) out << sub << " " << o.fingerprint << " " << o.out_dir << "\n";
    code = std::max(code, o.exit_code);
  }
  return code;
}

}  // namespace gaugelab::cli
