#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "resbound/cli.hpp"
#include "resbound/csv.hpp"
#include "resbound/errors.hpp"

namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / ("resbound_cli_" + name)) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }

  std::string config(const std::string& body, const std::string& file = "run.cfg") const {
    const fs::path p = root / file;
    std::ofstream(p) << body;
    return p.string();
  }
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = resbound::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Data rows: lines that are neither metadata nor the header.
int data_rows(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int rows = -1;  // header
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  return rows;
}

std::string meta(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string k, v;
    if (resbound::parse_metadata_line(line, k, v) && k == key) return v;
  }
  return {};
}

const char* kGaussian = R"(dimension = 2
generator = gaussian
seed = 5
M = 100
)";

}  // namespace

TEST_CASE("cli sample: shape, header and determinism") {
  Workspace ws("sample");
  const auto cfg = ws.config(kGaussian);
  const auto a = run({"sample", "--config", cfg, "--out", (ws.root / "a").string()});
  REQUIRE(a.code == 0);
  CHECK(a.out.find("fingerprint") != std::string::npos);
  const std::string text = slurp(ws.root / "a" / "sample.csv");
  CHECK(data_rows(text) == 100);
  CHECK(!meta(text, "fingerprint").empty());
  CHECK(!meta(text, "config_hash").empty());
  CHECK(meta(text, "config_seed") == "5");
  CHECK(text.find("x1,x2\n") != std::string::npos);

  REQUIRE(run({"sample", "--config", cfg, "--out", (ws.root / "b").string(), "--threads", "8"}).code == 0);
  CHECK(slurp(ws.root / "b" / "sample.csv") == text);
}

TEST_CASE("cli: configuration errors exit with 1") {
  Workspace ws("config");
  const auto heavy = ws.config("dimension = 2\ngenerator = student_t\nshape = 1.5\nseed = 1\n");
  const auto r = run({"crb", "--config", heavy, "--out", (ws.root / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("MomentError") != std::string::npos);

  const auto unknown = ws.config("dimension = 2\ngenerator = gaussian\nseed = 1\ncolour = red\n", "u.cfg");
  CHECK(run({"sample", "--config", unknown, "--out", (ws.root / "o").string()}).code == 1);

  const auto noseed = ws.config("dimension = 2\ngenerator = gaussian\n", "n.cfg");
  CHECK(run({"sample", "--config", noseed, "--out", (ws.root / "o").string()}).code == 1);

  CHECK(run({"sample", "--config", (ws.root / "missing.cfg").string(), "--out", ws.root.string()}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("cli crb: Gaussian bound and degenerate case") {
  Workspace ws("crb");
  const auto cfg = ws.config("dimension = 2\ngenerator = gaussian\nsigma = 1.5 0.3 0.3 0.5\nseed = 2\nM = 100000\n");
  REQUIRE(run({"crb", "--config", cfg, "--out", ws.root.string()}).code == 0);
  const std::string text = slurp(ws.root / "crb.csv");
  CHECK(std::stod(meta(text, "route_agreement")) <= 1e-8);
  // crb row 0,0 should be Sigma_11 = 1.5 within Monte Carlo error
  std::istringstream in(text);
  std::string line;
  double c00 = 0.0;
  while (std::getline(in, line)) {
    if (line.rfind("crb_projection,0,0,", 0) == 0) c00 = std::stod(line.substr(19));
  }
  CHECK(std::abs(c00 - 1.5) < 4.0 * 1.5 * 2.0 / std::sqrt(100000.0));

  const auto tiny = ws.config("dimension = 2\ngenerator = gaussian\nseed = 2\nM = 2\n", "t.cfg");
  CHECK(run({"crb", "--config", tiny, "--out", ws.root.string()}).code == 2);
}

TEST_CASE("cli scrb: trace, convergence flag, schedule errors") {
  Workspace ws("scrb");
  const auto cfg = ws.config(
      "dimension = 2\ngenerator = student_t\nshape = 5\ninterest = shape\nseed = 3\nM = 20000\nschedule = 2 4 8\n");
  REQUIRE(run({"scrb", "--config", cfg, "--out", ws.root.string()}).code == 0);
  const std::string text = slurp(ws.root / "scrb.csv");
  CHECK(data_rows(text) == 4);
  const std::string flag = meta(text, "converged");
  CHECK((flag == "true" || flag == "false"));

  const auto bad = ws.config("dimension = 2\ngenerator = gaussian\nseed = 3\nschedule = 4 2\n", "b.cfg");
  CHECK(run({"scrb", "--config", bad, "--out", ws.root.string()}).code == 1);
  const auto spline =
      ws.config("dimension = 2\ngenerator = gaussian\nseed = 3\nschedule = 2 3\nfamily = bspline\n", "s.cfg");
  const auto r = run({"scrb", "--config", spline, "--out", ws.root.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("ScheduleError") != std::string::npos);
}

TEST_CASE("cli bench: outputs and thread independence") {
  Workspace ws("bench");
  const auto cfg = ws.config(
      "dimension = 2\ngenerator = student_t\nshape = 4\ninterest = shape\nseed = 4\nM = 300\nR = 20\n"
      "bound_M = 5000\nschedule = 2 4\nestimators = sample_moments tyler huber student_t_mle\n");
  REQUIRE(run({"bench", "--config", cfg, "--out", (ws.root / "a").string(), "--threads", "1"}).code == 0);
  REQUIRE(run({"bench", "--config", cfg, "--out", (ws.root / "b").string(), "--threads", "8"}).code == 0);
  for (const char* f : {"bench_report.csv", "bench_trials.csv"}) {
    CHECK(slurp(ws.root / "a" / f) == slurp(ws.root / "b" / f));
  }
  CHECK(data_rows(slurp(ws.root / "a" / "bench_report.csv")) == 4);
}

TEST_CASE("cli: exception classes map to exit codes") {
  using namespace resbound;
  std::ostringstream err;
  CHECK(cli::exit_code_for(std::make_exception_ptr(IntegrityError("trace not monotone")), err) == 3);
  CHECK(cli::exit_code_for(std::make_exception_ptr(SingularFim("singular")), err) == 2);
  CHECK(cli::exit_code_for(std::make_exception_ptr(NonIdentifiable("lost")), err) == 2);
  CHECK(cli::exit_code_for(std::make_exception_ptr(SingularSpan("span")), err) == 2);
  CHECK(cli::exit_code_for(std::make_exception_ptr(ConfigError("bad")), err) == 1);
  CHECK(cli::exit_code_for(std::make_exception_ptr(MomentError("nu")), err) == 1);
  CHECK(err.str().find("IntegrityError: trace not monotone") != std::string::npos);
}
