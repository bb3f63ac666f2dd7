#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "sfflab/csvio.hpp"

using namespace sfflab;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved

  bool contains(const std::string& needle) const {
    return output.find(needle) != std::string::npos;
  }
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(SFFLAB_BIN) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() /
          ("sfflab-cli-test-" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

Scratch& scratch() {
  static Scratch s;
  return s;
}

std::string write_file(const std::string& name, const std::string& body) {
  const std::string p = scratch().path(name);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << body;
  return p;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Small deterministic job shared by several cases.
const char* kSmallSff =
    "sff --model goe --dim 8 --realizations 3 --seed 7 --gamma 1e-3 "
    "--tmax 100 --points-per-decade 4";

}  // namespace

TEST_CASE("version and help succeed") {
  CHECK(run("--version").exit_code == 0);
  const RunResult help = run("--help");
  CHECK(help.exit_code == 0);
  for (const char* sub : {"sff", "sweep", "evolve", "analyze", "plot"})
    CHECK(help.contains(sub));
}

TEST_CASE("usage mistakes exit with code 2") {
  CHECK(run("").exit_code == 2);
  CHECK(run("sff --no-such-flag 1 --out x.csv").exit_code == 2);
  CHECK(run("frobnicate").exit_code == 2);

  const RunResult odd = run("sff --model syk --majoranas 13 --out x.csv");
  CHECK(odd.exit_code == 2);
  CHECK(odd.contains("even"));

  CHECK(run("sff --model goe").exit_code == 2);  // --out missing
  CHECK(run("sweep --model goe --out x.csv").exit_code == 2);  // --values missing
  CHECK(run("sff --model goe --band-epsilon 1.5 --out x.csv").exit_code == 2);
  CHECK(run("analyze " + scratch().path("missing.csv")).exit_code == 2);
}

TEST_CASE("print-config output replays as a config file byte for byte") {
  const RunResult first =
      run("sff --print-config --model goe --dim 12 --gamma 0.25 --include-zero");
  REQUIRE(first.exit_code == 0);
  CHECK(first.contains("subcommand = sff\n"));
  CHECK(first.contains("gamma = 0.25\n"));
  CHECK(first.contains("include-zero = true\n"));

  const std::string cfg = write_file("replay.cfg", first.output);
  const RunResult second = run("sff --config " + cfg + " --print-config");
  REQUIRE(second.exit_code == 0);
  CHECK(second.output == first.output);
}

TEST_CASE("command-line flags take precedence over config file values") {
  const std::string cfg = write_file("precedence.cfg",
                                     "gamma = 0.5\n"
                                     "dim = 24\n"
                                     "model = goe\n");
  const RunResult r =
      run("sff --config " + cfg + " --gamma 0.125 --print-config");
  REQUIRE(r.exit_code == 0);
  CHECK(r.contains("gamma = 0.125\n"));  // flag wins
  CHECK(r.contains("dim = 24\n"));       // file fills the rest
  CHECK(r.contains("model = goe\n"));
}

TEST_CASE("config files reject unknown keys and foreign subcommands") {
  const std::string bad = write_file("bad.cfg", "frobnicate = 1\n");
  const RunResult r1 = run("sff --config " + bad + " --print-config");
  CHECK(r1.exit_code == 2);
  CHECK(r1.contains("unknown config key"));

  const std::string foreign = write_file("foreign.cfg", "subcommand = sweep\n");
  const RunResult r2 = run("sff --config " + foreign + " --print-config");
  CHECK(r2.exit_code == 2);
  CHECK(r2.contains("config is for subcommand 'sweep'"));

  // informational output-preamble keys pass through without effect
  const std::string info = write_file("info.cfg",
                                      "version = 0.0.0\n"
                                      "plateau-ref = 0.5\n"
                                      "failed-realizations = 0\n"
                                      "gamma = 0.25\n");
  const RunResult r3 = run("sff --config " + info + " --print-config");
  CHECK(r3.exit_code == 0);
  CHECK(r3.contains("gamma = 0.25\n"));
}

TEST_CASE("resolved defaults depend on the model and evaluator") {
  const RunResult h0 = run("sff --print-config");
  REQUIRE(h0.exit_code == 0);
  CHECK(h0.contains("x-source = h0\n"));

  const RunResult goe = run("sff --print-config --model goe_with_x");
  REQUIRE(goe.exit_code == 0);
  CHECK(goe.contains("x-source = goe\n"));

  // the delta = 2 power filter is the gain/loss evaluator
  const RunResult norm =
      run("sff --print-config --evaluator filtered --filter power --delta 2");
  REQUIRE(norm.exit_code == 0);
  CHECK(norm.contains("evaluator = bgl\n"));

  const RunResult kept =
      run("sff --print-config --evaluator filtered --filter lorentz");
  REQUIRE(kept.exit_code == 0);
  CHECK(kept.contains("evaluator = filtered\n"));
}

TEST_CASE("sff writes a curve file that parses back with full metadata") {
  const std::string out = scratch().path("small.csv");
  const RunResult r = run(std::string(kSmallSff) + " --out " + out);
  REQUIRE(r.exit_code == 0);
  CHECK(r.contains("wrote " + out));

  const CurveFileData d = read_curve_csv(out);
  CHECK(d.lookup("subcommand") == "sff");
  CHECK(d.lookup("model") == "goe");
  CHECK(d.lookup("dim") == "8");
  CHECK(d.lookup("seed") == "7");
  CHECK(d.lookup("workers") == "");  // runtime-only, never in the preamble
  CHECK(d.t.size() == 13);           // 0.1 .. 100 at 4 points per decade
  CHECK(d.n_ok == std::vector<int>(13, 3));
  for (double f : d.f_mean) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("identical jobs produce identical files regardless of worker count") {
  // same destination both times: the preamble echoes --out, so distinct paths
  // would differ by that one line even though the data matches
  const std::string out = scratch().path("workers.csv");
  REQUIRE(run(std::string(kSmallSff) + " --workers 1 --out " + out).exit_code == 0);
  const std::string first = slurp(out);
  REQUIRE(run(std::string(kSmallSff) + " --workers 2 --out " + out).exit_code == 0);
  CHECK(first == slurp(out));
}

TEST_CASE("saturation reference is computed, reported, and stored") {
  const std::string out = scratch().path("ref.csv");
  const RunResult r = run(
      "sff --model goe --dim 16 --seed 3 --evaluator unitary --tmax 1e5 "
      "--points-per-decade 8 --realizations 4 --plateau-mode unitary --out " +
      out);
  REQUIRE(r.exit_code == 0);
  CHECK(r.contains("saturation reference (unitary) = 0.0625"));
  const CurveFileData d = read_curve_csv(out);
  CHECK(d.lookup("plateau-ref") == format_full(0.0625));
  CHECK(d.to_curve().plateau_ref == 0.0625);
}

TEST_CASE("analyze extracts metrics from a curve file") {
  const std::string curve = scratch().path("bgl16.csv");
  REQUIRE(run("sff --model goe --dim 16 --seed 3 --beta 1 --gamma 1e-3 "
              "--tmax 1e5 --points-per-decade 8 --realizations 4 --out " +
              curve)
              .exit_code == 0);

  SUBCASE("tail reference") {
    const RunResult r = run("analyze " + curve);
    REQUIRE(r.exit_code == 0);
    CHECK(r.contains("t_d = "));
    CHECK(r.contains("(tail)"));
    CHECK(r.contains("ratio = "));
    CHECK(r.contains("warnings = none"));
  }

  SUBCASE("stored reference with a metrics file") {
    const std::string ucurve = scratch().path("unit16.csv");
    REQUIRE(run("sff --model goe --dim 16 --seed 3 --evaluator unitary "
                "--tmax 1e5 --points-per-decade 8 --realizations 4 "
                "--plateau-mode unitary --out " +
                ucurve)
                .exit_code == 0);
    const std::string metrics = scratch().path("unit16-metrics.csv");
    const RunResult r =
        run("analyze " + ucurve + " --plateau-source stored --out " + metrics);
    REQUIRE(r.exit_code == 0);
    CHECK(r.contains("f_p = 0.0625 (stored)"));

    const std::vector<MetricsRow> rows = read_metrics_csv(metrics, nullptr);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].error.empty());
    CHECK(rows[0].metrics.f_p == 0.0625);
    CHECK(rows[0].metrics.ratio > 1.0);
  }

  SUBCASE("stored reference requires one in the file") {
    CHECK(run("analyze " + curve + " --plateau-source stored").exit_code == 2);
  }
}

TEST_CASE("analyze reports a numeric failure when the curve never settles") {
  const std::string decay = write_file("decay.csv",
                                       "t,f_mean,f_stderr,n_ok\n"
                                       "1,1,0,1\n"
                                       "10,0.1,0,1\n"
                                       "100,0.01,0,1\n"
                                       "1000,0.001,0,1\n"
                                       "10000,0.0001,0,1\n");
  const RunResult r = run("analyze " + decay);
  CHECK(r.exit_code == 3);
  CHECK(r.contains("never settles"));
}

TEST_CASE("sweep ranks values and records per-value failures") {
  const std::string out = scratch().path("sweep.csv");
  const std::string prefix = scratch().path("pref-");
  const RunResult r = run(
      "sweep --model goe --dim 16 --seed 3 --beta 1 --tmax 1e5 "
      "--points-per-decade 8 --realizations 4 --parameter gamma "
      "--values 0,1e-3 --curve-prefix " +
      prefix + " --out " + out);
  REQUIRE(r.exit_code == 0);
  CHECK(r.contains("gamma = 0: failed:"));
  CHECK(r.contains("best gamma = 0.001"));

  const std::vector<MetricsRow> rows = read_metrics_csv(out, nullptr);
  REQUIRE(rows.size() == 2);
  CHECK(!rows[0].error.empty());
  CHECK(rows[1].error.empty());
  CHECK(rows[1].metrics.ratio > 1.0);

  // per-value curve dumps exist even for the value whose metrics failed
  const CurveFileData c0 = read_curve_csv(prefix + "gamma_0.csv");
  const CurveFileData c1 = read_curve_csv(prefix + "gamma_0.001.csv");
  CHECK(c0.lookup("gamma") == "0");
  CHECK(c1.lookup("gamma") == "0.001");
}

TEST_CASE("resource limits exit with code 4 and leave no partial output") {
  const std::string out = scratch().path("capped.csv");
  const RunResult r = run(
      "sff --model goe --dim 12 --evaluator dephasing_jumps --max-dim 10 "
      "--realizations 2 --tmax 10 --out " +
      out);
  CHECK(r.exit_code == 4);
  CHECK(r.contains("all 2 realizations failed"));
  CHECK(r.contains("exceeds the cap"));
  CHECK(!fs::exists(out));

  // unwritable destination is also a resource failure
  const std::string unreachable = scratch().path("no-dir") + "/x.csv";
  CHECK(run(std::string(kSmallSff) + " --out " + unreachable).exit_code == 4);
}

TEST_CASE("evolve writes a trajectory with unit trace preserved") {
  const std::string out = scratch().path("traj.csv");
  const RunResult r = run(
      "evolve --model goe --dim 6 --seed 3 --beta 1 --gamma 0.2 --dt 0.01 "
      "--tmax 10 --points-per-decade 4 --out " +
      out);
  REQUIRE(r.exit_code == 0);
  CHECK(r.contains("max trace drift"));

  const std::string text = slurp(out);
  CHECK(text.find("t,fidelity,purity,trace_drift\n") != std::string::npos);
  CHECK(text.find("# subcommand = evolve\n") != std::string::npos);
  // 0.1 .. 10 at 4 points per decade
  std::size_t rows = 0, pos = text.find("trace_drift\n") + 12;
  while ((pos = text.find('\n', pos)) != std::string::npos) {
    ++rows;
    ++pos;
  }
  CHECK(rows == 9);
}

TEST_CASE("plot renders curves and metrics but refuses to mix them") {
  const std::string curve = scratch().path("plot-curve.csv");
  REQUIRE(run(std::string(kSmallSff) + " --out " + curve).exit_code == 0);

  const std::string svg = scratch().path("curve.svg");
  const RunResult r1 = run("plot " + curve + " --title panel --out " + svg);
  REQUIRE(r1.exit_code == 0);
  const std::string body = slurp(svg);
  CHECK(body.rfind("<svg ", 0) == 0);
  CHECK(body.find("<polyline") != std::string::npos);
  CHECK(body.find("panel") != std::string::npos);

  const std::string metrics = scratch().path("plot-metrics.csv");
  REQUIRE(run("sweep --model goe --dim 16 --seed 3 --beta 1 --tmax 1e5 "
              "--points-per-decade 8 --realizations 4 --parameter gamma "
              "--values 1e-3,1e-2 --out " +
              metrics)
              .exit_code == 0);
  const std::string svg2 = scratch().path("metrics.svg");
  const RunResult r2 = run("plot " + metrics + " --out " + svg2);
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(svg2).find("<circle") != std::string::npos);

  const RunResult mixed =
      run("plot " + curve + " " + metrics + " --out " + scratch().path("m.svg"));
  CHECK(mixed.exit_code == 2);
  CHECK(mixed.contains("pass --kind"));
}
