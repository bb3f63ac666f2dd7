#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sfflab/csvio.hpp"
#include "sfflab/errors.hpp"
#include "sfflab/rng.hpp"
#include "sfflab/svgplot.hpp"

using namespace sfflab;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per binary run, removed on exit.
struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() /
          ("sfflab-io-test-" + std::to_string(::getpid()));
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

SffCurve sample_curve() {
  SffCurve c;
  c.t = {0.1, 1.0, 10.0, 100.0};
  c.mean = {1.0, 0.1 + 1.0 / 3.0, 0.02, 1.0 / 30.0};
  c.stderr_ = {0.0, 1e-3, 2.5e-4, 1e-300};
  c.n_realizations = 12;
  c.n_failed = 2;
  c.plateau_ref = 1.0 / 30.0;
  c.metadata = {{"model", "goe"}, {"dimension", "30"},
                {"realizations", "12"}, {"plateau-ref", format_full(1.0 / 30.0)}};
  return c;
}

}  // namespace

TEST_CASE("full-precision formatting round-trips doubles bitwise") {
  std::vector<double> values = {0.0,    1.0,       -1.0,  0.1,  1.0 / 3.0,
                                1e-300, 1.2345e17, 2e-17, -0.0, 6.0 / 1728.0};
  RngStream rng(4242);
  for (int i = 0; i < 200; ++i)
    values.push_back((rng.uniform01() - 0.5) * std::pow(10.0, 600.0 * (rng.uniform01() - 0.5)));
  for (double v : values) {
    const std::string s = format_full(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("curve CSV text carries preamble, header, and one row per grid time") {
  const SffCurve c = sample_curve();
  const std::string text = curve_csv_text(c, {{"command", "sff"}});
  CHECK(text.find("# command = sff\n") == 0);
  CHECK(text.find("# model = goe\n") != std::string::npos);
  CHECK(text.find("t,f_mean,f_stderr,n_ok\n") != std::string::npos);
  // 4 data rows, each ending in the ok-count 12 - 2 = 10
  std::size_t rows = 0, pos = 0;
  while ((pos = text.find(",10\n", pos)) != std::string::npos) {
    ++rows;
    ++pos;
  }
  CHECK(rows == 4);
  // extra metadata comes before the curve's own
  CHECK(text.find("# command") < text.find("# model"));
}

TEST_CASE("curve CSV survives a write and read back bit for bit") {
  const SffCurve c = sample_curve();
  const std::string path = scratch().path("curve.csv");
  write_curve_csv(path, c);
  const CurveFileData d = read_curve_csv(path);
  CHECK(d.t == c.t);
  CHECK(d.f_mean == c.mean);
  CHECK(d.f_stderr == c.stderr_);
  CHECK(d.n_ok == std::vector<int>(4, 10));
  CHECK(d.lookup("model") == "goe");
  CHECK(d.lookup("dimension") == "30");
  CHECK(d.lookup("absent-key") == "");

  const SffCurve back = d.to_curve();
  CHECK(back.t == c.t);
  CHECK(back.mean == c.mean);
  CHECK(back.stderr_ == c.stderr_);
  CHECK(back.n_realizations == 12);
  CHECK(back.n_failed == 2);
  CHECK(back.plateau_ref == c.plateau_ref);
}

TEST_CASE("curve reader skips blanks and plain comments, keeps key = value pairs") {
  const std::string path = write_file("loose.csv",
                                      "# written by hand\n"
                                      "\n"
                                      "#  spaced key  =  spaced value \n"
                                      "t,f_mean,f_stderr,n_ok\n"
                                      "1,0.5,0,3\n");
  const CurveFileData d = read_curve_csv(path);
  CHECK(d.metadata.size() == 1);
  CHECK(d.lookup("spaced key") == "spaced value");
  CHECK(d.t == std::vector<double>{1.0});
  CHECK(d.n_ok == std::vector<int>{3});
}

TEST_CASE("curve reader reports the offending line number") {
  SUBCASE("bad numeric field") {
    const std::string path = write_file("badnum.csv",
                                        "# a = b\n"
                                        "t,f_mean,f_stderr,n_ok\n"
                                        "1,0.5,0,3\n"
                                        "2,zebra,0,3\n");
    try {
      read_curve_csv(path);
      FAIL("expected CsvParseError");
    } catch (const CsvParseError& e) {
      CHECK(e.line_number == 4);
      CHECK(std::string(e.what()).find("bad numeric field") != std::string::npos);
    }
  }
  SUBCASE("wrong field count") {
    const std::string path = write_file("short.csv",
                                        "t,f_mean,f_stderr,n_ok\n"
                                        "1,0.5,0\n");
    try {
      read_curve_csv(path);
      FAIL("expected CsvParseError");
    } catch (const CsvParseError& e) {
      CHECK(e.line_number == 2);
      CHECK(std::string(e.what()).find("expected 4 fields") != std::string::npos);
    }
  }
  SUBCASE("unexpected header") {
    const std::string path = write_file("badhdr.csv", "time,value\n1,2\n");
    try {
      read_curve_csv(path);
      FAIL("expected CsvParseError");
    } catch (const CsvParseError& e) {
      CHECK(e.line_number == 1);
    }
  }
  SUBCASE("header but no rows") {
    const std::string path = write_file("empty.csv", "t,f_mean,f_stderr,n_ok\n");
    CHECK_THROWS_AS(read_curve_csv(path), CsvParseError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_curve_csv(scratch().path("nope.csv")),
                    std::invalid_argument);
  }
}

TEST_CASE("trajectory CSV lists time, fidelity, purity, and trace drift") {
  const std::vector<TrajectoryRow> rows = {{0.0, 1.0, 1.0, 0.0},
                                           {0.5, 0.25, 0.9375, 1e-12}};
  const std::string text = trajectory_csv_text({{"model", "syk"}}, rows);
  CHECK(text.find("# model = syk\n") == 0);
  CHECK(text.find("t,fidelity,purity,trace_drift\n") != std::string::npos);
  CHECK(text.find("0.5,0.25,0.9375," + format_full(1e-12)) != std::string::npos);

  const std::string path = scratch().path("traj.csv");
  write_trajectory_csv(path, {{"model", "syk"}}, rows);
  CHECK(slurp(path) == text);
}

TEST_CASE("sweep CSV round-trips metrics rows and keeps failed values as errors") {
  SweepResult result;
  SweepEntry good;
  good.value = 1e-3;
  RampMetrics m;
  m.t_d = 5.6234;
  m.f_d = 3.25e-4;
  m.t_p = 1e5;
  m.f_p = 1.0 / 30.0;
  m.ratio = m.t_p / m.t_d;
  m.warnings = {"boundary_dip", "no_ramp"};
  good.metrics = m;
  SweepEntry bad;
  bad.value = 0.0;
  bad.error = "curve never settles, tried bands 0.1, 0.2";
  result.entries = {good, bad};

  const std::string path = scratch().path("sweep.csv");
  write_sweep_csv(path, {{"sweep-parameter", "gamma"}}, result);

  MetadataList meta;
  const std::vector<MetricsRow> rows = read_metrics_csv(path, &meta);
  REQUIRE(rows.size() == 2);
  CHECK(meta.size() == 1);
  CHECK(meta[0].first == "sweep-parameter");

  CHECK(rows[0].value == 1e-3);
  CHECK(rows[0].error.empty());
  CHECK(rows[0].metrics.t_d == m.t_d);
  CHECK(rows[0].metrics.f_d == m.f_d);
  CHECK(rows[0].metrics.t_p == m.t_p);
  CHECK(rows[0].metrics.f_p == m.f_p);
  CHECK(rows[0].metrics.ratio == m.ratio);
  CHECK(rows[0].metrics.warnings == m.warnings);

  CHECK(rows[1].value == 0.0);
  CHECK(!rows[1].error.empty());
  // the comma in the message must not add a CSV field
  CHECK(rows[1].error.find(',') == std::string::npos);
  CHECK(rows[1].error.find("curve never settles") != std::string::npos);
}

TEST_CASE("metrics reader validates shape the same way the curve reader does") {
  const std::string path = write_file("badsweep.csv",
                                      "parameter,t_d,f_d,t_p,f_p,ratio,warnings\n"
                                      "0.001,1,2,3\n");
  try {
    read_metrics_csv(path, nullptr);
    FAIL("expected CsvParseError");
  } catch (const CsvParseError& e) {
    CHECK(e.line_number == 2);
    CHECK(std::string(e.what()).find("expected 7 fields") != std::string::npos);
  }
}

TEST_CASE("CSV kind detection reads only the data header") {
  const std::string curve = scratch().path("kind-curve.csv");
  write_curve_csv(curve, sample_curve());
  CHECK(detect_csv_kind(curve) == CsvKind::Curve);

  SweepResult result;
  result.entries.push_back({});
  result.entries[0].error = "x";
  const std::string sweep = scratch().path("kind-sweep.csv");
  write_sweep_csv(sweep, {}, result);
  CHECK(detect_csv_kind(sweep) == CsvKind::Metrics);

  const std::string junk = write_file("kind-junk.csv", "# note\nfoo,bar\n");
  try {
    detect_csv_kind(junk);
    FAIL("expected CsvParseError");
  } catch (const CsvParseError& e) {
    CHECK(e.line_number == 2);
  }
  const std::string blank = write_file("kind-blank.csv", "# only comments\n");
  CHECK_THROWS_AS(detect_csv_kind(blank), CsvParseError);
  CHECK_THROWS_AS(detect_csv_kind(scratch().path("kind-missing.csv")),
                  std::invalid_argument);
}

TEST_CASE("atomic writes land complete and leave no temp file") {
  const std::string path = scratch().path("atomic.txt");
  write_text_atomic(path, "first\n");
  CHECK(slurp(path) == "first\n");
  write_text_atomic(path, "second\n");
  CHECK(slurp(path) == "second\n");
  CHECK(!fs::exists(path + ".tmp"));

  const std::string unreachable =
      scratch().path("no-such-dir") + "/out.txt";
  CHECK_THROWS_AS(write_text_atomic(unreachable, "x"), ResourceError);
  CHECK(!fs::exists(unreachable));
}

TEST_CASE("SVG output is deterministic and well formed") {
  PlotSeries s1{"gamma = 0", {1.0, 10.0, 100.0}, {1.0, 0.01, 0.1}};
  PlotSeries s2{"gamma = 1e-3", {1.0, 10.0, 100.0}, {1.0, 0.02, 0.09}};
  PlotOptions opt;
  opt.title = "fidelity decay";
  const std::string a = render_svg({s1, s2}, opt);
  const std::string b = render_svg({s1, s2}, opt);
  CHECK(a == b);
  CHECK(a.rfind("<svg ", 0) == 0);
  CHECK(a.find("</svg>") != std::string::npos);
  CHECK(a.find("fidelity decay") != std::string::npos);
  CHECK(a.find("gamma = 0") != std::string::npos);
  CHECK(a.find("gamma = 1e-3") != std::string::npos);
  // one polyline per series
  std::size_t lines = 0, pos = 0;
  while ((pos = a.find("<polyline", pos)) != std::string::npos) {
    ++lines;
    ++pos;
  }
  CHECK(lines == 2);
}

TEST_CASE("SVG labels are XML-escaped") {
  PlotSeries s{"a<b & \"q\">", {1.0, 2.0}, {1.0, 2.0}};
  PlotOptions opt;
  opt.log_x = false;
  opt.log_y = false;
  const std::string svg = render_svg({s}, opt);
  CHECK(svg.find("a&lt;b &amp; &quot;q&quot;&gt;") != std::string::npos);
  CHECK(svg.find("a<b") == std::string::npos);
}

TEST_CASE("scatter mode draws markers instead of polylines") {
  PlotSeries s{"pts", {1.0, 10.0}, {0.5, 0.25}};
  PlotOptions opt;
  opt.scatter = true;
  const std::string svg = render_svg({s}, opt);
  CHECK(svg.find("<circle") != std::string::npos);
  CHECK(svg.find("<polyline") == std::string::npos);
}

TEST_CASE("log axes drop nonpositive points rather than fold them in") {
  // same series with and without a zero-time point: the rendered polyline
  // must be identical because the zero cannot appear on a log axis
  PlotSeries with{"s", {0.0, 1.0, 10.0}, {0.3, 0.5, 0.25}};
  PlotSeries without{"s", {1.0, 10.0}, {0.5, 0.25}};
  const PlotOptions opt;
  CHECK(render_svg({with}, opt) == render_svg({without}, opt));

  PlotSeries negative{"s", {1.0, 10.0}, {-0.5, -0.25}};
  CHECK_THROWS_AS(render_svg({negative}, opt), std::invalid_argument);
}

TEST_CASE("plot rejects empty input and ragged series") {
  CHECK_THROWS_AS(render_svg({}, PlotOptions{}), std::invalid_argument);
  PlotSeries ragged{"r", {1.0, 2.0}, {1.0}};
  CHECK_THROWS_AS(render_svg({ragged}, PlotOptions{}), std::invalid_argument);
}
