#include "gtube/error.hpp"
#include "gtube/report.hpp"
#include "gtube/runner.hpp"
#include "gtube/version.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace gtube;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("gtube_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(RawManifest m, const fs::path& out) {
  m.set("out", out.string());
  std::ostringstream o, e;
  const int code = run_manifest(m, o, e);
  return {code, o.str(), e.str()};
}

RawManifest sphere_count(const std::string& T) {
  RawManifest m;
  m.set("task", "count");
  m.set("kind", "constant_curvature");
  m.set("c", "1");
  m.set("n", "2");
  m.set("T", T);
  return m;
}

}  // namespace

TEST_CASE("parse_manifest sections and keys") {
  std::istringstream good(
      "[manifold]\nkind = flat_torus\nbasis = 1,0;0,1\n[task]\ntask = count\nT = 1,2\n[output]\nquiet = true\n");
  const RawManifest m = parse_manifest(good);
  CHECK(m.get("kind") == "flat_torus");
  CHECK(m.get("basis") == "1,0;0,1");
  CHECK(m.get("T") == "1,2");
  CHECK_FALSE(m.get("seed").has_value());

  std::istringstream unknown_key("[task]\ntask = count\nspeed = 3\n");
  CHECK_THROWS_AS(parse_manifest(unknown_key), ConfigurationError);
  std::istringstream wrong_section("[output]\nkind = flat_torus\n");
  CHECK_THROWS_AS(parse_manifest(wrong_section), ConfigurationError);
  std::istringstream unknown_section("[extras]\nx = 1\n");
  CHECK_THROWS_AS(parse_manifest(unknown_section), ConfigurationError);
  CHECK_THROWS_AS(load_manifest("/nonexistent/gtube.ini"), ConfigurationError);
}

TEST_CASE("parse_experiment defaults and validation") {
  RawManifest m = sphere_count("1,2,3");
  const Experiment e = parse_experiment(m);
  CHECK(e.task == Task::count);
  CHECK(e.order == 16);
  CHECK(e.seed == 0);
  CHECK(e.step == 1e-3);
  CHECK(e.threads == 1);
  CHECK(e.T == std::vector<double>{1, 2, 3});

  RawManifest range = sphere_count("1");
  range.values.erase("T");
  range.set("T_range", "1:3:5");
  CHECK(parse_experiment(range).T == std::vector<double>{1, 1.5, 2, 2.5, 3});
  range.set("T", "1");
  CHECK_THROWS_AS(parse_experiment(range), ConfigurationError);

  CHECK_THROWS_AS(parse_experiment(sphere_count("2,1")), InputError);
  CHECK_THROWS_AS(parse_experiment(sphere_count("0,1")), InputError);
  CHECK_THROWS_AS(parse_experiment(sphere_count("1,x")), InputError);

  RawManifest klein = sphere_count("1");
  klein.set("kind", "klein_bottle");
  CHECK_THROWS_AS(parse_experiment(klein), OutOfCatalogError);

  RawManifest bad_task = sphere_count("1");
  bad_task.set("task", "integrate");
  CHECK_THROWS_AS(parse_experiment(bad_task), ConfigurationError);

  RawManifest gromov;
  gromov.set("task", "gromov");
  const Experiment g = parse_experiment(gromov);
  CHECK(g.step == 1e-2);
  CHECK(g.K == 50);
  REQUIRE(g.spec.has_value());
  CHECK(g.spec->dimension() == 2);
}

TEST_CASE("manifest_hash covers parameters but not execution settings") {
  RawManifest a = sphere_count("1,2");
  const std::string h = manifest_hash(a);
  CHECK(h.size() == 64);
  RawManifest b = a;
  b.set("threads", "4");
  b.set("out", "/elsewhere");
  b.set("quiet", "true");
  CHECK(manifest_hash(b) == h);
  b.set("c", "4");
  CHECK(manifest_hash(b) != h);
  RawManifest empty;
  // SHA-256 of the empty string.
  CHECK(manifest_hash(empty) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(run(sphere_count("2,1"), dir.path / "a").code == kExitValidation);

  RawManifest klein = sphere_count("1");
  klein.set("kind", "klein_bottle");
  const Run r = run(klein, dir.path / "b");
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("out-of-catalog") != std::string::npos);

  RawManifest suite;
  suite.set("task", "lemma_suite");
  suite.set("kind", "constant_curvature");
  suite.set("c", "1");
  suite.set("n", "3");
  suite.set("quiet", "true");
  const Run ok = run(suite, dir.path / "c");
  CHECK(ok.code == kExitSuccess);
  CHECK(ok.out.empty());
  CHECK(fs::exists(dir.path / "c" / "report.json"));

  RawManifest hyperbolic_herglotz = suite;
  hyperbolic_herglotz.set("task", "herglotz_verify");
  hyperbolic_herglotz.set("c", "-1");
  CHECK(run(hyperbolic_herglotz, dir.path / "d").code == kExitValidation);

  RawManifest torus_gromov;
  torus_gromov.set("task", "gromov");
  torus_gromov.set("kind", "flat_torus");
  torus_gromov.set("basis", "1,0;0,1");
  CHECK(run(torus_gromov, dir.path / "e").code == kExitValidation);
}

TEST_CASE("sphere count is linear and artifacts carry version and hash") {
  TempDir dir;
  RawManifest m = sphere_count("1");
  m.values.erase("T");
  m.set("T_range", "1:30:30");
  m.set("quiet", "true");
  const Run r = run(m, dir.path);
  REQUIRE(r.code == kExitSuccess);

  const auto growth = nlohmann::json::parse(slurp(dir.path / "growth.json"));
  CHECK(growth["class"] == "polynomial");
  CHECK(growth["degree"] == 1);
  const std::string hash = manifest_hash(m);
  CHECK(growth["meta"]["manifest_sha256"] == hash);
  CHECK(growth["meta"]["version"] == kVersion);

  const std::string csv = slurp(dir.path / "curve.csv");
  CHECK(csv.find(hash) != std::string::npos);
  CHECK(csv.find(std::string("gtube ") + kVersion) != std::string::npos);
  CHECK(csv.find("\nT,value\n") != std::string::npos);
  CHECK(slurp(dir.path / "report.txt").find(hash) != std::string::npos);
  CHECK(nlohmann::json::parse(slurp(dir.path / "report.json"))["meta"]["manifest_sha256"] == hash);
}

TEST_CASE("outputs are byte-identical across thread counts") {
  TempDir dir;
  RawManifest m;
  m.set("task", "count");
  m.set("kind", "flat_torus");
  m.set("basis", "1,0.2;0,1.1");
  m.set("T", "1,2,4");
  m.set("order", "12");
  m.set("samples", "2000");
  m.set("quiet", "true");
  m.set("threads", "1");
  REQUIRE(run(m, dir.path / "one").code == kExitSuccess);
  m.set("threads", "3");
  REQUIRE(run(m, dir.path / "three").code == kExitSuccess);
  for (const char* name : {"curve.csv", "oracle.csv", "report.json", "report.txt"}) {
    CAPTURE(name);
    CHECK(slurp(dir.path / "one" / name) == slurp(dir.path / "three" / name));
  }
}

TEST_CASE("report formatting") {
  Report report;
  CHECK(report.empty());
  CHECK(report.all_passed());
  std::ostringstream empty;
  write_text(empty, report);
  CHECK(empty.str().empty());
  CHECK(to_json(report)["checks"].empty());

  report.add("wronskian", "Wronskian", 1e-12, 1e-8);
  report.add("drift", "conservation", 2e-3, 1e-3);
  report.add("nan", "finite", std::nan(""), 1.0);
  report.add_flag("flag", "flag check", true);
  CHECK(report.failures() == 2);
  CHECK_FALSE(report.all_passed());
  CHECK(format_line(report.checks()[0]) == "PASS Wronskian wronskian residual=1.000e-12 tolerance=1.000e-08");
  CHECK(format_line(report.checks()[1]) == "FAIL conservation drift residual=2.000e-03 tolerance=1.000e-03");
  CHECK_FALSE(report.checks()[2].passed);
  CHECK(report.checks()[3].passed);
  const auto j = to_json(report);
  CHECK(j["failures"] == 2);
  CHECK(j["checks"][1]["passed"] == false);
}
