#include <doctest.h>

#include <fstream>
#include <sstream>

#include "urisk/mc.hpp"
#include "urisk/serialize.hpp"

using namespace urisk;

TEST_CASE("format_double is deterministic and round-trippable") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-1.0) == "-1");
  CHECK(format_double(1e-9) == "1e-09");
  CHECK(format_double(1.0 / 3.0) == format_double(1.0 / 3.0));
  const double v = 0.1234567890123;
  CHECK(std::stod(format_double(v)) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("fit record json carries the documented fields") {
  DGPSpec spec;
  spec.n = 300;
  spec.seed = 3;
  auto ds = simulate_dgp(spec);
  IVQROptions opts;
  opts.exec = Exec::serial;
  auto fit = fit_at(ds, 0.8, Estimator::qr, opts);
  json j = fit_record_json(fit);
  CHECK(j["tau"] == 0.8);
  CHECK(j["method"] == "qr");
  CHECK(j["n"] == 300);
  CHECK(j.contains("coefficients"));
  CHECK(j.contains("ses"));
  CHECK(j.contains("objective"));
  CHECK(j["coefficients"].contains("d"));
  CHECK(j["coefficients"].contains("const"));

  auto ivfit = fit_at(ds, 0.5, Estimator::ivqr_grid, opts);
  json j2 = fit_record_json(ivfit, true);
  CHECK(j2["method"] == "grid");
  CHECK(j2.contains("wald_at_min"));
  CHECK(j2.contains("wald_profile"));
  CHECK(j2["wald_profile"]["alpha"].size() == j2["wald_profile"]["wald"].size());
  json j3 = fit_record_json(ivfit, false);
  CHECK(!j3.contains("wald_profile"));
}

TEST_CASE("csv writer emits header, rows, and trailing newline") {
  const std::string path = "/tmp/urisk_ser_test.csv";
  write_csv(path, {"a", "b"}, {{"1", "2"}, {"3", "4"}});
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "a,b\n1,2\n3,4\n");
  std::remove(path.c_str());
}

TEST_CASE("json number serialization is stable across dumps") {
  json a;
  a["x"] = 0.1 + 0.2;
  a["y"] = 1.0 / 3.0;
  json b;
  b["x"] = 0.1 + 0.2;
  b["y"] = 1.0 / 3.0;
  CHECK(a.dump() == b.dump());
}
