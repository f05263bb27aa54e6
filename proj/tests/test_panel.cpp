#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "urisk/error.hpp"
#include "urisk/panel.hpp"

using namespace urisk;

namespace {

std::string write_temp_csv(const std::string& body, const char* name) {
  std::string path = std::string("/tmp/urisk_") + name + ".csv";
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("month parsing and arithmetic") {
  Month m = Month::parse("2000-01");
  CHECK(m.year() == 2000);
  CHECK(m.month() == 1);
  CHECK(m.str() == "2000-01");
  CHECK(Month::parse("2000-01-15") == m);  // day ignored
  CHECK((m + 12).str() == "2001-01");
  CHECK(Month::parse("2001-03") - m == 14);
  CHECK_THROWS_AS(Month::parse("200001"), InputError);
  CHECK_THROWS_AS(Month::parse("2000-13"), InputError);
}

TEST_CASE("load_csv reads a small panel") {
  auto path = write_temp_csv("date,UR\n2000-01,4.0\n2000-02,4.2\n2000-03,4.1\n", "small");
  auto panel = load_csv(path);
  CHECK(panel.n_months() == 3);
  CHECK(panel.series_names == std::vector<std::string>{"UR"});
  CHECK(panel.at("UR")[0] == doctest::Approx(4.0));
  CHECK(panel.at("UR")[2] == doctest::Approx(4.1));
  std::remove(path.c_str());
}

TEST_CASE("blank cells become missing values, not zeros") {
  auto path = write_temp_csv("date,UR,X\n2000-01,4.0,1\n2000-02,,2\n2000-03,4.1,3\n", "blank");
  auto panel = load_csv(path);
  CHECK(is_missing(panel.at("UR")[1]));
  CHECK(panel.at("UR")[1] != 0.0);
  CHECK(panel.at("X")[1] == doctest::Approx(2.0));
  std::remove(path.c_str());
}

TEST_CASE("duplicate months and bad dates are input errors naming the row") {
  auto dup = write_temp_csv("date,UR\n2000-01,4.0\n2000-01,4.2\n", "dup");
  CHECK_THROWS_AS(load_csv(dup), InputError);
  std::remove(dup.c_str());

  auto bad = write_temp_csv("date,UR\n2000-01,4.0\nnot-a-date,4.2\n", "baddate");
  try {
    load_csv(bad);
    CHECK(false);
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  std::remove(bad.c_str());
}

TEST_CASE("gaps in the csv become missing months inside a contiguous range") {
  auto path = write_temp_csv("date,UR\n2000-01,4.0\n2000-04,4.3\n", "gap");
  auto panel = load_csv(path);
  CHECK(panel.n_months() == 4);
  CHECK(is_missing(panel.at("UR")[1]));
  CHECK(is_missing(panel.at("UR")[2]));
  std::remove(path.c_str());
}

TEST_CASE("diff_horizon basics") {
  std::vector<double> constant(30, 5.0);
  auto d = diff_horizon(constant, 12);
  for (std::size_t t = 0; t + 12 < constant.size(); ++t) CHECK(d[t] == doctest::Approx(0.0));
  for (std::size_t t = constant.size() - 12; t < constant.size(); ++t) CHECK(is_missing(d[t]));

  std::vector<double> v(13, missing_value());
  v[0] = 4.0;
  v[12] = 6.5;
  auto d2 = diff_horizon(v, 12);
  CHECK(d2[0] == doctest::Approx(2.5));
  CHECK(is_missing(d2[1]));
}

TEST_CASE("diff_horizon is time equivariant") {
  std::vector<double> v = {1.0, 4.0, 2.0, 8.0, 3.0, 7.0, 5.0, 6.0};
  auto base = diff_horizon(v, 2);
  std::vector<double> shifted(v.size() + 3, missing_value());
  for (std::size_t i = 0; i < v.size(); ++i) shifted[i + 3] = v[i];
  auto d = diff_horizon(shifted, 2);
  for (std::size_t t = 0; t + 2 < v.size(); ++t) CHECK(d[t + 3] == doctest::Approx(base[t]));
}

TEST_CASE("yoy_change in both modes") {
  std::vector<Month> dates;
  std::vector<double> idx(13);
  for (int t = 0; t < 13; ++t) {
    dates.push_back(Month(2000, 1) + t);
    idx[static_cast<std::size_t>(t)] = 100.0;
  }
  idx[12] = 103.0;
  auto pc = yoy_change(idx, YoyMode::percent_change, dates);
  CHECK(pc[12] == doctest::Approx(3.0));
  for (int t = 0; t < 12; ++t) CHECK(is_missing(pc[static_cast<std::size_t>(t)]));

  std::vector<double> flat(26, 100.0);
  std::vector<Month> dates2;
  for (int t = 0; t < 26; ++t) dates2.push_back(Month(2000, 1) + t);
  auto pc2 = yoy_change(flat, YoyMode::percent_change, dates2);
  for (std::size_t t = 12; t < flat.size(); ++t) CHECK(pc2[t] == doctest::Approx(0.0));

  auto rd = yoy_change(idx, YoyMode::rate_difference, dates);
  CHECK(rd[12] == doctest::Approx(3.0));

  std::vector<double> bad = idx;
  bad[0] = -1.0;
  try {
    yoy_change(bad, YoyMode::percent_change, dates, "PCE");
    CHECK(false);
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("2000-01") != std::string::npos);
  }
}

TEST_CASE("summarize computes per-series statistics") {
  auto path = write_temp_csv(
      "date,A,B\n2000-01,2,\n2000-02,4,\n2000-03,6,\n", "summ");
  auto panel = load_csv(path);
  auto s = summarize(panel);
  REQUIRE(s.size() == 2);
  CHECK(s[0].name == "A");
  CHECK(s[0].obs == 3);
  CHECK(s[0].mean == doctest::Approx(4.0));
  CHECK(s[0].sd == doctest::Approx(2.0));
  CHECK(s[0].min == doctest::Approx(2.0));
  CHECK(s[0].max == doctest::Approx(6.0));
  CHECK(s[0].first.str() == "2000-01");
  CHECK(s[0].last.str() == "2000-03");
  CHECK(s[1].empty);
  // min <= mean <= max for every nonempty series
  CHECK(s[0].min <= s[0].mean);
  CHECK(s[0].mean <= s[0].max);
  std::remove(path.c_str());
}
