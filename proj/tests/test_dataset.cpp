#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "imed/dataset.hpp"
#include "support/test_oracles.hpp"

using namespace imed;
using imed::testing::make_dataset;

TEST_SUITE_BEGIN("dataset");

namespace {

VariableSchema basic_schema() {
  VariableSchema schema;
  schema.outcome_name = "y";
  schema.exposure_name = "a";
  schema.mediator_names = {"m1", "m2"};
  schema.mediator_kinds = {VariableKind::continuous, VariableKind::continuous};
  schema.covariate_names = {"l"};
  return schema;
}

std::string write_temp(const std::string& text) {
  static int counter = 0;
  const std::string path =
      "test_dataset_tmp_" + std::to_string(counter++) + ".csv";
  std::ofstream out(path);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("load_csv parses a small valid file") {
  const auto path = write_temp(
      "y,a,m1,m2,l\n"
      "1.5,0,0.2,0.3,1\n"
      "2.5,1,0.4,0.1,0\n"
      "0.5,0,0.1,0.9,1\n");
  const ObservedDataset data = load_csv(path, basic_schema());
  CHECK(data.rows() == 3);
  CHECK(data.outcome()[1] == 2.5);
  CHECK(data.column("m2")[2] == 0.9);
  std::remove(path.c_str());
}

TEST_CASE("load_csv rejects a non-binary exposure") {
  const auto path = write_temp("y,a,m1,m2,l\n1,0,1,1,1\n1,2,1,1,1\n");
  CHECK_THROWS_WITH_AS(load_csv(path, basic_schema()),
                       doctest::Contains("exposure not binary"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("load_csv names the missing column") {
  const auto path = write_temp("y,a,m1,l\n1,0,1,1\n");
  CHECK_THROWS_WITH_AS(load_csv(path, basic_schema()),
                       doctest::Contains("m2"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("load_csv rejects non-numeric cells and empty files") {
  const auto bad = write_temp("y,a,m1,m2,l\n1,0,x,1,1\n");
  CHECK_THROWS_WITH_AS(load_csv(bad, basic_schema()),
                       doctest::Contains("non-numeric"), DataError);
  std::remove(bad.c_str());

  const auto empty = write_temp("");
  CHECK_THROWS_WITH_AS(load_csv(empty, basic_schema()),
                       doctest::Contains("empty file"), DataError);
  std::remove(empty.c_str());

  const auto header_only = write_temp("y,a,m1,m2,l\n");
  CHECK_THROWS_AS(load_csv(header_only, basic_schema()), DataError);
  std::remove(header_only.c_str());
}

TEST_CASE("write/load round trip is bit exact") {
  auto stream = rng::stream(5, {});
  std::vector<double> y, a, m1, m2, l;
  for (int i = 0; i < 50; ++i) {
    y.push_back(stream.next_normal() * 1e-7);
    a.push_back(stream.next_bernoulli(0.5) ? 1.0 : 0.0);
    m1.push_back(stream.next_normal() * 1e9);
    m2.push_back(stream.next_normal());
    l.push_back(stream.next_uniform());
  }
  const ObservedDataset data = make_dataset(y, a, m1, m2, l);
  const std::string path = write_temp("");
  write_csv(data, path);
  const ObservedDataset back = load_csv(path, data.schema());
  for (const auto& name : data.schema().all_names()) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      CHECK(data.column(name)[i] == back.column(name)[i]);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("standardize_column matches the hand values") {
  const auto data =
      make_dataset({1, 2, 3}, {0, 1, 0}, {1, 2, 3}, {0, 0, 1}, {0, 1, 2});
  const auto out = standardize_column(data, "m1");
  CHECK(out.column("m1")[0] == doctest::Approx(-1.0));
  CHECK(out.column("m1")[1] == doctest::Approx(0.0));
  CHECK(out.column("m1")[2] == doctest::Approx(1.0));
  // untouched columns
  CHECK(out.column("y")[2] == 3);

  const auto two = make_dataset({1, 2}, {0, 1}, {0, 10}, {0, 1}, {0, 1});
  const auto std2 = standardize_column(two, "m1");
  CHECK(std2.column("m1")[0] == doctest::Approx(-0.70710678).epsilon(1e-6));
  CHECK(std2.column("m1")[1] == doctest::Approx(0.70710678).epsilon(1e-6));
}

TEST_CASE("standardize_column rejects zero variance and unknown names") {
  const auto data =
      make_dataset({1, 2, 3}, {0, 1, 0}, {5, 5, 5}, {0, 0, 1}, {0, 1, 2});
  CHECK_THROWS_WITH_AS(standardize_column(data, "m1"),
                       doctest::Contains("zero variance"), DataError);
  CHECK_THROWS_AS(standardize_column(data, "nope"), DataError);
}

TEST_CASE("standardize_column is idempotent") {
  auto stream = rng::stream(9, {});
  std::vector<double> y, a, m1, m2, l;
  for (int i = 0; i < 40; ++i) {
    y.push_back(stream.next_normal());
    a.push_back(stream.next_bernoulli(0.5) ? 1.0 : 0.0);
    m1.push_back(3.0 + 2.5 * stream.next_normal());
    m2.push_back(stream.next_normal());
    l.push_back(stream.next_normal());
  }
  const auto once = standardize_column(make_dataset(y, a, m1, m2, l), "m1");
  const auto twice = standardize_column(once, "m1");
  for (Eigen::Index i = 0; i < once.rows(); ++i) {
    CHECK(std::abs(once.column("m1")[i] - twice.column("m1")[i]) < 1e-12);
  }
}

TEST_CASE("resample of a single row returns it") {
  const auto data = make_dataset({1}, {1}, {2}, {3}, {4});
  auto stream = rng::stream(1, {rng::domain::resample});
  const auto out = resample_with_replacement(data, stream);
  CHECK(out.rows() == 1);
  CHECK(out.column("m2")[0] == 3);
}

TEST_CASE("resampling is deterministic given the seed") {
  auto stream = rng::stream(33, {});
  std::vector<double> y, a, m1, m2, l;
  for (int i = 0; i < 100; ++i) {
    y.push_back(stream.next_normal());
    a.push_back(i % 2);
    m1.push_back(stream.next_normal());
    m2.push_back(stream.next_normal());
    l.push_back(stream.next_normal());
  }
  const auto data = make_dataset(y, a, m1, m2, l);
  auto s1 = rng::stream(77, {rng::domain::resample});
  auto s2 = rng::stream(77, {rng::domain::resample});
  const auto r1 = resample_with_replacement(data, s1);
  const auto r2 = resample_with_replacement(data, s2);
  CHECK(r1.rows() == data.rows());
  for (Eigen::Index i = 0; i < r1.rows(); ++i) {
    CHECK(r1.column("y")[i] == r2.column("y")[i]);
  }
}

TEST_CASE("resample distinct fraction approaches 1 - 1/e") {
  const int n = 1000;
  auto stream = rng::stream(21, {});
  std::vector<double> y(n), a(n), m1(n), m2(n), l(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i;  // unique marker per row
    a[i] = i % 2;
    m1[i] = stream.next_normal();
    m2[i] = stream.next_normal();
    l[i] = stream.next_normal();
  }
  const auto data = make_dataset(y, a, m1, m2, l);
  auto rs = rng::stream(4, {rng::domain::resample});
  const auto out = resample_with_replacement(data, rs);
  std::set<double> distinct(out.column("y").begin(), out.column("y").end());
  const double fraction = static_cast<double>(distinct.size()) / n;
  CHECK(fraction == doctest::Approx(0.632).epsilon(0.08));
}

TEST_SUITE_END();
