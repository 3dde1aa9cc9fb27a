#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "mediator/dataset.hpp"
#include "mediator/errors.hpp"
#include "support/helpers.hpp"

using namespace mediator;

namespace {

VariableRoles toy_roles(bool with_moc = false) {
  VariableRoles r;
  r.covariates = {"w"};
  r.treatment = "a";
  if (with_moc) r.moc = {"z"};
  r.mediators = {"m"};
  r.outcome = "y";
  return r;
}

}  // namespace

TEST_CASE("load_csv parses a plain numeric table and preserves row order") {
  const auto dir = testsupport::scratch_dir("csv");
  const auto path = testsupport::write_file(dir / "ok.csv",
                                            "w,a,z,m,y\n"
                                            "0.5,1,0,2.5,1.25\n"
                                            "-1.5,0,1,3.5,0\n"
                                            "2,1,1,4,7.5\n");
  const auto data = load_csv(path, toy_roles(true));
  CHECK(data.n() == 3);
  CHECK(data.column("w")(0) == doctest::Approx(0.5));
  CHECK(data.column("y")(2) == doctest::Approx(7.5));
  CHECK(data.column("m")(1) == doctest::Approx(3.5));
}

TEST_CASE("load_csv rejects missing role columns") {
  const auto dir = testsupport::scratch_dir("csv");
  const auto path = testsupport::write_file(dir / "missing_col.csv", "w,a,m\n1,0,2\n");
  CHECK_THROWS_AS(load_csv(path, toy_roles()), MissingColumnError);
}

TEST_CASE("load_csv rejects NA and non-numeric cells with row/column context") {
  const auto dir = testsupport::scratch_dir("csv");
  const auto na = testsupport::write_file(dir / "na.csv", "w,a,m,y\n1,0,2,3\n1,1,2,NA\n1,0,2,3\n");
  try {
    load_csv(na, toy_roles());
    FAIL("expected MissingValueError");
  } catch (const MissingValueError& e) {
    CHECK(e.row == 2);
    CHECK(e.column == "y");
  }

  const auto bad = testsupport::write_file(dir / "bad.csv", "w,a,m,y\n1,0,hello,3\n");
  CHECK_THROWS_AS(load_csv(bad, toy_roles()), NonNumericCellError);
}

TEST_CASE("load_csv accepts an empty covariate list") {
  const auto dir = testsupport::scratch_dir("csv");
  const auto path = testsupport::write_file(dir / "no_w.csv", "a,m,y\n1,2,3\n0,1,2\n");
  VariableRoles r;
  r.treatment = "a";
  r.mediators = {"m"};
  r.outcome = "y";
  const auto data = load_csv(path, r);
  CHECK(data.n() == 2);
  CHECK(data.roles.covariates.empty());
}

TEST_CASE("roles must be pairwise disjoint") {
  VariableRoles r = toy_roles();
  r.covariates = {"a"};
  CHECK_THROWS_AS(r.validate(), RoleConflictError);
}

TEST_CASE("augment_zpi permutes Z within treatment strata") {
  // Z = [1,2,3,4], A = [0,0,1,1]: each stratum's multiset must be preserved.
  Mat values(4, 5);
  values << 0, 0, 1, 1, 1,  //
      0, 0, 2, 1, 1,        //
      0, 1, 3, 1, 1,        //
      0, 1, 4, 1, 1;
  const auto data = make_dataset({"w", "a", "z", "m", "y"}, values, toy_roles(true));

  const auto aug = augment_zpi(data, 42);
  REQUIRE(aug.zpi.rows() == 4);
  std::multiset<double> lo{aug.zpi(0, 0), aug.zpi(1, 0)};
  std::multiset<double> hi{aug.zpi(2, 0), aug.zpi(3, 0)};
  CHECK(lo == std::multiset<double>{1, 2});
  CHECK(hi == std::multiset<double>{3, 4});
}

TEST_CASE("augment_zpi with empty moc passes the data through") {
  Mat values(3, 4);
  values << 0, 0, 1, 1, 0, 1, 2, 1, 1, 1, 3, 0;
  const auto data = make_dataset({"w", "a", "m", "y"}, values, toy_roles(false));
  const auto aug = augment_zpi(data, 1);
  CHECK(aug.zpi.cols() == 0);
  CHECK(aug.base.values == data.values);
}

TEST_CASE("augment_zpi is deterministic in the seed") {
  const auto scm = testsupport::linear_gaussian_scm();
  const auto data = simulate(scm, 200, 5);
  const auto a1 = augment_zpi(data, 9);
  const auto a2 = augment_zpi(data, 9);
  const auto a3 = augment_zpi(data, 10);
  CHECK(a1.zpi == a2.zpi);
  CHECK(a1.zpi != a3.zpi);
}

TEST_CASE("augment_zpi warns and keeps identity for tiny strata") {
  Mat values(3, 5);
  // treatment levels: {0, 0, 7}; the level-7 stratum has one row
  values << 0, 0, 1, 1, 1,  //
      0, 0, 2, 1, 1,        //
      0, 7, 3, 1, 1;
  const auto data = make_dataset({"w", "a", "z", "m", "y"}, values, toy_roles(true));
  const auto aug = augment_zpi(data, 3);
  CHECK(aug.zpi(2, 0) == 3.0);  // identity for the singleton stratum
  REQUIRE(!aug.warnings.empty());
  CHECK(aug.warnings.front().find("fewer than 2 rows") != std::string::npos);
}

TEST_CASE("zpi within-stratum law matches the Z law exactly on a discrete toy") {
  // Z independent of W given A: the empirical conditional law of Z^pi given
  // A = a must coincide with that of Z (it is the same multiset).
  const auto scm = testsupport::confounded_scm();
  const auto data = simulate(scm, 500, 21);
  const auto aug = augment_zpi(data, 33);
  const Vec a = data.column("a");
  const Vec z = data.column("z");
  for (double level : {0.0, 1.0}) {
    std::map<double, int> law_z, law_zpi;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a(i) != level) continue;
      law_z[z(i)]++;
      law_zpi[aug.zpi(i, 0)]++;
    }
    CHECK(law_z == law_zpi);
  }
}

TEST_CASE("matched strategy also preserves the stratum multiset") {
  const auto scm = testsupport::confounded_scm();
  const auto data = simulate(scm, 301, 2);
  const auto aug = augment_zpi(data, 4, ZpiStrategy::kMatchedWithinCovariates);
  const Vec a = data.column("a");
  const Vec z = data.column("z");
  for (double level : {0.0, 1.0}) {
    std::multiset<double> ms_z, ms_zpi;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a(i) != level) continue;
      ms_z.insert(z(i));
      ms_zpi.insert(aug.zpi(i, 0));
    }
    CHECK(ms_z == ms_zpi);
  }
}

TEST_CASE("make_folds partitions rows into near-equal folds") {
  const auto scm = testsupport::linear_gaussian_scm();
  const auto data = simulate(scm, 10, 3);
  auto aug = augment_zpi(data, 1);

  SUBCASE("n = 10, v = 5 gives folds of size 2") {
    const auto folded = make_folds(aug, 5, 7);
    std::map<int, int> sizes;
    for (int f : folded.fold) sizes[f]++;
    CHECK(sizes.size() == 5);
    for (const auto& [f, c] : sizes) CHECK(c == 2);
  }

  SUBCASE("v = 1 assigns everything to one fold") {
    const auto folded = make_folds(aug, 1, 7);
    for (int f : folded.fold) CHECK(f == 1);
  }

  SUBCASE("invalid counts throw") {
    CHECK_THROWS_AS(make_folds(aug, 0, 7), InvalidFoldCountError);
    CHECK_THROWS_AS(make_folds(aug, 11, 7), InvalidFoldCountError);
  }
}

TEST_CASE("make_folds stratifies on a binary outcome") {
  // 30% positives, v = 5: each fold's positive count within 1 of 30% of its size.
  const std::size_t n = 100;
  Mat values(static_cast<Eigen::Index>(n), 4);
  for (std::size_t i = 0; i < n; ++i) {
    values(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i % 7);
    values(static_cast<Eigen::Index>(i), 1) = static_cast<double>(i % 2);
    values(static_cast<Eigen::Index>(i), 2) = static_cast<double>(i % 3);
    values(static_cast<Eigen::Index>(i), 3) = i < 30 ? 1.0 : 0.0;
  }
  const auto data = make_dataset({"w", "a", "m", "y"}, values, toy_roles());
  const auto folded = make_folds(augment_zpi(data, 0), 5, 11);

  std::map<int, std::pair<int, int>> pos_tot;
  for (std::size_t i = 0; i < n; ++i) {
    auto& [pos, tot] = pos_tot[folded.fold[i]];
    tot++;
    if (values(static_cast<Eigen::Index>(i), 3) == 1.0) pos++;
  }
  for (const auto& [f, pt] : pos_tot) {
    const double expected = 0.3 * pt.second;
    CHECK(std::abs(pt.first - expected) <= 1.0);
  }
}

TEST_CASE("fold assignment is deterministic and a partition") {
  const auto scm = testsupport::linear_gaussian_scm();
  const auto data = simulate(scm, 137, 3);
  const auto f1 = make_folds(augment_zpi(data, 5), 4, 5);
  const auto f2 = make_folds(augment_zpi(data, 5), 4, 5);
  CHECK(f1.fold == f2.fold);
  std::map<int, int> sizes;
  for (int f : f1.fold) {
    CHECK(f >= 1);
    CHECK(f <= 4);
    sizes[f]++;
  }
  CHECK(sizes.size() == 4);  // every fold nonempty
}

TEST_CASE("positivity diagnostics flag heavy clipping only") {
  SUBCASE("all weights comfortably inside the bound") {
    std::vector<double> w(200, 1.0);
    w[10] = 4.0;
    w[20] = 0.5;
    const auto d = positivity_diagnostics(w, 50.0);
    CHECK(!d.flagged);
    CHECK(d.n_clipped == 0);
    CHECK(d.max == doctest::Approx(4.0));
  }

  SUBCASE("5% of weights at the bound raises the flag") {
    std::vector<double> w(100, 1.0);
    for (int i = 0; i < 5; ++i) w[static_cast<std::size_t>(i)] = 50.0;
    const auto d = positivity_diagnostics(w, 50.0);
    CHECK(d.flagged);
    CHECK(d.n_clipped == 5);
    CHECK(d.frac_clipped == doctest::Approx(0.05));
  }
}
