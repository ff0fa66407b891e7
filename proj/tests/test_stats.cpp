#include <doctest.h>

#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "valuemap/stats.hpp"

using namespace valuemap;
using namespace valuemap::stats;
using fixture::code_of;

TEST_CASE("normalized range") {
  std::vector<double> pair{0.8, 0.6};
  CHECK(normalized_range(pair) == 0.25);
  std::vector<double> flat{0.3, 0.3, 0.3};
  CHECK(normalized_range(flat) == 0.0);
  std::vector<double> three{0.5, 0.4, 0.3};
  CHECK(normalized_range(three) == doctest::Approx(0.4).epsilon(1e-12));
  std::vector<double> zeros{0.0, 0.0};
  CHECK(normalized_range(zeros) == 0.0);
  std::vector<double> neg{-1.0, 0.5};
  CHECK(code_of([&] { normalized_range(neg); }) == Errc::NonPositiveValue);
}

TEST_CASE("coefficient of variation") {
  std::vector<double> flat{2.0, 2.0};
  CHECK(coefficient_of_variation(flat) == 0.0);
  std::vector<double> v{4.0, 6.0};
  CHECK(coefficient_of_variation(v) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(coefficient_of_variation(v, SdConvention::Sample) == doctest::Approx(std::sqrt(2.0) / 5.0));
  std::vector<double> one{3.0};
  CHECK(coefficient_of_variation(one) == 0.0);
}

TEST_CASE("disparity metrics are scale invariant") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.05, 1.0), scale(0.01, 100.0);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> v(2 + rng() % 8);
    for (auto& x : v) x = u(rng);
    const double c = scale(rng);
    std::vector<double> w = v;
    for (auto& x : w) x *= c;
    CHECK(std::abs(coefficient_of_variation(v) - coefficient_of_variation(w)) <= 1e-12);
    CHECK(std::abs(normalized_range(v) - normalized_range(w)) <= 1e-12);
    CHECK(std::abs(coefficient_of_variation(v) - oracle::population_sd(v) / oracle::mean(v)) <= 1e-12);
  }
}

TEST_CASE("stratum disparity averages over strata") {
  std::map<std::string, std::vector<double>> by{{"a", {1.0, 0.8}}, {"b", {1.0, 0.6}}};
  auto r = stratum_disparity(by, "accuracy");
  CHECK(r.mean_normalized_range == doctest::Approx(0.3));
  REQUIRE(r.strata.size() == 2);
  CHECK(r.strata[0].stratum == "a");

  std::map<std::string, std::vector<double>> flat{{"a", {0.5, 0.5}}, {"b", {0.2, 0.2, 0.2}}};
  auto z = stratum_disparity(flat, "accuracy");
  CHECK(z.mean_normalized_range == 0.0);
  CHECK(z.mean_cv == 0.0);

  std::map<std::string, std::vector<double>> lonely{{"a", {0.5}}};
  CHECK(code_of([&] { stratum_disparity(lonely, "accuracy"); }) == Errc::SingletonStratum);
}

TEST_CASE("bootstrap degenerate deltas") {
  std::vector<double> base(40, 0.25), treat(40, 0.75);
  auto ci = paired_bootstrap_ci(base, treat);
  CHECK(ci.point_delta == 0.5);
  CHECK(ci.lo == 0.5);
  CHECK(ci.hi == 0.5);
  CHECK(ci.resamples == 2000);
  CHECK(ci.level == 0.95);
  CHECK(kDefaultResamples == 2000);
  CHECK(kDefaultLevel == 0.95);
}

TEST_CASE("bootstrap index stream") {
  std::vector<std::size_t> a, b;
  bootstrap_indices(5, 3, 17, a);
  bootstrap_indices(5, 3, 17, b);
  CHECK(a == b);
  CHECK(a.size() == 17);
  for (auto i : a) CHECK(i < 17);
  bootstrap_indices(5, 4, 17, b);
  CHECK(a != b);
}

TEST_CASE("bootstrap matches a naive resampler") {
  std::mt19937_64 rng(50);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> base(50), treat(50);
  for (int i = 0; i < 50; ++i) {
    base[i] = u(rng);
    treat[i] = u(rng) * 0.5 + 0.3;
  }
  const int resamples = 1000;
  auto ci = paired_bootstrap_ci(base, treat, resamples, 0.9, 123);

  std::vector<double> means;
  std::vector<std::size_t> idx;
  for (int r = 0; r < resamples; ++r) {
    bootstrap_indices(123, r, 50, idx);
    double sb = 0, st = 0;
    for (auto i : idx) {
      sb += base[i];
      st += treat[i];
    }
    means.push_back(st / 50 - sb / 50);
  }
  std::sort(means.begin(), means.end());
  auto q = [&](double p) {
    const double h = (means.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (h - lo) * (means[hi] - means[lo]);
  };
  CHECK(std::abs(ci.lo - q(0.05)) <= 1e-12);
  CHECK(std::abs(ci.hi - q(0.95)) <= 1e-12);
  CHECK(std::abs(ci.point_delta - (oracle::mean(treat) - oracle::mean(base))) <= 1e-12);
}

TEST_CASE("bootstrap width shrinks with level") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> base(60), treat(60);
  for (int i = 0; i < 60; ++i) {
    base[i] = u(rng);
    treat[i] = u(rng);
  }
  double prev = 1e9;
  for (double level : {0.99, 0.95, 0.9, 0.8, 0.5}) {
    auto ci = paired_bootstrap_ci(base, treat, 500, level, 7);
    CHECK(ci.hi - ci.lo <= prev + 1e-15);
    CHECK(ci.lo <= ci.hi);
    prev = ci.hi - ci.lo;
  }
  std::vector<double> shorter(10, 0.0);
  CHECK(code_of([&] { paired_bootstrap_ci(base, shorter); }) == Errc::LengthMismatch);
}

TEST_CASE("spearman examples") {
  std::vector<double> x{1, 2, 3}, y{3, 2, 1};
  CHECK(spearman(x, y).rho == doctest::Approx(-1.0));
  CHECK(spearman(x, x).rho == doctest::Approx(1.0));
  std::vector<double> a{1, 2, 2, 3}, b{1, 3, 2, 4};
  CHECK(std::abs(spearman(a, b).rho - oracle::spearman(a, b)) <= 1e-12);
  std::vector<double> c{1, 1, 1};
  CHECK(code_of([&] { spearman(c, x); }) == Errc::ConstantInput);
}

TEST_CASE("spearman with ties against counting ranks") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 300; ++t) {
    std::size_t n = 4 + rng() % 30;
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = static_cast<double>(rng() % 6);
    for (auto& v : y) v = static_cast<double>(rng() % 6);
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) continue;
    const double rho = spearman(x, y).rho;
    CHECK(std::abs(rho - oracle::spearman(x, y)) <= 1e-12);
    std::vector<double> tx(n);
    for (std::size_t i = 0; i < n; ++i) tx[i] = std::exp(x[i]) * 3.0 - 1.0;
    CHECK(std::abs(spearman(tx, y).rho - rho) <= 1e-12);
  }
}

TEST_CASE("judge weights") {
  auto w = judge_weights();
  CHECK(w[0][1] == 0.0);
  CHECK(w[1][0] == 0.0);
  CHECK(w[0][2] == 0.5);
  CHECK(w[2][1] == 0.5);
  CHECK(w[2][2] == 1.0);
}

TEST_CASE("weighted kappa small cases") {
  auto w = judge_weights();
  std::vector<int> a{0, 1, 2, 0}, same = a;
  CHECK(weighted_kappa(a, same, w) == doctest::Approx(1.0));
  std::vector<int> ab{0, 1}, ties{2, 2};
  // observed weighted agreement 0.5, expected 0.5 -> kappa 0
  CHECK(std::abs(weighted_kappa(ab, ties, w) - oracle::kappa(ab, ties, w)) <= 1e-12);
  CHECK(agreement_accuracy(ab, ties) == 0.0);
  std::vector<int> p{0, 1, 2, 0}, q{0, 1, 0, 1};
  CHECK(agreement_accuracy(p, q) == 0.5);
}

TEST_CASE("weighted kappa exhaustive over short lists") {
  auto w = judge_weights();
  int compared = 0;
  for (int len = 1; len <= 5; ++len) {
    int total = 1;
    for (int i = 0; i < len; ++i) total *= 3;
    // every pair of label lists of this length
    for (int ia = 0; ia < total; ++ia)
      for (int ib = 0; ib < total; ++ib) {
        std::vector<int> a(len), b(len);
        for (int i = 0, x = ia, y = ib; i < len; ++i, x /= 3, y /= 3) {
          a[i] = x % 3;
          b[i] = y % 3;
        }
        auto r = agreement(a, b, w);
        auto rev = agreement(b, a, w);
        CHECK(r.kappa_defined == rev.kappa_defined);
        if (!r.kappa_defined) continue;
        ++compared;
        const double k = oracle::kappa(a, b, w);
        if (std::abs(r.weighted_kappa - k) > 1e-12) FAIL_CHECK("kappa mismatch");
        if (std::abs(r.weighted_kappa - rev.weighted_kappa) > 1e-12) FAIL_CHECK("kappa asymmetric");
        if ((std::abs(r.weighted_kappa - 1.0) <= 1e-12) != (a == b)) FAIL_CHECK("kappa 1 iff identical");
        if (r.weighted_kappa > 1.0 + 1e-12) FAIL_CHECK("kappa above 1");
      }
  }
  CHECK(compared > 50000);
}

TEST_CASE("improvement ranks") {
  std::map<std::string, double> pre{{"25-34_Malay", 0.400}, {"45-54_Chinese", 0.500}, {"16-24_Indian", 0.300}};
  std::map<std::string, double> post{{"25-34_Malay", 0.607}, {"45-54_Chinese", 0.707}, {"16-24_Indian", 0.500}};
  auto r = improvement_ranks(pre, post, true, 3);
  CHECK(r.at("25-34_Malay").rank == 1);
  CHECK(r.at("45-54_Chinese").rank == 1);
  CHECK(r.at("16-24_Indian").rank == 3);

  std::map<std::string, double> one{{"x", 0.1}}, one_post{{"x", 0.3}};
  CHECK(improvement_ranks(one, one_post).at("x").rank == 1);

  std::map<std::string, double> same_post{{"25-34_Malay", 0.5}, {"45-54_Chinese", 0.6}, {"16-24_Indian", 0.4}};
  for (auto& [k, v] : improvement_ranks(pre, same_post, true, 6)) CHECK(v.rank == 1);

  // lower is better: a drop is an improvement
  std::map<std::string, double> err_pre{{"a", 0.3}, {"b", 0.3}}, err_post{{"a", 0.1}, {"b", 0.25}};
  auto e = improvement_ranks(err_pre, err_post, false);
  CHECK(e.at("a").rank == 1);
  CHECK(e.at("a").delta == doctest::Approx(-0.2));

  std::map<std::string, double> other{{"y", 0.1}};
  CHECK(code_of([&] { improvement_ranks(one, other); }) == Errc::KeyMismatch);
}

TEST_CASE("annotation import") {
  auto dir = oracle::temp_dir("ann");
  {
    std::ofstream f(dir / "a.csv");
    f << "item_id,annotator_id,criterion,label\n"
         "1,h1,overall,A\n1,h2,overall,Response A\n2,h1,overall,B\n2,h2,overall,tie\n"
         "3,h1,overall,Tie\n3,h2,overall,Tie\n4,h1,overall,A\n4,h2,overall,B\n"
         "1,h1,fluency,4\n1,h2,fluency,5\n";
  }
  auto ann = load_annotations(dir / "a.csv");
  CHECK(ann.size() == 10);
  auto means = likert_means(ann);
  CHECK(means.at("fluency") == 4.5);
  auto r = annotator_agreement(ann, "overall", "h1", "h2");
  CHECK(r.n_items == 4);
  CHECK(r.accuracy == 0.5);
  std::vector<int> a{0, 1, 2, 0}, b{0, 2, 2, 1};
  CHECK(std::abs(r.weighted_kappa - oracle::kappa(a, b, judge_weights())) <= 1e-12);
  CHECK(parse_choice("response b") == Choice::B);
  CHECK(code_of([] { parse_choice("maybe"); }) == Errc::MalformedVerdict);
  std::filesystem::remove_all(dir);
}
