#include "valuemap/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <numeric>
#include <random>
#include <limits>
#include <set>

#include "valuemap/error.hpp"
#include "valuemap/io.hpp"

namespace valuemap::stats {

namespace {

// Drops binary noise below 15 significant digits, so ratios of short
// decimals come out as the decimal answer: (0.8 - 0.6) / 0.8 is 0.25.
double decimal_clean(double v) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return std::strtod(buf, nullptr);
}

}  // namespace

double normalized_range(std::span<const double> values, bool /*higher_is_better*/) {
  if (values.empty()) throw Error(Errc::Empty, "normalized_range of no values");
  for (double v : values)
    if (!(v >= 0.0)) throw Error(Errc::NonPositiveValue, "normalized_range requires non-negative values");
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mx == 0.0) return 0.0;
  return decimal_clean((*mx - *mn) / *mx);
}

double coefficient_of_variation(std::span<const double> values, SdConvention sd) {
  if (values.empty()) throw Error(Errc::Empty, "coefficient_of_variation of no values");
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  if (mean == 0.0) {
    if (ss == 0.0) return 0.0;
    throw Error(Errc::ZeroMean, "coefficient_of_variation with zero mean");
  }
  double denom = sd == SdConvention::Population ? n : n - 1.0;
  double sigma = denom > 0.0 ? std::sqrt(ss / denom) : 0.0;
  return sigma / std::abs(mean);
}

DisparityReport stratum_disparity(const std::map<std::string, std::vector<double>>& values_by_stratum,
                                  const std::string& metric_name, bool higher_is_better, SdConvention sd) {
  if (values_by_stratum.empty()) throw Error(Errc::Empty, "no strata for " + metric_name);
  DisparityReport report;
  report.metric_name = metric_name;
  for (const auto& [stratum, values] : values_by_stratum) {
    if (values.size() < 2)
      throw Error(Errc::SingletonStratum, stratum + " has " + std::to_string(values.size()) + " subgroup(s)");
    StratumDisparity row;
    row.stratum = stratum;
    row.normalized_range = normalized_range(values, higher_is_better);
    row.cv = coefficient_of_variation(values, sd);
    row.n_subgroups = values.size();
    report.mean_normalized_range += row.normalized_range;
    report.mean_cv += row.cv;
    report.strata.push_back(std::move(row));
  }
  report.mean_normalized_range /= static_cast<double>(report.strata.size());
  report.mean_cv /= static_cast<double>(report.strata.size());
  return report;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void bootstrap_indices(std::uint64_t seed, int resample, std::size_t n, std::vector<std::size_t>& out) {
  out.resize(n);
  if (n == 0) return;
  std::mt19937_64 engine(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(resample))));
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t r;
    do {
      r = engine();
    } while (r >= limit);
    out[i] = static_cast<std::size_t>(r % bound);
  }
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(Errc::Empty, "quantile of no values");
  q = std::clamp(q, 0.0, 1.0);
  double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BootstrapCI paired_bootstrap_ci(std::span<const double> base, std::span<const double> treat, int resamples,
                                double level, std::uint64_t seed) {
  if (base.size() != treat.size())
    throw Error(Errc::LengthMismatch, std::to_string(base.size()) + " vs " + std::to_string(treat.size()));
  if (base.empty()) throw Error(Errc::Empty, "bootstrap over no samples");
  if (resamples < 1 || !(level > 0.0 && level < 1.0))
    throw Error(Errc::ConfigError, "bootstrap needs resamples >= 1 and level in (0, 1)");

  const std::size_t n = base.size();
  // Deltas are centred on the first one, so identical deltas give an exact result.
  std::vector<double> centred(n);
  const double anchor = treat[0] - base[0];
  for (std::size_t i = 0; i < n; ++i) centred[i] = (treat[i] - base[i]) - anchor;

  auto mean_of = [&](auto index_of) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += centred[index_of(i)];
    return anchor + s / static_cast<double>(n);
  };

  BootstrapCI ci;
  ci.resamples = resamples;
  ci.level = level;
  ci.seed = seed;
  ci.point_delta = mean_of([](std::size_t i) { return i; });

  std::vector<double> deltas(static_cast<std::size_t>(resamples));
  std::vector<std::size_t> idx;
  for (int b = 0; b < resamples; ++b) {
    bootstrap_indices(seed, b, n, idx);
    deltas[static_cast<std::size_t>(b)] = mean_of([&](std::size_t i) { return idx[i]; });
  }
  std::sort(deltas.begin(), deltas.end());
  const double alpha = 1.0 - level;
  ci.lo = quantile_sorted(deltas, alpha / 2.0);
  ci.hi = quantile_sorted(deltas, 1.0 - alpha / 2.0);
  return ci;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "pearson");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(Errc::ConstantInput, "correlation of a constant series");
  return sxy / std::sqrt(sxx * syy);
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw Error(Errc::LengthMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  if (x.size() < 3) throw Error(Errc::InsufficientData, "spearman needs at least 3 pairs");
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  SpearmanResult r;
  r.n = x.size();
  r.rho = std::clamp(pearson(rx, ry), -1.0, 1.0);
  double z = r.rho * std::sqrt(static_cast<double>(r.n) - 1.0);
  r.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
  return r;
}

WeightMatrix judge_weights() {
  // index order A, B, Tie
  return {{1.0, 0.0, 0.5}, {0.0, 1.0, 0.5}, {0.5, 0.5, 1.0}};
}

namespace {

void check_pair(std::span<const int> a, std::span<const int> b, std::size_t k) {
  if (a.size() != b.size())
    throw Error(Errc::LengthMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  if (a.empty()) throw Error(Errc::Empty, "no labels");
  for (auto s : {a, b})
    for (int v : s)
      if (v < 0 || static_cast<std::size_t>(v) >= k)
        throw Error(Errc::UnknownCategory, "label index " + std::to_string(v));
}

}  // namespace

double weighted_kappa(std::span<const int> a, std::span<const int> b, const WeightMatrix& weights) {
  const std::size_t k = weights.size();
  check_pair(a, b, k);
  const double n = static_cast<double>(a.size());
  std::vector<double> pa(k, 0.0), pb(k, 0.0);
  double observed = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    observed += weights[a[i]][b[i]];
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
  }
  observed /= n;
  double expected = 0.0;
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t l = 0; l < k; ++l) expected += (pa[j] / n) * (pb[l] / n) * weights[j][l];
  if (expected >= 1.0 - 1e-12) throw Error(Errc::DegenerateMarginals, "expected agreement is 1");
  return (observed - expected) / (1.0 - expected);
}

double agreement_accuracy(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw Error(Errc::LengthMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  if (a.empty()) throw Error(Errc::Empty, "no labels");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hits += a[i] == b[i];
  return static_cast<double>(hits) / static_cast<double>(a.size());
}

AgreementResult agreement(std::span<const int> a, std::span<const int> b, const WeightMatrix& weights) {
  AgreementResult r;
  r.accuracy = agreement_accuracy(a, b);
  r.n_items = a.size();
  try {
    r.weighted_kappa = weighted_kappa(a, b, weights);
  } catch (const Error& e) {
    if (e.code() != Errc::DegenerateMarginals) throw;
    r.kappa_defined = false;
    r.weighted_kappa = std::nan("");
  }
  return r;
}

std::map<std::string, RankedDelta> improvement_ranks(const std::map<std::string, double>& pre,
                                                     const std::map<std::string, double>& post,
                                                     bool higher_is_better, int round_decimals) {
  if (pre.size() != post.size() ||
      !std::equal(pre.begin(), pre.end(), post.begin(), [](const auto& x, const auto& y) { return x.first == y.first; }))
    throw Error(Errc::KeyMismatch, "pre and post cover different subgroups");

  auto rounded = [&](double v) {
    if (round_decimals < 0) return v;
    double scale = std::pow(10.0, round_decimals);
    return std::round(v * scale) / scale;
  };

  std::map<std::string, RankedDelta> out;
  for (const auto& [key, before] : pre) {
    RankedDelta d;
    d.delta = post.at(key) - before;
    d.improvement = higher_is_better ? d.delta : -d.delta;
    out[key] = d;
  }
  for (auto& [key, d] : out) {
    const double mine = rounded(d.improvement);
    int better = 0;
    for (const auto& [other_key, other] : out)
      if (rounded(other.improvement) > mine) ++better;
    d.rank = better + 1;
  }
  return out;
}

std::vector<Annotation> load_annotations(const std::filesystem::path& path, char delimiter) {
  auto rows = io::read_delimited_file(path, delimiter);
  if (rows.empty()) return {};
  const auto& header = rows.front();
  auto col = [&](const char* name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (io::trim(header[i]) == name) return i;
    throw Error(Errc::MissingField, std::string("annotation file lacks column '") + name + "'");
  };
  const std::size_t item = col("item_id"), annot = col("annotator_id"), crit = col("criterion"), label = col("label");
  std::vector<Annotation> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) throw Error(Errc::MalformedRow, "annotation row " + std::to_string(r));
    out.push_back({io::trim(row[item]), io::trim(row[annot]), io::trim(row[crit]), io::trim(row[label])});
  }
  return out;
}

Choice parse_choice(const std::string& label) {
  std::string v = io::to_lower(io::trim(label));
  if (v.rfind("response ", 0) == 0) v = io::trim(v.substr(9));
  if (v == "a") return Choice::A;
  if (v == "b") return Choice::B;
  if (v == "tie" || v == "draw") return Choice::Tie;
  throw Error(Errc::MalformedVerdict, "not an A/B/Tie label: '" + label + "'");
}

std::map<std::string, double> likert_means(const std::vector<Annotation>& annotations) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& a : annotations) {
    double v = 0;
    auto [p, ec] = std::from_chars(a.label.data(), a.label.data() + a.label.size(), v);
    if (ec != std::errc{} || p != a.label.data() + a.label.size()) continue;
    acc[a.criterion].first += v;
    ++acc[a.criterion].second;
  }
  std::map<std::string, double> out;
  for (const auto& [c, sum_n] : acc) out[c] = sum_n.first / static_cast<double>(sum_n.second);
  return out;
}

AgreementResult annotator_agreement(const std::vector<Annotation>& annotations, const std::string& criterion,
                                    const std::string& annotator_a, const std::string& annotator_b) {
  std::map<std::string, int> la, lb;
  for (const auto& a : annotations) {
    if (a.criterion != criterion) continue;
    if (a.annotator_id == annotator_a) la[a.item_id] = static_cast<int>(parse_choice(a.label));
    if (a.annotator_id == annotator_b) lb[a.item_id] = static_cast<int>(parse_choice(a.label));
  }
  std::vector<int> xa, xb;
  for (const auto& [item, v] : la)
    if (auto it = lb.find(item); it != lb.end()) {
      xa.push_back(v);
      xb.push_back(it->second);
    }
  return agreement(xa, xb, judge_weights());
}

}  // namespace valuemap::stats
