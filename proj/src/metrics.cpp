#include "gelato/metrics.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "gelato/common.hpp"
#include "gelato/graph.hpp"

namespace gelato {

namespace {

std::vector<double> sorted_desc(std::span<const double> xs) {
  std::vector<double> out(xs.begin(), xs.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

// Negatives scoring >= x in a descending array.
std::size_t count_at_least(const std::vector<double>& desc, double x) {
  return static_cast<std::size_t>(
      std::upper_bound(desc.begin(), desc.end(), x, std::greater<>()) - desc.begin());
}

void require_positives(std::span<const double> pos) {
  if (pos.empty()) throw Error(ErrorCode::kParameter, "no positive scores to evaluate");
}

// rank of the i-th best positive (1-based) in the merged ranking.
std::vector<std::size_t> positive_ranks(const std::vector<double>& pos_desc,
                                        const std::vector<double>& neg_desc) {
  std::vector<std::size_t> ranks(pos_desc.size());
  for (std::size_t i = 0; i < pos_desc.size(); ++i) {
    ranks[i] = i + 1 + count_at_least(neg_desc, pos_desc[i]);
  }
  return ranks;
}

}  // namespace

double hits_at_k(std::span<const double> pos, std::span<const double> neg,
                 std::size_t k) {
  require_positives(pos);
  if (k < 1 || k > neg.size()) {
    throw Error(ErrorCode::kParameter, "hits@" + std::to_string(k) + " needs 1 <= k <= " +
                                           std::to_string(neg.size()) + " negatives");
  }
  std::vector<double> tmp(neg.begin(), neg.end());
  std::nth_element(tmp.begin(), tmp.begin() + (k - 1), tmp.end(), std::greater<>());
  const double threshold = tmp[k - 1];
  std::size_t hits = 0;
  for (double p : pos) hits += p > threshold ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pos.size());
}

double precision_at_k(std::span<const double> pos, std::span<const double> neg,
                      std::size_t k) {
  require_positives(pos);
  if (k < 1) throw Error(ErrorCode::kParameter, "prec@k needs k >= 1");
  auto ranks = positive_ranks(sorted_desc(pos), sorted_desc(neg));
  std::size_t in_top = 0;
  for (std::size_t r : ranks) in_top += r <= k ? 1 : 0;
  return static_cast<double>(in_top) / static_cast<double>(k);
}

double average_precision(std::span<const double> pos, std::span<const double> neg) {
  require_positives(pos);
  auto ranks = positive_ranks(sorted_desc(pos), sorted_desc(neg));
  double sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    sum += static_cast<double>(i + 1) / static_cast<double>(ranks[i]);
  }
  return sum / static_cast<double>(ranks.size());
}

double mean_reciprocal_rank(std::span<const double> pos,
                            std::span<const double> neg) {
  require_positives(pos);
  auto neg_desc = sorted_desc(neg);
  double sum = 0.0;
  for (double p : pos) sum += 1.0 / (1.0 + static_cast<double>(count_at_least(neg_desc, p)));
  return sum / static_cast<double>(pos.size());
}

MetricsReport rank_metrics(std::span<const double> pos, std::span<const double> neg,
                           std::span<const std::int64_t> k_list) {
  require_positives(pos);
  MetricsReport report;
  report.num_pos = pos.size();
  report.num_neg = neg.size();
  auto pos_desc = sorted_desc(pos);
  auto neg_desc = sorted_desc(neg);
  auto ranks = positive_ranks(pos_desc, neg_desc);

  auto prec = [&](std::size_t k) {
    std::size_t in_top = 0;
    for (std::size_t r : ranks) in_top += r <= k ? 1 : 0;
    return static_cast<double>(in_top) / static_cast<double>(k);
  };
  for (std::int64_t k : k_list) {
    if (k < 1) throw Error(ErrorCode::kParameter, "metric cutoffs must be >= 1");
    report.values.push_back({"prec", k, prec(static_cast<std::size_t>(k))});
  }
  report.values.push_back(
      {"prec_full", static_cast<std::int64_t>(pos.size()), prec(pos.size())});

  double ap = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    ap += static_cast<double>(i + 1) / static_cast<double>(ranks[i]);
  }
  report.values.push_back({"ap", 0, ap / static_cast<double>(ranks.size())});
  report.values.push_back({"mrr", 0, mean_reciprocal_rank(pos, neg)});
  if (!neg.empty()) report.values.push_back({"auc", 0, auc_and_curves(pos, neg).auc});
  for (std::int64_t k : k_list) {
    if (static_cast<std::size_t>(k) <= neg.size()) {
      report.values.push_back({"hits", k, hits_at_k(pos, neg, static_cast<std::size_t>(k))});
    }
  }
  return report;
}

double MetricsReport::get(const std::string& metric, std::int64_t k) const {
  for (const auto& v : values) {
    if (v.metric == metric && v.k == k) return v.value;
  }
  throw Error(ErrorCode::kParameter,
              "report has no " + metric + "@" + std::to_string(k));
}

CurveResult auc_and_curves(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorCode::kParameter, "AUC needs positive and negative scores");
  }
  auto pos_desc = sorted_desc(pos);
  auto neg_desc = sorted_desc(neg);
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());

  CurveResult out;
  double wins = 0.0;
  for (double p : pos_desc) {
    auto lo = std::lower_bound(neg_desc.begin(), neg_desc.end(), p, std::greater<>());
    auto hi = std::upper_bound(neg_desc.begin(), neg_desc.end(), p, std::greater<>());
    wins += static_cast<double>(neg_desc.end() - hi) + 0.5 * static_cast<double>(hi - lo);
  }
  out.auc = wins / (np * nn);
  out.ap = average_precision(pos, neg);

  std::size_t i = 0, j = 0;
  while (i < pos_desc.size() || j < neg_desc.size()) {
    double t = -INFINITY;
    if (i < pos_desc.size()) t = pos_desc[i];
    if (j < neg_desc.size()) t = std::max(t, neg_desc[j]);
    while (i < pos_desc.size() && pos_desc[i] >= t) ++i;
    while (j < neg_desc.size() && neg_desc[j] >= t) ++j;
    const double tp = static_cast<double>(i), fp = static_cast<double>(j);
    out.roc.push_back({t, fp / nn, tp / np});
    out.pr.push_back({t, tp / np, tp / (tp + fp)});
  }
  return out;
}

WeightedMetrics weighted_metrics(std::span<const WeightedScore> pos,
                                 std::span<const WeightedScore> neg) {
  std::map<double, std::pair<double, double>, std::greater<>> groups;  // (pos, neg)
  double total_pos = 0.0, total_neg = 0.0;
  for (const auto& p : pos) {
    groups[p.score].first += p.count;
    total_pos += p.count;
  }
  for (const auto& n : neg) {
    groups[n.score].second += n.count;
    total_neg += n.count;
  }
  if (!(total_pos > 0.0) || !(total_neg > 0.0)) {
    throw Error(ErrorCode::kParameter, "weighted metrics need positive and negative mass");
  }
  WeightedMetrics out;
  double pos_above = 0.0, neg_above = 0.0;
  double ap_sum = 0.0, wins = 0.0;
  for (const auto& [score, counts] : groups) {
    const auto [c, b] = counts;
    if (c > 0.0) {
      // sum_{i=1..c} (a + i) / (B + i) = c - (B - a) (psi(B + c + 1) - psi(B + 1))
      const double a = pos_above;
      const double big_b = pos_above + neg_above + b;
      ap_sum += c - (big_b - a) * (boost::math::digamma(big_b + c + 1.0) -
                                   boost::math::digamma(big_b + 1.0));
      const double neg_below = total_neg - neg_above - b;
      wins += c * (neg_below + 0.5 * b);
      out.precision_at_full_recall = (pos_above + c) / (pos_above + c + neg_above + b);
    }
    pos_above += c;
    neg_above += b;
  }
  out.ap = ap_sum / total_pos;
  out.auc = wins / (total_pos * total_neg);
  return out;
}

InflationReport inflation_demo(double positives, double high_neg, double low_neg,
                               double sampled_neg) {
  const double all_neg = high_neg + low_neg;
  if (!(sampled_neg > 0.0 && sampled_neg <= all_neg)) {
    throw Error(ErrorCode::kParameter, "sampled negatives must lie in (0, |negatives|]");
  }
  const std::vector<WeightedScore> pos{{0.5, positives}};
  const double frac = sampled_neg / all_neg;
  const std::vector<WeightedScore> biased_neg{{1.0, high_neg * frac},
                                              {0.0, low_neg * frac}};
  const std::vector<WeightedScore> full_neg{{1.0, high_neg}, {0.0, low_neg}};
  InflationReport out;
  out.biased = weighted_metrics(pos, biased_neg);
  out.unbiased = weighted_metrics(pos, full_neg);
  return out;
}

// ---------------------------------------------------------------------------

void save_report(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "# regime=" << (report.regime.empty() ? "-" : report.regime)
      << " pos=" << report.num_pos << " neg=" << report.num_neg << '\n';
  for (const auto& v : report.values) {
    out << v.metric << '\t' << v.k << '\t' << format_real(v.value) << '\n';
  }
}

MetricsReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  MetricsReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream header(line.substr(1));
      std::string field;
      while (header >> field) {
        auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
        if (key == "regime") report.regime = val == "-" ? "" : val;
        if (key == "pos") report.num_pos = std::stoull(val);
        if (key == "neg") report.num_neg = std::stoull(val);
      }
      continue;
    }
    std::istringstream fields(line);
    MetricValue v;
    std::string value;
    if (!(fields >> v.metric >> v.k >> value)) {
      throw Error(ErrorCode::kParse,
                  path.string() + ":" + std::to_string(line_no) + ": bad report line");
    }
    v.value = parse_real(value);
    report.values.push_back(v);
  }
  return report;
}

void save_roc(std::span<const RocPoint> points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "# threshold\tfpr\ttpr\n";
  for (const auto& p : points) {
    out << format_real(p.threshold) << '\t' << format_real(p.fpr) << '\t'
        << format_real(p.tpr) << '\n';
  }
}

void save_pr(std::span<const PrPoint> points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "# threshold\trecall\tprecision\n";
  for (const auto& p : points) {
    out << format_real(p.threshold) << '\t' << format_real(p.recall) << '\t'
        << format_real(p.precision) << '\n';
  }
}

}  // namespace gelato
