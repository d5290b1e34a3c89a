#include "spvc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "spvc/errors.hpp"

namespace spvc {

namespace {

void check_inputs(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size()) throw InputError("scores and labels differ in length");
  for (double s : scores)
    if (!std::isfinite(s)) throw InputError("scores must be finite");
  const auto pos = std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; });
  if (pos == 0 || static_cast<std::size_t>(pos) == labels.size())
    throw InputError("ROC needs both classes among the labels");
}

std::vector<std::size_t> descending(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double sensitivity_at(const std::vector<std::pair<double, double>>& curve, double fpr) {
  if (curve.empty()) throw InputError("empty ROC curve");
  // rates like 1 - 0.8 carry rounding error
  constexpr double kTol = 1e-12;
  std::size_t i = 0;
  for (std::size_t k = 0; k < curve.size(); ++k)
    if (curve[k].first <= fpr + kTol) i = k;
  if (std::abs(curve[i].first - fpr) <= kTol || i + 1 == curve.size()) return curve[i].second;
  const auto& [f0, t0] = curve[i];
  const auto& [f1, t1] = curve[i + 1];
  return t0 + (fpr - f0) / (f1 - f0) * (t1 - t0);
}

ROCSummary roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  double n1 = 0.0;
  for (auto l : labels) n1 += l != 0;
  const double n0 = static_cast<double>(n) - n1;

  ROCSummary out;
  const auto idx = descending(scores);
  out.curve.emplace_back(0.0, 0.0);
  double tp = 0.0, fp = 0.0;
  // Ranks ascend from the lowest score; a tie group shares its average rank.
  double rank_sum = 0.0;
  for (std::size_t a = 0; a < n;) {
    std::size_t b = a;
    double gp = 0.0, gn = 0.0;
    while (b < n && scores[idx[b]] == scores[idx[a]]) {
      (labels[idx[b]] ? gp : gn) += 1.0;
      ++b;
    }
    // positions a..b-1 in descending order hold ranks n-b+1 .. n-a
    const double avg_rank = (static_cast<double>(2 * n - a - b) + 1.0) / 2.0;
    rank_sum += gp * avg_rank;
    tp += gp;
    fp += gn;
    out.curve.emplace_back(fp / n0, tp / n1);
    a = b;
  }
  out.auc = (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
  out.s80 = sensitivity_at(out.curve, 1.0 - defaults::kSpecificity);
  return out;
}

double threshold_at_specificity(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                                double specificity) {
  check_inputs(scores, labels);
  double n0 = 0.0;
  for (auto l : labels) n0 += l == 0;
  const double max_fp = (1.0 - specificity) * n0;
  const auto idx = descending(scores);
  double best = std::nextafter(scores[idx.front()], std::numeric_limits<double>::infinity());
  double fp = 0.0;
  for (std::size_t a = 0; a < idx.size();) {
    std::size_t b = a;
    while (b < idx.size() && scores[idx[b]] == scores[idx[a]]) {
      fp += labels[idx[b]] == 0;
      ++b;
    }
    if (fp > max_fp + 1e-9) break;
    best = scores[idx[a]];
    a = b;
  }
  return best;
}

}  // namespace spvc
