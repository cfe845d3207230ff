#include "adshield/linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adshield/error.hpp"
#include "adshield/rng.hpp"

namespace adshield::classify {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double loss_value(double margin_gap, SvmLoss loss) {
  const double h = std::max(0.0, margin_gap);
  return loss == SvmLoss::hinge ? h : h * h;
}

// Dual coordinate descent for
//   min_w 1/2|w|^2 + C sum loss(c_i - y_i w.x_i)
// where w = sum alpha_i y_i x_i; `w` and `alpha` are updated in place.
// With augment=true every x carries an extra constant feature 1.
struct DualProblem {
  const std::vector<features::FeatureVector>& x;
  const std::vector<double>& y;
  std::vector<double> targets;
  bool augment;
  double diag;   // 0 for hinge, 1/(2C) for squared hinge
  double upper;  // C for hinge, +inf for squared hinge
};

void dual_cd(const DualProblem& p, std::vector<double>& w, std::vector<double>& alpha,
             Rng& rng, int max_epochs, double tolerance) {
  const std::size_t n = p.x.size();
  const std::size_t d = p.x.front().values.size();
  std::vector<double> qdiag(n);
  for (std::size_t i = 0; i < n; ++i)
    qdiag[i] = dot(p.x[i].values, p.x[i].values) + (p.augment ? 1.0 : 0.0) + p.diag;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    rng.shuffle(order);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (std::size_t i : order) {
      const auto& xi = p.x[i].values;
      double wx = dot(std::span<const double>(w.data(), d), xi);
      if (p.augment) wx += w[d];
      const double g = p.y[i] * wx - p.targets[i] + p.diag * alpha[i];
      double pg = g;
      if (alpha[i] == 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] == p.upper) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) < 1e-14 || qdiag[i] <= 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::min(std::max(old - g / qdiag[i], 0.0), p.upper);
      const double delta = (alpha[i] - old) * p.y[i];
      if (delta == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) w[k] += delta * xi[k];
      if (p.augment) w[d] += delta;
    }
    if (pg_max - pg_min < tolerance) break;
  }
}

// Exact minimizer over the bias of the primal objective with w fixed. The
// objective is convex in b and its minimum lies within the loss breakpoints.
double best_bias(const std::vector<double>& scores, const std::vector<double>& y, double C,
                 SvmLoss loss) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double bp = y[i] - scores[i];
    lo = std::min(lo, bp);
    hi = std::max(hi, bp);
  }
  auto f = [&](double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      s += loss_value(1.0 - y[i] * (scores[i] + b), loss);
    return C * s;
  };
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, c = hi;
  double x1 = c - kInvPhi * (c - a), x2 = a + kInvPhi * (c - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && c - a > 1e-13 * (1.0 + std::abs(a) + std::abs(c)); ++it) {
    if (f1 <= f2) {
      c = x2;
      x2 = x1;
      f2 = f1;
      x1 = c - kInvPhi * (c - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (c - a);
      f2 = f(x2);
    }
  }
  // piecewise-linear objectives may be flat at the optimum; also compare ends
  double best = 0.5 * (a + c), fbest = f(best);
  for (double cand : {lo, hi, x1, x2}) {
    const double fc = f(cand);
    if (fc < fbest) {
      best = cand;
      fbest = fc;
    }
  }
  return best;
}

}  // namespace

double LinearMarginModel::decision(std::span<const double> x) const {
  if (x.size() != weights.size())
    throw InvalidArgument("linear model: input dimension " + std::to_string(x.size()) +
                          " != " + std::to_string(weights.size()));
  return dot(weights, x) + bias;
}

double LinearMarginModel::probability(std::span<const double> x) const {
  if (!calibrated) throw InvalidArgument("linear model is not calibrated");
  return platt_probability(decision(x), platt_a, platt_b);
}

double svm_objective(const std::vector<double>& weights, double bias,
                     const std::vector<features::FeatureVector>& vectors,
                     const std::vector<bool>& labels, double C, SvmLoss loss) {
  double s = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const double y = labels[i] ? 1.0 : -1.0;
    s += loss_value(1.0 - y * (dot(weights, vectors[i].values) + bias), loss);
  }
  return 0.5 * dot(weights, weights) + C * s;
}

LinearMarginModel train_linear_svm(const std::vector<features::FeatureVector>& vectors,
                                   const std::vector<bool>& labels,
                                   const LinearSvmConfig& config) {
  if (vectors.empty() || vectors.size() != labels.size())
    throw InvalidArgument("train_linear_svm: need equally many vectors and labels (> 0)");
  if (!(config.C > 0)) throw InvalidArgument("train_linear_svm: C must be positive");
  const auto n_pos = std::count(labels.begin(), labels.end(), true);
  if (n_pos == 0 || n_pos == static_cast<long>(labels.size()))
    throw InvalidArgument("train_linear_svm: both classes must be present");
  const std::size_t d = vectors.front().values.size();
  for (const auto& v : vectors) {
    if (v.values.size() != d) throw InvalidArgument("train_linear_svm: ragged input");
    for (double x : v.values)
      if (!std::isfinite(x)) throw InvalidArgument("train_linear_svm: non-finite input");
  }

  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = labels[i] ? 1.0 : -1.0;
  const bool squared = config.loss == SvmLoss::squared_hinge;
  DualProblem p{vectors, y, std::vector<double>(y.size(), 1.0), true,
                squared ? 0.5 / config.C : 0.0,
                squared ? std::numeric_limits<double>::infinity() : config.C};

  Rng rng(mix_seed(config.seed));
  std::vector<double> w(d + 1, 0.0);
  std::vector<double> alpha(y.size(), 0.0);
  dual_cd(p, w, alpha, rng, config.max_epochs, config.tolerance);

  double bias = w[d];
  w.resize(d);
  // the augmented problem regularizes the bias; alternate an exact bias
  // step with a fixed-bias weight solve (warm-started, same dual variables)
  p.augment = false;
  std::vector<double> scores(y.size());
  double objective = svm_objective(w, bias, vectors, labels, config.C, config.loss);
  for (int round = 0; round < 8; ++round) {
    for (std::size_t i = 0; i < y.size(); ++i) scores[i] = dot(w, vectors[i].values);
    const double b = best_bias(scores, y, config.C, config.loss);
    std::vector<double> w_next = w;
    std::vector<double> alpha_next = alpha;
    for (std::size_t i = 0; i < y.size(); ++i) p.targets[i] = 1.0 - y[i] * b;
    dual_cd(p, w_next, alpha_next, rng, config.max_epochs, config.tolerance);
    const double next = svm_objective(w_next, b, vectors, labels, config.C, config.loss);
    const double bias_only = svm_objective(w, b, vectors, labels, config.C, config.loss);
    if (next <= bias_only && next < objective) {
      const bool done = objective - next <= 1e-10 * std::abs(objective);
      w = std::move(w_next);
      alpha = std::move(alpha_next);
      bias = b;
      objective = next;
      if (done) break;
    } else {
      if (bias_only < objective) {
        bias = b;
        objective = bias_only;
      }
      break;
    }
  }

  LinearMarginModel m;
  m.weights = std::move(w);
  m.bias = bias;
  m.C = config.C;
  m.loss = config.loss;
  m.lowercase_inputs = config.lowercase_inputs;
  return m;
}

// ------------------------------------------------------------------ Platt

double platt_probability(double score, double a, double b) {
  const double f = a * score + b;
  if (f >= 0) {
    const double e = std::exp(-f);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(f));
}

namespace {

struct PlattTargets {
  double hi;
  double lo;
};

PlattTargets platt_targets(const std::vector<bool>& labels) {
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  return {(n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0)};
}

double nll_with(std::span<const double> scores, const std::vector<bool>& labels,
                PlattTargets t, double a, double b) {
  double f = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double target = labels[i] ? t.hi : t.lo;
    const double z = a * scores[i] + b;
    if (z >= 0) f += target * z + std::log1p(std::exp(-z));
    else f += (target - 1.0) * z + std::log1p(std::exp(z));
  }
  return f;
}

}  // namespace

double platt_nll(std::span<const double> scores, const std::vector<bool>& labels, double a,
                 double b) {
  return nll_with(scores, labels, platt_targets(labels), a, b);
}

PlattParams calibrate_platt(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw InvalidArgument("calibrate_platt: need equally many scores and labels (> 0)");
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  const double n_neg = static_cast<double>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvalidArgument("calibrate_platt: both classes must be present");

  const PlattTargets t = platt_targets(labels);
  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10;
  constexpr double kSigma = 1e-12;
  constexpr double kEps = 1e-8;

  double a = 0.0;
  double b = std::log((n_neg + 1.0) / (n_pos + 1.0));
  double fval = nll_with(scores, labels, t, a, b);

  auto gradient = [&](double aa, double bb, double& g1, double& g2, double* h11, double* h22,
                      double* h21) {
    g1 = g2 = 0.0;
    double s11 = kSigma, s22 = kSigma, s21 = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double p = platt_probability(scores[i], aa, bb);
      const double q = 1.0 - p;
      const double d2 = p * q;
      const double d1 = (labels[i] ? t.hi : t.lo) - p;
      s11 += scores[i] * scores[i] * d2;
      s22 += d2;
      s21 += scores[i] * d2;
      g1 += scores[i] * d1;
      g2 += d1;
    }
    if (h11) *h11 = s11;
    if (h22) *h22 = s22;
    if (h21) *h21 = s21;
  };

  PlattParams out;
  for (int it = 0; it < kMaxIter; ++it) {
    double g1, g2, h11, h22, h21;
    gradient(a, b, g1, g2, &h11, &h22, &h21);
    const double gnorm = std::hypot(g1, g2);
    out.iterations = it;
    if (gnorm < kEps) break;

    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;

    double step = 1.0;
    bool moved = false;
    while (step >= kMinStep) {
      const double na = a + step * da, nb = b + step * db;
      const double nf = nll_with(scores, labels, t, na, nb);
      bool accept = nf < fval + 1e-4 * step * gd;
      if (!accept && step == 1.0) {
        // near the optimum the decrease is below rounding; accept a full
        // Newton step that still shrinks the gradient
        double n1, n2;
        gradient(na, nb, n1, n2, nullptr, nullptr, nullptr);
        accept = std::hypot(n1, n2) < gnorm && nf <= fval + 1e-12 * std::abs(fval);
      }
      if (accept) {
        a = na;
        b = nb;
        fval = nf;
        moved = true;
        break;
      }
      step /= 2.0;
    }
    if (!moved) break;
  }
  out.a = a;
  out.b = b;
  return out;
}

// -------------------------------------------------------------- threshold

double f1_at(std::span<const double> probs, const std::vector<bool>& labels, double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    if (pred && labels[i]) ++tp;
    else if (pred) ++fp;
    else if (labels[i]) ++fn;
  }
  const double denom = 2.0 * tp + fp + fn;
  return denom > 0 ? 2.0 * tp / denom : 0.0;
}

ThresholdChoice tune_threshold(std::span<const double> probs, const std::vector<bool>& labels) {
  if (probs.empty() || probs.size() != labels.size())
    throw InvalidArgument("tune_threshold: need equally many probabilities and labels (> 0)");
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return probs[i] > probs[j]; });
  const auto total_pos =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));

  auto f1 = [&](std::size_t tp, std::size_t predicted) {
    const double denom = static_cast<double>(predicted + total_pos);
    return denom > 0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  };

  // candidates in decreasing order; strict improvement keeps the largest
  std::size_t tp = 0, predicted = 0, i = 0;
  while (i < order.size() && probs[order[i]] >= 1.0) {
    tp += labels[order[i]] ? 1 : 0;
    ++predicted;
    ++i;
  }
  ThresholdChoice best{1.0, f1(tp, predicted)};
  while (i < order.size()) {
    const double v = probs[order[i]];
    while (i < order.size() && probs[order[i]] == v) {
      tp += labels[order[i]] ? 1 : 0;
      ++predicted;
      ++i;
    }
    double cand = 0.0;
    if (i < order.size()) {
      const double next = probs[order[i]];
      cand = 0.5 * (v + next);
      if (cand <= next) cand = v;  // adjacent doubles
    }
    const double score = f1(tp, predicted);
    if (score > best.f1) best = {cand, score};
  }
  return best;
}

}  // namespace adshield::classify
