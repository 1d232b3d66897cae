#pragma once

// Linear plausibility model, regression analysis and agreement statistics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ibe_eval/core.hpp"

namespace ibe {

// ---------------------------------------------------------------------------
// Special functions

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw ValidationError("incomplete beta needs positive parameters");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw ValidationError("degrees of freedom must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

inline double student_t_cdf(double t, double df) {
  double tail = 0.5 * student_t_two_sided_p(t, df);
  return t >= 0.0 ? 1.0 - tail : tail;
}

// ---------------------------------------------------------------------------
// Linear model

struct FitOptions {
  bool standardize = false;
  double ridge = 1e-8;
};

inline std::vector<std::string> validate_subset(const std::vector<std::string>& subset) {
  if (subset.empty()) throw UsageError("feature subset is empty");
  std::vector<std::string> seen;
  for (const auto& f : subset) {
    if (!is_feature_name(f)) throw UsageError("unknown feature \"" + f + "\"");
    if (std::find(seen.begin(), seen.end(), f) != seen.end()) throw UsageError("duplicate feature \"" + f + "\"");
    seen.push_back(f);
  }
  return seen;
}

inline std::string training_fingerprint(const std::vector<IbeFeatureVector>& rows, const std::vector<int>& labels) {
  std::string s;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s += json(rows[i]).dump() + " " + std::to_string(labels[i]) + "\n";
  }
  return text::sha256_hex(s);
}

// Least squares on centered data via the normal equations. A near-singular
// Gram matrix gets a small ridge and the model is flagged.
inline LinearModel fit_linear(const std::vector<IbeFeatureVector>& rows, const std::vector<int>& labels,
                              const std::vector<std::string>& subset, const FitOptions& opts = {}) {
  auto features = validate_subset(subset);
  if (rows.size() != labels.size()) {
    throw ValidationError("fit: " + std::to_string(rows.size()) + " rows but " + std::to_string(labels.size()) + " labels");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(features.size());
  if (n < p + 1) throw ValidationError("fit: need at least " + std::to_string(p + 1) + " rows");
  for (int y : labels)
    if (y != 0 && y != 1) throw ValidationError("fit: labels must be 0 or 1");

  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rows[i].value(features[j]);
    y(i) = labels[i];
  }

  LinearModel m;
  m.feature_order = features;
  m.training_fingerprint = training_fingerprint(rows, labels);

  if (opts.standardize) {
    Standardization st;
    for (Eigen::Index j = 0; j < p; ++j) {
      double mean = X.col(j).mean();
      double var = (X.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
      double sd = var > 0.0 ? std::sqrt(var) : 1.0;
      st.mean[features[j]] = mean;
      st.stddev[features[j]] = sd;
      X.col(j) = (X.col(j).array() - mean) / sd;
    }
    m.standardization = st;
  }

  Eigen::RowVectorXd xmean = X.colwise().mean();
  double ymean = y.mean();
  Eigen::MatrixXd Xc = X.rowwise() - xmean;
  Eigen::VectorXd yc = y.array() - ymean;

  m.constant_labels = yc.isZero(0.0);
  Eigen::MatrixXd G = Xc.transpose() * Xc;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
  double max_ev = eig.eigenvalues().cwiseAbs().maxCoeff();
  double min_ev = eig.eigenvalues().minCoeff();
  if (!(min_ev > 1e-10 * std::max(1.0, max_ev))) {
    m.rank_deficient = true;
    G.diagonal().array() += opts.ridge;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  if (!m.constant_labels) w = G.ldlt().solve(Xc.transpose() * yc);
  for (Eigen::Index j = 0; j < p; ++j) m.weights[features[j]] = w(j);
  m.intercept = ymean - xmean.dot(w);
  return m;
}

// Intercept plus the weighted (optionally standardized) features. Not clamped.
inline double score(const LinearModel& m, const IbeFeatureVector& f) {
  validate_model(m);
  double s = m.intercept;
  for (const auto& name : m.feature_order) {
    double x = f.value(name);
    if (m.standardization) {
      const auto& st = *m.standardization;
      auto mu = st.mean.find(name);
      auto sd = st.stddev.find(name);
      if (mu == st.mean.end() || sd == st.stddev.end()) throw ValidationError("model lacks standardization for " + name);
      x = (x - mu->second) / sd->second;
    }
    s += m.weights.at(name) * x;
  }
  return s;
}

// Index of the highest score; the lowest index wins ties.
inline std::size_t argmax_first(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

inline std::size_t select(const LinearModel& m, const std::vector<IbeFeatureVector>& candidates) {
  if (candidates.size() < 2) throw ValidationError("select needs at least two candidates");
  std::vector<double> scores;
  for (const auto& c : candidates) scores.push_back(score(m, c));
  return argmax_first(scores);
}

// ---------------------------------------------------------------------------
// Univariate regression

inline RegressionEntry univariate_regression(const std::string& feature, const std::vector<double>& x,
                                             const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("regression: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw ValidationError("regression needs at least 3 points");
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ValidationError("regression: feature " + feature + " has zero variance");
  double b = sxy / sxx;
  double a = my - b * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = y[i] - (a + b * x[i]);
    sse += r * r;
  }
  double df = static_cast<double>(n - 2);
  RegressionEntry e;
  e.feature = feature;
  e.n = n;
  e.coefficient = b;
  e.std_error = std::sqrt(sse / df / sxx);
  if (e.std_error > 0.0) {
    e.t_statistic = b / e.std_error;
  } else {
    e.t_statistic = b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
  }
  e.p_value = e.t_statistic == 0.0 ? 1.0 : student_t_two_sided_p(e.t_statistic, df);
  e.marker = significance_marker(e.p_value);
  return e;
}

// ---------------------------------------------------------------------------
// Evaluation

inline double accuracy(const std::vector<std::size_t>& selections, const std::vector<std::size_t>& golds) {
  if (selections.size() != golds.size()) throw ValidationError("accuracy: length mismatch");
  if (selections.empty()) throw ValidationError("accuracy: no examples");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < golds.size(); ++i)
    if (selections[i] == golds[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(golds.size());
}

// Candidate feature vectors for one test question.
struct EvalExample {
  std::string id;
  Direction direction = Direction::cause;
  std::vector<IbeFeatureVector> candidates;
  std::size_t gold_index = 0;
};

struct AblationRow {
  std::string group;  // "features", "cumulative" or "baseline"
  std::string label;
  std::vector<std::string> features;
  double accuracy = 0.0;
};

inline const std::vector<std::string>& default_feature_order() {
  static const std::vector<std::string> order(kFeatureNames.begin(), kFeatureNames.end());
  return order;
}

inline double evaluate_subset(const std::vector<IbeFeatureVector>& train_rows, const std::vector<int>& train_labels,
                              const std::vector<EvalExample>& test, const std::vector<std::string>& subset) {
  auto m = fit_linear(train_rows, train_labels, subset);
  std::vector<std::size_t> sel, gold;
  for (const auto& ex : test) {
    sel.push_back(select(m, ex.candidates));
    gold.push_back(ex.gold_index);
  }
  return accuracy(sel, gold);
}

// Expected accuracy of a uniform random pick.
inline double random_baseline(const std::vector<EvalExample>& test) {
  if (test.empty()) throw ValidationError("ablation: no test examples");
  double s = 0.0;
  for (const auto& ex : test) s += 1.0 / static_cast<double>(ex.candidates.size());
  return s / static_cast<double>(test.size());
}

// Single-feature rows, then cumulative rows in `order`, then the random row.
inline std::vector<AblationRow> ablation(const std::vector<IbeFeatureVector>& train_rows,
                                         const std::vector<int>& train_labels, const std::vector<EvalExample>& test,
                                         const std::vector<std::string>& order = default_feature_order()) {
  validate_subset(order);
  if (test.empty()) throw ValidationError("ablation: no test examples");
  std::vector<AblationRow> rows;
  for (const auto& f : order) rows.push_back({"features", f, {f}, evaluate_subset(train_rows, train_labels, test, {f})});
  std::vector<std::string> cum;
  for (const auto& f : order) {
    cum.push_back(f);
    std::string label = cum.size() == 1 ? f : "+" + f;
    rows.push_back({"cumulative", label, cum, evaluate_subset(train_rows, train_labels, test, cum)});
  }
  rows.push_back({"baseline", "random", {}, random_baseline(test)});
  return rows;
}

struct DirectionBreakdown {
  std::map<std::string, double> accuracy;  // keyed "cause" / "effect"
  std::map<std::string, std::size_t> count;
  std::vector<std::string> notes;
};

inline DirectionBreakdown directionality_breakdown(const std::vector<EvalExample>& examples,
                                                   const std::vector<std::size_t>& selections) {
  if (examples.size() != selections.size()) throw ValidationError("breakdown: length mismatch");
  DirectionBreakdown out;
  for (auto d : {Direction::cause, Direction::effect}) {
    std::vector<std::size_t> sel, gold;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      if (examples[i].direction != d) continue;
      sel.push_back(selections[i]);
      gold.push_back(examples[i].gold_index);
    }
    std::string key(to_string(d));
    if (sel.empty()) {
      out.notes.push_back("no " + key + " examples; entry omitted");
      continue;
    }
    out.accuracy[key] = accuracy(sel, gold);
    out.count[key] = sel.size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Agreement statistics

// 1-based ranks, ties share their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw ValidationError("correlation undefined for a constant series");
  return sxy / std::sqrt(sxx * syy);
}

struct Correlation {
  double rho = 0.0;
  double p_value = 1.0;
};

inline Correlation spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
  if (x.size() < 3) throw ValidationError("spearman needs at least 3 points");
  Correlation c;
  c.rho = std::clamp(pearson(average_ranks(x), average_ranks(y)), -1.0, 1.0);
  double df = static_cast<double>(x.size() - 2);
  if (std::abs(c.rho) == 1.0) {
    c.p_value = 0.0;
  } else {
    double t = c.rho * std::sqrt(df / ((1.0 - c.rho) * (1.0 + c.rho)));
    c.p_value = student_t_two_sided_p(t, df);
  }
  return c;
}

struct Kappa {
  double kappa = 0.0;
  bool degenerate = false;  // chance agreement was 1; kappa defined as 1
};

inline Kappa cohens_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ValidationError("kappa: length mismatch");
  if (a.empty()) throw ValidationError("kappa: no annotations");
  std::map<int, double> pa, pb;
  double agree = 0.0;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
    if (a[i] == b[i]) agree += 1.0;
  }
  double po = agree / n;
  double pe = 0.0;
  for (const auto& [label, p] : pa) {
    if (auto it = pb.find(label); it != pb.end()) pe += p * it->second;
  }
  Kappa k;
  if (std::abs(1.0 - pe) < 1e-15) {
    k.kappa = 1.0;
    k.degenerate = true;
    return k;
  }
  k.kappa = (po - pe) / (1.0 - pe);
  return k;
}

}  // namespace ibe
