#include "mediator/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "mediator/errors.hpp"
#include "mediator/rng.hpp"

namespace mediator {

namespace {

Vec clip_probs(Vec p) {
  for (Eigen::Index i = 0; i < p.size(); ++i)
    p(i) = std::min(1.0 - kProbEps, std::max(kProbEps, p(i)));
  return p;
}

Mat with_intercept(const Mat& x) {
  Mat xi(x.rows(), x.cols() + 1);
  xi.col(0).setOnes();
  if (x.cols() > 0) xi.rightCols(x.cols()) = x;
  return xi;
}

class MeanModel final : public FittedModel {
 public:
  MeanModel(double mean, std::size_t arity) : mean_(mean), arity_(arity) {}
  Vec predict(const Mat& x) const override { return Vec::Constant(x.rows(), mean_); }
  std::size_t arity() const override { return arity_; }

 private:
  double mean_;
  std::size_t arity_;
};

class LinearModel final : public FittedModel {
 public:
  LinearModel(Vec beta, std::size_t arity, bool clip) : beta_(std::move(beta)), arity_(arity), clip_(clip) {}
  Vec predict(const Mat& x) const override {
    Vec out = with_intercept(x) * beta_;
    return clip_ ? clip_probs(std::move(out)) : out;
  }
  std::size_t arity() const override { return arity_; }

 private:
  Vec beta_;
  std::size_t arity_;
  bool clip_;
};

class LogisticModel final : public FittedModel {
 public:
  LogisticModel(Vec beta, std::size_t arity) : beta_(std::move(beta)), arity_(arity) {}
  Vec predict(const Mat& x) const override {
    Vec eta = with_intercept(x) * beta_;
    Vec p(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) p(i) = 1.0 / (1.0 + std::exp(-eta(i)));
    return clip_probs(std::move(p));
  }
  std::size_t arity() const override { return arity_; }

 private:
  Vec beta_;
  std::size_t arity_;
};

class KnnModel final : public FittedModel {
 public:
  KnnModel(Mat x, Vec y, int k, bool clip)
      : x_(std::move(x)), y_(std::move(y)), k_(k), clip_(clip) {}

  Vec predict(const Mat& q) const override {
    const Eigen::Index n = x_.rows();
    const int k = std::min<int>(k_, static_cast<int>(n));
    Vec out(q.rows());
    std::vector<std::pair<double, Eigen::Index>> d(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
      for (Eigen::Index i = 0; i < n; ++i)
        d[static_cast<std::size_t>(i)] = {(x_.row(i) - q.row(r)).squaredNorm(), i};
      std::partial_sort(d.begin(), d.begin() + k, d.end());
      double s = 0.0;
      for (int j = 0; j < k; ++j) s += y_(d[static_cast<std::size_t>(j)].second);
      out(r) = s / k;
    }
    return clip_ ? clip_probs(std::move(out)) : out;
  }
  std::size_t arity() const override { return static_cast<std::size_t>(x_.cols()); }

 private:
  Mat x_;
  Vec y_;
  int k_;
  bool clip_;
};

struct Stump {
  int feature = -1;          // -1: leaf at root
  double threshold = 0.0;
  // depth-1 children values; when a child is split further the nested
  // feature/threshold pair is used instead.
  double left_value = 0.0;
  double right_value = 0.0;
  int left_feature = -1;
  double left_threshold = 0.0;
  double left_lo = 0.0, left_hi = 0.0;
  int right_feature = -1;
  double right_threshold = 0.0;
  double right_lo = 0.0, right_hi = 0.0;

  double eval(const Mat& x, Eigen::Index r) const {
    if (feature < 0) return left_value;
    if (x(r, feature) <= threshold) {
      if (left_feature < 0) return left_value;
      return x(r, left_feature) <= left_threshold ? left_lo : left_hi;
    }
    if (right_feature < 0) return right_value;
    return x(r, right_feature) <= right_threshold ? right_lo : right_hi;
  }
};

struct SplitResult {
  int feature = -1;
  double threshold = 0.0;
  double left_mean = 0.0;
  double right_mean = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

// Candidate thresholds per feature, fixed once per fit: midpoints between
// up to 32 quantile cuts of the full training column.
std::vector<double> candidate_thresholds(const Mat& x, int f) {
  std::vector<double> v(x.col(f).data(), x.col(f).data() + x.rows());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  if (v.size() < 2) return {};
  std::vector<double> cuts;
  const std::size_t max_cuts = 32;
  if (v.size() - 1 <= max_cuts) {
    for (std::size_t i = 0; i + 1 < v.size(); ++i) cuts.push_back(0.5 * (v[i] + v[i + 1]));
  } else {
    for (std::size_t c = 1; c <= max_cuts; ++c) {
      const std::size_t i = c * (v.size() - 1) / (max_cuts + 1);
      cuts.push_back(0.5 * (v[i] + v[i + 1]));
    }
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  }
  return cuts;
}

SplitResult best_split(const Mat& x, const Vec& resid, const std::vector<Eigen::Index>& rows,
                       const std::vector<std::vector<double>>& thresholds) {
  SplitResult best;
  double total = 0.0;
  for (auto r : rows) total += resid(r);
  const double n = static_cast<double>(rows.size());
  double total_sq = 0.0;
  for (auto r : rows) total_sq += resid(r) * resid(r);
  best.sse = total_sq - total * total / std::max(1.0, n);  // no-split SSE
  best.left_mean = best.right_mean = n > 0 ? total / n : 0.0;

  for (int f = 0; f < x.cols(); ++f) {
    for (double t : thresholds[static_cast<std::size_t>(f)]) {
      double ls = 0.0, lq = 0.0;
      double ln = 0.0;
      for (auto r : rows) {
        if (x(r, f) <= t) {
          ls += resid(r);
          lq += resid(r) * resid(r);
          ln += 1.0;
        }
      }
      const double rn = n - ln;
      if (ln < 1.0 || rn < 1.0) continue;
      const double rs = total - ls;
      const double rq = total_sq - lq;
      const double sse = (lq - ls * ls / ln) + (rq - rs * rs / rn);
      if (sse < best.sse - 1e-12) {
        best.sse = sse;
        best.feature = f;
        best.threshold = t;
        best.left_mean = ls / ln;
        best.right_mean = rs / rn;
      }
    }
  }
  return best;
}

class BoostedStumpsModel final : public FittedModel {
 public:
  BoostedStumpsModel(double base, std::vector<Stump> trees, double rate, std::size_t arity, bool clip)
      : base_(base), trees_(std::move(trees)), rate_(rate), arity_(arity), clip_(clip) {}

  Vec predict(const Mat& x) const override {
    Vec out = Vec::Constant(x.rows(), base_);
    for (const auto& t : trees_)
      for (Eigen::Index r = 0; r < x.rows(); ++r) out(r) += rate_ * t.eval(x, r);
    return clip_ ? clip_probs(std::move(out)) : out;
  }
  std::size_t arity() const override { return arity_; }

 private:
  double base_;
  std::vector<Stump> trees_;
  double rate_;
  std::size_t arity_;
  bool clip_;
};

std::shared_ptr<const FittedModel> fit_boost(const LearnerSpec& spec, const Mat& x, const Vec& y,
                                             bool clip) {
  const double base = y.mean();
  Vec resid = y.array() - base;
  std::vector<Eigen::Index> all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});

  std::vector<std::vector<double>> thresholds;
  thresholds.reserve(static_cast<std::size_t>(x.cols()));
  for (int f = 0; f < x.cols(); ++f) thresholds.push_back(candidate_thresholds(x, f));

  std::vector<Stump> trees;
  trees.reserve(static_cast<std::size_t>(spec.boost_trees));
  for (int it = 0; it < spec.boost_trees; ++it) {
    const SplitResult root = best_split(x, resid, all, thresholds);
    Stump s;
    if (root.feature < 0) {
      s.left_value = root.left_mean;
    } else {
      s.feature = root.feature;
      s.threshold = root.threshold;
      s.left_value = root.left_mean;
      s.right_value = root.right_mean;
      if (spec.boost_depth >= 2) {
        std::vector<Eigen::Index> left, right;
        for (auto r : all) (x(r, root.feature) <= root.threshold ? left : right).push_back(r);
        const SplitResult ls = best_split(x, resid, left, thresholds);
        if (ls.feature >= 0) {
          s.left_feature = ls.feature;
          s.left_threshold = ls.threshold;
          s.left_lo = ls.left_mean;
          s.left_hi = ls.right_mean;
        }
        const SplitResult rs = best_split(x, resid, right, thresholds);
        if (rs.feature >= 0) {
          s.right_feature = rs.feature;
          s.right_threshold = rs.threshold;
          s.right_lo = rs.left_mean;
          s.right_hi = rs.right_mean;
        }
      }
    }
    for (Eigen::Index r = 0; r < x.rows(); ++r) resid(r) -= spec.boost_rate * s.eval(x, r);
    trees.push_back(s);
  }
  return std::make_shared<BoostedStumpsModel>(base, std::move(trees), spec.boost_rate,
                                              static_cast<std::size_t>(x.cols()), clip);
}

Vec solve_ols(const Mat& x, const Vec& y) {
  const Mat xi = with_intercept(x);
  return xi.colPivHouseholderQr().solve(y);
}

Vec solve_ridge(const Mat& x, const Vec& y, double lambda) {
  // Intercept unpenalized: center, solve, restore.
  const Eigen::Index p = x.cols();
  if (p == 0) return Vec::Constant(1, y.mean());
  const Vec xm = x.colwise().mean();
  const double ym = y.mean();
  const Mat xc = x.rowwise() - xm.transpose();
  const Vec yc = y.array() - ym;
  Mat g = xc.transpose() * xc;
  g.diagonal().array() += lambda;
  const Vec b = xc.transpose() * yc;
  Vec beta_slope = g.ldlt().solve(b);
  Vec beta(p + 1);
  beta(0) = ym - xm.dot(beta_slope);
  beta.tail(p) = beta_slope;
  return beta;
}

Vec solve_logistic(const Mat& x, const Vec& y) {
  const Mat xi = with_intercept(x);
  const Eigen::Index p = xi.cols();
  Vec beta = Vec::Zero(p);
  for (int iter = 0; iter < 100; ++iter) {
    const Vec eta = xi * beta;
    Vec mu(eta.size()), w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      mu(i) = 1.0 / (1.0 + std::exp(-eta(i)));
      w(i) = std::max(1e-10, mu(i) * (1.0 - mu(i)));
    }
    Mat h = xi.transpose() * w.asDiagonal() * xi;
    h.diagonal().array() += 1e-8;  // keeps separable data solvable
    const Vec g = xi.transpose() * (y - mu);
    const Vec step = h.ldlt().solve(g);
    beta += step;
    if (step.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  return beta;
}

double risk_of(const Vec& y, const Vec& pred, TargetType target) {
  if (target == TargetType::kBinary) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double p = std::min(1.0 - kProbEps, std::max(kProbEps, pred(i)));
      s += -(y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p));
    }
    return s / static_cast<double>(y.size());
  }
  return (y - pred).squaredNorm() / static_cast<double>(y.size());
}

// Euclidean projection onto the probability simplex.
Vec project_simplex(Vec w) {
  const Eigen::Index k = w.size();
  std::vector<double> u(w.data(), w.data() + k);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double tau = 0.0;
  int rho = 0;
  for (int i = 0; i < k; ++i) {
    css += u[static_cast<std::size_t>(i)];
    const double t = (css - 1.0) / (i + 1);
    if (u[static_cast<std::size_t>(i)] - t > 0) {
      rho = i + 1;
      tau = t;
    }
  }
  (void)rho;
  for (Eigen::Index i = 0; i < k; ++i) w(i) = std::max(0.0, w(i) - tau);
  return w;
}

Vec convex_weights(const Mat& cv_pred, const Vec& y, TargetType target, int best_candidate) {
  const Eigen::Index k = cv_pred.cols();
  Vec w = Vec::Zero(k);
  w(best_candidate) = 1.0;  // start at the best single candidate
  Vec best_w = w;
  double best_risk = risk_of(y, cv_pred * w, target);

  const double step = 0.1;
  const double tol = 1e-8;
  const double n = static_cast<double>(y.size());
  for (int it = 0; it < 500; ++it) {
    const Vec pred = cv_pred * w;
    Vec grad(k);
    if (target == TargetType::kBinary) {
      Vec gvec(y.size());
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double p = std::min(1.0 - kProbEps, std::max(kProbEps, pred(i)));
        gvec(i) = (p - y(i)) / (p * (1.0 - p));
      }
      grad = cv_pred.transpose() * gvec / n;
    } else {
      grad = -2.0 * cv_pred.transpose() * (y - pred) / n;
    }
    const Vec w_new = project_simplex(w - step * grad);
    const double risk = risk_of(y, cv_pred * w_new, target);
    if (risk < best_risk) {
      best_risk = risk;
      best_w = w_new;
    }
    if ((w_new - w).cwiseAbs().maxCoeff() < tol) break;
    w = w_new;
  }
  return best_w;
}

}  // namespace

LearnerSpec LearnerSpec::from_name(const std::string& name) {
  LearnerSpec s;
  if (name == "mean") {
    s.kind = LearnerKind::kMean;
  } else if (name == "linear") {
    s.kind = LearnerKind::kLinear;
  } else if (name == "ridge") {
    s.kind = LearnerKind::kRidge;
  } else if (name == "logistic") {
    s.kind = LearnerKind::kLogistic;
  } else if (name == "knn") {
    s.kind = LearnerKind::kKnn;
  } else if (name == "boost") {
    s.kind = LearnerKind::kBoostedStumps;
  } else {
    throw ValidationError("unknown learner: " + name);
  }
  return s;
}

std::string LearnerSpec::name() const {
  switch (kind) {
    case LearnerKind::kMean: return "mean";
    case LearnerKind::kLinear: return "linear";
    case LearnerKind::kRidge: return "ridge";
    case LearnerKind::kLogistic: return "logistic";
    case LearnerKind::kKnn: return "knn";
    case LearnerKind::kBoostedStumps: return "boost";
  }
  return "?";
}

void LearnerSpec::validate(TargetType target) const {
  if (kind == LearnerKind::kLogistic && target != TargetType::kBinary)
    throw ValidationError("logistic learner requires a binary target");
  if (kind == LearnerKind::kRidge && !(ridge_lambda > 0))
    throw ValidationError("ridge lambda must be positive");
  if (kind == LearnerKind::kKnn && knn_k < 1) throw ValidationError("knn k must be >= 1");
  if (kind == LearnerKind::kBoostedStumps) {
    if (boost_trees < 1 || !(boost_rate > 0)) throw ValidationError("boost requires trees >= 1, rate > 0");
    if (boost_depth < 1 || boost_depth > 2) throw ValidationError("boost depth must be 1 or 2");
  }
}

std::shared_ptr<const FittedModel> fit_learner(const LearnerSpec& spec, TargetType target,
                                               const Mat& x, const Vec& y, std::uint64_t seed) {
  (void)seed;  // all built-in learners are deterministic given (x, y)
  spec.validate(target);
  if (x.rows() != y.size()) throw LengthMismatchError("x and y row counts differ");
  const bool clip = target == TargetType::kBinary;
  const std::size_t arity = static_cast<std::size_t>(x.cols());
  switch (spec.kind) {
    case LearnerKind::kMean:
      return std::make_shared<MeanModel>(y.mean(), arity);
    case LearnerKind::kLinear:
      return std::make_shared<LinearModel>(solve_ols(x, y), arity, clip);
    case LearnerKind::kRidge:
      return std::make_shared<LinearModel>(solve_ridge(x, y, spec.ridge_lambda), arity, clip);
    case LearnerKind::kLogistic:
      return std::make_shared<LogisticModel>(solve_logistic(x, y), arity);
    case LearnerKind::kKnn:
      return std::make_shared<KnnModel>(x, y, spec.knn_k, clip);
    case LearnerKind::kBoostedStumps:
      return fit_boost(spec, x, y, clip);
  }
  throw ValidationError("unreachable learner kind");
}

Vec FittedRegressor::predict(const Mat& x) const {
  if (static_cast<std::size_t>(x.cols()) != arity())
    throw ArityMismatchError(static_cast<std::size_t>(x.cols()), arity());
  Vec out = Vec::Zero(x.rows());
  for (std::size_t j = 0; j < models.size(); ++j)
    if (weights[j] != 0.0) out += weights[j] * models[j]->predict(x);
  if (target == TargetType::kBinary) out = clip_probs(std::move(out));
  return out;
}

std::size_t FittedRegressor::arity() const {
  return models.empty() ? 0 : models.front()->arity();
}

FittedRegressor fit_ensemble(const EnsembleSpec& spec, const Mat& x, const Vec& y,
                             std::uint64_t seed) {
  if (spec.candidates.empty()) throw ValidationError("ensemble needs at least one candidate");
  if (spec.cv_folds < 2) throw ValidationError("ensemble cv_folds must be >= 2");
  if (x.rows() != y.size()) throw LengthMismatchError("x and y row counts differ");
  if (y.size() < spec.cv_folds) throw ValidationError("need at least cv_folds rows");

  FittedRegressor out;
  out.target = spec.target;

  const bool constant_y = (y.array() == y(0)).all();

  // Drop candidates incompatible with the target type.
  std::vector<LearnerSpec> usable;
  for (const auto& c : spec.candidates) {
    if (c.kind == LearnerKind::kLogistic && spec.target != TargetType::kBinary) {
      out.warning = "dropped logistic candidate for continuous target";
      continue;
    }
    usable.push_back(c);
  }
  if (usable.empty()) throw ValidationError("no usable candidates for target type");

  if (constant_y) {
    out.degenerate_target = true;
    out.warning = "constant target; using the mean learner";
    out.models = {std::make_shared<MeanModel>(y(0), static_cast<std::size_t>(x.cols()))};
    out.cv_risk = {0.0};
    out.weights = {1.0};
    out.selected = 0;
    return out;
  }

  const Eigen::Index n = y.size();
  const std::size_t k = usable.size();

  // Seeded fold assignment for the internal CV.
  std::vector<int> fold(static_cast<std::size_t>(n));
  {
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(Rng::mix(seed, 0xc41u));
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i)
      fold[order[i]] = static_cast<int>(i % static_cast<std::size_t>(spec.cv_folds));
  }

  Mat cv_pred(n, static_cast<Eigen::Index>(k));
  for (int f = 0; f < spec.cv_folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i)
      (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    if (train.empty() || test.empty()) continue;
    Mat xtr(static_cast<Eigen::Index>(train.size()), x.cols());
    Vec ytr(static_cast<Eigen::Index>(train.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      xtr.row(static_cast<Eigen::Index>(i)) = x.row(train[i]);
      ytr(static_cast<Eigen::Index>(i)) = y(train[i]);
    }
    Mat xte(static_cast<Eigen::Index>(test.size()), x.cols());
    for (std::size_t i = 0; i < test.size(); ++i)
      xte.row(static_cast<Eigen::Index>(i)) = x.row(test[i]);

    for (std::size_t j = 0; j < k; ++j) {
      // A constant training slice can appear even when y itself varies.
      std::shared_ptr<const FittedModel> m;
      if ((ytr.array() == ytr(0)).all())
        m = std::make_shared<MeanModel>(ytr(0), static_cast<std::size_t>(x.cols()));
      else
        m = fit_learner(usable[j], spec.target, xtr, ytr, Rng::mix(seed, 1000 + j));
      const Vec p = m->predict(xte);
      for (std::size_t i = 0; i < test.size(); ++i)
        cv_pred(test[i], static_cast<Eigen::Index>(j)) = p(static_cast<Eigen::Index>(i));
    }
  }

  out.cv_risk.resize(k);
  for (std::size_t j = 0; j < k; ++j)
    out.cv_risk[j] = risk_of(y, cv_pred.col(static_cast<Eigen::Index>(j)), spec.target);

  out.selected = 0;
  for (std::size_t j = 1; j < k; ++j)
    if (out.cv_risk[j] < out.cv_risk[static_cast<std::size_t>(out.selected)]) out.selected = static_cast<int>(j);

  out.weights.assign(k, 0.0);
  if (spec.stacking == Stacking::kDiscrete || k == 1) {
    out.weights[static_cast<std::size_t>(out.selected)] = 1.0;
  } else {
    const Vec w = convex_weights(cv_pred, y, spec.target, out.selected);
    for (std::size_t j = 0; j < k; ++j) out.weights[j] = w(static_cast<Eigen::Index>(j));
  }

  out.models.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (out.weights[j] == 0.0 && static_cast<int>(j) != out.selected) {
      // Unused candidate: keep a placeholder mean model to hold the slot.
      out.models[j] = std::make_shared<MeanModel>(y.mean(), static_cast<std::size_t>(x.cols()));
    } else {
      out.models[j] = fit_learner(usable[j], spec.target, x, y, Rng::mix(seed, 2000 + j));
    }
  }
  return out;
}

}  // namespace mediator
