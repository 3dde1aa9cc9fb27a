#include "mediator/riesz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "mediator/errors.hpp"
#include "mediator/rng.hpp"

namespace mediator {

// ---------------------------------------------------------------------------
// FeatureExtractor
// ---------------------------------------------------------------------------

FeatureExtractor::FeatureExtractor(const AugmentedDataset& data, std::vector<std::string> names)
    : data_(&data), names_(std::move(names)) {
  base_index_.reserve(names_.size());
  zpi_index_.reserve(names_.size());
  is_treatment_.reserve(names_.size());
  const auto& roles = data.base.roles;
  for (const auto& name : names_) {
    base_index_.push_back(static_cast<Eigen::Index>(data.base.column_index(name)));
    int zi = -1;
    for (std::size_t j = 0; j < roles.moc.size(); ++j)
      if (roles.moc[j] == name) zi = static_cast<int>(j);
    zpi_index_.push_back(zi);
    is_treatment_.push_back(name == roles.treatment);
  }
}

Mat FeatureExtractor::extract(const ShiftMap& shift) const {
  std::vector<std::size_t> rows(data_->n());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return extract(rows, shift);
}

Mat FeatureExtractor::extract(const std::vector<std::size_t>& rows, const ShiftMap& shift) const {
  Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names_.size()));
  Vec shifted_a;
  if (shift.set_treatment) shifted_a = shifted_treatment(*data_, *shift.set_treatment);
  if (shift.swap_z && data_->zpi.size() == 0 && data_->base.roles.has_moc())
    throw MissingZpiError("shift swaps Z but the dataset has no permuted Z columns");

  for (std::size_t j = 0; j < names_.size(); ++j) {
    const Eigen::Index cj = base_index_[j];
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Eigen::Index i = static_cast<Eigen::Index>(rows[r]);
      double v;
      if (is_treatment_[j] && shift.set_treatment) {
        v = shifted_a(i);
      } else if (zpi_index_[j] >= 0 && shift.swap_z) {
        v = data_->zpi(i, zpi_index_[j]);
      } else {
        v = data_->base.values(i, cj);
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return out;
}

Vec FeatureExtractor::row(std::size_t i, const ShiftMap& shift) const {
  return extract(std::vector<std::size_t>{i}, shift).row(0);
}

Vec shifted_treatment(const AugmentedDataset& data, const Policy& policy) {
  const std::size_t n = data.n();
  const Vec a = data.base.column(data.base.roles.treatment);
  Vec out(static_cast<Eigen::Index>(n));
  if (policy.rule == Policy::Rule::kNatural) return a;
  if (policy.rule == Policy::Rule::kConstant) return Vec::Constant(a.size(), policy.level);
  const Eigen::Index cov = static_cast<Eigen::Index>(data.base.column_index(policy.covariate));
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double v = data.base.values(i, cov);
    out(i) = v >= policy.cutoff ? std::max(a(i) + policy.delta, policy.floor) : a(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Riesz loss
// ---------------------------------------------------------------------------

double riesz_loss(const RowFn& alpha, const Mat& x_obs, const Mat& x_shifted, const Vec& weights) {
  if (x_obs.rows() != x_shifted.rows() || x_obs.rows() != weights.size())
    throw LengthMismatchError("riesz_loss inputs disagree on row count");
  const Eigen::Index n = x_obs.rows();
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a_obs = alpha(x_obs.row(i));
    const double a_shift = alpha(x_shifted.row(i));
    const double term = a_obs * a_obs - 2.0 * weights(i) * a_shift;
    if (!std::isfinite(term)) throw NonFiniteLossError("non-finite riesz loss term");
    s += term;
  }
  return s / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Linear basis
// ---------------------------------------------------------------------------

namespace {

// Distinct-cell lookup for the saturated indicator basis.
struct SaturatedMap {
  std::map<std::vector<double>, std::size_t> cells;

  static std::vector<double> cell_of(const Vec& row) {
    return std::vector<double>(row.data(), row.data() + row.size());
  }
};

struct PolynomialMap {
  Vec mean;
  Vec sd;
  int treatment_col = -1;          // treated specially when interactions are on
  std::vector<double> treatment_levels;  // indicator encoding when few levels
  int degree = 2;
  bool interact = true;
};

}  // namespace

struct LinearBasis::Impl {
  bool saturated = false;
  SaturatedMap sat;
  PolynomialMap poly;
  std::size_t arity = 0;
  std::size_t dim = 0;
};

LinearBasis::LinearBasis() = default;
LinearBasis::~LinearBasis() = default;
LinearBasis::LinearBasis(const LinearBasis&) = default;
LinearBasis& LinearBasis::operator=(const LinearBasis&) = default;
LinearBasis::LinearBasis(LinearBasis&&) noexcept = default;
LinearBasis& LinearBasis::operator=(LinearBasis&&) noexcept = default;

LinearBasis LinearBasis::build(const RieszBasisSpec& spec, const Mat& x_train, int treatment_col) {
  LinearBasis b;
  b.impl_ = std::make_shared<Impl>();
  Impl& im = *b.impl_;
  im.arity = static_cast<std::size_t>(x_train.cols());

  if (spec.saturated) {
    im.saturated = true;
    for (Eigen::Index i = 0; i < x_train.rows(); ++i) {
      const auto cell = SaturatedMap::cell_of(x_train.row(i));
      im.sat.cells.emplace(cell, 0);
    }
    std::size_t id = 0;
    for (auto& kv : im.sat.cells) kv.second = id++;
    im.dim = im.sat.cells.size();
    return b;
  }

  PolynomialMap& pm = im.poly;
  pm.degree = std::max(1, spec.degree);
  pm.interact = spec.interact_treatment;
  pm.treatment_col = treatment_col;
  pm.mean = x_train.colwise().mean();
  pm.sd = Vec::Ones(x_train.cols());
  for (Eigen::Index j = 0; j < x_train.cols(); ++j) {
    const double var =
        (x_train.col(j).array() - pm.mean(j)).square().sum() / std::max(1.0, double(x_train.rows()));
    pm.sd(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  if (treatment_col >= 0) {
    std::vector<double> lv(x_train.col(treatment_col).data(),
                           x_train.col(treatment_col).data() + x_train.rows());
    std::sort(lv.begin(), lv.end());
    lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
    if (lv.size() <= 5) pm.treatment_levels = lv;  // indicator coding, first level dropped
  }

  // Dimension: 1 + covar polys + treatment block (+ interactions).
  std::size_t covars = im.arity - (treatment_col >= 0 ? 1 : 0);
  std::size_t treat_dim = 0;
  if (treatment_col >= 0)
    treat_dim = pm.treatment_levels.empty() ? static_cast<std::size_t>(pm.degree)
                                            : pm.treatment_levels.size() - 1;
  im.dim = 1 + covars * static_cast<std::size_t>(pm.degree) + treat_dim;
  if (pm.interact && treatment_col >= 0) im.dim += treat_dim * covars * static_cast<std::size_t>(pm.degree);
  return b;
}

Vec LinearBasis::features(const Vec& x) const {
  const Impl& im = *impl_;
  if (static_cast<std::size_t>(x.size()) != im.arity)
    throw ArityMismatchError(static_cast<std::size_t>(x.size()), im.arity);

  Vec f = Vec::Zero(static_cast<Eigen::Index>(im.dim));
  if (im.saturated) {
    const auto it = im.sat.cells.find(SaturatedMap::cell_of(x));
    if (it != im.sat.cells.end()) f(static_cast<Eigen::Index>(it->second)) = 1.0;
    return f;
  }

  const PolynomialMap& pm = im.poly;
  Eigen::Index k = 0;
  f(k++) = 1.0;

  // Covariate polynomial block.
  std::vector<double> covar_terms;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (static_cast<int>(j) == pm.treatment_col) continue;
    const double z = (x(j) - pm.mean(j)) / pm.sd(j);
    double p = 1.0;
    for (int d = 1; d <= pm.degree; ++d) {
      p *= z;
      covar_terms.push_back(p);
      f(k++) = p;
    }
  }

  // Treatment block.
  std::vector<double> treat_terms;
  if (pm.treatment_col >= 0) {
    const double a = x(pm.treatment_col);
    if (!pm.treatment_levels.empty()) {
      for (std::size_t l = 1; l < pm.treatment_levels.size(); ++l) {
        const double ind = a == pm.treatment_levels[l] ? 1.0 : 0.0;
        treat_terms.push_back(ind);
        f(k++) = ind;
      }
    } else {
      const double z = (a - pm.mean(pm.treatment_col)) / pm.sd(pm.treatment_col);
      double p = 1.0;
      for (int d = 1; d <= pm.degree; ++d) {
        p *= z;
        treat_terms.push_back(p);
        f(k++) = p;
      }
    }
    if (pm.interact)
      for (const double t : treat_terms)
        for (const double c : covar_terms) f(k++) = t * c;
  }
  return f;
}

Mat LinearBasis::features(const Mat& x) const {
  Mat out(x.rows(), static_cast<Eigen::Index>(impl_->dim));
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = features(Vec(x.row(i)));
  return out;
}

std::size_t LinearBasis::dim() const { return impl_->dim; }

// ---------------------------------------------------------------------------
// RieszFit
// ---------------------------------------------------------------------------

double RieszFit::eval(const Vec& features) const {
  const double raw = evaluator(features);
  return std::min(clip_bound, std::max(-clip_bound, raw));
}

Vec RieszFit::eval(const Mat& x) const {
  Vec out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = eval(Vec(x.row(i)));
  return out;
}

RieszFit fit_riesz_linear(const Mat& x_obs, const Mat& x_shifted, const Vec& weights,
                          const RieszBasisSpec& spec, int treatment_col) {
  if (x_obs.rows() != x_shifted.rows() || x_obs.rows() != weights.size())
    throw LengthMismatchError("fit_riesz_linear inputs disagree on row count");
  const double n = static_cast<double>(x_obs.rows());

  const LinearBasis basis = LinearBasis::build(spec, x_obs, treatment_col);
  const Mat phi_obs = basis.features(x_obs);
  const Mat phi_shift = basis.features(x_shifted);
  if (!phi_obs.allFinite() || !phi_shift.allFinite())
    throw NonFiniteLossError("non-finite basis features");

  Mat g = phi_obs.transpose() * phi_obs / n;
  g.diagonal().array() += spec.lambda;
  const Vec b = phi_shift.transpose() * weights / n;

  Eigen::SelfAdjointEigenSolver<Mat> eig(g);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw SingularGramError("gram matrix numerically singular (condition number > 1e12)");

  const Vec c = eig.eigenvectors() *
                (eig.eigenvectors().transpose() * b).cwiseQuotient(eig.eigenvalues());

  RieszFit fit;
  fit.clip_bound = spec.clip;
  fit.coefficients = c;
  fit.evaluator = [basis, c](const Vec& x) { return basis.features(x).dot(c); };
  // Empirical loss of the unclipped solution: c'Gc - 2 c'b with the
  // penalty-free G (matches the loss definition).
  Mat g0 = phi_obs.transpose() * phi_obs / n;
  fit.final_loss = c.dot(g0 * c) - 2.0 * c.dot(b);
  fit.loss_trace = {fit.final_loss};
  fit.normal_eq_residual = ((g * c - b).norm()) / std::max(1.0, b.norm());
  return fit;
}

// ---------------------------------------------------------------------------
// Feedforward
// ---------------------------------------------------------------------------

namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Net {
  Mat w1;  // hidden x in
  Vec b1;  // hidden
  Vec w2;  // hidden
  double b2 = 0.0;
  Vec mean, sd;  // input standardization

  double forward(const Vec& x, Vec* h_out = nullptr, Vec* z_out = nullptr) const {
    const Vec z = (x - mean).cwiseQuotient(sd);
    const Vec pre = w1 * z + b1;
    Vec h(pre.size());
    for (Eigen::Index i = 0; i < pre.size(); ++i) h(i) = softplus(pre(i));
    if (h_out) *h_out = h;
    if (z_out) *z_out = z;
    return w2.dot(h) + b2;
  }
};

struct AdamState {
  Mat m_w1, v_w1;
  Vec m_b1, v_b1, m_w2, v_w2;
  double m_b2 = 0.0, v_b2 = 0.0;
  int t = 0;
};

void adam_update(double& p, double g, double& m, double& v, double lr, int t) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  m = b1 * m + (1 - b1) * g;
  v = b2 * v + (1 - b2) * g * g;
  const double mh = m / (1 - std::pow(b1, t));
  const double vh = v / (1 - std::pow(b2, t));
  p -= lr * mh / (std::sqrt(vh) + eps);
}

}  // namespace

RieszFit fit_riesz_ff(const Mat& x_obs, const Mat& x_shifted, const Vec& weights,
                      const FeedforwardSpec& spec, double clip, std::uint64_t seed) {
  if (spec.epochs < 1) throw ValidationError("feedforward epochs must be >= 1");
  if (spec.hidden < 1) throw ValidationError("feedforward hidden width must be >= 1");
  if (x_obs.rows() != x_shifted.rows() || x_obs.rows() != weights.size())
    throw LengthMismatchError("fit_riesz_ff inputs disagree on row count");

  const Eigen::Index n = x_obs.rows();
  const Eigen::Index p = x_obs.cols();

  Net net;
  net.mean = x_obs.colwise().mean();
  net.sd = Vec::Ones(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double var = (x_obs.col(j).array() - net.mean(j)).square().sum() / std::max<double>(1, n);
    net.sd(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }

  Rng rng(Rng::mix(seed, 0xffu));
  net.w1.resize(spec.hidden, p);
  for (Eigen::Index i = 0; i < net.w1.rows(); ++i)
    for (Eigen::Index j = 0; j < net.w1.cols(); ++j)
      net.w1(i, j) = rng.normal() / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, p)));
  net.b1 = Vec::Zero(spec.hidden);
  net.w2 = Vec::Zero(spec.hidden);  // zero output layer: the initial function is 0
  net.b2 = 0.0;

  auto full_loss = [&](const Net& m) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ao = m.forward(x_obs.row(i));
      const double as = m.forward(x_shifted.row(i));
      s += ao * ao - 2.0 * weights(i) * as;
    }
    return s / static_cast<double>(n);
  };

  RieszFit fit;
  fit.clip_bound = clip;
  fit.initial_loss = full_loss(net);

  AdamState adam;
  adam.m_w1 = Mat::Zero(spec.hidden, p);
  adam.v_w1 = Mat::Zero(spec.hidden, p);
  adam.m_b1 = Vec::Zero(spec.hidden);
  adam.v_b1 = Vec::Zero(spec.hidden);
  adam.m_w2 = Vec::Zero(spec.hidden);
  adam.v_w2 = Vec::Zero(spec.hidden);

  const int batch = std::max(1, std::min<int>(spec.batch, static_cast<int>(n)));
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});

  Net best = net;
  double best_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch));
      Mat g_w1 = Mat::Zero(spec.hidden, p);
      Vec g_b1 = Vec::Zero(spec.hidden);
      Vec g_w2 = Vec::Zero(spec.hidden);
      double g_b2 = 0.0;

      auto accumulate = [&](const Vec& x, double scale) {
        // d alpha / d params, scaled.
        Vec h, z;
        const double out = net.forward(x, &h, &z);
        (void)out;
        g_w2 += scale * h;
        g_b2 += scale;
        Vec dh(h.size());
        for (Eigen::Index i = 0; i < h.size(); ++i)
          dh(i) = scale * net.w2(i) * sigmoid(net.w1.row(i).dot(z) + net.b1(i));
        g_b1 += dh;
        g_w1 += dh * z.transpose();
      };

      const double inv = 1.0 / static_cast<double>(stop - start);
      for (std::size_t idx = start; idx < stop; ++idx) {
        const Eigen::Index i = static_cast<Eigen::Index>(order[idx]);
        const double ao = net.forward(x_obs.row(i));
        accumulate(x_obs.row(i), inv * 2.0 * ao);
        accumulate(x_shifted.row(i), inv * -2.0 * weights(i));
      }

      ++adam.t;
      for (Eigen::Index i = 0; i < spec.hidden; ++i) {
        for (Eigen::Index j = 0; j < p; ++j)
          adam_update(net.w1(i, j), g_w1(i, j), adam.m_w1(i, j), adam.v_w1(i, j), spec.lr, adam.t);
        adam_update(net.b1(i), g_b1(i), adam.m_b1(i), adam.v_b1(i), spec.lr, adam.t);
        adam_update(net.w2(i), g_w2(i), adam.m_w2(i), adam.v_w2(i), spec.lr, adam.t);
      }
      adam_update(net.b2, g_b2, adam.m_b2, adam.v_b2, spec.lr, adam.t);
    }

    const double loss = full_loss(net);
    fit.loss_trace.push_back(loss);
    if (!std::isfinite(loss) || loss > 1e6)
      throw DivergedLossError("feedforward riesz loss diverged at epoch " + std::to_string(epoch + 1));
    if (loss < best_loss) {
      best_loss = loss;
      best = net;
    }
  }

  fit.final_loss = best_loss;
  fit.evaluator = [best](const Vec& x) { return best.forward(x); };
  return fit;
}

// ---------------------------------------------------------------------------
// Recursive fitting
// ---------------------------------------------------------------------------

RieszFit fit_riesz_step(const Mat& x_obs, const Mat& x_shifted, const Vec& weights,
                        const RieszFunctionClass& cls, int treatment_col, std::uint64_t seed) {
  if (cls.kind == RieszKind::kLinearBasis) {
    RieszBasisSpec spec = cls.basis;
    spec.clip = cls.clip;
    return fit_riesz_linear(x_obs, x_shifted, weights, spec, treatment_col);
  }
  return fit_riesz_ff(x_obs, x_shifted, weights, cls.feedforward, cls.clip, seed);
}

std::vector<RieszFit> recursive_riesz(const RegressionProgram& program, const AugmentedDataset& data,
                                      const RieszFunctionClass& cls, std::uint64_t seed) {
  const std::size_t k_steps = program.depth();
  std::vector<RieszFit> outermost_first;
  outermost_first.reserve(k_steps);

  Vec weights = Vec::Ones(static_cast<Eigen::Index>(data.n()));
  for (std::size_t k = k_steps; k >= 1; --k) {
    const ProgramStep& step = program.steps[k - 1];
    FeatureExtractor fx(data, step.features);
    const Mat x_obs = fx.extract(ShiftMap{});
    const Mat x_shifted = fx.extract(step.consume_shift);
    int treatment_col = -1;
    for (std::size_t j = 0; j < step.features.size(); ++j)
      if (step.features[j] == data.base.roles.treatment) treatment_col = static_cast<int>(j);
    try {
      RieszFit fit = fit_riesz_step(x_obs, x_shifted, weights, cls, treatment_col,
                                    Rng::mix(seed, 0xa1fa0 + k));
      weights = fit.eval(x_obs);
      outermost_first.push_back(std::move(fit));
    } catch (const Error& e) {
      throw NumericalError("riesz fit failed at step " + std::to_string(k) + ": " + e.what());
    }
  }
  return outermost_first;
}

}  // namespace mediator
