#include "mediator/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "mediator/errors.hpp"
#include "mediator/rng.hpp"

namespace mediator {

namespace {

bool parse_cell(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  if (end != begin + cell.size()) return false;
  return std::isfinite(out);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "NULL";
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

}  // namespace

void VariableRoles::validate() const {
  if (treatment.empty()) throw RoleConflictError("treatment column name is empty");
  if (outcome.empty()) throw RoleConflictError("outcome column name is empty");
  if (mediators.empty()) throw RoleConflictError("at least one mediator column is required");
  std::set<std::string> seen;
  auto add = [&seen](const std::string& name, const char* role) {
    if (name.empty()) throw RoleConflictError(std::string("empty column name in role ") + role);
    if (!seen.insert(name).second)
      throw RoleConflictError("column " + name + " assigned to more than one role");
  };
  for (const auto& c : covariates) add(c, "covariates");
  add(treatment, "treatment");
  for (const auto& c : moc) add(c, "moc");
  for (const auto& c : mediators) add(c, "mediators");
  add(outcome, "outcome");
  if (!id.empty()) add(id, "id");
}

bool MediationDataset::has_column(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::size_t MediationDataset::column_index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw MissingColumnError(name);
  return static_cast<std::size_t>(it - columns.begin());
}

Vec MediationDataset::column(const std::string& name) const {
  return values.col(static_cast<Eigen::Index>(column_index(name)));
}

MediationDataset make_dataset(std::vector<std::string> columns, Mat values, VariableRoles roles) {
  roles.validate();
  MediationDataset d;
  d.columns = std::move(columns);
  d.values = std::move(values);
  d.roles = std::move(roles);
  auto require = [&d](const std::string& name) { (void)d.column_index(name); };
  for (const auto& c : d.roles.covariates) require(c);
  require(d.roles.treatment);
  for (const auto& c : d.roles.moc) require(c);
  for (const auto& c : d.roles.mediators) require(c);
  require(d.roles.outcome);
  if (!d.roles.id.empty()) require(d.roles.id);
  return d;
}

MediationDataset load_csv(const std::string& path, const VariableRoles& roles) {
  roles.validate();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);

  std::vector<std::vector<double>> cols(header.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw ValidationError("row " + std::to_string(row + 1) + " has " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      double v = 0.0;
      if (is_missing_token(cells[c])) throw MissingValueError(row + 1, header[c]);
      if (!parse_cell(cells[c], v)) throw NonNumericCellError(row + 1, header[c]);
      cols[c].push_back(v);
    }
    ++row;
  }
  if (row == 0) throw ValidationError("no data rows in " + path);

  Mat values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(header.size()));
  for (std::size_t c = 0; c < header.size(); ++c)
    for (std::size_t r = 0; r < row; ++r)
      values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = cols[c][r];

  return make_dataset(header, std::move(values), roles);
}

namespace {

// Greedy nearest-neighbor pairing on standardized covariates; Z is swapped
// within each pair, which keeps the stratum multiset intact and approximates
// a permutation conditional on W.
std::vector<std::size_t> matched_permutation(const MediationDataset& data,
                                             const std::vector<std::size_t>& stratum) {
  const auto& covs = data.roles.covariates;
  const std::size_t s = stratum.size();
  std::vector<std::size_t> perm(s);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (s < 2 || covs.empty()) return perm;

  Mat x(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(covs.size()));
  for (std::size_t j = 0; j < covs.size(); ++j) {
    const Eigen::Index cj = static_cast<Eigen::Index>(data.column_index(covs[j]));
    for (std::size_t i = 0; i < s; ++i)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          data.values(static_cast<Eigen::Index>(stratum[i]), cj);
  }
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    double sd = std::sqrt((x.col(j).array() - mean).square().sum() / static_cast<double>(s));
    if (sd <= 0) sd = 1.0;
    x.col(j) = (x.col(j).array() - mean) / sd;
  }

  std::vector<bool> used(s, false);
  for (std::size_t i = 0; i < s; ++i) {
    if (used[i]) continue;
    std::size_t best = s;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < s; ++j) {
      if (used[j]) continue;
      const double d = (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j)))
                           .squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best == s) break;  // odd row left unpaired
    used[i] = used[best] = true;
    std::swap(perm[i], perm[best]);
  }
  return perm;
}

}  // namespace

AugmentedDataset augment_zpi(const MediationDataset& data, std::uint64_t seed, ZpiStrategy strategy) {
  AugmentedDataset out;
  out.base = data;
  out.seed = seed;
  if (!data.roles.has_moc()) {
    out.zpi.resize(static_cast<Eigen::Index>(data.n()), 0);
    return out;
  }

  const std::size_t n = data.n();
  const auto& moc = data.roles.moc;
  Mat z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(moc.size()));
  for (std::size_t j = 0; j < moc.size(); ++j)
    z.col(static_cast<Eigen::Index>(j)) = data.column(moc[j]);

  // Strata are the distinct observed treatment levels.
  const Vec a = data.column(data.roles.treatment);
  std::unordered_map<double, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < n; ++i) strata[a(static_cast<Eigen::Index>(i))].push_back(i);
  std::vector<double> levels;
  levels.reserve(strata.size());
  for (const auto& kv : strata) levels.push_back(kv.first);
  std::sort(levels.begin(), levels.end());

  out.zpi = z;
  Rng rng(Rng::mix(seed, 0x7a70u));
  for (double level : levels) {
    const auto& rows = strata[level];
    if (rows.size() < 2) {
      std::ostringstream msg;
      msg << "treatment stratum " << level << " has fewer than 2 rows; Z left unpermuted";
      out.warnings.push_back(msg.str());
      continue;  // identity permutation
    }
    std::vector<std::size_t> perm(rows.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (strategy == ZpiStrategy::kTreatmentStratum) {
      rng.shuffle(perm);
    } else {
      perm = matched_permutation(data, rows);
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
      out.zpi.row(static_cast<Eigen::Index>(rows[i])) = z.row(static_cast<Eigen::Index>(rows[perm[i]]));
  }
  return out;
}

AugmentedDataset make_folds(AugmentedDataset data, int v, std::uint64_t seed) {
  const std::size_t n = data.n();
  if (v < 1 || static_cast<std::size_t>(v) > n) throw InvalidFoldCountError(v, n);

  data.folds = v;
  data.fold.assign(n, 1);
  if (v == 1) return data;

  const Vec y = data.base.column(data.base.roles.outcome);
  std::set<double> distinct(y.data(), y.data() + y.size());
  const bool binary_outcome = distinct.size() == 2;

  Rng rng(Rng::mix(seed, 0xf01d5u));
  auto deal = [&](std::vector<std::size_t> rows, int& next_fold) {
    rng.shuffle(rows);
    for (const std::size_t r : rows) {
      data.fold[r] = next_fold;
      next_fold = next_fold % v + 1;
    }
  };

  int next_fold = 1;
  if (binary_outcome) {
    const double hi = *distinct.rbegin();
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i)
      (y(static_cast<Eigen::Index>(i)) == hi ? pos : neg).push_back(i);
    deal(std::move(pos), next_fold);
    deal(std::move(neg), next_fold);
  } else {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    deal(std::move(rows), next_fold);
  }
  return data;
}

PositivityDiagnostics positivity_diagnostics(const std::vector<double>& weights, double clip_bound) {
  PositivityDiagnostics d;
  d.clip_bound = clip_bound;
  if (weights.empty()) return d;

  std::vector<double> abs(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) abs[i] = std::abs(weights[i]);

  d.min = *std::min_element(abs.begin(), abs.end());
  d.max = *std::max_element(abs.begin(), abs.end());
  d.q01 = quantile(abs, 0.01);
  d.q25 = quantile(abs, 0.25);
  d.median = quantile(abs, 0.50);
  d.q75 = quantile(abs, 0.75);
  d.q99 = quantile(abs, 0.99);
  const double eps = 1e-12 * std::max(1.0, clip_bound);
  for (double w : abs)
    if (w >= clip_bound - eps) ++d.n_clipped;
  d.frac_clipped = static_cast<double>(d.n_clipped) / static_cast<double>(weights.size());
  d.flagged = d.frac_clipped > 0.01;
  return d;
}

}  // namespace mediator
