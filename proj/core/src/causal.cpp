#include "syntaxlens/causal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "syntaxlens/error.hpp"

namespace syntaxlens {
namespace {

constexpr std::size_t kMinAteSamples = 10;

std::vector<const CausalSample*> usable(const std::vector<CausalSample>& samples) {
  std::vector<const CausalSample*> out;
  for (const auto& s : samples) {
    if (s.treatment) out.push_back(&s);
  }
  return out;
}

AteResult fit(const std::vector<const CausalSample*>& rows, const std::vector<double>& treatment,
              const AteOptions& opts) {
  const std::size_t n = rows.size();
  if (n < kMinAteSamples) {
    throw Error(ErrorCode::InsufficientSamples,
                std::to_string(n) + " samples with a treatment value, need " + std::to_string(kMinAteSamples));
  }

  AteResult result;
  result.n = n;
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < kConfounderNames.size(); ++k) {
    bool constant = true;
    for (const auto* r : rows) constant = constant && r->confounders[k] == rows.front()->confounders[k];
    if (constant && opts.drop_constant_confounders) {
      result.dropped_confounders.emplace_back(kConfounderNames[k]);
    } else {
      kept.push_back(k);
    }
  }

  const auto p = static_cast<Eigen::Index>(2 + kept.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    x(row, 0) = 1.0;
    x(row, 1) = treatment[i];
    for (std::size_t c = 0; c < kept.size(); ++c) {
      x(row, static_cast<Eigen::Index>(2 + c)) = rows[i]->confounders[kept[c]];
    }
    y(row) = rows[i]->outcome;
  }
  if (opts.standardize_confounders) {
    for (Eigen::Index c = 2; c < p; ++c) {
      const double mean = x.col(c).mean();
      const double sd = std::sqrt((x.col(c).array() - mean).square().sum() / static_cast<double>(n - 1));
      if (sd > 0) x.col(c) = (x.col(c).array() - mean) / sd;
    }
  }
  if (static_cast<Eigen::Index>(n) <= p) {
    throw Error(ErrorCode::InsufficientSamples, "not enough samples for the number of regressors");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    throw Error(ErrorCode::RankDeficient,
                "design matrix has rank " + std::to_string(qr.rank()) + " < " + std::to_string(p));
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(static_cast<Eigen::Index>(n) - p);

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd cov_perm = r_inv * r_inv.transpose();
  const Eigen::MatrixXd cov = qr.colsPermutation() * cov_perm * qr.colsPermutation().transpose();

  result.ate = beta(1);
  result.stderr_ = std::sqrt(sigma2 * cov(1, 1));
  return result;
}

std::vector<double> treatments_of(const std::vector<const CausalSample*>& rows) {
  std::vector<double> t;
  t.reserve(rows.size());
  for (const auto* r : rows) t.push_back(*r->treatment);
  return t;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(x.size()) + " vs " + std::to_string(y.size()) + " values");
  }
  if (x.size() < 3) throw Error(ErrorCode::InsufficientSamples, "pearson needs at least 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::DegenerateVariance, "constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

AteResult ate_linear(const std::vector<CausalSample>& samples, const AteOptions& opts) {
  const auto rows = usable(samples);
  return fit(rows, treatments_of(rows), opts);
}

std::vector<double> placebo_ates(const std::vector<CausalSample>& samples, std::uint64_t seed,
                                 std::size_t permutations, const AteOptions& opts) {
  const auto rows = usable(samples);
  std::vector<double> t = treatments_of(rows);
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  out.reserve(permutations);
  for (std::size_t k = 0; k < permutations; ++k) {
    std::shuffle(t.begin(), t.end(), rng);
    out.push_back(fit(rows, t, opts).ate);
  }
  return out;
}

PlaceboResult placebo_refute(const std::vector<CausalSample>& samples, std::uint64_t seed,
                             std::size_t permutations, const AteOptions& opts) {
  if (permutations < 1) throw Error(ErrorCode::InvalidConfig, "placebo needs at least one permutation");
  const double ate = ate_linear(samples, opts).ate;
  const auto placebos = placebo_ates(samples, seed, permutations, opts);
  PlaceboResult r;
  for (double v : placebos) {
    r.placebo_ate += std::abs(v);
    r.signed_mean += v;
  }
  r.placebo_ate /= static_cast<double>(placebos.size());
  r.signed_mean /= static_cast<double>(placebos.size());
  r.placebo_pass = r.placebo_ate < std::max(0.05, 0.1 * std::abs(ate));
  return r;
}

const std::vector<std::string>& default_causal_treatments() {
  static const std::vector<std::string> kinds{
      "for_statement",       "while_statement",  "identifier",    "string",
      "return_statement",    "]",                ")",             "if_statement",
      "comparison_operator", "boolean_operator", "for_in_clause", "if_clause",
      "lambda",              "list_comprehension"};
  return kinds;
}

std::vector<CausalSample> causal_samples(const CorpusReport& corpus, const std::string& treatment,
                                         const CategoryMapping& mapping) {
  const auto category = parse_category(treatment);
  std::vector<CausalSample> out;
  out.reserve(corpus.snippet_analyses.size());
  for (const auto& a : corpus.snippet_analyses) {
    CausalSample s;
    s.snippet_id = a.snippet_id;
    s.outcome = a.cross_entropy;
    s.confounders = {static_cast<double>(a.metrics.cyclomatic_complexity),
                     static_cast<double>(a.metrics.ast_levels),
                     static_cast<double>(a.metrics.node_count),
                     static_cast<double>(a.metrics.sequence_size)};
    if (treatment == kBaselineTreatment) {
      s.treatment = a.mean_probability;
    } else if (category && *category != Category::Unmapped) {
      std::vector<double> values;
      for (const auto& [kind, v] : a.kind_scores) {
        if (mapping.lookup(kind) == *category) values.push_back(v);
      }
      s.treatment = aggregate(corpus.aggregator, values);
    } else if (const auto it = a.kind_scores.find(treatment); it != a.kind_scores.end()) {
      s.treatment = it->second;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<CausalEstimate> causal_report(const CorpusReport& corpus,
                                          const std::vector<std::string>& treatments,
                                          const CategoryMapping& mapping, const CausalConfig& cfg) {
  if (corpus.mapping_digest != mapping.digest()) {
    throw Error(ErrorCode::ConfigMismatch, "corpus report was built with a different category mapping");
  }
  std::vector<std::string> names = treatments;
  names.emplace_back(kBaselineTreatment);

  const AteOptions opts{cfg.standardize_confounders, true};
  std::vector<CausalEstimate> rows;
  for (const auto& name : names) {
    CausalEstimate e;
    e.model_id = corpus.model_id;
    e.treatment_name = name;
    if (name == kBaselineTreatment) {
      e.category = "Baseline";
      e.subcategory = "intrinsic";
    } else if (const auto cat = parse_category(name); cat && *cat != Category::Unmapped) {
      e.category = name;
    } else {
      e.category = std::string(to_string(mapping.lookup(name)));
      e.subcategory = name;
    }

    const auto samples = causal_samples(corpus, name, mapping);
    std::vector<double> t;
    std::vector<double> y;
    for (const auto& s : samples) {
      if (s.treatment) {
        t.push_back(*s.treatment);
        y.push_back(s.outcome);
      }
    }
    e.n = t.size();
    if (e.n == 0) {
      e.error = "treatment absent from every snippet";
      rows.push_back(std::move(e));
      continue;
    }
    try {
      e.rho = pearson(t, y);
    } catch (const Error& err) {
      e.error = err.what();
    }
    try {
      const auto ate = ate_linear(samples, opts);
      e.ate = ate.ate;
      e.ate_stderr = ate.stderr_;
      const auto placebo = placebo_refute(samples, derive_seed(cfg.seed, name), cfg.permutations, opts);
      e.placebo_ate = placebo.placebo_ate;
      e.placebo_pass = placebo.placebo_pass;
    } catch (const Error& err) {
      if (!e.error.empty()) e.error += "; ";
      e.error += err.what();
    }
    rows.push_back(std::move(e));
  }
  return rows;
}

}  // namespace syntaxlens
