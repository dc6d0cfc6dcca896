#include "flowqa/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "flowqa/error.hpp"

namespace flowqa {

double LogisticParams::operator()(double x) const {
  const double scale = std::max(std::abs(b4), std::numeric_limits<double>::min());
  const double z = std::clamp(-(x - b3) / scale, -700.0, 700.0);
  return b2 + (b1 - b2) / (1.0 + std::exp(z));
}

double SumSquaredError(const LogisticParams& params, std::span<const double> scores, std::span<const double> dmos) {
  double sse = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const double r = dmos[i] - params(scores[i]);
    sse += r * r;
  }
  return sse;
}

namespace {

using Vec4 = std::array<double, 4>;

LogisticParams ToParams(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

struct SimplexResult {
  Vec4 best;
  double sse;
  int iterations;
  bool converged;
};

// Nelder-Mead with standard coefficients (reflect 1, expand 2, contract 0.5, shrink 0.5).
template <typename Objective>
SimplexResult NelderMead(Objective&& f, const Vec4& start, const Vec4& step, int max_iterations, double rel_tol) {
  constexpr int n = 4;
  std::array<Vec4, n + 1> pts;
  std::array<double, n + 1> val;
  pts[0] = start;
  for (int i = 0; i < n; ++i) {
    pts[i + 1] = start;
    pts[i + 1][i] += step[i];
  }
  for (int i = 0; i <= n; ++i) val[i] = f(pts[i]);

  std::array<int, n + 1> order;
  int it = 0;
  bool converged = false;
  for (; it < max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return val[a] < val[b]; });
    const int best = order[0], worst = order[n], second = order[n - 1];
    if (val[worst] - val[best] <= rel_tol * std::abs(val[best]) + std::numeric_limits<double>::min()) {
      converged = true;
      break;
    }
    Vec4 centroid{};
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < n; ++d) centroid[d] += pts[order[i]][d] / n;
    auto along = [&](double t) {
      Vec4 p;
      for (int d = 0; d < n; ++d) p[d] = centroid[d] + t * (pts[worst][d] - centroid[d]);
      return p;
    };
    const Vec4 reflected = along(-1.0);
    const double fr = f(reflected);
    if (fr < val[best]) {
      const Vec4 expanded = along(-2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        val[worst] = fe;
      } else {
        pts[worst] = reflected;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      pts[worst] = reflected;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const Vec4 contracted = along(outside ? -0.5 : 0.5);
    const double fc = f(contracted);
    if (fc < (outside ? fr : val[worst])) {
      pts[worst] = contracted;
      val[worst] = fc;
      continue;
    }
    for (int i = 1; i <= n; ++i) {
      const int k = order[i];
      for (int d = 0; d < n; ++d) pts[k][d] = pts[best][d] + 0.5 * (pts[k][d] - pts[best][d]);
      val[k] = f(pts[k]);
    }
  }
  const int best = static_cast<int>(std::min_element(val.begin(), val.end()) - val.begin());
  return {pts[best], val[best], it, converged};
}

double Mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

void CheckPaired(std::span<const double> a, std::span<const double> b, size_t min_size, const char* what) {
  if (a.size() != b.size()) Fail(ErrorKind::kShape, std::string(what) + ": inputs differ in length");
  if (a.size() < min_size) {
    Fail(ErrorKind::kDegenerate, std::string(what) + ": needs at least " + std::to_string(min_size) + " samples");
  }
  for (size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) Fail(ErrorKind::kArgument, std::string(what) + ": non-finite input");
}

}  // namespace

LogisticFit FitLogistic(std::span<const double> scores, std::span<const double> dmos, const LogisticFitOptions& options) {
  CheckPaired(scores, dmos, 5, "fit_logistic");
  const auto [smin, smax] = std::minmax_element(scores.begin(), scores.end());
  if (*smin == *smax) Fail(ErrorKind::kDegenerate, "fit_logistic: all scores are identical");

  const double mean = Mean(scores);
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double stddev = std::max(std::sqrt(var / static_cast<double>(scores.size())), 1e-6);
  const auto [dmin, dmax] = std::minmax_element(dmos.begin(), dmos.end());
  const double drange = *dmax - *dmin;

  auto objective = [&](const Vec4& v) { return SumSquaredError(ToParams(v), scores, dmos); };
  auto steps_for = [&](const Vec4& at) -> Vec4 {
    const double dstep = drange > 0 ? 0.1 * drange : 0.1 * std::max(1.0, std::abs(at[0]));
    return {dstep, dstep, 0.1 * stddev, 0.1 * std::max(std::abs(at[3]), 1e-6)};
  };

  Vec4 start = {*dmax, *dmin, mean, stddev};
  SimplexResult run = NelderMead(objective, start, steps_for(start), options.max_iterations, options.relative_tolerance);
  LogisticFit fit{ToParams(run.best), run.sse, run.converged, run.iterations, 0};
  Vec4 best = run.best;

  std::mt19937 rng(options.seed);
  // uniform in [-0.5, 0.5), independent of the standard library's distribution implementations
  auto jitter = [&]() { return static_cast<double>(rng()) / 4294967296.0 - 0.5; };
  for (int r = 0; r < options.max_restarts; ++r) {
    if (fit.sse == 0.0) break;
    Vec4 from = best;
    from[2] += 0.1 * stddev * jitter();
    from[3] *= 1.0 + 0.1 * jitter();
    run = NelderMead(objective, from, steps_for(from), options.max_iterations, options.relative_tolerance);
    fit.iterations += run.iterations;
    fit.restarts = r + 1;
    const double previous = fit.sse;
    if (run.sse < fit.sse) {
      best = run.best;
      fit.params = ToParams(best);
      fit.sse = run.sse;
      fit.converged = run.converged;
    }
    const double gain = previous - fit.sse;
    if (run.converged && gain <= options.relative_tolerance * previous) {
      fit.converged = true;
      break;
    }
  }
  if (fit.params.b4 == 0.0) Fail(ErrorKind::kComputation, "fit_logistic: slope parameter collapsed to zero");
  return fit;
}

double Plcc(std::span<const double> a, std::span<const double> b) {
  CheckPaired(a, b, 2, "plcc");
  const double ma = Mean(a), mb = Mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) Fail(ErrorKind::kDegenerate, "correlation undefined for a constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double Srocc(std::span<const double> a, std::span<const double> b) {
  CheckPaired(a, b, 2, "srocc");
  const auto ra = AverageRanks(a);
  const auto rb = AverageRanks(b);
  return Plcc(ra, rb);
}

double Rmse(std::span<const double> fitted, std::span<const double> dmos) {
  CheckPaired(fitted, dmos, 1, "rmse");
  double se = 0.0;
  for (size_t i = 0; i < fitted.size(); ++i) se += (dmos[i] - fitted[i]) * (dmos[i] - fitted[i]);
  return std::sqrt(se / static_cast<double>(fitted.size()));
}

double SampleVariance(std::span<const double> values) {
  if (values.size() < 2) Fail(ErrorKind::kDegenerate, "variance needs at least 2 samples");
  const double m = Mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return s / static_cast<double>(values.size() - 1);
}

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double BetaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxTerms = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
    const double m2 = 2.0 * m;
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
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) return h;
  }
  Fail(ErrorKind::kComputation, "incomplete beta: continued fraction did not converge");
}

}  // namespace

double RegularizedIncompleteBeta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) Fail(ErrorKind::kArgument, "incomplete beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) Fail(ErrorKind::kArgument, "incomplete beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * BetaContinuedFraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * BetaContinuedFraction(b, a, 1.0 - x) / b;
}

double FisherCdf(double x, double d1, double d2) {
  if (x <= 0.0) return 0.0;
  return RegularizedIncompleteBeta(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2));
}

double FisherQuantile(double p, double d1, double d2) {
  if (!(p > 0.0 && p < 1.0)) Fail(ErrorKind::kArgument, "F quantile: p must lie in (0, 1)");
  double lo = 0.0, hi = 1.0;
  while (FisherCdf(hi, d1, d2) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) Fail(ErrorKind::kComputation, "F quantile: bracket overflow");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (FisherCdf(mid, d1, d2) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

int FTest(std::span<const double> residuals_a, std::span<const double> residuals_b, double alpha) {
  if (residuals_a.size() != residuals_b.size()) Fail(ErrorKind::kShape, "f_test: residual sets differ in length");
  if (residuals_a.size() < 3) Fail(ErrorKind::kDegenerate, "f_test: needs at least 3 residuals");
  if (!(alpha > 0.0 && alpha < 1.0)) Fail(ErrorKind::kArgument, "f_test: alpha must lie in (0, 1)");
  const double va = SampleVariance(residuals_a);
  const double vb = SampleVariance(residuals_b);
  if (va == 0.0 && vb == 0.0) return 0;
  if (va == 0.0) return 1;
  if (vb == 0.0) return -1;
  const double df = static_cast<double>(residuals_a.size() - 1);
  // Equal degrees of freedom: the lower critical value is the reciprocal of the upper one.
  const double upper = FisherQuantile(1.0 - alpha / 2.0, df, df);
  if (va > upper * vb) return -1;
  if (vb > upper * va) return 1;
  return 0;
}

}  // namespace flowqa
