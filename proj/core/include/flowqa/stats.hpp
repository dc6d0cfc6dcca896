#pragma once

#include <span>
#include <vector>

namespace flowqa {

// Y(x) = b2 + (b1 - b2) / (1 + exp(-(x - b3) / |b4|))
struct LogisticParams {
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 0.0;
  double b4 = 1.0;

  double operator()(double x) const;
};

struct LogisticFit {
  LogisticParams params;
  double sse = 0.0;
  bool converged = false;
  int iterations = 0;  // simplex iterations over all restarts
  int restarts = 0;
};

struct LogisticFitOptions {
  int max_iterations = 500;          // per simplex run
  double relative_tolerance = 1e-10; // spread of SSE across the simplex, relative to the best
  int max_restarts = 20;
  unsigned seed = 0x5eed;            // jitter of b3/b4 on restarts
};

// Least-squares fit of the 4-parameter logistic by Nelder-Mead, initialised at
// (max dmos, min dmos, mean score, max(std score, 1e-6)). Needs >= 5 samples and non-constant scores.
LogisticFit FitLogistic(std::span<const double> scores, std::span<const double> dmos,
                        const LogisticFitOptions& options = {});

double SumSquaredError(const LogisticParams& params, std::span<const double> scores, std::span<const double> dmos);

// Pearson correlation. Throws kDegenerate when either input is constant.
double Plcc(std::span<const double> a, std::span<const double> b);
// Pearson correlation of average ranks (ties share the mean rank).
double Srocc(std::span<const double> a, std::span<const double> b);
double Rmse(std::span<const double> fitted, std::span<const double> dmos);

// 1-based ranks; tied values receive the mean of the ranks they span.
std::vector<double> AverageRanks(std::span<const double> values);

double SampleVariance(std::span<const double> values);

// I_x(a, b) by continued fraction.
double RegularizedIncompleteBeta(double a, double b, double x);
// CDF and quantile of the F(d1, d2) distribution.
double FisherCdf(double x, double d1, double d2);
double FisherQuantile(double p, double d1, double d2);

// Two-tailed variance-ratio test of prediction residuals: +1 when `a` has significantly smaller
// variance than `b`, -1 when significantly larger, 0 otherwise.
int FTest(std::span<const double> residuals_a, std::span<const double> residuals_b, double alpha = 0.05);

}  // namespace flowqa
