#pragma once

namespace lbr {

enum class ChernoffForm { tight, loose };

// Bound on Pr[X >= (1+delta) mu] for X a sum of independent indicators with mean mu.
struct ChernoffParams {
  double mu = 0.0;
  double delta = 0.0;
};

/// (e^d / (1+d)^(1+d))^mu. delta == 0 gives 1; delta < 0 or mu < 0 throws DomainError.
double chernoff_tight(const ChernoffParams& p);

/// exp(-min(d^2, d) mu / 3). Same domain as chernoff_tight.
double chernoff_loose(const ChernoffParams& p);

/// Natural log of the bound for the event X >= threshold, E[X] = mean.
/// Any threshold <= mean gives 0 (bound 1). mean == 0 with a positive
/// threshold gives -inf for the tight form and -threshold/3 for the loose one,
/// which are the limits of the two expressions.
double log_chernoff(ChernoffForm form, double mean, double threshold);

/// sum_{i>=a} z^i = z^a / (1 - z). Real a is allowed.
double geom_sum(double z, double a);

/// sum_{i>=a} i z^i = z (a z^(a-1) - (a-1) z^a) / (1 - z)^2.
double geom_weighted_sum(double z, double a);

// Log-space versions taking log z < 0. Used by the closed-form bounds whose
// terms underflow long before the probability is uninteresting.
double log_geom_sum(double log_z, double a);
double log_geom_weighted_sum(double log_z, double a);

}  // namespace lbr
