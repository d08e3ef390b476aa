#pragma once

// Closed-form tail bounds built on the loose Chernoff form. Burst-free.
namespace lbr::closed {

// log of e^{-q/3}/(1-e^{-(a-1)/(3m)}), plus the second term when 1 < alpha < 2.
double log_input_queue(double m, double alpha, double q);

// log of the six-case middle-stage bound, valid for 1 < beta <= 2. For
// alpha < 2 every input factor is the two-term one.
double log_middle_queue(double n, double m, double alpha, double beta, double q);

}  // namespace lbr::closed
