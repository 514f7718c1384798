#pragma once

namespace mner::normal {

double pdf(double z);
double cdf(double z);
/// Inverse of cdf on (0, 1): Acklam's rational approximation followed by one
/// Newton step against cdf.
double quantile(double p);
/// Upper alpha/2 point z_{alpha/2}, i.e. quantile(1 - alpha/2).
double upper_half_alpha(double alpha);

}  // namespace mner::normal
