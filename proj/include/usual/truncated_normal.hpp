#pragma once

#include "usual/rng.hpp"

namespace usual {

// Standard normal conditioned on z > c. Plain rejection when c <= 0;
// Robert's translated-exponential rejection sampler when c > 0.
double truncated_standard_normal_above(RngStream& rng, double c);

// Normal(mu, sigma^2) restricted to (0, inf).
double truncated_normal_positive(RngStream& rng, double mu, double sigma);

// Normal(mu, sigma^2) restricted to (-inf, 0).
double truncated_normal_negative(RngStream& rng, double mu, double sigma);

}  // namespace usual
