#pragma once

namespace ssvb {

// Log-gamma, digamma and trigamma for x > 0, implemented in-module so that
// results are bit-stable across platforms at a fixed seed. Throw
// std::domain_error for x <= 0 or non-finite x.
double ln_gamma(double x);
double digamma(double x);
double trigamma(double x);

// Numerically stable ln(1 + exp(x)).
double softplus(double x);

// Logistic sigmoid 1 / (1 + exp(-x)).
double sigmoid(double x);

// ln sigmoid(x) = -softplus(-x); finite for all finite x.
double log_sigmoid(double x);

}  // namespace ssvb
