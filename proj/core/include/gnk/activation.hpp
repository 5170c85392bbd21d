#pragma once

#include <cstdint>
#include <string>

#include "gnk/linalg.hpp"

namespace gnk {

enum class ActKind { relu, leaky_relu, erf, identity, sigmoid, exp };

struct Activation {
  ActKind kind = ActKind::relu;
  double alpha = 0.2;  // leaky_relu slope

  static Activation relu() { return {ActKind::relu, 0.0}; }
  static Activation leaky(double a) { return {ActKind::leaky_relu, a}; }
  static Activation erf() { return {ActKind::erf, 0.0}; }
  static Activation identity() { return {ActKind::identity, 0.0}; }
  static Activation sigmoid() { return {ActKind::sigmoid, 0.0}; }
  static Activation exp() { return {ActKind::exp, 0.0}; }

  bool has_closed_form() const { return kind != ActKind::sigmoid && kind != ActKind::exp; }
  double operator()(double x) const;
  double derivative(double x) const;
  std::string name() const;
};

// "relu", "identity", "erf", "sigmoid", "exp", "leaky_relu" or "leaky_relu:0.1".
Activation parse_activation(const std::string& s);

// E[s(u_i) s(u_j)] for u ~ N(0, [[sii, sij], [sij, sjj]]).
double dual_pair(const Activation& act, double sii, double sjj, double sij);
// E[s'(u_i) s'(u_j)], same Gaussian.
double dual_pair_derivative(const Activation& act, double sii, double sjj, double sij);

// Elementwise over all pairs of Sigma. Throws NumericalError for inputs that are
// not PSD within tolerance; ValidationError for activations without a closed form.
Mat dual_activation(const Activation& act, const Mat& Sigma);
Mat dual_activation_derivative(const Activation& act, const Mat& Sigma);

// Pairwise validity check shared by the dense and lifted paths.
void check_pair(double sii, double sjj, double sij);

// Brute-force estimate of the same expectations from i.i.d. draws of N(0, Sigma).
Mat mc_dual_oracle(const Activation& act, const Mat& Sigma, std::int64_t samples,
                   std::uint64_t seed, bool derivative);

}  // namespace gnk
