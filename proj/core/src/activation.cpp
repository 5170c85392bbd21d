#include "gnk/activation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "gnk/errors.hpp"

namespace gnk {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRhoTol = 1e-9;
constexpr double kPsdTol = 1e-8;

double relu_value(double sii, double sjj, double sij) {
  if (sii <= 0.0 || sjj <= 0.0) return 0.0;
  const double s = std::sqrt(sii * sjj);
  const double rho = std::clamp(sij / s, -1.0, 1.0);
  return s * (std::sqrt(1.0 - rho * rho) + (kPi - std::acos(rho)) * rho) / (2.0 * kPi);
}

double relu_deriv(double sii, double sjj, double sij) {
  if (sii <= 0.0 || sjj <= 0.0) return 0.0;
  const double rho = std::clamp(sij / std::sqrt(sii * sjj), -1.0, 1.0);
  return (kPi - std::acos(rho)) / (2.0 * kPi);
}

}  // namespace

double Activation::operator()(double x) const {
  switch (kind) {
    case ActKind::relu: return x > 0.0 ? x : 0.0;
    case ActKind::leaky_relu: return x > 0.0 ? x : alpha * x;
    case ActKind::erf: return std::erf(x);
    case ActKind::identity: return x;
    case ActKind::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case ActKind::exp: return std::exp(x);
  }
  return 0.0;
}

double Activation::derivative(double x) const {
  switch (kind) {
    case ActKind::relu: return x > 0.0 ? 1.0 : 0.0;
    case ActKind::leaky_relu: return x > 0.0 ? 1.0 : alpha;
    case ActKind::erf: return 2.0 / std::sqrt(kPi) * std::exp(-x * x);
    case ActKind::identity: return 1.0;
    case ActKind::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case ActKind::exp: return std::exp(x);
  }
  return 0.0;
}

std::string Activation::name() const {
  switch (kind) {
    case ActKind::relu: return "relu";
    case ActKind::leaky_relu: {
      std::string a = std::to_string(alpha);
      a.erase(a.find_last_not_of('0') + 1);
      if (!a.empty() && a.back() == '.') a.pop_back();
      return "leaky_relu:" + a;
    }
    case ActKind::erf: return "erf";
    case ActKind::identity: return "identity";
    case ActKind::sigmoid: return "sigmoid";
    case ActKind::exp: return "exp";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu();
  if (s == "erf") return Activation::erf();
  if (s == "identity" || s == "id" || s == "linear") return Activation::identity();
  if (s == "sigmoid") return Activation::sigmoid();
  if (s == "exp") return Activation::exp();
  if (s.rfind("leaky_relu", 0) == 0 || s.rfind("leaky", 0) == 0) {
    double a = 0.2;
    auto p = s.find(':');
    if (p != std::string::npos) {
      try {
        a = std::stod(s.substr(p + 1));
      } catch (const std::exception&) {
        throw ValidationError("bad leaky_relu slope in '" + s + "'");
      }
    }
    if (!(a > 0.0 && a < 1.0)) throw ValidationError("leaky_relu slope must lie in (0,1)");
    return Activation::leaky(a);
  }
  throw ValidationError("unknown activation '" + s + "'");
}

void check_pair(double sii, double sjj, double sij) {
  const double scale = std::max({1.0, std::abs(sii), std::abs(sjj)});
  if (sii < -kPsdTol * scale || sjj < -kPsdTol * scale)
    throw NumericalError("negative variance in dual activation input");
  const double bound = std::sqrt(std::max(sii, 0.0) * std::max(sjj, 0.0));
  if (std::abs(sij) > (1.0 + kRhoTol) * bound + 1e-12 * scale)
    throw NumericalError("correlation outside [-1,1] in dual activation input");
}

double dual_pair(const Activation& act, double sii, double sjj, double sij) {
  sii = std::max(sii, 0.0);
  sjj = std::max(sjj, 0.0);
  switch (act.kind) {
    case ActKind::relu: return relu_value(sii, sjj, sij);
    case ActKind::leaky_relu: {
      // s(x) = a x + (1-a) relu(x); E[x relu(y)] = E[xy]/2 by the sign symmetry of N(0, S).
      const double a = act.alpha;
      return a * sij + (1.0 - a) * (1.0 - a) * relu_value(sii, sjj, sij);
    }
    case ActKind::erf: {
      const double den = std::sqrt((1.0 + 2.0 * sii) * (1.0 + 2.0 * sjj));
      return 2.0 / kPi * std::asin(std::clamp(2.0 * sij / den, -1.0, 1.0));
    }
    case ActKind::identity: return sij;
    default: break;
  }
  throw ValidationError("no closed-form dual for activation " + act.name());
}

double dual_pair_derivative(const Activation& act, double sii, double sjj, double sij) {
  sii = std::max(sii, 0.0);
  sjj = std::max(sjj, 0.0);
  switch (act.kind) {
    case ActKind::relu: return relu_deriv(sii, sjj, sij);
    case ActKind::leaky_relu: {
      const double a = act.alpha;
      const double pi = sii > 0.0 ? 0.5 : 0.0;
      const double pj = sjj > 0.0 ? 0.5 : 0.0;
      return a * a + a * (1.0 - a) * (pi + pj) + (1.0 - a) * (1.0 - a) * relu_deriv(sii, sjj, sij);
    }
    case ActKind::erf: {
      const double det = (1.0 + 2.0 * sii) * (1.0 + 2.0 * sjj) - 4.0 * sij * sij;
      return 4.0 / kPi / std::sqrt(std::max(det, 1e-300));
    }
    case ActKind::identity: return 1.0;
    default: break;
  }
  throw ValidationError("no closed-form dual for activation " + act.name());
}

namespace {

void check_matrix(const Mat& S) {
  if (S.rows() != S.cols()) throw ValidationError("dual activation input must be square");
  if (!S.allFinite()) throw NumericalError("non-finite dual activation input");
  if (S.rows() <= 64 && S.rows() > 0) {
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    Mat Sym = 0.5 * (S + S.transpose());
    if (min_eigenvalue(Sym) < -kPsdTol * scale)
      throw NumericalError("dual activation input is not PSD");
  }
}

template <class F>
Mat pairwise(const Mat& S, F f) {
  const Eigen::Index n = S.rows();
  Mat out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double sij = 0.5 * (S(i, j) + S(j, i));
      check_pair(S(i, i), S(j, j), sij);
      const double v = f(S(i, i), S(j, j), sij);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

}  // namespace

Mat dual_activation(const Activation& act, const Mat& Sigma) {
  if (!act.has_closed_form())
    throw ValidationError("no closed-form dual for activation " + act.name());
  check_matrix(Sigma);
  if (act.kind == ActKind::identity) {
    Mat out = Sigma;
    symmetrize(out);
    return out;
  }
  return pairwise(Sigma, [&](double a, double b, double c) { return dual_pair(act, a, b, c); });
}

Mat dual_activation_derivative(const Activation& act, const Mat& Sigma) {
  if (!act.has_closed_form())
    throw ValidationError("no closed-form dual for activation " + act.name());
  check_matrix(Sigma);
  return pairwise(Sigma,
                  [&](double a, double b, double c) { return dual_pair_derivative(act, a, b, c); });
}

Mat mc_dual_oracle(const Activation& act, const Mat& Sigma, std::int64_t samples,
                   std::uint64_t seed, bool derivative) {
  if (samples < 1) throw ValidationError("mc_dual_oracle needs samples >= 1");
  if (Sigma.rows() != Sigma.cols()) throw ValidationError("Sigma must be square");
  const Eigen::Index n = Sigma.rows();
  Mat S = 0.5 * (Sigma + Sigma.transpose());
  const Mat L = cholesky_with_jitter(S, 1e-10, 1e-6).llt.matrixL();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  constexpr std::int64_t kBlock = 4096;
  Mat acc = Mat::Zero(n, n);
  Mat Z(n, kBlock);
  for (std::int64_t done = 0; done < samples; done += kBlock) {
    const Eigen::Index b = static_cast<Eigen::Index>(std::min(kBlock, samples - done));
    for (Eigen::Index c = 0; c < b; ++c)
      for (Eigen::Index r = 0; r < n; ++r) Z(r, c) = N01(rng);
    Mat U = L * Z.leftCols(b);
    if (derivative)
      U = U.unaryExpr([&](double x) { return act.derivative(x); });
    else
      U = U.unaryExpr([&](double x) { return act(x); });
    acc.noalias() += U * U.transpose();
  }
  acc /= static_cast<double>(samples);
  symmetrize(acc);
  return acc;
}

}  // namespace gnk
