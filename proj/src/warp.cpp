#include "gtube/error.hpp"
#include "gtube/manifolds.hpp"

#include <fmt/format.h>

#include <cmath>
#include <sstream>
#include <string>

namespace gtube {

WarpFunction::WarpFunction(Family family, std::vector<double> params, Interval domain)
    : family_(family), params_(std::move(params)), domain_(domain) {
  if (!(domain_.lo < domain_.hi)) throw InputError("warp: empty domain");
  for (double p : params_) {
    if (!std::isfinite(p)) throw InputError("warp: non-finite parameter");
  }
  // Strict positivity on a sampled grid of the (capped) domain.
  const double lo = std::isfinite(domain_.lo) ? domain_.lo : -50.0;
  const double hi = std::isfinite(domain_.hi) ? domain_.hi : 50.0;
  if (lo >= hi) throw InputError("warp: domain does not intersect the sampling window [-50, 50]");
  constexpr int kSamples = 2000;
  for (int i = 1; i < kSamples; ++i) {
    const double r = lo + (hi - lo) * i / kSamples;
    if (!domain_.contains(r)) continue;
    if (!((*this)(r).f > 0)) {
      throw InputError(fmt::format("warp {}: not strictly positive at r={}", id(), r));
    }
  }
}

WarpFunction WarpFunction::polynomial(std::vector<double> coeffs, Interval domain) {
  if (coeffs.empty()) throw InputError("warp poly: no coefficients");
  return WarpFunction(Family::polynomial, std::move(coeffs), domain);
}

WarpFunction WarpFunction::sine(double amplitude, double frequency, double phase, double offset,
                                Interval domain) {
  return WarpFunction(Family::sine, {amplitude, frequency, phase, offset}, domain);
}

WarpFunction WarpFunction::hyperbolic_sine(double amplitude, double frequency, double phase,
                                           double offset, Interval domain) {
  return WarpFunction(Family::hyperbolic_sine, {amplitude, frequency, phase, offset}, domain);
}

WarpFunction WarpFunction::hyperbolic_cosine(double amplitude, double frequency, double phase,
                                             double offset, Interval domain) {
  return WarpFunction(Family::hyperbolic_cosine, {amplitude, frequency, phase, offset}, domain);
}

WarpFunction WarpFunction::parse(std::string_view id, Interval domain) {
  const auto colon = id.find(':');
  if (colon == std::string_view::npos) {
    throw InputError(fmt::format("warp id '{}': expected <family>:<params>", id));
  }
  const std::string family(id.substr(0, colon));
  std::vector<double> params;
  std::stringstream ss{std::string(id.substr(colon + 1))};
  std::string token;
  while (std::getline(ss, token, ',')) {
    try {
      std::size_t used = 0;
      params.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw InputError(fmt::format("warp id '{}': bad number '{}'", id, token));
    }
  }
  if (family == "poly") return polynomial(std::move(params), domain);
  if (params.size() != 4) {
    throw InputError(fmt::format("warp id '{}': {} expects 4 parameters A,w,phi,B", id, family));
  }
  if (family == "sin") return sine(params[0], params[1], params[2], params[3], domain);
  if (family == "sinh") return hyperbolic_sine(params[0], params[1], params[2], params[3], domain);
  if (family == "cosh") {
    return hyperbolic_cosine(params[0], params[1], params[2], params[3], domain);
  }
  throw OutOfCatalogError(fmt::format("warp family '{}' is not in the catalog", family));
}

WarpFunction::Jet WarpFunction::operator()(Real r) const {
  if (!(r > domain_.lo && r < domain_.hi)) {
    throw DomainError(fmt::format("warp {} evaluated at r={} outside ({}, {})", id(),
                                  static_cast<double>(r), domain_.lo, domain_.hi));
  }
  switch (family_) {
    case Family::polynomial: {
      // Horner for f, f', f''.
      Real f = 0, df = 0, ddf = 0;
      for (auto it = params_.rbegin(); it != params_.rend(); ++it) {
        ddf = ddf * r + 2 * df;
        df = df * r + f;
        f = f * r + Real(*it);
      }
      return {f, df, ddf};
    }
    case Family::sine: {
      const Real a = params_[0], w = params_[1], phi = params_[2], b = params_[3];
      const Real s = std::sin(w * r + phi), c = std::cos(w * r + phi);
      return {a * s + b, a * w * c, -a * w * w * s};
    }
    case Family::hyperbolic_sine: {
      const Real a = params_[0], w = params_[1], phi = params_[2], b = params_[3];
      const Real s = std::sinh(w * r + phi), c = std::cosh(w * r + phi);
      return {a * s + b, a * w * c, a * w * w * s};
    }
    case Family::hyperbolic_cosine: {
      const Real a = params_[0], w = params_[1], phi = params_[2], b = params_[3];
      const Real s = std::sinh(w * r + phi), c = std::cosh(w * r + phi);
      return {a * c + b, a * w * s, a * w * w * c};
    }
  }
  throw OutOfCatalogError("warp: unknown family");
}

std::string WarpFunction::id() const {
  std::string name;
  switch (family_) {
    case Family::polynomial: name = "poly"; break;
    case Family::sine: name = "sin"; break;
    case Family::hyperbolic_sine: name = "sinh"; break;
    case Family::hyperbolic_cosine: name = "cosh"; break;
  }
  name += ':';
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (i) name += ',';
    name += fmt::format("{}", params_[i]);
  }
  return name;
}

}  // namespace gtube
