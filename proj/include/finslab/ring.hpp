#pragma once

// Scalar-ring-generic callables.  A metric, density or auxiliary field is
// written once as a generic lambda and stored for the three scalar rings the
// library evaluates in: plain doubles, jets and truncated series.

#include <functional>
#include <span>
#include <type_traits>
#include <utility>

#include "finslab/error.hpp"
#include "finslab/jets.hpp"
#include "finslab/series.hpp"

namespace finslab {

template <class R>
using StateSig = R(std::span<const R>, std::span<const R>);
template <class R>
using PointSig = R(std::span<const R>);

// f(x, y): metrics F and auxiliary fields such as the projective factor P.
class StateFunction {
 public:
  StateFunction() = default;

  template <class Fn, class = std::enable_if_t<!std::is_same_v<std::decay_t<Fn>, StateFunction>>>
  StateFunction(Fn f)  // NOLINT: generic lambdas convert implicitly
      : d_(f), j_(f), s_(std::move(f)) {}

  explicit operator bool() const noexcept { return static_cast<bool>(d_); }

  template <class R>
  R operator()(std::span<const R> x, std::span<const R> y) const {
    if (!d_) throw Error("call of an empty state function");
    if constexpr (std::is_same_v<R, double>)
      return d_(x, y);
    else if constexpr (std::is_same_v<R, Jet>)
      return j_(x, y);
    else
      return s_(x, y);
  }

 private:
  std::function<StateSig<double>> d_;
  std::function<StateSig<Jet>> j_;
  std::function<StateSig<Series>> s_;
};

// f(x): volume densities.
class PointFunction {
 public:
  PointFunction() = default;

  template <class Fn, class = std::enable_if_t<!std::is_same_v<std::decay_t<Fn>, PointFunction>>>
  PointFunction(Fn f)  // NOLINT
      : d_(f), j_(f), s_(std::move(f)) {}

  explicit operator bool() const noexcept { return static_cast<bool>(d_); }

  template <class R>
  R operator()(std::span<const R> x) const {
    if (!d_) throw Error("call of an empty point function");
    if constexpr (std::is_same_v<R, double>)
      return d_(x);
    else if constexpr (std::is_same_v<R, Jet>)
      return j_(x);
    else
      return s_(x);
  }

 private:
  std::function<PointSig<double>> d_;
  std::function<PointSig<Jet>> j_;
  std::function<PointSig<Series>> s_;
};

}  // namespace finslab
