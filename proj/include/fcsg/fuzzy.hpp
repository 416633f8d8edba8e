#pragma once

#include <array>

#include "fcsg/barycentric.hpp"
#include "fcsg/errors.hpp"
#include "fcsg/membership.hpp"

namespace fcsg {

struct TNormKind {
  enum class Family { Godel, Product, Lukasiewicz, Yager };
  Family family = Family::Product;
  double p = 1.0;  // Yager exponent, > 0

  static TNormKind godel() { return {Family::Godel}; }
  static TNormKind product() { return {Family::Product}; }
  static TNormKind lukasiewicz() { return {Family::Lukasiewicz}; }
  static TNormKind yager(double p);
};

struct TConormKind {
  enum class Family { Godel, ProbabilisticSum, BoundedSum, Yager };
  Family family = Family::ProbabilisticSum;
  double p = 1.0;

  static TConormKind godel() { return {Family::Godel}; }
  static TConormKind probabilistic_sum() { return {Family::ProbabilisticSum}; }
  static TConormKind bounded_sum() { return {Family::BoundedSum}; }
  static TConormKind yager(double p);
};

struct ComplementKind {
  enum class Family { Standard, Cosine, Sugeno, Yager };
  Family family = Family::Standard;
  double lambda = 1.0;  // Sugeno: > -1, Yager: > 0

  static ComplementKind standard() { return {Family::Standard}; }
  static ComplementKind cosine() { return {Family::Cosine}; }
  static ComplementKind sugeno(double lambda);
  static ComplementKind yager(double lambda);
};

// Scalar cores. Preconditions (inputs in [0,1]) are the caller's
// responsibility; the MembershipValue overloads below enforce them.
double tnorm(const TNormKind& kind, double x, double y);
double tconorm(const TConormKind& kind, double x, double y);
double complement(const ComplementKind& kind, double x);

/// Product-logic difference f_{X\Y} = x - xy.
double product_difference(double x, double y);

/// Barycentric blend of the four product-logic corner operators:
/// c0 -> xy, c1 -> x+y-xy, c2 -> x-xy, c3 -> y-xy.
double unified_boolean(const BarycentricWeights& c, double x, double y);

struct UnifiedGrad {
  double dx = 0.0;
  double dy = 0.0;
  std::array<double, 4> dc{};
};
UnifiedGrad unified_boolean_grad(const BarycentricWeights& c, double x, double y);

/// Bilinear blend over the unit square, kept as the ablation baseline.
/// Corner assignment: (0,0) union, (1,0) intersection, (0,1) Y\X, (1,1) X\Y.
double bilinear_boolean(double u, double v, double x, double y);

struct BilinearGrad {
  double dx = 0.0;
  double dy = 0.0;
  double du = 0.0;
  double dv = 0.0;
};
BilinearGrad bilinear_boolean_grad(double u, double v, double x, double y);

MembershipValue tnorm(const TNormKind& kind, MembershipValue x, MembershipValue y);
MembershipValue tconorm(const TConormKind& kind, MembershipValue x, MembershipValue y);
MembershipValue complement(const ComplementKind& kind, MembershipValue x);
MembershipValue product_difference(MembershipValue x, MembershipValue y);
MembershipValue unified_boolean(const BarycentricWeights& c, MembershipValue x,
                                MembershipValue y);
MembershipValue bilinear_boolean(double u, double v, MembershipValue x, MembershipValue y);

}  // namespace fcsg
