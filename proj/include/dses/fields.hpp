#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dses/types.hpp"

namespace dses {

inline constexpr double kPsdTolerance = 1e-9;
inline constexpr double kPdTolerance = 1e-9;

/// f(z) = -1/2 z'Hz + b'z + c with H symmetric positive semi-definite.
class QuadraticField {
 public:
  /// Throws InvalidInput on shape mismatch, asymmetric H, or an eigenvalue
  /// below -kPsdTolerance.
  QuadraticField(Matrix H, Vector b, double c);

  int dimension() const noexcept { return static_cast<int>(b_.size()); }
  const Matrix& H() const noexcept { return H_; }
  const Vector& b() const noexcept { return b_; }
  double c() const noexcept { return c_; }

  double operator()(PointRef z) const;
  Vector gradient(PointRef z) const;

 private:
  Matrix H_;
  Vector b_;
  double c_;
};

using AnalyticFn = std::function<double(PointRef z, std::span<const double> params)>;

/// A closed-form formula in the analytic-field registry. Parameters are named
/// and ordered; `defaults` also fixes that order.
struct AnalyticFormula {
  std::string id;
  int dimension = 0;  // 0: any dimension
  std::vector<std::pair<std::string, double>> defaults;
  AnalyticFn fn;
};

/// Adds or replaces a formula. Built-ins: "cubic_ridge", "quartic_bump".
void register_formula(AnalyticFormula formula);
const AnalyticFormula& find_formula(const std::string& id);
std::vector<std::string> registered_formulas();

class AnalyticField {
 public:
  /// Unspecified parameters take the formula defaults; unknown names throw.
  AnalyticField(std::string formula_id, int dimension,
                const std::map<std::string, double>& params = {});

  int dimension() const noexcept { return dimension_; }
  const std::string& formula_id() const noexcept { return id_; }
  std::map<std::string, double> params() const;

  double operator()(PointRef z) const;

 private:
  std::string id_;
  int dimension_;
  std::vector<std::string> names_;
  std::vector<double> values_;
  AnalyticFn fn_;
};

using Field = std::variant<QuadraticField, AnalyticField>;

int field_dimension(const Field& field);
bool is_quadratic(const Field& field);

/// Value of one field at z. Throws InvalidInput if dim(z) != m.
double eval_field(const Field& field, PointRef z);

/// Central-difference gradient with step h (exact for quadratics).
Vector field_gradient(const Field& field, PointRef z, double h = 1e-5);

/// Ordered collection of the n vehicle fields sharing one dimension.
class FieldSet {
 public:
  /// If every member is quadratic, the curvature sum must be positive
  /// definite (AssumptionViolation otherwise).
  explicit FieldSet(std::vector<Field> fields);

  std::size_t size() const noexcept { return fields_.size(); }
  int dimension() const noexcept { return dimension_; }
  const Field& operator[](std::size_t i) const { return fields_[i]; }
  const std::vector<Field>& fields() const noexcept { return fields_; }
  bool all_quadratic() const noexcept { return all_quadratic_; }

  /// F(z) = sum_i f_i(z).
  double aggregate(PointRef z) const;

  /// Curvature sum and linear-term sum (quadratic sets only).
  Matrix curvature_sum() const;
  Vector linear_sum() const;

 private:
  std::vector<Field> fields_;
  int dimension_ = 0;
  bool all_quadratic_ = true;
};

/// z* = (sum H_i)^{-1} sum b_i. Requires an all-quadratic set.
Vector aggregate_optimum(const FieldSet& fields);

/// Damped Newton ascent on F from `start` with finite-difference derivatives.
/// Used to locate the local maximizer of non-quadratic field sets.
Vector refine_local_maximum(const FieldSet& fields, PointRef start, int max_iter = 200,
                            double tol = 1e-10);

/// Field built from linear-system measurements m_i(k) = C_i A^k z0, k < m:
/// f(z) = -sum_k ||m_i(k) - C_i A^k z||^2.
QuadraticField gramian_field(const Matrix& A, const Matrix& C,
                             const std::vector<Vector>& measurements);

/// Euclidean distance from z to the affine max set {z : H z = b}.
/// Throws EmptyArgmax when b is not in the range of H.
double argmax_set_distance(const QuadraticField& field, PointRef z);

}  // namespace dses
