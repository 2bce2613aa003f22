#include "dses/fields.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include <Eigen/Dense>

namespace dses {
namespace {

void check_dimension(int expected, Eigen::Index got, const char* what) {
  if (got != expected) {
    std::ostringstream os;
    os << what << ": expected dimension " << expected << ", got " << got;
    throw InvalidInput(os.str());
  }
}

// f3-style ridge along one axis: cubic*(s-center)^3 + linear*(s-center) + offset.
double cubic_ridge(PointRef z, std::span<const double> p) {
  const auto axis = static_cast<Eigen::Index>(p[4]);
  if (axis < 0 || axis >= z.size()) throw InvalidInput("cubic_ridge: axis out of range");
  const double s = z[axis] - p[1];
  return p[0] * s * s * s + p[2] * s + p[3];
}

// f4-style pair of Gaussian features in the plane: a dip and an x^4-weighted peak.
double quartic_bump(PointRef z, std::span<const double> p) {
  const double x = z[0];
  const double y = z[1];
  const double dip = std::exp(-(x - p[1]) * (x - p[1]) - (y - p[2]) * (y - p[2]));
  const double peak = std::exp(-(x - p[4]) * (x - p[4]) - (y - p[5]) * (y - p[5]));
  return -p[0] * dip + p[3] * x * x * x * x * peak + p[6];
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, AnalyticFormula> formulas;

  Registry() {
    formulas.emplace("cubic_ridge",
                     AnalyticFormula{"cubic_ridge",
                                     0,
                                     {{"cubic", 0.083},
                                      {"center", 2.44},
                                      {"linear", -0.25},
                                      {"offset", 0.83},
                                      {"axis", 0.0}},
                                     cubic_ridge});
    formulas.emplace("quartic_bump",
                     AnalyticFormula{"quartic_bump",
                                     2,
                                     {{"dip", 1.0},
                                      {"dip_x", 0.0},
                                      {"dip_y", 1.0},
                                      {"peak", 2.0},
                                      {"peak_x", 0.0},
                                      {"peak_y", 2.0},
                                      {"offset", -0.037}},
                                     quartic_bump});
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

QuadraticField::QuadraticField(Matrix H, Vector b, double c)
    : H_(std::move(H)), b_(std::move(b)), c_(c) {
  const auto m = b_.size();
  if (m == 0 || m > kMaxDim) throw InvalidInput("quadratic field: dimension must be in [1, 10]");
  if (H_.rows() != m || H_.cols() != m)
    throw InvalidInput("quadratic field: H must be m x m with m = dim(b)");
  if (!H_.allFinite() || !b_.allFinite() || !std::isfinite(c_))
    throw InvalidInput("quadratic field: non-finite entries");
  const double scale = std::max(1.0, H_.cwiseAbs().maxCoeff());
  if ((H_ - H_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidInput("quadratic field: H is not symmetric");
  H_ = 0.5 * (H_ + H_.transpose());
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(H_, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  if (min_eig < -kPsdTolerance) {
    std::ostringstream os;
    os << "quadratic field: H is not positive semi-definite (min eigenvalue " << min_eig << ")";
    throw InvalidInput(os.str());
  }
}

double QuadraticField::operator()(PointRef z) const {
  check_dimension(dimension(), z.size(), "quadratic field");
  const auto m = z.size();
  double quad = 0.0;
  double lin = 0.0;
  for (Eigen::Index r = 0; r < m; ++r) {
    double row = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) row += H_(r, k) * z[k];
    quad += z[r] * row;
    lin += b_[r] * z[r];
  }
  return -0.5 * quad + lin + c_;
}

Vector QuadraticField::gradient(PointRef z) const {
  check_dimension(dimension(), z.size(), "quadratic field");
  return b_ - H_ * z;
}

void register_formula(AnalyticFormula formula) {
  if (formula.id.empty() || !formula.fn) throw InvalidInput("register_formula: empty id or function");
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  r.formulas.insert_or_assign(formula.id, std::move(formula));
}

const AnalyticFormula& find_formula(const std::string& id) {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  auto it = r.formulas.find(id);
  if (it == r.formulas.end()) throw InvalidInput("unknown analytic formula '" + id + "'");
  return it->second;
}

std::vector<std::string> registered_formulas() {
  auto& r = registry();
  std::lock_guard lock(r.mutex);
  std::vector<std::string> ids;
  for (const auto& [id, _] : r.formulas) ids.push_back(id);
  return ids;
}

AnalyticField::AnalyticField(std::string formula_id, int dimension,
                             const std::map<std::string, double>& params)
    : id_(std::move(formula_id)), dimension_(dimension) {
  const auto& formula = find_formula(id_);
  if (dimension_ < 1 || dimension_ > kMaxDim)
    throw InvalidInput("analytic field: dimension must be in [1, 10]");
  if (formula.dimension != 0 && formula.dimension != dimension_) {
    std::ostringstream os;
    os << "analytic field '" << id_ << "' requires dimension " << formula.dimension;
    throw InvalidInput(os.str());
  }
  for (const auto& [name, value] : formula.defaults) {
    names_.push_back(name);
    values_.push_back(value);
  }
  for (const auto& [name, value] : params) {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end())
      throw InvalidInput("analytic field '" + id_ + "': unknown parameter '" + name + "'");
    if (!std::isfinite(value))
      throw InvalidInput("analytic field '" + id_ + "': parameter '" + name + "' is not finite");
    values_[static_cast<std::size_t>(it - names_.begin())] = value;
  }
  fn_ = formula.fn;
}

std::map<std::string, double> AnalyticField::params() const {
  std::map<std::string, double> out;
  for (std::size_t k = 0; k < names_.size(); ++k) out[names_[k]] = values_[k];
  return out;
}

double AnalyticField::operator()(PointRef z) const {
  check_dimension(dimension_, z.size(), "analytic field");
  return fn_(z, values_);
}

int field_dimension(const Field& field) {
  return std::visit([](const auto& f) { return f.dimension(); }, field);
}

bool is_quadratic(const Field& field) { return std::holds_alternative<QuadraticField>(field); }

double eval_field(const Field& field, PointRef z) {
  return std::visit([&](const auto& f) { return f(z); }, field);
}

Vector field_gradient(const Field& field, PointRef z, double h) {
  if (const auto* q = std::get_if<QuadraticField>(&field)) return q->gradient(z);
  const auto m = z.size();
  Vector grad(m);
  Vector probe = z;
  for (Eigen::Index k = 0; k < m; ++k) {
    probe[k] = z[k] + h;
    const double up = eval_field(field, probe);
    probe[k] = z[k] - h;
    const double down = eval_field(field, probe);
    probe[k] = z[k];
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

FieldSet::FieldSet(std::vector<Field> fields) : fields_(std::move(fields)) {
  if (fields_.empty()) throw InvalidInput("field set: at least one field is required");
  dimension_ = field_dimension(fields_.front());
  for (const auto& f : fields_) {
    if (field_dimension(f) != dimension_)
      throw InvalidInput("field set: all fields must share one dimension");
    all_quadratic_ = all_quadratic_ && is_quadratic(f);
  }
  if (all_quadratic_) {
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(curvature_sum(),
                                                                 Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .minCoeff();
    if (min_eig <= kPdTolerance) {
      std::ostringstream os;
      os << "sum of field curvatures is not positive definite (min eigenvalue " << min_eig
         << ")";
      throw AssumptionViolation("Assumption 2: positive definite aggregate curvature", os.str());
    }
  }
}

double FieldSet::aggregate(PointRef z) const {
  double total = 0.0;
  for (const auto& f : fields_) total += eval_field(f, z);
  return total;
}

Matrix FieldSet::curvature_sum() const {
  Matrix sum = Matrix::Zero(dimension_, dimension_);
  for (const auto& f : fields_) {
    const auto* q = std::get_if<QuadraticField>(&f);
    if (!q) throw UnsupportedMode("curvature sum requires quadratic fields");
    sum += q->H();
  }
  return sum;
}

Vector FieldSet::linear_sum() const {
  Vector sum = Vector::Zero(dimension_);
  for (const auto& f : fields_) {
    const auto* q = std::get_if<QuadraticField>(&f);
    if (!q) throw UnsupportedMode("linear-term sum requires quadratic fields");
    sum += q->b();
  }
  return sum;
}

Vector aggregate_optimum(const FieldSet& fields) {
  if (!fields.all_quadratic())
    throw UnsupportedMode("aggregate_optimum: closed form requires quadratic fields");
  // FieldSet construction already rejected a singular curvature sum.
  return fields.curvature_sum().ldlt().solve(fields.linear_sum());
}

Vector refine_local_maximum(const FieldSet& fields, PointRef start, int max_iter, double tol) {
  const auto m = start.size();
  if (m != fields.dimension()) throw InvalidInput("refine_local_maximum: dimension mismatch");
  const double h = 1e-4;
  Vector z = start;
  auto grad = [&](const Vector& p) {
    Vector g = Vector::Zero(m);
    for (const auto& f : fields.fields()) g += field_gradient(f, p, 1e-6);
    return g;
  };
  for (int it = 0; it < max_iter; ++it) {
    const Vector g = grad(z);
    if (g.norm() < tol) break;
    Matrix hess(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      Vector up = z, down = z;
      up[k] += h;
      down[k] -= h;
      hess.col(k) = (grad(up) - grad(down)) / (2.0 * h);
    }
    hess = 0.5 * (hess + hess.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(hess);
    // Ascent direction: invert the negated Hessian with eigenvalues floored so
    // the step stays uphill away from concave regions.
    Vector lam = (-es.eigenvalues()).cwiseMax(1e-3);
    Vector step = es.eigenvectors() * (es.eigenvectors().transpose() * g).cwiseQuotient(lam);
    double t = 1.0;
    const double f0 = fields.aggregate(z);
    while (t > 1e-8 && fields.aggregate(z + t * step) < f0) t *= 0.5;
    z += t * step;
    if ((t * step).norm() < tol) break;
  }
  return z;
}

QuadraticField gramian_field(const Matrix& A, const Matrix& C,
                             const std::vector<Vector>& measurements) {
  const auto m = A.rows();
  if (A.cols() != m) throw InvalidInput("gramian_field: A must be square");
  if (C.cols() != m) throw InvalidInput("gramian_field: C must have m columns");
  if (static_cast<Eigen::Index>(measurements.size()) != m)
    throw InvalidInput("gramian_field: expected m measurements");
  Matrix gram = Matrix::Zero(m, m);
  Vector lin = Vector::Zero(m);
  double c = 0.0;
  Matrix CAk = C;  // C A^k
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& y = measurements[static_cast<std::size_t>(k)];
    if (y.size() != C.rows()) throw InvalidInput("gramian_field: measurement size != rows(C)");
    gram += CAk.transpose() * CAk;
    lin += CAk.transpose() * y;
    c -= y.squaredNorm();
    CAk = CAk * A;
  }
  return QuadraticField(2.0 * gram, 2.0 * lin, c);
}

double argmax_set_distance(const QuadraticField& field, PointRef z) {
  check_dimension(field.dimension(), z.size(), "argmax_set_distance");
  Eigen::SelfAdjointEigenSolver<Matrix> es(field.H());
  const Vector& lam = es.eigenvalues();
  const Matrix& U = es.eigenvectors();
  const double cutoff = 1e-9 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  // Range/null split of H. Consistency: the null-space part of b must vanish.
  const Vector bu = U.transpose() * field.b();
  const double bscale = std::max(1.0, field.b().norm());
  Vector w = U.transpose() * (field.H() * z - field.b());
  double dist2 = 0.0;
  for (Eigen::Index k = 0; k < lam.size(); ++k) {
    if (std::abs(lam[k]) <= cutoff) {
      if (std::abs(bu[k]) > 1e-9 * bscale)
        throw EmptyArgmax("argmax_set_distance: H z = b has no solution");
      continue;
    }
    const double comp = w[k] / lam[k];
    dist2 += comp * comp;
  }
  return std::sqrt(dist2);
}

}  // namespace dses
