#pragma once

#include <memory>
#include <string_view>
#include <utility>

#include "edmstress/edm_core.hpp"

namespace edmstress {

// The three coordinate systems of the objective:
//   FullP          x = vec(P),  P is n x d
//   ReducedL       x = vec(L),  P = V L, L is (n-1) x d
//   TriangularEll  x = ell,     P = V ltriag(ell)
// vec is column-major throughout.
enum class Formulation { FullP, ReducedL, TriangularEll };

std::string_view formulation_name(Formulation f);   // "P", "L", "ell"
Formulation parse_formulation(std::string_view name);

// Formulation in which nonglobal minimizers can be isolated: f_L for d = 1,
// f_ell for d >= 2 (rotations leave f_L singular there).
Formulation classification_formulation(Index d);

/// Immutable evaluation context shared by every objective routine. Copies are
/// cheap and safe to hand to other threads.
class EvalContext {
public:
  EvalContext(Instance instance, Formulation formulation);
  EvalContext(std::shared_ptr<const Instance> instance, Formulation formulation);

  Formulation formulation() const { return formulation_; }
  const Instance& instance() const { return *instance_; }
  std::shared_ptr<const Instance> shared_instance() const { return instance_; }
  const Matrix& v() const { return *v_; }
  Index n() const { return instance_->n; }
  Index d() const { return instance_->d; }

  // Number of coordinates of x in this formulation.
  Index dim() const;

  // Same instance, different coordinates.
  EvalContext with_formulation(Formulation formulation) const;

  // Lift x to its n x d configuration P.
  Matrix configuration(const Vector& x) const;

  // Canonical coordinates of P in this formulation: translate for ReducedL,
  // additionally rotate to triangular form for TriangularEll.
  Vector from_configuration(const Matrix& P) const;

  // Chain-rule pullback of a P-space covector into this formulation.
  Vector pullback(const Matrix& gradient_p) const;

  // Push a direction in x to the corresponding P-space direction.
  Matrix push_direction(const Vector& dx) const;

  void check_point(const Vector& x) const;

private:
  std::shared_ptr<const Instance> instance_;
  std::shared_ptr<const Matrix> v_;
  Formulation formulation_;
};

// F(P) = D(P) - D_bar.
Matrix residual(const Matrix& P, const Matrix& D_bar);

double value(const Vector& x, const EvalContext& ctx);
Vector gradient(const Vector& x, const EvalContext& ctx);

// Value and gradient with one residual evaluation.
std::pair<double, Vector> value_and_gradient(const Vector& x,
                                             const EvalContext& ctx);

// Gradient accumulated in extended precision (binary128 where the compiler
// provides it) from the exact double inputs. Near a stationary point the
// double-precision gradient is dominated by cancellation; certificates use
// this one. A nonempty offset is added to x in extended precision, so points
// within rounding distance of x stay distinguishable.
Vector gradient_extended(const Vector& x, const EvalContext& ctx,
                         const Vector& offset = Vector());

// Closed-form Hessian action; for P this is
//   H(dP) = 2 K*(K(P dP^T + dP P^T)) P + 2 K*(F(P)) dP.
Vector hessian_apply(const Vector& x, const Vector& dx, const EvalContext& ctx);

struct HessianParts {
  Matrix H1;   // Gauss-Newton part J^T J, PSD
  Matrix H2;   // curvature of the residual, I_d (x) K*(F)
  Matrix H;    // 4 H1 + 2 H2
};

inline constexpr Index kDenseHessianLimit = 5000;

// Dense Hessian in ctx's coordinates, assembled from the pairwise closed form
// (independent of hessian_apply).
HessianParts hessian_dense(const Vector& x, const EvalContext& ctx);

// Only the full Hessian, skipping the separate parts.
Matrix hessian_matrix(const Vector& x, const EvalContext& ctx);

struct H2Pairing {
  double curvature;       // vec(P_bar)^T H2 vec(P_bar)
  double neg_residual2;   // -||F(P)||^2
};

// At a stationary nonglobal P the two numbers agree and are negative.
H2Pairing h2_pairing(const Matrix& P, const Instance& instance);

} // namespace edmstress
