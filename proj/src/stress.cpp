#include "edmstress/stress.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace edmstress {

namespace {

Matrix reshape(const Vector& x, Index rows, Index cols) {
  return Eigen::Map<const Matrix>(x.data(), rows, cols);
}

Vector flatten(const Matrix& M) {
  return Eigen::Map<const Vector>(M.data(), M.size());
}

// Positions of the packed ell coordinates inside vec(L).
std::vector<Index> ell_positions(Index n, Index d) {
  std::vector<Index> pos;
  pos.reserve(static_cast<std::size_t>(tri_len(n, d)));
  for (Index j = 0; j < d; ++j) {
    for (Index i = j; i < n - 1; ++i) pos.push_back(i + (n - 1) * j);
  }
  return pos;
}

// Restrict an nd x nd P-space operator to ctx's coordinates.
Matrix restrict_operator(const Matrix& M, const EvalContext& ctx) {
  if (ctx.formulation() == Formulation::FullP) return M;
  const Index n = ctx.n();
  const Index d = ctx.d();
  const Matrix& V = ctx.v();
  const Index m = n - 1;
  Matrix ML(m * d, m * d);
  for (Index b = 0; b < d; ++b) {
    for (Index a = 0; a < d; ++a) {
      ML.block(a * m, b * m, m, m) =
          V.transpose() * M.block(a * n, b * n, n, n) * V;
    }
  }
  if (ctx.formulation() == Formulation::ReducedL) return ML;
  const auto pos = ell_positions(n, d);
  const Index t = static_cast<Index>(pos.size());
  Matrix Mell(t, t);
  for (Index c = 0; c < t; ++c) {
    for (Index r = 0; r < t; ++r) Mell(r, c) = ML(pos[r], pos[c]);
  }
  return Mell;
}

// Pairwise products W_ab(i,j) = (p_i - p_j)_a (p_i - p_j)_b.
Matrix pair_products(const Matrix& P, Index a, Index b) {
  const Vector& ca = P.col(a);
  const Vector& cb = P.col(b);
  const Index n = P.rows();
  Matrix W(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) W(i, j) = (ca(i) - ca(j)) * (cb(i) - cb(j));
  }
  return W;
}

Matrix h1_full(const Matrix& P) {
  const Index n = P.rows();
  const Index d = P.cols();
  Matrix H1(n * d, n * d);
  for (Index b = 0; b < d; ++b) {
    for (Index a = 0; a <= b; ++a) {
      const Matrix block =
          detail::lindenstrauss_adjoint_unchecked(pair_products(P, a, b));
      H1.block(a * n, b * n, n, n) = block;
      if (a != b) H1.block(b * n, a * n, n, n) = block.transpose();
    }
  }
  return H1;
}

Matrix h2_full(const Matrix& F, Index d) {
  const Index n = F.rows();
  const Matrix KsF = detail::lindenstrauss_adjoint_unchecked(F);
  Matrix H2 = Matrix::Zero(n * d, n * d);
  for (Index a = 0; a < d; ++a) H2.block(a * n, a * n, n, n) = KsF;
  return H2;
}

// Exact symmetry; V^T B V is symmetric only up to rounding.
Matrix symmetrized(const Matrix& M) {
  return 0.5 * (M + M.transpose());
}

void guard_dense_size(const EvalContext& ctx) {
  const Index cols = ctx.n() * ctx.d();
  if (cols > kDenseHessianLimit) {
    std::ostringstream msg;
    msg << "dense Hessian with " << cols << " columns exceeds the limit of "
        << kDenseHessianLimit << "; use hessian_apply (matrix-free) instead";
    throw CapacityError(msg.str());
  }
}

} // namespace

std::string_view formulation_name(Formulation f) {
  switch (f) {
  case Formulation::FullP:
    return "P";
  case Formulation::ReducedL:
    return "L";
  case Formulation::TriangularEll:
    return "ell";
  }
  return "?";
}

Formulation parse_formulation(std::string_view name) {
  if (name == "P") return Formulation::FullP;
  if (name == "L") return Formulation::ReducedL;
  if (name == "ell") return Formulation::TriangularEll;
  throw DomainError("unknown formulation '" + std::string(name) +
                    "' (expected P, L or ell)");
}

Formulation classification_formulation(Index d) {
  return d == 1 ? Formulation::ReducedL : Formulation::TriangularEll;
}

EvalContext::EvalContext(Instance instance, Formulation formulation)
    : EvalContext(std::make_shared<const Instance>(std::move(instance)),
                  formulation) {}

EvalContext::EvalContext(std::shared_ptr<const Instance> instance,
                         Formulation formulation)
    : instance_(std::move(instance)), formulation_(formulation) {
  if (!instance_) throw DomainError("EvalContext: null instance");
  validate_instance(*instance_);
  v_ = std::make_shared<const Matrix>(build_v(instance_->n));
}

Index EvalContext::dim() const {
  switch (formulation_) {
  case Formulation::FullP:
    return n() * d();
  case Formulation::ReducedL:
    return (n() - 1) * d();
  case Formulation::TriangularEll:
    return tri_len(n(), d());
  }
  return 0;
}

EvalContext EvalContext::with_formulation(Formulation formulation) const {
  EvalContext out = *this;
  out.formulation_ = formulation;
  return out;
}

void EvalContext::check_point(const Vector& x) const {
  if (x.size() != dim()) {
    std::ostringstream msg;
    msg << "point has " << x.size() << " coordinates, formulation "
        << formulation_name(formulation_) << " with n=" << n() << ", d=" << d()
        << " needs " << dim();
    throw DimensionError(msg.str());
  }
}

Matrix EvalContext::push_direction(const Vector& dx) const {
  check_point(dx);
  switch (formulation_) {
  case Formulation::FullP:
    return reshape(dx, n(), d());
  case Formulation::ReducedL:
    return v() * reshape(dx, n() - 1, d());
  case Formulation::TriangularEll:
    return v() * ltriag(dx, n(), d());
  }
  return {};
}

Matrix EvalContext::configuration(const Vector& x) const {
  return push_direction(x);
}

Vector EvalContext::from_configuration(const Matrix& P) const {
  if (P.rows() != n() || P.cols() != d()) {
    throw DimensionError("configuration must be n x d");
  }
  switch (formulation_) {
  case Formulation::FullP:
    return flatten(P);
  case Formulation::ReducedL:
    return flatten(v().transpose() * P);
  case Formulation::TriangularEll:
    return reduce_to_triangular(v().transpose() * P).ell;
  }
  return {};
}

Vector EvalContext::pullback(const Matrix& gradient_p) const {
  switch (formulation_) {
  case Formulation::FullP:
    return flatten(gradient_p);
  case Formulation::ReducedL:
    return flatten(v().transpose() * gradient_p);
  case Formulation::TriangularEll:
    return ltriag_adjoint(v().transpose() * gradient_p);
  }
  return {};
}

Matrix residual(const Matrix& P, const Matrix& D_bar) {
  if (D_bar.rows() != P.rows() || D_bar.cols() != P.rows()) {
    throw DimensionError("residual: D_bar must be n x n for n x d P");
  }
  return edm_of(P) - D_bar;
}

double value(const Vector& x, const EvalContext& ctx) {
  const Matrix F = residual(ctx.configuration(x), ctx.instance().D);
  return 0.5 * F.squaredNorm();
}

std::pair<double, Vector> value_and_gradient(const Vector& x,
                                             const EvalContext& ctx) {
  const Matrix P = ctx.configuration(x);
  const Matrix F = residual(P, ctx.instance().D);
  const Matrix G = 2.0 * detail::lindenstrauss_adjoint_unchecked(F) * P;
  return {0.5 * F.squaredNorm(), ctx.pullback(G)};
}

Vector gradient(const Vector& x, const EvalContext& ctx) {
  return value_and_gradient(x, ctx).second;
}

Vector gradient_extended(const Vector& x, const EvalContext& ctx,
                         const Vector& offset) {
#ifdef __SIZEOF_FLOAT128__
  using Wide = __float128;
#else
  using Wide = long double;
#endif
  ctx.check_point(x);
  if (offset.size() != 0) ctx.check_point(offset);
  const Index n = ctx.n();
  const Index d = ctx.d();
  const Matrix& D = ctx.instance().D;

  auto coords = [&](const Vector& v) -> Matrix {
    switch (ctx.formulation()) {
    case Formulation::FullP:
      return reshape(v, n, d);
    case Formulation::ReducedL:
      return reshape(v, n - 1, d);
    case Formulation::TriangularEll:
      return ltriag(v, n, d);
    }
    return {};
  };
  const Matrix C = coords(x);
  const Matrix O = offset.size() ? coords(offset) : Matrix::Zero(C.rows(), C.cols());
  const bool lifted = ctx.formulation() != Formulation::FullP;
  const Matrix& V = ctx.v();

  std::vector<Wide> P(static_cast<std::size_t>(n * d), Wide(0));
  auto at = [n](std::vector<Wide>& M, Index i, Index a) -> Wide& {
    return M[static_cast<std::size_t>(i + n * a)];
  };
  for (Index a = 0; a < d; ++a) {
    for (Index i = 0; i < n; ++i) {
      if (!lifted) {
        at(P, i, a) = Wide(C(i, a)) + Wide(O(i, a));
        continue;
      }
      Wide s = 0;
      for (Index k = 0; k < n - 1; ++k) {
        s += Wide(V(i, k)) * (Wide(C(k, a)) + Wide(O(k, a)));
      }
      at(P, i, a) = s;
    }
  }

  std::vector<Wide> G(static_cast<std::size_t>(n * d), Wide(0));
  std::vector<Wide> diff(static_cast<std::size_t>(d));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      Wide dist2 = 0;
      for (Index a = 0; a < d; ++a) {
        diff[a] = at(P, i, a) - at(P, j, a);
        dist2 += diff[a] * diff[a];
      }
      // Row i of 2 K*(F) P is 4 sum_j F_ij (p_i - p_j).
      const Wide coeff = Wide(4) * (dist2 - Wide(D(i, j)));
      for (Index a = 0; a < d; ++a) {
        at(G, i, a) += coeff * diff[a];
        at(G, j, a) -= coeff * diff[a];
      }
    }
  }

  if (!lifted) {
    Vector g(n * d);
    for (Index k = 0; k < n * d; ++k) g(k) = static_cast<double>(G[k]);
    return g;
  }
  Matrix GL(n - 1, d);
  for (Index a = 0; a < d; ++a) {
    for (Index k = 0; k < n - 1; ++k) {
      Wide s = 0;
      for (Index i = 0; i < n; ++i) s += Wide(V(i, k)) * at(G, i, a);
      GL(k, a) = static_cast<double>(s);
    }
  }
  if (ctx.formulation() == Formulation::ReducedL) return flatten(GL);
  return ltriag_adjoint(GL);
}

Vector hessian_apply(const Vector& x, const Vector& dx,
                     const EvalContext& ctx) {
  const Matrix P = ctx.configuration(x);
  const Matrix dP = ctx.push_direction(dx);
  const Matrix F = residual(P, ctx.instance().D);
  const Matrix X = P * dP.transpose() + dP * P.transpose();
  const Matrix HP =
      2.0 * detail::lindenstrauss_adjoint_unchecked(
                detail::lindenstrauss_unchecked(X)) *
          P +
      2.0 * detail::lindenstrauss_adjoint_unchecked(F) * dP;
  return ctx.pullback(HP);
}

HessianParts hessian_dense(const Vector& x, const EvalContext& ctx) {
  guard_dense_size(ctx);
  const Matrix P = ctx.configuration(x);
  const Matrix F = residual(P, ctx.instance().D);
  HessianParts parts;
  parts.H1 = symmetrized(restrict_operator(h1_full(P), ctx));
  parts.H2 = symmetrized(restrict_operator(h2_full(F, ctx.d()), ctx));
  parts.H = 4.0 * parts.H1 + 2.0 * parts.H2;
  return parts;
}

Matrix hessian_matrix(const Vector& x, const EvalContext& ctx) {
  guard_dense_size(ctx);
  const Matrix P = ctx.configuration(x);
  const Matrix F = residual(P, ctx.instance().D);
  Matrix H = 4.0 * h1_full(P);
  H += 2.0 * h2_full(F, ctx.d());
  return symmetrized(restrict_operator(H, ctx));
}

H2Pairing h2_pairing(const Matrix& P, const Instance& instance) {
  if (!instance.P_bar) {
    throw DomainError("h2_pairing: instance carries no generator P_bar");
  }
  const Matrix& Pb = *instance.P_bar;
  if (P.rows() != Pb.rows() || P.cols() != Pb.cols()) {
    throw DimensionError("h2_pairing: P and P_bar differ in shape");
  }
  const Matrix F = residual(P, instance.D);
  const Matrix KsF = detail::lindenstrauss_adjoint_unchecked(F);
  return {(Pb.transpose() * KsF * Pb).trace(), -F.squaredNorm()};
}

} // namespace edmstress
