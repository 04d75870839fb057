#include "pivio/gauss_newton.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <string>

namespace pivio {

namespace {

struct NormalEquations {
  Eigen::SparseMatrix<double> h;
  Eigen::VectorXd g;
};

NormalEquations assemble(const Linearization& lin, int num_states) {
  const int dim = kStateDim * num_states;
  NormalEquations out;
  out.g = Eigen::VectorXd::Zero(dim);
  std::vector<Eigen::Triplet<double>> triplets;
  for (const LinearizedFactor& f : lin.factors) {
    const int k = static_cast<int>(f.keyframes.size());
    const Eigen::MatrixXd jtj = f.jacobian.transpose() * f.jacobian;
    const Eigen::VectorXd jtr = f.jacobian.transpose() * f.residual;
    for (int a = 0; a < k; ++a) {
      const int row0 = kStateDim * f.keyframes[a];
      out.g.segment<kStateDim>(row0) += jtr.segment<kStateDim>(kStateDim * a);
      for (int b = 0; b < k; ++b) {
        const int col0 = kStateDim * f.keyframes[b];
        for (int r = 0; r < kStateDim; ++r) {
          for (int c = 0; c < kStateDim; ++c) {
            const double v = jtj(kStateDim * a + r, kStateDim * b + c);
            if (v != 0.0) triplets.emplace_back(row0 + r, col0 + c, v);
          }
        }
      }
    }
  }
  out.h.resize(dim, dim);
  out.h.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

int count_null_directions(const Eigen::SparseMatrix<double>& h) {
  Eigen::MatrixXd dense(h);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  const double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  int nulls = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i) < 1e-10 * scale) ++nulls;
  }
  return nulls;
}

/// Solves (H + lambda I) dx = -g; throws SingularHessianError when the
/// undamped system is not positive definite.
Eigen::VectorXd solve_normal_equations(const NormalEquations& eq, double lambda) {
  Eigen::SparseMatrix<double> h = eq.h;
  if (lambda > 0.0) {
    Eigen::SparseMatrix<double> damp(h.rows(), h.cols());
    damp.setIdentity();
    h += lambda * damp;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(h);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
    if (lambda == 0.0) throw SingularHessianError(count_null_directions(eq.h));
    throw SingularHessianError(count_null_directions(h));
  }
  Eigen::VectorXd dx = ldlt.solve(-eq.g);
  if (!dx.allFinite()) throw SingularHessianError(count_null_directions(eq.h));
  return dx;
}

std::vector<NavStated> retract_all(const std::vector<NavStated>& states,
                                   const Eigen::VectorXd& dx) {
  std::vector<NavStated> out;
  out.reserve(states.size());
  for (size_t k = 0; k < states.size(); ++k) {
    if (dx.segment<kStateDim>(kStateDim * k).isZero(0.0)) {
      out.push_back(states[k]);  // bit-identical for a zero step
    } else {
      out.push_back(retract(states[k], Vec15d(dx.segment<kStateDim>(kStateDim * k))));
    }
  }
  return out;
}

double cost_of(const Linearization& lin) {
  double c = 0.0;
  for (const LinearizedFactor& f : lin.factors) c += f.residual.squaredNorm();
  return c;
}

}  // namespace

SingularHessianError::SingularHessianError(int null_directions)
    : std::runtime_error("normal equations are singular: " +
                         std::to_string(null_directions) + " null direction(s)"),
      null_directions_(null_directions) {}

SolveReport gauss_newton(const FactorGraph& graph, std::vector<NavStated>* states,
                         const GaussNewtonOptions& options) {
  const int n = static_cast<int>(states->size());
  if (n == 0) throw std::invalid_argument("gauss_newton: no states");
  graph.validate(states->size());

  SolveReport report;
  Linearization lin = linearize_graph(graph, *states);
  double cost = cost_of(lin);
  report.initial_cost = cost;
  report.iteration_costs.push_back(cost);

  if (cost <= options.cost_floor) report.converged = true;

  for (int iter = 0; iter < options.max_iters && !report.converged; ++iter) {
    NormalEquations eq = assemble(lin, n);

    double lambda = 0.0;
    bool accepted = false;
    std::vector<NavStated> candidate;
    Linearization cand_lin;
    double cand_cost = 0.0;
    while (true) {
      Eigen::VectorXd dx = solve_normal_equations(eq, lambda);
      candidate = retract_all(*states, dx);
      cand_lin = linearize_graph(graph, candidate);
      cand_cost = cost_of(cand_lin);
      if (cand_cost <= cost * (1.0 + 1e-12)) {
        accepted = true;
        break;
      }
      lambda = (lambda == 0.0) ? options.lambda_init : lambda * options.lambda_scale;
      if (lambda > options.lambda_max) break;
    }
    if (!accepted) {
      // Even the most damped step fails to improve: the cost is at its
      // numerical minimum.
      report.converged = true;
      break;
    }

    const double decrease = cost - cand_cost;
    *states = std::move(candidate);
    lin = std::move(cand_lin);
    cost = cand_cost;
    report.iteration_costs.push_back(cost);
    ++report.iterations;

    if (cost <= options.cost_floor ||
        decrease <= options.rel_tol * std::max(cost, options.cost_floor)) {
      report.converged = true;
      break;
    }
  }

  report.final_cost = cost;
  report.skipped_tracks = lin.skipped_tracks;
  if (n > 0) {
    NormalEquations eq = assemble(lin, n);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(eq.h);
    if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
      throw SingularHessianError(count_null_directions(eq.h));
    }
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(kStateDim * n, kStateDim);
    rhs.block<kStateDim, kStateDim>(kStateDim * (n - 1), 0).setIdentity();
    Eigen::MatrixXd cols = ldlt.solve(rhs);
    report.last_state_marginal = cols.block<kStateDim, kStateDim>(kStateDim * (n - 1), 0);
  }
  return report;
}

Mat15d marginal_covariance(const FactorGraph& graph, const std::vector<NavStated>& states,
                           int keyframe) {
  const int n = static_cast<int>(states.size());
  if (keyframe < 0 || keyframe >= n) {
    throw std::out_of_range("marginal_covariance: keyframe out of range");
  }
  Linearization lin = linearize_graph(graph, states);
  NormalEquations eq = assemble(lin, n);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(eq.h);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) {
    throw SingularHessianError(count_null_directions(eq.h));
  }
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(kStateDim * n, kStateDim);
  rhs.block<kStateDim, kStateDim>(kStateDim * keyframe, 0).setIdentity();
  Eigen::MatrixXd cols = ldlt.solve(rhs);
  Mat15d block = cols.block<kStateDim, kStateDim>(kStateDim * keyframe, 0);
  return (block + block.transpose()) / 2.0;
}

std::vector<Mat15d> all_marginal_covariances(const FactorGraph& graph,
                                             const std::vector<NavStated>& states) {
  const int n = static_cast<int>(states.size());
  Linearization lin = linearize_graph(graph, states);
  NormalEquations eq = assemble(lin, n);
  Eigen::MatrixXd dense(eq.h);
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  if (llt.info() != Eigen::Success) {
    throw SingularHessianError(count_null_directions(eq.h));
  }
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(dense.rows(), dense.cols()));
  std::vector<Mat15d> out(n);
  for (int k = 0; k < n; ++k) {
    Mat15d block = inv.block<kStateDim, kStateDim>(kStateDim * k, kStateDim * k);
    out[k] = (block + block.transpose()) / 2.0;
  }
  return out;
}

}  // namespace pivio
