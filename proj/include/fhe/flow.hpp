#pragma once

#include <optional>

#include "fhe/moment_map.hpp"

namespace fhe {

enum class Scheme { RK4, SemiImplicit };

struct FlowParams {
    double lambda = 1.0;
    double dt = 0.0;  // 0: auto, c_stab / spectral radius of the horizontal Laplacian
    double c_stab = 0.4;
    double t_end = 1.0;
    double tol = 1e-8;
    Scheme scheme = Scheme::RK4;
    long max_steps = 5000000;
    int snapshot_every = 10;
    bool store_u_snapshots = false;
    bool stop_on_tol = true;
    // steps skipped by the live subsolution estimator: with incompatible
    // initial data the solution sits in the parabolic corner layer at t = 0
    // and is not C^3 in time there
    int defect_warmup_steps = 10;
};

struct FlowState {
    BaseField u;  // sigma = exp(u), Hermitian fibre-constant
    double t = 0.0;
    long step = 0;
};

struct ExpFit {
    bool valid = false;
    double C = 0.0, mu = 0.0, r2 = 0.0;
};

struct FlowReport {
    std::vector<double> t, sup_theta, residual, det_drift;
    std::vector<double> snapshot_t;
    std::vector<BaseField> theta_snapshots;
    std::vector<BaseField> u_snapshots;
    bool converged = false;
    // positive part of d theta/dt + Delta_B^{1,0} theta accumulated at every
    // step with centered differences (the snapshot-based estimator is the
    // free function below)
    double live_subsolution_defect = 0.0;
    bool monotone = true;
    double worst_increase = 0.0;  // max per-step increase of sup theta
    double max_det_drift = 0.0;
    long steps = 0;
    double final_residual = 0.0;
    double dt_used = 0.0;
    BaseField u_final;
    ExpFit fit;
    double wall_seconds = 0.0;
};

// The family Hermite-Einstein flow d sigma/dt = -2 sigma P(sigma) with
// P(sigma) = p_{h sigma}(i Lambda_H F_{h sigma}) - lambda i nu_{h sigma}(a),
// for fibre-constant positive metrics sigma over the base.
class FamilyFlow {
  public:
    FamilyFlow(const ProductGrid& g, DeformationData a, double lambda);

    const ProductGrid& grid() const { return *grid_; }
    double lambda() const { return lambda_; }
    const DeformationData& deformation() const { return a_; }

    // pin u on the annulus boundary rows to the given values
    void set_dirichlet(const BaseField& u_boundary);
    bool dirichlet() const { return dirichlet_; }

    BaseField P(const BaseField& sigma) const;
    BaseField theta(const BaseField& sigma) const;  // rank-1 scalar field
    double sup_theta(const BaseField& sigma) const;
    double residual(const BaseField& sigma) const;  // ||P||_inf over interior

    // one explicit step; pins Dirichlet rows, re-Hermitizes
    void step_rk4(FlowState& st, double dt) const;
    void step_semi_implicit(FlowState& st, double dt) const;

    FlowReport run(const FlowParams& prm, const BaseField& u0) const;

    double stable_dt(double c_stab) const;

  private:
    BaseField rhs(const BaseField& sigma) const;  // -2 sigma P(sigma), boundary rows zeroed
    void pin_boundary(BaseField& u) const;

    const ProductGrid* grid_;
    int rank_;
    DeformationData a_;
    double lambda_;
    std::optional<NuEvaluator> nu_fast_;
    bool dirichlet_ = false;
    BaseField u_boundary_;
};

// eta(sigma, tau)(b) = tr(sigma^{-1} tau) + tr(tau^{-1} sigma) - 2 rank.
BaseField eta(const BaseField& sigma, const BaseField& tau);

// max over snapshot times and interior base points of the positive part of
// d theta/dt + Delta_B^{1,0} theta (centered differences in t).
double subsolution_defect(const std::vector<double>& snapshot_t,
                          const std::vector<BaseField>& theta_snapshots);

// Spectral radius of the discrete horizontal (1,0)-Laplacian.
double horizontal_laplacian_radius(const ProductGrid& g);

// Smallest Dirichlet eigenvalue of the discrete base Laplacian
// -(d_x^2 + d_y^2) on the annulus interior (times 0.5 gives the (1,0) part).
double dirichlet_lambda1_full(const ProductGrid& g);

// Least-squares exponential fit of sup theta over the trailing window
// (last half of the samples below 1e-2 * theta(0)).
ExpFit fit_exponential_tail(const std::vector<double>& t, const std::vector<double>& sup_theta);

struct DirichletReport {
    FlowReport flow;
    double lambda1_full = 0.0;  // independent discrete eigen-solve
    double mu_theta = 0.0;      // fitted decay rate of sup theta
    double mu_p = 0.0;          // = mu_theta / 2, decay rate of sup |P|
};

// Run the Dirichlet problem from u0 (whose boundary rows give the boundary
// data); throws NumericalError if the flow does not reach tol.
DirichletReport dirichlet_solve(FamilyFlow& flow, const FlowParams& prm, const BaseField& u0);

}  // namespace fhe
