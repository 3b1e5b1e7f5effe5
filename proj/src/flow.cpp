#include "fhe/flow.hpp"

#include <chrono>
#include <cmath>

#include "fhe/errors.hpp"

namespace fhe {

FamilyFlow::FamilyFlow(const ProductGrid& g, DeformationData a, double lambda)
    : grid_(&g), rank_(a.rank()), a_(std::move(a)), lambda_(lambda) {
    if (lambda <= 0.0) throw ConfigError("flow coupling lambda must be positive");
    if (a_.sep) nu_fast_.emplace(g, a_);
}

void FamilyFlow::set_dirichlet(const BaseField& u_boundary) {
    if (!grid_->has_boundary())
        throw ConfigError("Dirichlet data requires an annulus base");
    dirichlet_ = true;
    u_boundary_ = u_boundary;
}

void FamilyFlow::pin_boundary(BaseField& u) const {
    if (!dirichlet_) return;
    for (long pb = 0; pb < grid_->n_base(); ++pb)
        if (grid_->base_boundary(pb)) u.at(pb) = u_boundary_.at(pb);
}

BaseField FamilyFlow::P(const BaseField& sigma) const {
    const ProductGrid& g = *grid_;
    // i Lambda_H F_{h sigma} = -2 d_wbar(sigma^{-1} d_w sigma); fibre-constant,
    // so pi is the identity on it and p only removes the trace part.
    BaseField dw = base_deriv(sigma, CDir::W);
    BaseField aw(g, rank_);
    for (long pb = 0; pb < g.n_base(); ++pb) aw.at(pb) = sigma.at(pb).inverse() * dw.at(pb);
    BaseField f = base_deriv(aw, CDir::Wbar);
    BaseField out(g, rank_);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(rank_, rank_);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        Eigen::MatrixXcd m = -2.0 * f.at(pb);
        out.at(pb) = m - (m.trace() / static_cast<double>(rank_)) * id;
    }
    if (nu_fast_ && !nu_fast_->trivial()) {
        BaseField inu = nu_fast_->i_nu(sigma);
        for (long pb = 0; pb < g.n_base(); ++pb) out.at(pb) -= lambda_ * inu.at(pb);
    } else if (!nu_fast_) {
        // general fallback through the Gram solve
        MetricData h = MetricData::from_base(sigma);
        HoloFrame fr = HoloFrame::trivial(g, rank_);
        BaseField nv = nu(h, fr, a_);
        for (long pb = 0; pb < g.n_base(); ++pb)
            out.at(pb) -= lambda_ * (cd(0.0, 1.0) * nv.at(pb));
    }
    return out;
}

BaseField FamilyFlow::theta(const BaseField& sigma) const {
    BaseField pval = P(sigma);
    BaseField out(*grid_, 1);
    for (long pb = 0; pb < grid_->n_base(); ++pb) {
        Eigen::MatrixXcd s = sigma.at(pb);
        Eigen::MatrixXcd pstar = s.inverse() * pval.at(pb).adjoint() * s;
        out.at(pb)(0, 0) = (pval.at(pb) * pstar).trace().real();
    }
    return out;
}

double FamilyFlow::sup_theta(const BaseField& sigma) const {
    return theta(sigma).max_abs(dirichlet_);
}

double FamilyFlow::residual(const BaseField& sigma) const {
    return P(sigma).max_abs(dirichlet_);
}

BaseField FamilyFlow::rhs(const BaseField& sigma) const {
    BaseField pval = P(sigma);
    BaseField out(*grid_, rank_);
    for (long pb = 0; pb < grid_->n_base(); ++pb) out.at(pb) = -2.0 * sigma.at(pb) * pval.at(pb);
    hermitize(out);
    if (dirichlet_)
        for (long pb = 0; pb < grid_->n_base(); ++pb)
            if (grid_->base_boundary(pb)) out.at(pb).setZero();
    return out;
}

namespace {
void check_finite(const BaseField& f, double t) {
    for (long pb = 0; pb < f.n_points(); ++pb)
        if (!f.at(pb).allFinite())
            throw NumericalError("flow blow-up: non-finite state at t = " + std::to_string(t) +
                                 ", base point " + std::to_string(pb));
}
}  // namespace

void FamilyFlow::step_rk4(FlowState& st, double dt) const {
    BaseField s0 = base_exp(st.u);
    BaseField k1 = rhs(s0);
    BaseField s1 = s0;
    for (long pb = 0; pb < s1.n_points(); ++pb) s1.at(pb) += 0.5 * dt * k1.at(pb);
    BaseField k2 = rhs(s1);
    BaseField s2 = s0;
    for (long pb = 0; pb < s2.n_points(); ++pb) s2.at(pb) += 0.5 * dt * k2.at(pb);
    BaseField k3 = rhs(s2);
    BaseField s3 = s0;
    for (long pb = 0; pb < s3.n_points(); ++pb) s3.at(pb) += dt * k3.at(pb);
    BaseField k4 = rhs(s3);
    for (long pb = 0; pb < s0.n_points(); ++pb)
        s0.at(pb) += (dt / 6.0) * (k1.at(pb) + 2.0 * k2.at(pb) + 2.0 * k3.at(pb) + k4.at(pb));
    hermitize(s0);
    check_finite(s0, st.t + dt);
    st.u = base_log(s0);  // positivity is structural in u; throws if lost
    pin_boundary(st.u);
    st.t += dt;
    ++st.step;
}

void FamilyFlow::step_semi_implicit(FlowState& st, double dt) const {
    // d sigma/dt = L sigma + N(sigma), L = (d_x^2 + d_y^2) entrywise (the
    // linearization of -2 Delta_H^{1,0} at identity); backward Euler on L,
    // forward on the remainder.
    const ProductGrid& g = *grid_;
    const long nb = g.n_base();
    static thread_local const ProductGrid* cached_grid = nullptr;
    static thread_local double cached_dt = -1.0;
    static thread_local bool cached_dirichlet = false;
    static thread_local Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    if (cached_grid != grid_ || cached_dt != dt || cached_dirichlet != dirichlet_) {
        Eigen::MatrixXd L = Eigen::MatrixXd::Zero(nb, nb);
        const Eigen::MatrixXd& d2x = g.axis(2).d2;
        const Eigen::MatrixXd& d2y = g.axis(3).d2;
        const int n2 = g.axis(2).n, n3 = g.axis(3).n;
        for (int j1 = 0; j1 < n2; ++j1)
            for (int j2 = 0; j2 < n3; ++j2) {
                long row = g.base_index(j1, j2);
                for (int l = 0; l < n2; ++l) L(row, g.base_index(l, j2)) += d2x(j1, l);
                for (int l = 0; l < n3; ++l) L(row, g.base_index(j1, l)) += d2y(j2, l);
            }
        Eigen::MatrixXd M = Eigen::MatrixXd::Identity(nb, nb) - dt * L;
        if (dirichlet_)
            for (long pb = 0; pb < nb; ++pb)
                if (g.base_boundary(pb)) {
                    M.row(pb).setZero();
                    M(pb, pb) = 1.0;
                }
        lu.compute(M);
        cached_grid = grid_;
        cached_dt = dt;
        cached_dirichlet = dirichlet_;
    }

    BaseField s0 = base_exp(st.u);
    BaseField lin(g, rank_);
    {
        BaseField d2xs = apply_base_axis(s0, 2, g.axis(2).d2);
        BaseField d2ys = apply_base_axis(s0, 3, g.axis(3).d2);
        for (long pb = 0; pb < nb; ++pb) lin.at(pb) = d2xs.at(pb) + d2ys.at(pb);
    }
    BaseField f = rhs(s0);
    // star = sigma + dt (N(sigma)) with N = rhs - L sigma
    Eigen::MatrixXcd rhs_mat(nb, rank_ * rank_);
    for (long pb = 0; pb < nb; ++pb)
        for (int q = 0; q < rank_ * rank_; ++q) {
            cd v = s0.at(pb).data()[q] + dt * (f.at(pb).data()[q] - lin.at(pb).data()[q]);
            if (dirichlet_ && g.base_boundary(pb)) v = s0.at(pb).data()[q];
            rhs_mat(pb, q) = v;
        }
    Eigen::MatrixXcd sol = lu.solve(rhs_mat.real()).cast<cd>();
    sol += cd(0, 1) * lu.solve(rhs_mat.imag()).cast<cd>();
    BaseField snew(g, rank_);
    for (long pb = 0; pb < nb; ++pb)
        for (int q = 0; q < rank_ * rank_; ++q) snew.at(pb).data()[q] = sol(pb, q);
    hermitize(snew);
    check_finite(snew, st.t + dt);
    st.u = base_log(snew);
    pin_boundary(st.u);
    st.t += dt;
    ++st.step;
}

double FamilyFlow::stable_dt(double c_stab) const {
    return c_stab / horizontal_laplacian_radius(*grid_);
}

FlowReport FamilyFlow::run(const FlowParams& prm, const BaseField& u0) const {
    auto t0 = std::chrono::steady_clock::now();
    if (dirichlet_)
        for (long pb = 0; pb < grid_->n_base(); ++pb)
            if (grid_->base_boundary(pb) &&
                (u0.at(pb) - u_boundary_.at(pb)).norm() > 1e-12)
                throw DomainError("initial data does not match the Dirichlet boundary values at "
                                  "base point " +
                                  std::to_string(pb));
    FlowReport rep;
    FlowState st;
    st.u = u0;
    pin_boundary(st.u);
    double dt = prm.dt > 0 ? prm.dt : stable_dt(prm.c_stab);
    rep.dt_used = dt;

    BaseField sigma0 = base_exp(st.u);
    std::vector<double> det0(grid_->n_base());
    for (long pb = 0; pb < grid_->n_base(); ++pb) det0[pb] = sigma0.at(pb).determinant().real();

    double prev_sup = -1.0;
    std::vector<BaseField> theta_ring;  // last three theta fields
    auto record = [&](const FlowState& s) {
        BaseField sigma = base_exp(s.u);
        BaseField pval = P(sigma);
        BaseField th(*grid_, 1);
        for (long pb = 0; pb < grid_->n_base(); ++pb) {
            Eigen::MatrixXcd sm = sigma.at(pb);
            Eigen::MatrixXcd pstar = sm.inverse() * pval.at(pb).adjoint() * sm;
            th.at(pb)(0, 0) = (pval.at(pb) * pstar).trace().real();
        }
        theta_ring.push_back(th);
        if (theta_ring.size() > 3) theta_ring.erase(theta_ring.begin());
        if (theta_ring.size() == 3 && s.step >= prm.defect_warmup_steps) {
            BaseField lap_x = apply_base_axis(theta_ring[1], 2, grid_->axis(2).d2);
            BaseField lap_y = apply_base_axis(theta_ring[1], 3, grid_->axis(3).d2);
            const int n3 = grid_->axis(3).n;
            for (long pb = 0; pb < grid_->n_base(); ++pb) {
                if (dirichlet_) {
                    // the estimator needs its whole stencil at points obeying
                    // the flow; theta on the pinned rows carries O(h^4)
                    // equation noise, so stay clear of them
                    int j2 = static_cast<int>(pb % n3);
                    if (j2 < 3 || j2 > n3 - 4) continue;
                } else if (grid_->base_boundary(pb)) {
                    continue;
                }
                double ddt = (theta_ring[2].at(pb)(0, 0).real() -
                              theta_ring[0].at(pb)(0, 0).real()) /
                             (2.0 * dt);
                double lap10 = -0.5 * (lap_x.at(pb)(0, 0).real() + lap_y.at(pb)(0, 0).real());
                rep.live_subsolution_defect =
                    std::max(rep.live_subsolution_defect, ddt + lap10);
            }
        }
        double sup = th.max_abs(dirichlet_);
        double res = pval.max_abs(dirichlet_);
        double drift = 0.0;
        for (long pb = 0; pb < grid_->n_base(); ++pb) {
            double d = sigma.at(pb).determinant().real();
            drift = std::max(drift, std::abs(d - det0[pb]) / std::abs(det0[pb]));
        }
        rep.t.push_back(s.t);
        rep.sup_theta.push_back(sup);
        rep.residual.push_back(res);
        rep.det_drift.push_back(drift);
        rep.max_det_drift = std::max(rep.max_det_drift, drift);
        if (prev_sup >= 0.0) {
            double inc = sup - prev_sup;
            rep.worst_increase = std::max(rep.worst_increase, inc);
            if (inc > 1e-8 * (1.0 + prev_sup)) rep.monotone = false;
        }
        prev_sup = sup;
        if (s.step % prm.snapshot_every == 0) {
            rep.snapshot_t.push_back(s.t);
            rep.theta_snapshots.push_back(th);
            if (prm.store_u_snapshots) rep.u_snapshots.push_back(s.u);
        }
        return res;
    };

    double res = record(st);
    long nsteps = static_cast<long>(std::ceil(prm.t_end / dt - 1e-12));
    nsteps = std::min(nsteps, prm.max_steps);
    for (long n = 0; n < nsteps; ++n) {
        if (prm.stop_on_tol && res < prm.tol) break;
        if (prm.scheme == Scheme::RK4)
            step_rk4(st, dt);
        else
            step_semi_implicit(st, dt);
        res = record(st);
    }
    rep.converged = res < prm.tol;
    rep.final_residual = res;
    rep.steps = st.step;
    rep.u_final = st.u;
    rep.fit = fit_exponential_tail(rep.t, rep.sup_theta);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

BaseField eta(const BaseField& sigma, const BaseField& tau) {
    const ProductGrid& g = sigma.grid();
    const double r = sigma.rank();
    BaseField out(g, 1);
    for (long pb = 0; pb < g.n_base(); ++pb) {
        cd b1 = (sigma.at(pb).inverse() * tau.at(pb)).trace();
        cd b2 = (tau.at(pb).inverse() * sigma.at(pb)).trace();
        out.at(pb)(0, 0) = (b1 + b2).real() - 2.0 * r;
    }
    return out;
}

double subsolution_defect(const std::vector<double>& snapshot_t,
                          const std::vector<BaseField>& theta_snapshots) {
    if (theta_snapshots.size() < 3) return 0.0;
    const ProductGrid& g = theta_snapshots[0].grid();
    double defect = 0.0;
    for (size_t n = 1; n + 1 < theta_snapshots.size(); ++n) {
        double dt2 = snapshot_t[n + 1] - snapshot_t[n - 1];
        BaseField lap_x = apply_base_axis(theta_snapshots[n], 2, g.axis(2).d2);
        BaseField lap_y = apply_base_axis(theta_snapshots[n], 3, g.axis(3).d2);
        for (long pb = 0; pb < g.n_base(); ++pb) {
            if (g.base_boundary(pb)) continue;
            double ddt =
                (theta_snapshots[n + 1].at(pb)(0, 0).real() - theta_snapshots[n - 1].at(pb)(0, 0).real()) /
                dt2;
            double lap10 = -0.5 * (lap_x.at(pb)(0, 0).real() + lap_y.at(pb)(0, 0).real());
            defect = std::max(defect, ddt + lap10);
        }
    }
    return std::max(defect, 0.0);
}

double horizontal_laplacian_radius(const ProductGrid& g) {
    auto radius = [](const Eigen::MatrixXd& d2) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(d2);
        double r = 0.0;
        for (int i = 0; i < es.eigenvalues().size(); ++i)
            r = std::max(r, std::abs(es.eigenvalues()[i].real()));
        return r;
    };
    // Delta_H^{1,0} = -(d_x^2 + d_y^2)/2 entrywise
    return 0.5 * (radius(g.axis(2).d2) + radius(g.axis(3).d2));
}

double dirichlet_lambda1_full(const ProductGrid& g) {
    if (!g.has_boundary()) throw ConfigError("Dirichlet eigenvalue requires an annulus base");
    const int n2 = g.axis(2).n, n3 = g.axis(3).n;
    const int ni = n3 - 2;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n2 * ni, n2 * ni);
    const Eigen::MatrixXd& d2x = g.axis(2).d2;
    const Eigen::MatrixXd& d2y = g.axis(3).d2;
    auto idx = [&](int j1, int j2) { return j1 * ni + (j2 - 1); };
    for (int j1 = 0; j1 < n2; ++j1)
        for (int j2 = 1; j2 <= ni; ++j2) {
            for (int l = 0; l < n2; ++l) M(idx(j1, j2), idx(l, j2)) -= d2x(j1, l);
            for (int l = 1; l <= ni; ++l) M(idx(j1, j2), idx(j1, l)) -= d2y(j2, l);
        }
    Eigen::EigenSolver<Eigen::MatrixXd> es(M);
    double lmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        auto ev = es.eigenvalues()[i];
        if (std::abs(ev.imag()) < 1e-6 * std::max(1.0, std::abs(ev.real())))
            lmin = std::min(lmin, ev.real());
    }
    return lmin;
}

ExpFit fit_exponential_tail(const std::vector<double>& t, const std::vector<double>& sup_theta) {
    ExpFit fit;
    if (t.size() < 8 || sup_theta.empty()) return fit;
    double th0 = sup_theta.front();
    if (!(th0 > 0)) return fit;
    // candidates below 1e-2 theta(0), keep the last half of them
    std::vector<size_t> cand;
    for (size_t i = 0; i < t.size(); ++i)
        if (sup_theta[i] < 1e-2 * th0 && sup_theta[i] > 0) cand.push_back(i);
    if (cand.size() < 6) return fit;
    size_t start = cand.size() / 2;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int n = 0;
    for (size_t q = start; q < cand.size(); ++q) {
        double x = t[cand[q]], y = std::log(sup_theta[cand[q]]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        ++n;
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) return fit;
    double slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0, ymean = sy / n;
    for (size_t q = start; q < cand.size(); ++q) {
        double x = t[cand[q]], y = std::log(sup_theta[cand[q]]);
        double e = y - (slope * x + intercept);
        ss_res += e * e;
        ss_tot += (y - ymean) * (y - ymean);
    }
    fit.valid = true;
    fit.mu = -slope;
    fit.C = std::exp(intercept);
    fit.r2 = (ss_tot > 0) ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

DirichletReport dirichlet_solve(FamilyFlow& flow, const FlowParams& prm, const BaseField& u0) {
    if (!flow.dirichlet()) flow.set_dirichlet(u0);
    DirichletReport rep;
    rep.flow = flow.run(prm, u0);
    if (!rep.flow.converged)
        throw NumericalError("Dirichlet flow did not reach tolerance " + std::to_string(prm.tol) +
                             " (final residual " + std::to_string(rep.flow.final_residual) + ")");
    rep.lambda1_full = dirichlet_lambda1_full(flow.grid());
    rep.mu_theta = rep.flow.fit.mu;
    rep.mu_p = 0.5 * rep.flow.fit.mu;
    return rep;
}

}  // namespace fhe
