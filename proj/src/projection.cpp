#include "fhe/projection.hpp"

#include <cmath>

#include "fhe/errors.hpp"

namespace fhe {

HoloFrame HoloFrame::trivial(const ProductGrid& g, int rank, double tol) {
    HoloFrame fr;
    fr.grid_ = &g;
    fr.rank_ = rank;
    fr.dim_ = rank * rank;
    fr.tol_ = tol;
    fr.constant_in_z_ = true;
    fr.const_basis_.resize(static_cast<size_t>(g.n_base()) * fr.dim_);
    for (long pb = 0; pb < g.n_base(); ++pb)
        for (int i = 0; i < rank; ++i)
            for (int j = 0; j < rank; ++j) {
                Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(rank, rank);
                e(i, j) = 1.0;
                fr.const_basis_[pb * fr.dim_ + i * rank + j] = e;
            }
    return fr;
}

HoloFrame HoloFrame::solve(const DolbeaultData& d0, double tol) {
    const ProductGrid& g = d0.grid();
    const int r = d0.rank();
    const long nf = g.n_fibre();
    const long dofs = nf * r * r;

    HoloFrame fr;
    fr.grid_ = &g;
    fr.rank_ = r;
    fr.tol_ = tol;
    fr.constant_in_z_ = false;

    // Vertical dbar on End at fixed b: xi -> d_zbar xi + [aV, xi], assembled
    // as a dense operator on the fibre slice; the kernel of D^dag W D is the
    // fibrewise holomorphic endomorphism space. The energy derivative keeps
    // the Nyquist modes so the Gram has no spurious kernel.
    const Eigen::MatrixXcd& d1a = g.axis(0).d1e;
    const Eigen::MatrixXcd& d1b = g.axis(1).d1e;
    const int n0 = g.axis(0).n, n1 = g.axis(1).n;

    int dim_prev = -1;
    std::vector<std::vector<cd>> all;
    for (long pb = 0; pb < g.n_base(); ++pb) {
        Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(dofs, dofs);
        // derivative part, 0.5 (d_x1 + i d_x2) acting entrywise
        for (int i1 = 0; i1 < n0; ++i1)
            for (int i2 = 0; i2 < n1; ++i2) {
                long row_pt = static_cast<long>(i1) * n1 + i2;
                for (int l = 0; l < n0; ++l) {
                    cd c = 0.5 * d1a(i1, l);
                    if (c == cd(0, 0)) continue;
                    long col_pt = static_cast<long>(l) * n1 + i2;
                    for (int q = 0; q < r * r; ++q) D(row_pt * r * r + q, col_pt * r * r + q) += c;
                }
                for (int l = 0; l < n1; ++l) {
                    cd c = cd(0.0, 0.5) * d1b(i2, l);
                    if (c == cd(0, 0)) continue;
                    long col_pt = static_cast<long>(i1) * n1 + l;
                    for (int q = 0; q < r * r; ++q) D(row_pt * r * r + q, col_pt * r * r + q) += c;
                }
            }
        // commutator part [aV, xi], pointwise block; entries are stored
        // column-major, entry (i,j) at flat index j*r + i
        for (long pf = 0; pf < nf; ++pf) {
            Eigen::MatrixXcd A = d0.aV.at(pf * g.n_base() + pb);
            // [A, xi]_{ij} = sum_m A_{im} xi_{mj} - xi_{im} A_{mj}
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < r; ++j)
                    for (int m = 0; m < r; ++m) {
                        D(pf * r * r + j * r + i, pf * r * r + j * r + m) += A(i, m);
                        D(pf * r * r + j * r + i, pf * r * r + m * r + i) -= A(m, j);
                    }
        }
        Eigen::VectorXd w(dofs);
        for (long pf = 0; pf < nf; ++pf)
            for (int q = 0; q < r * r; ++q) w[pf * r * r + q] = g.fibre_weight(pf);
        Eigen::MatrixXcd Q = D.adjoint() * w.asDiagonal() * D;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Q);
        int dim = 0;
        while (dim < dofs && es.eigenvalues()[dim] < tol) ++dim;
        if (dim_prev >= 0 && dim != dim_prev)
            throw AssumptionError(
                "fibrewise holomorphic endomorphism dimension jumps over the base (" +
                std::to_string(dim_prev) + " vs " + std::to_string(dim) + ")");
        dim_prev = dim;
        std::vector<cd> vecs(static_cast<size_t>(dim) * dofs);
        for (int i = 0; i < dim; ++i)
            for (long q = 0; q < dofs; ++q) vecs[i * dofs + q] = es.eigenvectors()(q, i);
        all.push_back(std::move(vecs));
    }
    fr.dim_ = dim_prev;
    fr.general_basis_.resize(static_cast<size_t>(g.n_base()) * fr.dim_ * nf * r * r);
    for (long pb = 0; pb < g.n_base(); ++pb)
        for (int i = 0; i < fr.dim_; ++i)
            for (long q = 0; q < dofs; ++q)
                fr.general_basis_[((pb * fr.dim_ + i) * nf) * r * r + q] = all[pb][i * dofs + q];
    return fr;
}

Eigen::MatrixXcd HoloFrame::basis(long pb, int i, long pf) const {
    if (constant_in_z_) return const_basis_[pb * dim_ + i];
    Eigen::MatrixXcd m(rank_, rank_);
    const cd* src =
        general_basis_.data() + ((pb * dim_ + i) * grid_->n_fibre() + pf) * rank_ * rank_;
    for (int a = 0; a < rank_ * rank_; ++a) m.data()[a] = src[a];
    return m;
}

MatrixField SectionF::reconstruct() const {
    const ProductGrid& g = frame->grid();
    MatrixField out(g, frame->rank());
    for (long pf = 0; pf < g.n_fibre(); ++pf)
        for (long pb = 0; pb < g.n_base(); ++pb) {
            Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(frame->rank(), frame->rank());
            for (int i = 0; i < frame->dim(); ++i) v += coeffs(pb, i) * frame->basis(pb, i, pf);
            out.at(pf * g.n_base() + pb) = v;
        }
    return out;
}

BaseField SectionF::to_base() const {
    assert(frame->constant_in_z());
    const ProductGrid& g = frame->grid();
    BaseField out(g, frame->rank());
    for (long pb = 0; pb < g.n_base(); ++pb) {
        Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(frame->rank(), frame->rank());
        for (int i = 0; i < frame->dim(); ++i) v += coeffs(pb, i) * frame->basis(pb, i, 0);
        out.at(pb) = v;
    }
    return out;
}

SectionF section_from_base(const HoloFrame& fr, const BaseField& m) {
    assert(fr.constant_in_z());
    const ProductGrid& g = fr.grid();
    const int r = fr.rank();
    SectionF s;
    s.frame = &fr;
    s.coeffs.resize(g.n_base(), fr.dim());
    // elementary-matrix frame: coefficients are the entries
    for (long pb = 0; pb < g.n_base(); ++pb)
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) s.coeffs(pb, i * r + j) = m.at(pb)(i, j);
    return s;
}

namespace {

// fibrewise complex L^2(h) pairing <f, e_i>_h = int tr(f e_i^{*h}) omega^n
// with e^{*h} = sigma^{-1} e^dag sigma.
void gram_and_moments(const MetricData& h, const HoloFrame& fr, const MatrixField* f, long pb,
                      Eigen::MatrixXcd& G, Eigen::VectorXcd* m) {
    const ProductGrid& g = fr.grid();
    const int dim = fr.dim();
    G = Eigen::MatrixXcd::Zero(dim, dim);
    if (m) *m = Eigen::VectorXcd::Zero(dim);
    for (long pf = 0; pf < g.n_fibre(); ++pf) {
        const double w = g.fibre_weight(pf);
        long p = pf * g.n_base() + pb;
        Eigen::MatrixXcd s = h.sigma.at(p);
        Eigen::MatrixXcd si = s.inverse();
        for (int i = 0; i < dim; ++i) {
            // normal equations row i: sum_j <e_j, e_i>_h c_j = <f, e_i>_h
            Eigen::MatrixXcd ei_star = si * fr.basis(pb, i, pf).adjoint() * s;
            for (int j = 0; j < dim; ++j)
                G(i, j) += w * (fr.basis(pb, j, pf) * ei_star).trace();
            if (m) (*m)[i] += w * (f->at(p) * ei_star).trace();
        }
    }
}

}  // namespace

SectionF pi(const MetricData& h, const HoloFrame& fr, const MatrixField& f, GramReport* report) {
    const ProductGrid& g = fr.grid();
    SectionF out;
    out.frame = &fr;
    out.coeffs.resize(g.n_base(), fr.dim());
    double max_cond = 0.0;
    for (long pb = 0; pb < g.n_base(); ++pb) {
        Eigen::MatrixXcd G;
        Eigen::VectorXcd m;
        gram_and_moments(h, fr, &f, pb, G, &m);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
        double lmin = es.eigenvalues().minCoeff(), lmax = es.eigenvalues().maxCoeff();
        double cond = (lmin > 0) ? lmax / lmin : std::numeric_limits<double>::infinity();
        max_cond = std::max(max_cond, cond);
        if (!(lmin > 0) || cond > 1e10)
            throw NumericalError("projection Gram matrix ill-conditioned at base point " +
                                 std::to_string(pb) + " (cond " + std::to_string(cond) + ")");
        Eigen::LLT<Eigen::MatrixXcd> llt(G);
        out.coeffs.row(pb) = llt.solve(m).transpose();
    }
    if (report) report->max_condition = max_cond;
    return out;
}

SectionF p(const MetricData& h, const HoloFrame& fr, const MatrixField& f, GramReport* report) {
    SectionF s = pi(h, fr, f, report);
    const ProductGrid& g = fr.grid();
    const int r = fr.rank();
    if (fr.constant_in_z()) {
        for (long pb = 0; pb < g.n_base(); ++pb) {
            cd tr(0, 0);
            for (int i = 0; i < r; ++i) tr += s.coeffs(pb, i * r + i);
            for (int i = 0; i < r; ++i) s.coeffs(pb, i * r + i) -= tr / static_cast<double>(r);
        }
        return s;
    }
    // general frames: subtract the pointwise fibre trace of the projection,
    // re-projected onto the frame
    MatrixField rec = s.reconstruct();
    for (long p4 = 0; p4 < rec.n_points(); ++p4) {
        cd tr = rec.at(p4).trace() / static_cast<double>(r);
        rec.at(p4) -= tr * Eigen::MatrixXcd::Identity(r, r);
    }
    return pi(h, fr, rec, nullptr);
}

void split_hs(const MetricData& h, const HoloFrame& fr, const SectionF& s, SectionF& herm,
              SectionF& skew) {
    assert(fr.constant_in_z());
    const ProductGrid& g = fr.grid();
    BaseField m = s.to_base();
    BaseField hpart(g, fr.rank()), spart(g, fr.rank());
    for (long pb = 0; pb < g.n_base(); ++pb) {
        Eigen::MatrixXcd sig = h.sigma.at(pb);  // fibre-constant metric: pf = 0 slice
        Eigen::MatrixXcd adj = sig.inverse() * m.at(pb).adjoint() * sig;
        hpart.at(pb) = 0.5 * (m.at(pb) + adj);
        spart.at(pb) = 0.5 * (m.at(pb) - adj);
    }
    herm = section_from_base(fr, hpart);
    skew = section_from_base(fr, spart);
}

SectionF nabla_F(const MetricData& h, const HoloFrame& fr, const SectionF& s, CDir dir) {
    assert(dir == CDir::W || dir == CDir::Wbar);
    DolbeaultData d0 = DolbeaultData::trivial(fr.grid(), fr.rank());
    Connection conn = chern_connection(h, d0);
    MatrixField rec = s.reconstruct();
    MatrixField der = conn_apply(conn, rec, dir, ConnAction::End);
    der.set_tag(Degree::Scalar);
    return pi(h, fr, der, nullptr);
}

BaseField frame_metric_pair(const MetricData& h, const HoloFrame& fr, const SectionF& s,
                            const SectionF& t) {
    const ProductGrid& g = fr.grid();
    MatrixField sf = s.reconstruct();
    MatrixField tf = t.reconstruct();
    MatrixField tstar = h_adjoint(h, tf);
    BaseField out(g, 1);
    for (long pf = 0; pf < g.n_fibre(); ++pf) {
        const double w = g.fibre_weight(pf);
        for (long pb = 0; pb < g.n_base(); ++pb) {
            long p = pf * g.n_base() + pb;
            out.at(pb)(0, 0) += w * (sf.at(p) * tstar.at(p)).trace();
        }
    }
    return out;
}

double distance_sq(const BaseField& sigma1, const BaseField& sigma2) {
    const ProductGrid& g = sigma1.grid();
    double total = 0.0;
    for (long pb = 0; pb < g.n_base(); ++pb) {
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es(sigma2.at(pb),
                                                                      sigma1.at(pb));
        double db2 = 0.0;
        for (int i = 0; i < es.eigenvalues().size(); ++i) {
            double l = std::log(es.eigenvalues()[i]);
            db2 += l * l;
        }
        total += g.base_weight(pb) * db2;
    }
    return total;
}

}  // namespace fhe
