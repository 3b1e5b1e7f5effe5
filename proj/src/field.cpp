#include "fhe/field.hpp"

#include <cmath>

#include "fhe/errors.hpp"

namespace fhe {

MatrixField& MatrixField::operator+=(const MatrixField& o) {
    assert(a_.size() == o.a_.size());
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}
MatrixField& MatrixField::operator-=(const MatrixField& o) {
    assert(a_.size() == o.a_.size());
    for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}
MatrixField& MatrixField::operator*=(cd c) {
    for (auto& v : a_) v *= c;
    return *this;
}

double MatrixField::max_abs() const {
    double m = 0.0;
    for (long p = 0; p < n_points(); ++p) m = std::max(m, at(p).norm());
    return m;
}

BaseField& BaseField::operator+=(const BaseField& o) {
    assert(a_.size() == o.a_.size());
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}
BaseField& BaseField::operator-=(const BaseField& o) {
    assert(a_.size() == o.a_.size());
    for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}
BaseField& BaseField::operator*=(cd c) {
    for (auto& v : a_) v *= c;
    return *this;
}

double BaseField::max_abs(bool interior_only) const {
    double m = 0.0;
    for (long pb = 0; pb < n_points(); ++pb) {
        if (interior_only && grid_->base_boundary(pb)) continue;
        m = std::max(m, at(pb).norm());
    }
    return m;
}

MatrixField BaseField::extend(Degree tag) const {
    MatrixField out(*grid_, rank_, tag);
    for (long pf = 0; pf < grid_->n_fibre(); ++pf)
        for (long pb = 0; pb < grid_->n_base(); ++pb)
            out.at(pf * grid_->n_base() + pb) = at(pb);
    return out;
}

MatrixField constant_field(const ProductGrid& g, const Eigen::MatrixXcd& m, Degree tag) {
    MatrixField f(g, static_cast<int>(m.rows()), tag);
    for (long p = 0; p < g.n_points(); ++p) f.at(p) = m;
    return f;
}

BaseField constant_base_field(const ProductGrid& g, const Eigen::MatrixXcd& m) {
    BaseField f(g, static_cast<int>(m.rows()));
    for (long pb = 0; pb < g.n_base(); ++pb) f.at(pb) = m;
    return f;
}

MatrixField identity_field(const ProductGrid& g, int rank) {
    return constant_field(g, Eigen::MatrixXcd::Identity(rank, rank));
}

MatrixField mul(const MatrixField& a, const MatrixField& b) {
    MatrixField out(a.grid(), a.rank(), a.tag());
    for (long p = 0; p < a.n_points(); ++p) out.at(p) = a.at(p) * b.at(p);
    return out;
}

MatrixField adjoint(const MatrixField& a) {
    MatrixField out(a.grid(), a.rank(), a.tag());
    for (long p = 0; p < a.n_points(); ++p) out.at(p) = a.at(p).adjoint();
    return out;
}

MatrixField commutator(const MatrixField& a, const MatrixField& b) {
    MatrixField out(a.grid(), a.rank(), a.tag());
    for (long p = 0; p < a.n_points(); ++p)
        out.at(p) = a.at(p) * b.at(p) - b.at(p) * a.at(p);
    return out;
}

void hermitize(BaseField& f) {
    for (long pb = 0; pb < f.n_points(); ++pb) {
        Eigen::MatrixXcd m = f.at(pb);
        f.at(pb) = 0.5 * (m + m.adjoint().eval());
    }
}

namespace {
template <typename F>
Eigen::MatrixXcd herm_fn(const Eigen::MatrixXcd& m, F fn) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    if (m.rows() <= 3)
        es.computeDirect(m);
    else
        es.compute(m);
    Eigen::VectorXd ev = es.eigenvalues();
    for (int i = 0; i < ev.size(); ++i) ev[i] = fn(ev[i]);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}
}  // namespace

Eigen::MatrixXcd herm_sqrt(const Eigen::MatrixXcd& m, double floor) {
    return herm_fn(m, [floor](double x) { return std::sqrt(std::max(x, floor)); });
}
Eigen::MatrixXcd herm_inv_sqrt(const Eigen::MatrixXcd& m, double floor) {
    return herm_fn(m, [floor](double x) { return 1.0 / std::sqrt(std::max(x, floor)); });
}
Eigen::MatrixXcd herm_exp(const Eigen::MatrixXcd& m) {
    return herm_fn(m, [](double x) { return std::exp(x); });
}
Eigen::MatrixXcd herm_log(const Eigen::MatrixXcd& m, double floor) {
    double mn = herm_min_eig(m);
    if (mn <= 0.0)
        throw DomainError("matrix logarithm of a non-positive Hermitian matrix (min eig " +
                          std::to_string(mn) + ")");
    return herm_fn(m, [floor](double x) { return std::log(std::max(x, floor)); });
}
double herm_min_eig(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    if (m.rows() <= 3)
        es.computeDirect(m);
    else
        es.compute(m);
    return es.eigenvalues().minCoeff();
}

BaseField base_exp(const BaseField& u) {
    BaseField out(u.grid(), u.rank());
    for (long pb = 0; pb < u.n_points(); ++pb) out.at(pb) = herm_exp(u.at(pb));
    return out;
}

BaseField base_log(const BaseField& s) {
    BaseField out(s.grid(), s.rank());
    for (long pb = 0; pb < s.n_points(); ++pb) out.at(pb) = herm_log(s.at(pb));
    return out;
}

}  // namespace fhe
