#include "subsel/numkit.hpp"

#include <cmath>
#include <cstdio>

#include "subsel/errors.hpp"

namespace subsel::numkit {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::vector<double> DenseMatrix::multiply(std::span<const double> v) const {
    if (v.size() != cols_) throw ContractError("DenseMatrix::multiply: dimension mismatch");
    std::vector<double> out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* r = entries_.data() + i * cols_;
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += r[j] * v[j];
        out[i] = s;
    }
    return out;
}

double DenseMatrix::asymmetry() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = i + 1; j < cols_; ++j)
            worst = std::max(worst, std::fabs((*this)(i, j) - (*this)(j, i)));
    return worst;
}

bool DenseMatrix::all_finite() const {
    for (double e : entries_)
        if (!std::isfinite(e)) return false;
    return true;
}

LinearOperator LinearOperator::from_matrix(const DenseMatrix& a) {
    return LinearOperator{a.rows(), [a](std::span<const double> v) { return a.multiply(v); }};
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(double alpha, std::span<double> x) {
    for (double& v : x) v *= alpha;
}

bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

CholeskyFactor CholeskyFactor::compute(const DenseMatrix& a, double symmetry_tol) {
    if (a.rows() != a.cols()) throw ContractError("cholesky: matrix must be square");
    if (!a.all_finite()) throw NumericError("cholesky: non-finite matrix entry");
    if (a.asymmetry() > symmetry_tol) throw ContractError("cholesky: matrix is not symmetric");

    const std::size_t n = a.rows();
    CholeskyFactor f;
    f.dim_ = n;
    f.lower_.assign(n * n, 0.0);
    auto l = [&f, n](std::size_t i, std::size_t j) -> double& { return f.lower_[i * n + j]; };

    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) {
            char msg[96];
            std::snprintf(msg, sizeof(msg),
                          "cholesky: non-positive pivot %.6g at index %zu (matrix not SPD)", d, j);
            throw DecompositionError(msg, j);
        }
        const double dj = std::sqrt(d);
        l(j, j) = dj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / dj;
        }
    }
    return f;
}

std::vector<double> CholeskyFactor::solve(std::span<const double> b) const {
    if (b.size() != dim_) throw ContractError("cholesky solve: dimension mismatch");
    const std::size_t n = dim_;
    std::vector<double> y(b.begin(), b.end());
    // forward: L y = b
    for (std::size_t i = 0; i < n; ++i) {
        double s = y[i];
        const double* row = lower_.data() + i * n;
        for (std::size_t k = 0; k < i; ++k) s -= row[k] * y[k];
        y[i] = s / row[i];
    }
    // backward: L^T x = y
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= lower_[k * n + ii] * y[k];
        y[ii] = s / lower_[ii * n + ii];
    }
    return y;
}

std::vector<double> cholesky_solve(const DenseMatrix& a, std::span<const double> b,
                                   double symmetry_tol) {
    if (b.size() != a.rows()) throw ContractError("cholesky_solve: dimension mismatch");
    return CholeskyFactor::compute(a, symmetry_tol).solve(b);
}

CgResult cg_solve(const LinearOperator& a, std::span<const double> b, double tol,
                  std::size_t max_iter) {
    if (!(tol > 0.0)) throw ContractError("cg_solve: tol must be positive");
    if (b.size() != a.dim) throw ContractError("cg_solve: dimension mismatch");
    if (max_iter == 0) max_iter = 10 * a.dim;

    CgResult res;
    res.x.assign(a.dim, 0.0);

    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }

    std::vector<double> r(b.begin(), b.end()); // r = b - A*0
    std::vector<double> p = r;
    double rr = dot(r, r);
    const double target = tol * bnorm;

    while (res.iterations < max_iter && std::sqrt(rr) > target) {
        std::vector<double> ap = a.apply(p);
        const double pap = dot(p, ap);
        const double alpha = rr / pap;
        axpy(alpha, p, res.x);
        axpy(-alpha, ap, r);
        const double rr_next = dot(r, r);
        if (!std::isfinite(rr_next) || !all_finite(res.x)) {
            throw NumericError("cg_solve: numeric breakdown (NaN/Inf in iterate)");
        }
        const double beta = rr_next / rr;
        rr = rr_next;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
        ++res.iterations;
    }

    std::vector<double> ax = a.apply(res.x);
    for (std::size_t i = 0; i < ax.size(); ++i) ax[i] -= b[i];
    res.residual_norm = norm2(ax);
    res.converged = res.residual_norm <= target * (1.0 + 1e-12);
    return res;
}

} // namespace subsel::numkit
