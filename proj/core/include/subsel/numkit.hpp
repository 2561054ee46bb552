#ifndef SUBSEL_NUMKIT_HPP
#define SUBSEL_NUMKIT_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace subsel::numkit {

// Dense row-major matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {}

    static DenseMatrix identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    std::span<const double> row(std::size_t i) const {
        return {entries_.data() + i * cols_, cols_};
    }
    const std::vector<double>& entries() const { return entries_; }
    std::vector<double>& entries() { return entries_; }

    std::vector<double> multiply(std::span<const double> v) const;

    // max |A - A^T| over all entries; 0 for non-square? square required.
    double asymmetry() const;
    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

// Matrix-free symmetric operator, the CG-side view of a Hessian.
struct LinearOperator {
    std::size_t dim = 0;
    std::function<std::vector<double>(std::span<const double>)> apply;

    static LinearOperator from_matrix(const DenseMatrix& a);
};

// Vector helpers shared across modules.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y); // y += alpha*x
void scale(double alpha, std::span<double> x);
bool all_finite(std::span<const double> a);

// Cached lower-triangular Cholesky factor of an SPD matrix.
class CholeskyFactor {
public:
    static CholeskyFactor compute(const DenseMatrix& a, double symmetry_tol = 1e-9);
    std::vector<double> solve(std::span<const double> b) const;
    std::size_t dim() const { return dim_; }

private:
    std::size_t dim_ = 0;
    std::vector<double> lower_; // row-major lower triangle, full storage
};

// One-shot SPD solve. Checks symmetry (tolerance on max |A - A^T|), throws
// DecompositionError naming the pivot index when a pivot is <= 0.
std::vector<double> cholesky_solve(const DenseMatrix& a, std::span<const double> b,
                                   double symmetry_tol = 1e-9);

struct CgResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    bool converged = false;
    double residual_norm = 0.0; // true residual ||A x - b||_2 at exit
};

inline constexpr double kCgDefaultTol = 1e-8;

// Unpreconditioned conjugate gradient from x0 = 0. Stops when
// ||A x - b||_2 <= tol * ||b||_2; max_iter = 0 means 10 * dim.
CgResult cg_solve(const LinearOperator& a, std::span<const double> b,
                  double tol = kCgDefaultTol, std::size_t max_iter = 0);

} // namespace subsel::numkit

#endif
