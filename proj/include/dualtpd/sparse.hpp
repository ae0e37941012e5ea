#pragma once

// Compressed sparse row matrices and the handful of dense vector kernels the
// solvers need. Everything is double precision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dualtpd {

using Vector = std::vector<double>;
using Index = std::int64_t;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {
inline void require_dims(bool ok, const char* what)
{
    if (!ok) {
        throw DimensionError(what);
    }
}
} // namespace detail

// ---------------------------------------------------------------------------
// Vector helpers

inline double dot(std::span<const double> a, std::span<const double> b)
{
    detail::require_dims(a.size() == b.size(), "dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline double norm2(std::span<const double> a)
{
    return std::sqrt(dot(a, a));
}

/// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y)
{
    detail::require_dims(x.size() == y.size(), "axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] += a * x[i];
    }
}

inline bool all_finite(std::span<const double> a)
{
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// CSR matrix

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Real matrix in compressed sparse row form. Column indices inside a row are
/// strictly increasing; duplicates are summed at construction.
class SparseMatrix {
public:
    SparseMatrix() : row_offsets_(1, 0) {}

    SparseMatrix(Index nrows, Index ncols)
        : nrows_(nrows), ncols_(ncols), row_offsets_(static_cast<std::size_t>(nrows) + 1, 0)
    {
    }

    /// Raw CSR constructor; validates the structural invariants.
    SparseMatrix(Index nrows, Index ncols, std::vector<Index> row_offsets,
                 std::vector<Index> cols, std::vector<double> values)
        : nrows_(nrows), ncols_(ncols), row_offsets_(std::move(row_offsets)),
          cols_(std::move(cols)), values_(std::move(values))
    {
        validate();
    }

    /// Sums duplicate (row, col) entries. Explicit zeros are kept so the
    /// sparsity pattern does not depend on cancellation.
    static SparseMatrix from_triplets(Index nrows, Index ncols, std::vector<Triplet> triplets)
    {
        for (const auto& t : triplets) {
            if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols) {
                throw DimensionError("from_triplets: entry out of range");
            }
        }
        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        SparseMatrix m(nrows, ncols);
        m.cols_.reserve(triplets.size());
        m.values_.reserve(triplets.size());
        std::size_t k = 0;
        for (Index r = 0; r < nrows; ++r) {
            while (k < triplets.size() && triplets[k].row == r) {
                const Index c = triplets[k].col;
                double v = 0.0;
                while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) {
                    v += triplets[k].value;
                    ++k;
                }
                m.cols_.push_back(c);
                m.values_.push_back(v);
            }
            m.row_offsets_[static_cast<std::size_t>(r) + 1] = static_cast<Index>(m.cols_.size());
        }
        return m;
    }

    static SparseMatrix identity(Index n)
    {
        std::vector<Index> offs(static_cast<std::size_t>(n) + 1);
        std::iota(offs.begin(), offs.end(), Index{0});
        std::vector<Index> cols(static_cast<std::size_t>(n));
        std::iota(cols.begin(), cols.end(), Index{0});
        return SparseMatrix(n, n, std::move(offs), std::move(cols), Vector(static_cast<std::size_t>(n), 1.0));
    }

    [[nodiscard]] Index rows() const noexcept { return nrows_; }
    [[nodiscard]] Index cols() const noexcept { return ncols_; }
    [[nodiscard]] std::size_t nnz() const noexcept { return values_.size(); }

    [[nodiscard]] const std::vector<Index>& row_offsets() const noexcept { return row_offsets_; }
    [[nodiscard]] const std::vector<Index>& col_indices() const noexcept { return cols_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] std::vector<double>& values() noexcept { return values_; }

    [[nodiscard]] std::span<const Index> row_cols(Index r) const
    {
        const auto b = static_cast<std::size_t>(row_offsets_[static_cast<std::size_t>(r)]);
        const auto e = static_cast<std::size_t>(row_offsets_[static_cast<std::size_t>(r) + 1]);
        return {cols_.data() + b, e - b};
    }
    [[nodiscard]] std::span<const double> row_values(Index r) const
    {
        const auto b = static_cast<std::size_t>(row_offsets_[static_cast<std::size_t>(r)]);
        const auto e = static_cast<std::size_t>(row_offsets_[static_cast<std::size_t>(r) + 1]);
        return {values_.data() + b, e - b};
    }

    /// Entry lookup by binary search; zero when not stored.
    [[nodiscard]] double at(Index r, Index c) const
    {
        const auto cs = row_cols(r);
        const auto it = std::lower_bound(cs.begin(), cs.end(), c);
        if (it == cs.end() || *it != c) {
            return 0.0;
        }
        return row_values(r)[static_cast<std::size_t>(it - cs.begin())];
    }

    [[nodiscard]] Vector diagonal() const
    {
        Vector d(static_cast<std::size_t>(std::min(nrows_, ncols_)), 0.0);
        for (Index r = 0; r < static_cast<Index>(d.size()); ++r) {
            d[static_cast<std::size_t>(r)] = at(r, r);
        }
        return d;
    }

    [[nodiscard]] SparseMatrix transpose() const
    {
        std::vector<Index> offs(static_cast<std::size_t>(ncols_) + 1, 0);
        for (Index c : cols_) {
            ++offs[static_cast<std::size_t>(c) + 1];
        }
        std::partial_sum(offs.begin(), offs.end(), offs.begin());
        std::vector<Index> cols(cols_.size());
        Vector vals(values_.size());
        std::vector<Index> fill(offs.begin(), offs.end() - 1);
        for (Index r = 0; r < nrows_; ++r) {
            const auto cs = row_cols(r);
            const auto vs = row_values(r);
            for (std::size_t k = 0; k < cs.size(); ++k) {
                const auto dst = static_cast<std::size_t>(fill[static_cast<std::size_t>(cs[k])]++);
                cols[dst] = r;
                vals[dst] = vs[k];
            }
        }
        return SparseMatrix(ncols_, nrows_, std::move(offs), std::move(cols), std::move(vals));
    }

    /// Largest |A_ij - A_ji| relative to the largest |A_ij|.
    [[nodiscard]] double relative_asymmetry() const
    {
        if (nrows_ != ncols_) {
            return std::numeric_limits<double>::infinity();
        }
        double amax = 0.0;
        double dmax = 0.0;
        for (Index r = 0; r < nrows_; ++r) {
            const auto cs = row_cols(r);
            const auto vs = row_values(r);
            for (std::size_t k = 0; k < cs.size(); ++k) {
                amax = std::max(amax, std::abs(vs[k]));
                dmax = std::max(dmax, std::abs(vs[k] - at(cs[k], r)));
            }
        }
        return amax > 0.0 ? dmax / amax : 0.0;
    }

private:
    void validate() const
    {
        detail::require_dims(nrows_ >= 0 && ncols_ >= 0, "SparseMatrix: negative dimension");
        detail::require_dims(row_offsets_.size() == static_cast<std::size_t>(nrows_) + 1,
                             "SparseMatrix: row_offsets length must be nrows+1");
        detail::require_dims(row_offsets_.front() == 0, "SparseMatrix: row_offsets must start at 0");
        detail::require_dims(static_cast<std::size_t>(row_offsets_.back()) == cols_.size()
                                 && cols_.size() == values_.size(),
                             "SparseMatrix: row_offsets/cols/values disagree");
        for (Index r = 0; r < nrows_; ++r) {
            detail::require_dims(row_offsets_[static_cast<std::size_t>(r)] <= row_offsets_[static_cast<std::size_t>(r) + 1],
                                 "SparseMatrix: row_offsets must be nondecreasing");
            const auto cs = row_cols(r);
            for (std::size_t k = 0; k < cs.size(); ++k) {
                detail::require_dims(cs[k] >= 0 && cs[k] < ncols_, "SparseMatrix: column out of range");
                detail::require_dims(k == 0 || cs[k - 1] < cs[k],
                                     "SparseMatrix: columns in a row must be strictly increasing");
            }
        }
    }

    Index nrows_ = 0;
    Index ncols_ = 0;
    std::vector<Index> row_offsets_;
    std::vector<Index> cols_;
    std::vector<double> values_;
};

/// y = A x. Rows are processed sequentially, each summed left to right.
inline void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y)
{
    detail::require_dims(static_cast<Index>(x.size()) == a.cols(), "spmv: x length != ncols");
    detail::require_dims(static_cast<Index>(y.size()) == a.rows(), "spmv: y length != nrows");
    const auto& offs = a.row_offsets();
    const auto& cols = a.col_indices();
    const auto& vals = a.values();
    for (Index r = 0; r < a.rows(); ++r) {
        double s = 0.0;
        for (Index k = offs[static_cast<std::size_t>(r)]; k < offs[static_cast<std::size_t>(r) + 1]; ++k) {
            s += vals[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])];
        }
        y[static_cast<std::size_t>(r)] = s;
    }
}

inline Vector spmv(const SparseMatrix& a, std::span<const double> x)
{
    Vector y(static_cast<std::size_t>(a.rows()));
    spmv(a, x, y);
    return y;
}

/// y = A^T x, scattered row by row.
inline void spmv_transpose(const SparseMatrix& a, std::span<const double> x, std::span<double> y)
{
    detail::require_dims(static_cast<Index>(x.size()) == a.rows(), "spmv_transpose: x length != nrows");
    detail::require_dims(static_cast<Index>(y.size()) == a.cols(), "spmv_transpose: y length != ncols");
    std::fill(y.begin(), y.end(), 0.0);
    const auto& offs = a.row_offsets();
    const auto& cols = a.col_indices();
    const auto& vals = a.values();
    for (Index r = 0; r < a.rows(); ++r) {
        const double xr = x[static_cast<std::size_t>(r)];
        for (Index k = offs[static_cast<std::size_t>(r)]; k < offs[static_cast<std::size_t>(r) + 1]; ++k) {
            y[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])] += vals[static_cast<std::size_t>(k)] * xr;
        }
    }
}

inline Vector spmv_transpose(const SparseMatrix& a, std::span<const double> x)
{
    Vector y(static_cast<std::size_t>(a.cols()));
    spmv_transpose(a, x, y);
    return y;
}

/// C = A B (Gustavson row-by-row with a dense accumulator).
inline SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b)
{
    detail::require_dims(a.cols() == b.rows(), "multiply: inner dimensions differ");
    const auto nc = static_cast<std::size_t>(b.cols());
    std::vector<double> acc(nc, 0.0);
    std::vector<Index> marker(nc, -1);
    std::vector<Index> pattern;
    std::vector<Index> offs(static_cast<std::size_t>(a.rows()) + 1, 0);
    std::vector<Index> cols;
    Vector vals;
    for (Index r = 0; r < a.rows(); ++r) {
        pattern.clear();
        const auto acs = a.row_cols(r);
        const auto avs = a.row_values(r);
        for (std::size_t ka = 0; ka < acs.size(); ++ka) {
            const auto bcs = b.row_cols(acs[ka]);
            const auto bvs = b.row_values(acs[ka]);
            for (std::size_t kb = 0; kb < bcs.size(); ++kb) {
                const auto c = static_cast<std::size_t>(bcs[kb]);
                if (marker[c] != r) {
                    marker[c] = r;
                    acc[c] = 0.0;
                    pattern.push_back(bcs[kb]);
                }
                acc[c] += avs[ka] * bvs[kb];
            }
        }
        std::sort(pattern.begin(), pattern.end());
        for (Index c : pattern) {
            cols.push_back(c);
            vals.push_back(acc[static_cast<std::size_t>(c)]);
        }
        offs[static_cast<std::size_t>(r) + 1] = static_cast<Index>(cols.size());
    }
    return SparseMatrix(a.rows(), b.cols(), std::move(offs), std::move(cols), std::move(vals));
}

/// P^T S P, the Galerkin coarse operator. When S is symmetric (to 1e-12) the
/// product is averaged with its transpose so the result is exactly symmetric.
inline SparseMatrix galerkin_triple(const SparseMatrix& p, const SparseMatrix& s)
{
    detail::require_dims(s.rows() == s.cols(), "galerkin_triple: S must be square");
    detail::require_dims(p.rows() == s.rows(), "galerkin_triple: P rows != S size");
    SparseMatrix coarse = multiply(p.transpose(), multiply(s, p));
    if (s.relative_asymmetry() <= 1e-12) {
        const SparseMatrix ct = coarse.transpose();
        if (ct.col_indices() == coarse.col_indices() && ct.row_offsets() == coarse.row_offsets()) {
            auto& v = coarse.values();
            const auto& vt = ct.values();
            for (std::size_t k = 0; k < v.size(); ++k) {
                v[k] = 0.5 * (v[k] + vt[k]);
            }
        }
    }
    return coarse;
}

/// MatrixMarket coordinate dump (1-based indices), for debugging.
inline void write_matrix_market(std::ostream& os, const SparseMatrix& a)
{
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
    os.precision(17);
    for (Index r = 0; r < a.rows(); ++r) {
        const auto cs = a.row_cols(r);
        const auto vs = a.row_values(r);
        for (std::size_t k = 0; k < cs.size(); ++k) {
            os << (r + 1) << ' ' << (cs[k] + 1) << ' ' << vs[k] << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Dense Cholesky, used only for the coarsest multigrid level.

class DenseCholesky {
public:
    DenseCholesky() = default;

    explicit DenseCholesky(const SparseMatrix& a) : n_(static_cast<std::size_t>(a.rows()))
    {
        detail::require_dims(a.rows() == a.cols(), "DenseCholesky: matrix must be square");
        l_.assign(n_ * n_, 0.0);
        for (Index r = 0; r < a.rows(); ++r) {
            const auto cs = a.row_cols(r);
            const auto vs = a.row_values(r);
            for (std::size_t k = 0; k < cs.size(); ++k) {
                l_[static_cast<std::size_t>(r) * n_ + static_cast<std::size_t>(cs[k])] = vs[k];
            }
        }
        for (std::size_t j = 0; j < n_; ++j) {
            double d = l_[j * n_ + j];
            for (std::size_t k = 0; k < j; ++k) {
                d -= l_[j * n_ + k] * l_[j * n_ + k];
            }
            if (!(d > 0.0)) {
                throw std::runtime_error("DenseCholesky: matrix is not positive definite");
            }
            d = std::sqrt(d);
            l_[j * n_ + j] = d;
            for (std::size_t i = j + 1; i < n_; ++i) {
                double s = l_[i * n_ + j];
                for (std::size_t k = 0; k < j; ++k) {
                    s -= l_[i * n_ + k] * l_[j * n_ + k];
                }
                l_[i * n_ + j] = s / d;
            }
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

    void solve_in_place(std::span<double> x) const
    {
        detail::require_dims(x.size() == n_, "DenseCholesky: rhs length mismatch");
        for (std::size_t i = 0; i < n_; ++i) {
            double s = x[i];
            for (std::size_t k = 0; k < i; ++k) {
                s -= l_[i * n_ + k] * x[k];
            }
            x[i] = s / l_[i * n_ + i];
        }
        for (std::size_t i = n_; i-- > 0;) {
            double s = x[i];
            for (std::size_t k = i + 1; k < n_; ++k) {
                s -= l_[k * n_ + i] * x[k];
            }
            x[i] = s / l_[i * n_ + i];
        }
    }

private:
    std::size_t n_ = 0;
    std::vector<double> l_;
};

} // namespace dualtpd
