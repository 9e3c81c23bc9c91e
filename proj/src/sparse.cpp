#include "pclbench/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace pclbench::sp {

SparseMatrix::SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("SparseMatrix: negative dimension");
    row_offsets_.assign(static_cast<size_t>(rows) + 1, 0);
}

SparseMatrix raw_csr(int rows, int cols, std::vector<int> row_offsets,
                     std::vector<int> col_indices, std::vector<double> values) {
    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.row_offsets_ = std::move(row_offsets);
    m.col_indices_ = std::move(col_indices);
    m.values_ = std::move(values);
    return m;
}

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, std::vector<Triplet> entries) {
    for (const Triplet& t : entries) {
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
            throw std::invalid_argument("from_triplets: index out of range");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseMatrix m(rows, cols);
    m.col_indices_.reserve(entries.size());
    m.values_.reserve(entries.size());
    size_t i = 0;
    for (int r = 0; r < rows; ++r) {
        while (i < entries.size() && entries[i].row == r) {
            double v = entries[i].value;
            int c = entries[i].col;
            ++i;
            while (i < entries.size() && entries[i].row == r && entries[i].col == c) {
                v += entries[i].value;  // duplicates are summed
                ++i;
            }
            m.col_indices_.push_back(c);
            m.values_.push_back(v);
        }
        m.row_offsets_[static_cast<size_t>(r) + 1] = static_cast<int>(m.col_indices_.size());
    }
    return m;
}

SparseMatrix SparseMatrix::identity(int n) {
    SparseMatrix m(n, n);
    m.col_indices_.resize(n);
    m.values_.assign(n, 1.0);
    for (int i = 0; i < n; ++i) {
        m.col_indices_[i] = i;
        m.row_offsets_[static_cast<size_t>(i) + 1] = i + 1;
    }
    return m;
}

double SparseMatrix::norm_inf() const {
    double best = 0.0;
    for (int r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (double v : row_values(r)) s += std::abs(v);
        best = std::max(best, s);
    }
    return best;
}

double SparseMatrix::coeff(int r, int c) const {
    auto cols_r = row_cols(r);
    auto it = std::lower_bound(cols_r.begin(), cols_r.end(), c);
    if (it == cols_r.end() || *it != c) return 0.0;
    return row_values(r)[static_cast<size_t>(it - cols_r.begin())];
}

std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x) {
    if (static_cast<int>(x.size()) != a.cols())
        throw std::invalid_argument("spmv: dimension mismatch");
    std::vector<double> y(static_cast<size_t>(a.rows()), 0.0);
    for (int r = 0; r < a.rows(); ++r) {
        double s = 0.0;
        auto cols_r = a.row_cols(r);
        auto vals = a.row_values(r);
        for (size_t k = 0; k < cols_r.size(); ++k) s += vals[k] * x[static_cast<size_t>(cols_r[k])];
        y[static_cast<size_t>(r)] = s;
    }
    return y;
}

std::vector<double> spmv_transpose(const SparseMatrix& a, std::span<const double> x) {
    if (static_cast<int>(x.size()) != a.rows())
        throw std::invalid_argument("spmv_transpose: dimension mismatch");
    std::vector<double> y(static_cast<size_t>(a.cols()), 0.0);
    for (int r = 0; r < a.rows(); ++r) {
        auto cols_r = a.row_cols(r);
        auto vals = a.row_values(r);
        for (size_t k = 0; k < cols_r.size(); ++k)
            y[static_cast<size_t>(cols_r[k])] += vals[k] * x[static_cast<size_t>(r)];
    }
    return y;
}

SparseMatrix transpose(const SparseMatrix& a) {
    std::vector<int> offsets(static_cast<size_t>(a.cols()) + 1, 0);
    for (int c : a.col_indices()) offsets[static_cast<size_t>(c) + 1]++;
    for (int c = 0; c < a.cols(); ++c) offsets[static_cast<size_t>(c) + 1] += offsets[static_cast<size_t>(c)];

    std::vector<int> cols(static_cast<size_t>(a.nnz()));
    std::vector<double> vals(static_cast<size_t>(a.nnz()));
    std::vector<int> next(offsets.begin(), offsets.end() - 1);
    for (int r = 0; r < a.rows(); ++r) {
        auto cols_r = a.row_cols(r);
        auto vals_r = a.row_values(r);
        for (size_t k = 0; k < cols_r.size(); ++k) {
            int pos = next[static_cast<size_t>(cols_r[k])]++;
            cols[static_cast<size_t>(pos)] = r;
            vals[static_cast<size_t>(pos)] = vals_r[k];
        }
    }
    return raw_csr(a.cols(), a.rows(), std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("add: dimension mismatch");
    std::vector<int> offsets{0};
    offsets.reserve(static_cast<size_t>(a.rows()) + 1);
    std::vector<int> cols;
    std::vector<double> vals;
    cols.reserve(static_cast<size_t>(a.nnz() + b.nnz()));
    vals.reserve(static_cast<size_t>(a.nnz() + b.nnz()));
    for (int r = 0; r < a.rows(); ++r) {
        auto ca = a.row_cols(r), cb = b.row_cols(r);
        auto va = a.row_values(r), vb = b.row_values(r);
        size_t i = 0, j = 0;
        while (i < ca.size() || j < cb.size()) {
            int col;
            double v;
            if (j >= cb.size() || (i < ca.size() && ca[i] < cb[j])) {
                col = ca[i];
                v = va[i];
                ++i;
            } else if (i >= ca.size() || cb[j] < ca[i]) {
                col = cb[j];
                v = vb[j];
                ++j;
            } else {
                col = ca[i];
                v = va[i] + vb[j];
                ++i;
                ++j;
            }
            cols.push_back(col);
            vals.push_back(v);
        }
        offsets.push_back(static_cast<int>(cols.size()));
    }
    return raw_csr(a.rows(), a.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix scale(const SparseMatrix& a, double s) {
    std::vector<int> offsets(a.row_offsets().begin(), a.row_offsets().end());
    std::vector<int> cols(a.col_indices().begin(), a.col_indices().end());
    std::vector<double> vals(a.values().begin(), a.values().end());
    for (double& v : vals) v *= s;
    return raw_csr(a.rows(), a.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix diag_left_mul(std::span<const double> d, const SparseMatrix& a) {
    if (static_cast<int>(d.size()) != a.rows())
        throw std::invalid_argument("diag_left_mul: dimension mismatch");
    std::vector<int> offsets(a.row_offsets().begin(), a.row_offsets().end());
    std::vector<int> cols(a.col_indices().begin(), a.col_indices().end());
    std::vector<double> vals(a.values().begin(), a.values().end());
    for (int r = 0; r < a.rows(); ++r)
        for (int k = offsets[static_cast<size_t>(r)]; k < offsets[static_cast<size_t>(r) + 1]; ++k)
            vals[static_cast<size_t>(k)] *= d[static_cast<size_t>(r)];
    return raw_csr(a.rows(), a.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

SparseMatrix hstack(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("hstack: row count mismatch");
    std::vector<int> offsets{0};
    std::vector<int> cols;
    std::vector<double> vals;
    cols.reserve(static_cast<size_t>(a.nnz() + b.nnz()));
    vals.reserve(static_cast<size_t>(a.nnz() + b.nnz()));
    for (int r = 0; r < a.rows(); ++r) {
        auto ca = a.row_cols(r);
        auto va = a.row_values(r);
        cols.insert(cols.end(), ca.begin(), ca.end());
        vals.insert(vals.end(), va.begin(), va.end());
        auto cb = b.row_cols(r);
        auto vb = b.row_values(r);
        for (int c : cb) cols.push_back(c + a.cols());
        vals.insert(vals.end(), vb.begin(), vb.end());
        offsets.push_back(static_cast<int>(cols.size()));
    }
    return raw_csr(a.rows(), a.cols() + b.cols(), std::move(offsets), std::move(cols),
                   std::move(vals));
}

SparseMatrix matmul(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: dimension mismatch");
    std::vector<int> offsets{0};
    std::vector<int> cols;
    std::vector<double> vals;
    // Row-by-row sparse accumulator.
    std::vector<double> acc(static_cast<size_t>(b.cols()), 0.0);
    std::vector<int> marker(static_cast<size_t>(b.cols()), -1);
    std::vector<int> touched;
    for (int r = 0; r < a.rows(); ++r) {
        touched.clear();
        auto ca = a.row_cols(r);
        auto va = a.row_values(r);
        for (size_t k = 0; k < ca.size(); ++k) {
            int mid = ca[k];
            double av = va[k];
            auto cb = b.row_cols(mid);
            auto vb = b.row_values(mid);
            for (size_t j = 0; j < cb.size(); ++j) {
                int c = cb[j];
                if (marker[static_cast<size_t>(c)] != r) {
                    marker[static_cast<size_t>(c)] = r;
                    acc[static_cast<size_t>(c)] = 0.0;
                    touched.push_back(c);
                }
                acc[static_cast<size_t>(c)] += av * vb[j];
            }
        }
        std::sort(touched.begin(), touched.end());
        for (int c : touched) {
            cols.push_back(c);
            vals.push_back(acc[static_cast<size_t>(c)]);
        }
        offsets.push_back(static_cast<int>(cols.size()));
    }
    return raw_csr(a.rows(), b.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

namespace {

// Depth-first search over the pivotal part of L used by the Gilbert-Peierls
// column update. Produces a topological order of the rows reachable from the
// structure of A(:,j).
void reach(int start, const std::vector<int>& pinv, const std::vector<int>& l_colptr,
           const std::vector<int>& l_rows, std::vector<char>& visited, std::vector<int>& topo,
           std::vector<int>& stack, std::vector<int>& stack_pos) {
    stack.clear();
    stack_pos.clear();
    stack.push_back(start);
    stack_pos.push_back(0);
    visited[static_cast<size_t>(start)] = 1;
    while (!stack.empty()) {
        int r = stack.back();
        int col = pinv[static_cast<size_t>(r)];
        bool descended = false;
        if (col >= 0) {
            int& k = stack_pos.back();
            while (k < l_colptr[static_cast<size_t>(col) + 1] - l_colptr[static_cast<size_t>(col)]) {
                int child = l_rows[static_cast<size_t>(l_colptr[static_cast<size_t>(col)] + k)];
                ++k;
                if (!visited[static_cast<size_t>(child)]) {
                    visited[static_cast<size_t>(child)] = 1;
                    stack.push_back(child);
                    stack_pos.push_back(0);
                    descended = true;
                    break;
                }
            }
        }
        if (!descended) {
            topo.push_back(r);
            stack.pop_back();
            stack_pos.pop_back();
        }
    }
}

}  // namespace

LUFactors factorize(const SparseMatrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("factorize: matrix not square");
    SolveStats::factorizations++;
    const int n = a.rows();
    const SparseMatrix at = transpose(a);  // column access to A

    LUFactors f;
    f.n_ = n;
    f.perm_.assign(static_cast<size_t>(n), -1);
    f.l_colptr_.assign(1, 0);
    f.u_colptr_.assign(1, 0);
    f.u_diag_.assign(static_cast<size_t>(n), 0.0);

    const double pivot_floor = 1e-14 * a.norm_inf();

    std::vector<int> pinv(static_cast<size_t>(n), -1);  // row -> pivot column, or -1
    std::vector<double> x(static_cast<size_t>(n), 0.0);
    std::vector<char> visited(static_cast<size_t>(n), 0);
    std::vector<int> topo, stack, stack_pos;

    for (int j = 0; j < n; ++j) {
        topo.clear();
        auto arows = at.row_cols(j);
        auto avals = at.row_values(j);
        for (size_t k = 0; k < arows.size(); ++k) {
            if (!visited[static_cast<size_t>(arows[k])])
                reach(arows[k], pinv, f.l_colptr_, f.l_rows_, visited, topo, stack, stack_pos);
        }
        for (int r : topo) x[static_cast<size_t>(r)] = 0.0;
        for (size_t k = 0; k < arows.size(); ++k)
            x[static_cast<size_t>(arows[k])] = avals[k];

        // Sparse triangular solve L x = A(:,j) in topological order.
        for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
            int r = *it;
            int col = pinv[static_cast<size_t>(r)];
            if (col < 0) continue;
            double xr = x[static_cast<size_t>(r)];
            if (xr == 0.0) continue;
            for (int k = f.l_colptr_[static_cast<size_t>(col)];
                 k < f.l_colptr_[static_cast<size_t>(col) + 1]; ++k)
                x[static_cast<size_t>(f.l_rows_[static_cast<size_t>(k)])] -=
                    f.l_vals_[static_cast<size_t>(k)] * xr;
        }

        // Partial pivoting among rows not yet pivotal.
        int pivot_row = -1;
        double pivot_mag = 0.0;
        for (int r : topo) {
            if (pinv[static_cast<size_t>(r)] >= 0) continue;
            double mag = std::abs(x[static_cast<size_t>(r)]);
            if (mag > pivot_mag) {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if (pivot_row < 0 || pivot_mag <= pivot_floor)
            throw SingularMatrixError("factorize: zero pivot at column " + std::to_string(j));

        const double pivot = x[static_cast<size_t>(pivot_row)];
        pinv[static_cast<size_t>(pivot_row)] = j;
        f.perm_[static_cast<size_t>(j)] = pivot_row;
        f.u_diag_[static_cast<size_t>(j)] = pivot;

        for (int r : topo) {
            visited[static_cast<size_t>(r)] = 0;
            double v = x[static_cast<size_t>(r)];
            if (r == pivot_row || v == 0.0) continue;
            int col = pinv[static_cast<size_t>(r)];
            if (col >= 0) {  // upper part, in pivot coordinates
                f.u_rows_.push_back(col);
                f.u_vals_.push_back(v);
            } else {  // strictly-lower part of L's column j
                f.l_rows_.push_back(r);
                f.l_vals_.push_back(v / pivot);
            }
        }
        f.l_colptr_.push_back(static_cast<int>(f.l_rows_.size()));
        f.u_colptr_.push_back(static_cast<int>(f.u_rows_.size()));
    }

    // Relabel L's row indices into pivot coordinates.
    for (int& r : f.l_rows_) r = pinv[static_cast<size_t>(r)];

    // Assemble the public CSR views (L with its unit diagonal, U with diagonal).
    std::vector<Triplet> lt, ut;
    lt.reserve(f.l_rows_.size() + static_cast<size_t>(n));
    ut.reserve(f.u_rows_.size() + static_cast<size_t>(n));
    for (int j = 0; j < n; ++j) {
        lt.push_back({j, j, 1.0});
        ut.push_back({j, j, f.u_diag_[static_cast<size_t>(j)]});
        for (int k = f.l_colptr_[static_cast<size_t>(j)]; k < f.l_colptr_[static_cast<size_t>(j) + 1]; ++k)
            lt.push_back({f.l_rows_[static_cast<size_t>(k)], j, f.l_vals_[static_cast<size_t>(k)]});
        for (int k = f.u_colptr_[static_cast<size_t>(j)]; k < f.u_colptr_[static_cast<size_t>(j) + 1]; ++k)
            ut.push_back({f.u_rows_[static_cast<size_t>(k)], j, f.u_vals_[static_cast<size_t>(k)]});
    }
    f.lower_csr_ = SparseMatrix::from_triplets(n, n, std::move(lt));
    f.upper_csr_ = SparseMatrix::from_triplets(n, n, std::move(ut));
    return f;
}

std::vector<double> solve(const LUFactors& f, std::span<const double> b) {
    if (static_cast<int>(b.size()) != f.n_) throw std::invalid_argument("solve: length mismatch");
    SolveStats::solves++;
    const int n = f.n_;
    std::vector<double> y(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] = b[static_cast<size_t>(f.perm_[static_cast<size_t>(i)])];

    // L y' = P b, column-oriented forward sweep (unit diagonal).
    for (int j = 0; j < n; ++j) {
        double yj = y[static_cast<size_t>(j)];
        if (yj == 0.0) continue;
        for (int k = f.l_colptr_[static_cast<size_t>(j)]; k < f.l_colptr_[static_cast<size_t>(j) + 1]; ++k)
            y[static_cast<size_t>(f.l_rows_[static_cast<size_t>(k)])] -= f.l_vals_[static_cast<size_t>(k)] * yj;
    }
    // U x = y', column-oriented backward sweep.
    for (int j = n - 1; j >= 0; --j) {
        double xj = y[static_cast<size_t>(j)] / f.u_diag_[static_cast<size_t>(j)];
        y[static_cast<size_t>(j)] = xj;
        if (xj == 0.0) continue;
        for (int k = f.u_colptr_[static_cast<size_t>(j)]; k < f.u_colptr_[static_cast<size_t>(j) + 1]; ++k)
            y[static_cast<size_t>(f.u_rows_[static_cast<size_t>(k)])] -= f.u_vals_[static_cast<size_t>(k)] * xj;
    }
    return y;
}

std::vector<double> solve_transpose(const LUFactors& f, std::span<const double> b) {
    if (static_cast<int>(b.size()) != f.n_)
        throw std::invalid_argument("solve_transpose: length mismatch");
    SolveStats::transpose_solves++;
    const int n = f.n_;
    std::vector<double> z(b.begin(), b.end());

    // U^T z = b: U^T is lower triangular; its row j is column j of U.
    for (int j = 0; j < n; ++j) {
        double s = z[static_cast<size_t>(j)];
        for (int k = f.u_colptr_[static_cast<size_t>(j)]; k < f.u_colptr_[static_cast<size_t>(j) + 1]; ++k)
            s -= f.u_vals_[static_cast<size_t>(k)] * z[static_cast<size_t>(f.u_rows_[static_cast<size_t>(k)])];
        z[static_cast<size_t>(j)] = s / f.u_diag_[static_cast<size_t>(j)];
    }
    // L^T w = z: row j of L^T is column j of L (unit diagonal).
    for (int j = n - 1; j >= 0; --j) {
        double s = z[static_cast<size_t>(j)];
        for (int k = f.l_colptr_[static_cast<size_t>(j)]; k < f.l_colptr_[static_cast<size_t>(j) + 1]; ++k)
            s -= f.l_vals_[static_cast<size_t>(k)] * z[static_cast<size_t>(f.l_rows_[static_cast<size_t>(k)])];
        z[static_cast<size_t>(j)] = s;
    }
    // x = P^T w.
    std::vector<double> x(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<size_t>(f.perm_[static_cast<size_t>(i)])] = z[static_cast<size_t>(i)];
    return x;
}

}  // namespace pclbench::sp
