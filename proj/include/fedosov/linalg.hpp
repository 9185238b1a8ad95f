// Dense exact linear algebra over Q: rank by Gaussian elimination with
// exact rational pivoting, plus a membership test for image subspaces.

#pragma once

#include "fedosov/rational.hpp"

#include <vector>

namespace fedosov {

class RatMatrix {
public:
    RatMatrix() = default;
    RatMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(rows * cols, Rational(0))
    {
    }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    Rational& at(int i, int j) { return a_[i * cols_ + j]; }
    const Rational& at(int i, int j) const { return a_[i * cols_ + j]; }

    int rank() const
    {
        RatMatrix m = *this;
        int rk = 0;
        for (int col = 0; col < m.cols_ && rk < m.rows_; ++col) {
            int pivot = -1;
            for (int row = rk; row < m.rows_; ++row)
                if (m.at(row, col) != 0) {
                    pivot = row;
                    break;
                }
            if (pivot < 0)
                continue;
            if (pivot != rk)
                for (int j = 0; j < m.cols_; ++j)
                    std::swap(m.at(pivot, j), m.at(rk, j));
            Rational inv = m.at(rk, col);
            for (int row = rk + 1; row < m.rows_; ++row) {
                if (m.at(row, col) == 0)
                    continue;
                Rational f = m.at(row, col) / inv;
                for (int j = col; j < m.cols_; ++j)
                    m.at(row, j) -= f * m.at(rk, j);
            }
            ++rk;
        }
        return rk;
    }

    // is v in the column span?
    bool in_column_span(const std::vector<Rational>& v) const
    {
        RatMatrix ext(rows_, cols_ + 1);
        for (int i = 0; i < rows_; ++i) {
            for (int j = 0; j < cols_; ++j)
                ext.at(i, j) = at(i, j);
            ext.at(i, cols_) = v[static_cast<size_t>(i)];
        }
        return ext.rank() == rank();
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<Rational> a_;
};

} // namespace fedosov
