#include "wavecav/readout.hpp"

#include <omp.h>

namespace wavecav::kernels {

namespace {

inline double dot(const double* a, const double* b, Index n)
{
    double acc = 0.0;
    for (Index t = 0; t < n; ++t) acc += a[t] * b[t];
    return acc;
}

}  // namespace

Matrix gram_serial(const Matrix& r, ColumnRange cols)
{
    const Index n = r.rows();
    Matrix g(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j)
            g(j, i) = g(i, j) = dot(&r(i, cols.begin), &r(j, cols.begin), cols.size());
    return g;
}

Matrix gram_parallel(const Matrix& r, ColumnRange cols)
{
    const Index n = r.rows();
    Matrix g(n, n);
#pragma omp parallel for schedule(dynamic, 4)
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j) g(i, j) = dot(&r(i, cols.begin), &r(j, cols.begin), cols.size());
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < i; ++j) g(i, j) = g(j, i);
    return g;
}

Matrix cross_serial(const Matrix& s, const Matrix& r, ColumnRange cols)
{
    Matrix c(s.rows(), r.rows());
    for (Index i = 0; i < s.rows(); ++i)
        for (Index j = 0; j < r.rows(); ++j) c(i, j) = dot(&s(i, cols.begin), &r(j, cols.begin), cols.size());
    return c;
}

Matrix cross_parallel(const Matrix& s, const Matrix& r, ColumnRange cols)
{
    Matrix c(s.rows(), r.rows());
#pragma omp parallel for collapse(2) schedule(static)
    for (Index i = 0; i < s.rows(); ++i)
        for (Index j = 0; j < r.rows(); ++j) c(i, j) = dot(&s(i, cols.begin), &r(j, cols.begin), cols.size());
    return c;
}

}  // namespace wavecav::kernels
