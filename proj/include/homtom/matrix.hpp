#ifndef HOMTOM_MATRIX_H_
#define HOMTOM_MATRIX_H_

#include <complex>
#include <vector>

namespace homtom {

// Minimal dense row-major matrix; square in all tomography uses.
template <typename T>
struct Mat {
    int rows = 0, cols = 0;
    std::vector<T> a;

    Mat() = default;
    Mat(int r, int c, T fill = T{}) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

    T& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    const T& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
};

using RealMatrix = Mat<double>;
using ComplexMatrix = Mat<std::complex<double>>;

}  // namespace homtom

#endif
