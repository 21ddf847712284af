#include "dsmks/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace dsmks::kernels {

namespace {

double pairwise(const double* x, std::size_t n) {
    if (n <= 32) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += x[i];
        return acc;
    }
    const std::size_t half = n / 2;
    return pairwise(x, half) + pairwise(x + half, n - half);
}

std::size_t block_count(std::size_t n) { return (n + kSumBlock - 1) / kSumBlock; }

double block_sum(std::span<const double> x, std::size_t b) {
    const std::size_t lo = b * kSumBlock;
    const std::size_t len = std::min(kSumBlock, x.size() - lo);
    return pairwise(x.data() + lo, len);
}

// Mirror ghost lookup used by the reference kernels.
struct Ghosted {
    const Shape& s;
    std::span<const double> f;
    double operator()(int i, int j) const {
        i = std::clamp(i, 0, s.nx - 1);
        j = std::clamp(j, 0, s.ny - 1);
        return f[static_cast<std::size_t>(j) * s.nx + i];
    }
};

// Upwinded Keller-Segel flux from cell L to cell R (positive = towards R).
inline double ks_flux(double chi, double h, double uL, double uR, double vL, double vR) {
    const double dv = (vR - vL) / h;
    const double up = dv > 0.0 ? uL : uR;
    return -(uR - uL) / h + chi * dv * up;
}

}  // namespace

// ---------------------------------------------------------------------------
// Serial reference
// ---------------------------------------------------------------------------
namespace serial {

double sum(std::span<const double> x) {
    const std::size_t nb = block_count(x.size());
    std::vector<double> partial(nb);
    for (std::size_t b = 0; b < nb; ++b) partial[b] = block_sum(x, b);
    return pairwise(partial.data(), nb);
}

double max_value(std::span<const double> x) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : x) m = std::max(m, v);
    return m;
}

double min_value(std::span<const double> x) {
    double m = std::numeric_limits<double>::infinity();
    for (double v : x) m = std::min(m, v);
    return m;
}

double max_abs(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

void laplacian(const Shape& s, std::span<const double> f, std::span<double> out) {
    const Ghosted g{s, f};
    const double ix2 = 1.0 / (s.hx * s.hx);
    const double iy2 = 1.0 / (s.hy * s.hy);
    for (int j = 0; j < s.ny; ++j) {
        for (int i = 0; i < s.nx; ++i) {
            const double c = g(i, j);
            double r = ((g(i + 1, j) - c) - (c - g(i - 1, j))) * ix2;
            if (s.dim == 2) r += ((g(i, j + 1) - c) - (c - g(i, j - 1))) * iy2;
            out[static_cast<std::size_t>(j) * s.nx + i] = r;
        }
    }
}

void laplacian_product(const Shape& s, std::span<const double> a, std::span<const double> b,
                       std::span<double> out) {
    std::vector<double> prod(s.size());
    for (std::size_t k = 0; k < prod.size(); ++k) prod[k] = a[k] * b[k];
    laplacian(s, prod, out);
}

void grad_sq(const Shape& s, std::span<const double> f, std::span<double> out) {
    const Ghosted g{s, f};
    for (int j = 0; j < s.ny; ++j) {
        for (int i = 0; i < s.nx; ++i) {
            const double dx = (g(i + 1, j) - g(i - 1, j)) / (2.0 * s.hx);
            double r = dx * dx;
            if (s.dim == 2) {
                const double dy = (g(i, j + 1) - g(i, j - 1)) / (2.0 * s.hy);
                r += dy * dy;
            }
            out[static_cast<std::size_t>(j) * s.nx + i] = r;
        }
    }
}

double dirichlet_energy(const Shape& s, std::span<const double> f) {
    return face_cross_energy(s, f, f);
}

double face_cross_energy(const Shape& s, std::span<const double> g, std::span<const double> p) {
    std::vector<double> cell(s.size(), 0.0);
    for (int j = 0; j < s.ny; ++j) {
        for (int i = 0; i < s.nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * s.nx + i;
            double r = 0.0;
            if (i + 1 < s.nx) r += (g[k + 1] - g[k]) * (p[k + 1] - p[k]) / (s.hx * s.hx);
            if (s.dim == 2 && j + 1 < s.ny) r += (g[k + s.nx] - g[k]) * (p[k + s.nx] - p[k]) / (s.hy * s.hy);
            cell[k] = r * s.cell_volume();
        }
    }
    return sum(cell);
}

double face_weighted_energy(const Shape& s, std::span<const double> w, std::span<const double> p) {
    std::vector<double> cell(s.size(), 0.0);
    for (int j = 0; j < s.ny; ++j) {
        for (int i = 0; i < s.nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * s.nx + i;
            double r = 0.0;
            if (i + 1 < s.nx) {
                const double d = (p[k + 1] - p[k]) / s.hx;
                r += 0.5 * (w[k] + w[k + 1]) * d * d;
            }
            if (s.dim == 2 && j + 1 < s.ny) {
                const double d = (p[k + s.nx] - p[k]) / s.hy;
                r += 0.5 * (w[k] + w[k + s.nx]) * d * d;
            }
            cell[k] = r * s.cell_volume();
        }
    }
    return sum(cell);
}

void keller_segel_rhs(const Shape& s, double chi, std::span<const double> u, std::span<const double> v,
                      std::span<double> out) {
    for (int j = 0; j < s.ny; ++j) {
        for (int i = 0; i < s.nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * s.nx + i;
            const double east = i + 1 < s.nx ? ks_flux(chi, s.hx, u[k], u[k + 1], v[k], v[k + 1]) : 0.0;
            const double west = i > 0 ? ks_flux(chi, s.hx, u[k - 1], u[k], v[k - 1], v[k]) : 0.0;
            double r = -(east - west) / s.hx;
            if (s.dim == 2) {
                const std::size_t nx = static_cast<std::size_t>(s.nx);
                const double north = j + 1 < s.ny ? ks_flux(chi, s.hy, u[k], u[k + nx], v[k], v[k + nx]) : 0.0;
                const double south = j > 0 ? ks_flux(chi, s.hy, u[k - nx], u[k], v[k - nx], v[k]) : 0.0;
                r += -(north - south) / s.hy;
            }
            out[k] = r;
        }
    }
}

double max_face_gradient(const Shape& s, std::span<const double> v) {
    double m = 0.0;
    for (int j = 0; j < s.ny; ++j) {
        for (int i = 0; i < s.nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * s.nx + i;
            if (i + 1 < s.nx) m = std::max(m, std::abs(v[k + 1] - v[k]) / s.hx);
            if (s.dim == 2 && j + 1 < s.ny) m = std::max(m, std::abs(v[k + s.nx] - v[k]) / s.hy);
        }
    }
    return m;
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP kernels. Rows are distributed in 2D, cells in 1D.
// ---------------------------------------------------------------------------
namespace omp {

double sum(std::span<const double> x) {
    const std::size_t nb = block_count(x.size());
    std::vector<double> partial(nb);
    const auto nbl = static_cast<long>(nb);
#pragma omp parallel for schedule(static) if (nb > 1)
    for (long b = 0; b < nbl; ++b) partial[b] = block_sum(x, static_cast<std::size_t>(b));
    return pairwise(partial.data(), nb);
}

double max_value(std::span<const double> x) {
    double m = -std::numeric_limits<double>::infinity();
    const auto n = static_cast<long>(x.size());
#pragma omp parallel for reduction(max : m) schedule(static)
    for (long k = 0; k < n; ++k) m = std::max(m, x[k]);
    return m;
}

double min_value(std::span<const double> x) {
    double m = std::numeric_limits<double>::infinity();
    const auto n = static_cast<long>(x.size());
#pragma omp parallel for reduction(min : m) schedule(static)
    for (long k = 0; k < n; ++k) m = std::min(m, x[k]);
    return m;
}

double max_abs(std::span<const double> x) {
    double m = 0.0;
    const auto n = static_cast<long>(x.size());
#pragma omp parallel for reduction(max : m) schedule(static)
    for (long k = 0; k < n; ++k) m = std::max(m, std::abs(x[k]));
    return m;
}

namespace {

// Second difference along x for row j; mirror ghosts make the wall jump zero.
inline void row_xx(const Shape& s, const double* f, double* out, double ix2) {
    const int nx = s.nx;
    for (int i = 0; i < nx; ++i) {
        const double c = f[i];
        const double e = i + 1 < nx ? f[i + 1] : c;
        const double w = i > 0 ? f[i - 1] : c;
        out[i] = ((e - c) - (c - w)) * ix2;
    }
}

inline void row_yy(const Shape& s, const double* f, const double* fs, const double* fn, double* out,
                   double iy2) {
    for (int i = 0; i < s.nx; ++i) {
        const double c = f[i];
        out[i] += ((fn[i] - c) - (c - fs[i])) * iy2;
    }
}

void laplacian_impl(const Shape& s, const double* f, double* out) {
    const double ix2 = 1.0 / (s.hx * s.hx);
    const double iy2 = 1.0 / (s.hy * s.hy);
    if (s.dim == 1) {
        const int nx = s.nx;
#pragma omp parallel for schedule(static)
        for (int i = 0; i < nx; ++i) {
            const double c = f[i];
            const double e = i + 1 < nx ? f[i + 1] : c;
            const double w = i > 0 ? f[i - 1] : c;
            out[i] = ((e - c) - (c - w)) * ix2;
        }
        return;
    }
    const std::size_t nx = static_cast<std::size_t>(s.nx);
#pragma omp parallel for schedule(static)
    for (int j = 0; j < s.ny; ++j) {
        const double* row = f + j * nx;
        const double* south = j > 0 ? row - nx : row;
        const double* north = j + 1 < s.ny ? row + nx : row;
        double* o = out + j * nx;
        row_xx(s, row, o, ix2);
        row_yy(s, row, south, north, o, iy2);
    }
}

}  // namespace

void laplacian(const Shape& s, std::span<const double> f, std::span<double> out) {
    laplacian_impl(s, f.data(), out.data());
}

void laplacian_product(const Shape& s, std::span<const double> a, std::span<const double> b,
                       std::span<double> out) {
    std::vector<double> prod(s.size());
    const auto n = static_cast<long>(prod.size());
#pragma omp parallel for schedule(static)
    for (long k = 0; k < n; ++k) prod[k] = a[k] * b[k];
    laplacian_impl(s, prod.data(), out.data());
}

void grad_sq(const Shape& s, std::span<const double> f, std::span<double> out) {
    const int nx = s.nx;
    const int ny = s.ny;
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) {
        const double* row = f.data() + static_cast<std::size_t>(j) * nx;
        const double* south = j > 0 ? row - nx : row;
        const double* north = j + 1 < ny ? row + nx : row;
        double* o = out.data() + static_cast<std::size_t>(j) * nx;
        for (int i = 0; i < nx; ++i) {
            const double e = i + 1 < nx ? row[i + 1] : row[i];
            const double w = i > 0 ? row[i - 1] : row[i];
            const double dx = (e - w) / (2.0 * s.hx);
            double r = dx * dx;
            if (s.dim == 2) {
                const double dy = (north[i] - south[i]) / (2.0 * s.hy);
                r += dy * dy;
            }
            o[i] = r;
        }
    }
}

double dirichlet_energy(const Shape& s, std::span<const double> f) {
    return face_cross_energy(s, f, f);
}

double face_cross_energy(const Shape& s, std::span<const double> g, std::span<const double> p) {
    std::vector<double> cell(s.size(), 0.0);
    const int nx = s.nx;
    const int ny = s.ny;
    const double vol = s.cell_volume();
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * nx + i;
            double r = 0.0;
            if (i + 1 < nx) r += (g[k + 1] - g[k]) * (p[k + 1] - p[k]) / (s.hx * s.hx);
            if (s.dim == 2 && j + 1 < ny) r += (g[k + nx] - g[k]) * (p[k + nx] - p[k]) / (s.hy * s.hy);
            cell[k] = r * vol;
        }
    }
    return sum(cell);
}

double face_weighted_energy(const Shape& s, std::span<const double> w, std::span<const double> p) {
    std::vector<double> cell(s.size(), 0.0);
    const int nx = s.nx;
    const int ny = s.ny;
    const double vol = s.cell_volume();
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * nx + i;
            double r = 0.0;
            if (i + 1 < nx) {
                const double d = (p[k + 1] - p[k]) / s.hx;
                r += 0.5 * (w[k] + w[k + 1]) * d * d;
            }
            if (s.dim == 2 && j + 1 < ny) {
                const double d = (p[k + nx] - p[k]) / s.hy;
                r += 0.5 * (w[k] + w[k + nx]) * d * d;
            }
            cell[k] = r * vol;
        }
    }
    return sum(cell);
}

void keller_segel_rhs(const Shape& s, double chi, std::span<const double> u, std::span<const double> v,
                      std::span<double> out) {
    const int nx = s.nx;
    const int ny = s.ny;
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * nx + i;
            const double east = i + 1 < nx ? ks_flux(chi, s.hx, u[k], u[k + 1], v[k], v[k + 1]) : 0.0;
            const double west = i > 0 ? ks_flux(chi, s.hx, u[k - 1], u[k], v[k - 1], v[k]) : 0.0;
            double r = -(east - west) / s.hx;
            if (s.dim == 2) {
                const std::size_t snx = static_cast<std::size_t>(nx);
                const double north = j + 1 < ny ? ks_flux(chi, s.hy, u[k], u[k + snx], v[k], v[k + snx]) : 0.0;
                const double south = j > 0 ? ks_flux(chi, s.hy, u[k - snx], u[k], v[k - snx], v[k]) : 0.0;
                r += -(north - south) / s.hy;
            }
            out[k] = r;
        }
    }
}

double max_face_gradient(const Shape& s, std::span<const double> v) {
    double m = 0.0;
    const int nx = s.nx;
    const int ny = s.ny;
#pragma omp parallel for reduction(max : m) schedule(static)
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * nx + i;
            if (i + 1 < nx) m = std::max(m, std::abs(v[k + 1] - v[k]) / s.hx);
            if (s.dim == 2 && j + 1 < ny) m = std::max(m, std::abs(v[k + nx] - v[k]) / s.hy);
        }
    }
    return m;
}

}  // namespace omp

}  // namespace dsmks::kernels
