#pragma once

// Cell-wise and face-wise kernels on uniform tensor grids with mirror ghost
// cells. Every kernel has a serial reference version and an OpenMP version
// with the same signature; both produce bit-identical results (reductions use
// a fixed blocked pairwise order that does not depend on the thread count).

#include <cstddef>
#include <span>

namespace dsmks::kernels {

/// Raw layout of a cell-centered grid: x is the fastest index.
struct Shape {
    int dim = 1;
    int nx = 0;
    int ny = 1;
    double hx = 1.0;
    double hy = 1.0;

    std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    double cell_volume() const { return dim == 1 ? hx : hx * hy; }
};

/// Fixed block length of the deterministic summation.
inline constexpr std::size_t kSumBlock = 4096;

namespace serial {

double sum(std::span<const double> x);
double max_value(std::span<const double> x);
double min_value(std::span<const double> x);
double max_abs(std::span<const double> x);

/// out = Δ_h f (flux form, zero boundary flux).
void laplacian(const Shape& s, std::span<const double> f, std::span<double> out);
/// out = Δ_h (a·b).
void laplacian_product(const Shape& s, std::span<const double> a, std::span<const double> b,
                       std::span<double> out);
/// out = |∇_h f|² with centered differences and mirror closures.
void grad_sq(const Shape& s, std::span<const double> f, std::span<double> out);
/// Σ over interior faces of (jump/h)² times the cell volume.
double dirichlet_energy(const Shape& s, std::span<const double> f);
/// Σ over interior faces of (g_R - g_L)(p_R - p_L)/h² times the cell volume.
double face_cross_energy(const Shape& s, std::span<const double> g, std::span<const double> p);
/// Σ over interior faces of ½(w_L + w_R)·((p_R - p_L)/h)² times the cell volume.
double face_weighted_energy(const Shape& s, std::span<const double> w, std::span<const double> p);
/// out = Δ_h u - chi ∇_h·(u ∇_h v), drift flux upwinded on faces.
void keller_segel_rhs(const Shape& s, double chi, std::span<const double> u, std::span<const double> v,
                      std::span<double> out);
/// max over interior faces of |jump(v)|/h.
double max_face_gradient(const Shape& s, std::span<const double> v);

}  // namespace serial

namespace omp {

double sum(std::span<const double> x);
double max_value(std::span<const double> x);
double min_value(std::span<const double> x);
double max_abs(std::span<const double> x);

void laplacian(const Shape& s, std::span<const double> f, std::span<double> out);
void laplacian_product(const Shape& s, std::span<const double> a, std::span<const double> b,
                       std::span<double> out);
void grad_sq(const Shape& s, std::span<const double> f, std::span<double> out);
double dirichlet_energy(const Shape& s, std::span<const double> f);
double face_cross_energy(const Shape& s, std::span<const double> g, std::span<const double> p);
double face_weighted_energy(const Shape& s, std::span<const double> w, std::span<const double> p);
void keller_segel_rhs(const Shape& s, double chi, std::span<const double> u, std::span<const double> v,
                      std::span<double> out);
double max_face_gradient(const Shape& s, std::span<const double> v);

}  // namespace omp

}  // namespace dsmks::kernels
