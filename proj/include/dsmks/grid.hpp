#pragma once

// Uniform cell-centered grids on intervals and rectangles, scalar fields on
// them, and the Neumann difference operators / quadratures built on top.

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "dsmks/kernels.hpp"

namespace dsmks {

inline constexpr int kMinCellsPerAxis = 8;

/// Uniform tensor-product grid on [0,L0] or [0,L0]x[0,L1].
/// Axis 1 is degenerate (one cell, unit spacing) in 1D.
struct Grid {
    int dim = 1;
    std::array<int, 2> n{0, 1};
    std::array<double, 2> length{0.0, 1.0};
    std::array<double, 2> spacing{0.0, 1.0};
    double volume = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]); }
    double cell_volume() const { return dim == 1 ? spacing[0] : spacing[0] * spacing[1]; }
    double h_min() const { return dim == 1 ? spacing[0] : std::min(spacing[0], spacing[1]); }
    /// Cell center coordinate (i+½)h along `axis`.
    double center(int axis, int i) const { return (i + 0.5) * spacing[axis]; }
    kernels::Shape shape() const { return {dim, n[0], n[1], spacing[0], spacing[1]}; }

    bool operator==(const Grid& other) const = default;
};

/// Throws InvalidArgument unless dim ∈ {1,2}, every n ≥ 8 and every length > 0.
Grid make_grid(int dim, std::span<const int> n_per_axis, std::span<const double> lengths);
/// Same number of cells on every axis.
Grid make_grid(int dim, int n, std::span<const double> lengths);

/// Scalar grid function, one value per cell, x fastest.
class Field {
public:
    Field() = default;
    explicit Field(const Grid& grid, double value = 0.0);
    /// Throws InvalidArgument on a size mismatch or a non-finite value.
    Field(const Grid& grid, std::vector<double> values);

    template <class F>
    static Field from_function(const Grid& grid, F&& fn) {
        Field out(grid);
        for (int j = 0; j < grid.n[1]; ++j) {
            for (int i = 0; i < grid.n[0]; ++i) {
                const double x = grid.center(0, i);
                const double y = grid.dim == 2 ? grid.center(1, j) : 0.0;
                out.values_[out.index(i, j)] = fn(x, y);
            }
        }
        return out;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    std::size_t index(int i, int j = 0) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(grid_.n[0]) + static_cast<std::size_t>(i);
    }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    const std::vector<double>& data() const { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }
    double& operator[](std::size_t k) { return values_[k]; }
    double at(int i, int j = 0) const { return values_[index(i, j)]; }

    bool all_finite() const;
    double min() const;
    double max() const;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    Field& operator*=(double s);

private:
    Grid grid_{};
    std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(Field a, double s);
Field operator*(double s, Field a);
/// Pointwise product.
Field hadamard(const Field& a, const Field& b);

/// Throws NumericalFailure naming `what` if any value is NaN or infinite.
void require_finite(const Field& f, std::string_view what);
/// Throws InvalidArgument unless both fields live on the same grid.
void require_same_grid(const Field& a, const Field& b);

enum class Norm { L1, L2, Linf };

/// Δ_h f with homogeneous Neumann data (mirror ghosts, flux form).
Field laplacian_neumann(const Field& f);
/// Δ_h (a·b) without materializing the product field.
Field laplacian_of_product(const Field& a, const Field& b);
/// Midpoint quadrature Σ f_i·|cell|, blocked pairwise summation.
double integrate(const Field& f);
/// ∫ a·b dx.
double inner(const Field& a, const Field& b);
double norm(const Field& f, Norm p);
/// Cell-wise |∇f|² from centered differences with mirror closures.
Field grad_sq(const Field& f);
/// Face-based ∫|∇f|², equal to -∫ f Δ_h f to roundoff.
double dirichlet_energy(const Field& f);

}  // namespace dsmks
