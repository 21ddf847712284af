#pragma once

// Solves (a·I - b·Δ) z = g with homogeneous Neumann data on box grids.
// a = b = 1 gives the operator A = I - Δ used for w = A⁻¹[u].

#include <memory>

#include "dsmks/grid.hpp"

namespace dsmks {

enum class SolverMethod {
    Spectral,           ///< cosine-transform diagonalization, exact to roundoff
    ConjugateGradient,  ///< matrix-free CG on the same 5-point operator
};

struct SolverOptions {
    SolverMethod method = SolverMethod::Spectral;
    /// Relative residual target ‖(aI - bΔ)z - g‖₂ ≤ tol·‖g‖₂ for CG.
    double tol = 1e-10;
    /// 0 selects 10·(cell count).
    int max_iterations = 0;
};

class ScreenedSolver {
public:
    explicit ScreenedSolver(const Grid& grid, SolverOptions options = {});
    ~ScreenedSolver();
    ScreenedSolver(ScreenedSolver&&) noexcept;
    ScreenedSolver& operator=(ScreenedSolver&&) noexcept;
    ScreenedSolver(const ScreenedSolver&) = delete;
    ScreenedSolver& operator=(const ScreenedSolver&) = delete;

    const Grid& grid() const { return grid_; }
    const SolverOptions& options() const { return options_; }

    /// Requires a > 0 and b ≥ 0. Throws SolverFailure if CG stalls.
    Field solve(const Field& g, double a, double b) const;
    /// A⁻¹ g = (I - Δ)⁻¹ g.
    Field helmholtz(const Field& g) const { return solve(g, 1.0, 1.0); }

    /// Eigenvalues of -Δ_h along `axis`, (4/h²)·sin²(πk/2n).
    const std::vector<double>& eigenvalues(int axis) const { return eig_[axis]; }

    /// ‖(aI - bΔ_h)z - g‖₂ / ‖g‖₂.
    static double relative_residual(const Field& z, const Field& g, double a, double b);

private:
    Field solve_spectral(const Field& g, double a, double b) const;
    Field solve_cg(const Field& g, double a, double b) const;

    struct Plans;
    Grid grid_;
    SolverOptions options_;
    std::array<std::vector<double>, 2> eig_;
    std::unique_ptr<Plans> plans_;
};

/// Solution of -Δz + z = g.
inline Field helmholtz_solve(const ScreenedSolver& solver, const Field& g) { return solver.helmholtz(g); }
inline Field screened_solve(const ScreenedSolver& solver, const Field& g, double a, double b) {
    return solver.solve(g, a, b);
}

/// ‖A⁻¹g‖₂ / ‖g‖₁ for a nonnegative g.
double l1_to_l2_ratio(const ScreenedSolver& solver, const Field& g);

/// Largest ‖A⁻¹δ‖₂/‖δ‖₁ over unit point masses. By mirror symmetry the
/// corner cell attains it; that cell is the one evaluated.
double point_source_constant(const ScreenedSolver& solver);

}  // namespace dsmks
