#include "dsmks/helmholtz.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include "dsmks/error.hpp"

namespace dsmks {

namespace {

// The FFTW planner is not reentrant; execution with new-array calls is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(double* p) const { fftw_free(p); }
};
using AlignedBuffer = std::unique_ptr<double, FftwDeleter>;

AlignedBuffer aligned(std::size_t n) { return AlignedBuffer(fftw_alloc_real(n)); }

}  // namespace

struct ScreenedSolver::Plans {
    fftw_plan forward = nullptr;  // DCT-II (REDFT10)
    fftw_plan inverse = nullptr;  // DCT-III (REDFT01)
    double scale = 1.0;           // 1/(2n) per axis

    ~Plans() {
        std::lock_guard lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (inverse) fftw_destroy_plan(inverse);
    }
};

ScreenedSolver::ScreenedSolver(const Grid& grid, SolverOptions options)
    : grid_(grid), options_(options) {
    if (!(options_.tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
    for (int a = 0; a < 2; ++a) {
        const int n = grid_.n[a];
        eig_[a].assign(static_cast<std::size_t>(n), 0.0);
        if (a >= grid_.dim) continue;
        const double h = grid_.spacing[a];
        for (int k = 0; k < n; ++k) {
            const double s = std::sin(std::numbers::pi * k / (2.0 * n));
            eig_[a][k] = 4.0 * s * s / (h * h);
        }
    }

    plans_ = std::make_unique<Plans>();
    const std::size_t size = grid_.size();
    auto in = aligned(size);
    auto out = aligned(size);
    std::lock_guard lock(planner_mutex());
    if (grid_.dim == 1) {
        plans_->forward = fftw_plan_r2r_1d(grid_.n[0], in.get(), out.get(), FFTW_REDFT10, FFTW_ESTIMATE);
        plans_->inverse = fftw_plan_r2r_1d(grid_.n[0], in.get(), out.get(), FFTW_REDFT01, FFTW_ESTIMATE);
        plans_->scale = 1.0 / (2.0 * grid_.n[0]);
    } else {
        plans_->forward = fftw_plan_r2r_2d(grid_.n[1], grid_.n[0], in.get(), out.get(), FFTW_REDFT10,
                                           FFTW_REDFT10, FFTW_ESTIMATE);
        plans_->inverse = fftw_plan_r2r_2d(grid_.n[1], grid_.n[0], in.get(), out.get(), FFTW_REDFT01,
                                           FFTW_REDFT01, FFTW_ESTIMATE);
        plans_->scale = 1.0 / (4.0 * grid_.n[0] * grid_.n[1]);
    }
    if (!plans_->forward || !plans_->inverse) throw Error("FFTW could not create cosine-transform plans");
}

ScreenedSolver::~ScreenedSolver() = default;
ScreenedSolver::ScreenedSolver(ScreenedSolver&&) noexcept = default;
ScreenedSolver& ScreenedSolver::operator=(ScreenedSolver&&) noexcept = default;

Field ScreenedSolver::solve(const Field& g, double a, double b) const {
    if (!(g.grid() == grid_)) throw InvalidArgument("right-hand side lives on a different grid");
    if (!(a > 0.0) || !(b >= 0.0)) throw InvalidArgument("screened solve needs a > 0 and b >= 0");
    if (b == 0.0) return g * (1.0 / a);
    return options_.method == SolverMethod::Spectral ? solve_spectral(g, a, b) : solve_cg(g, a, b);
}

Field ScreenedSolver::solve_spectral(const Field& g, double a, double b) const {
    const std::size_t size = grid_.size();
    auto in = aligned(size);
    auto out = aligned(size);
    std::copy(g.values().begin(), g.values().end(), in.get());
    fftw_execute_r2r(plans_->forward, in.get(), out.get());

    const int nx = grid_.n[0];
    const int ny = grid_.n[1];
    const double scale = plans_->scale;
    double* coeff = out.get();
    const auto& ex = eig_[0];
    const auto& ey = eig_[1];
#pragma omp parallel for schedule(static)
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * nx + i;
            coeff[k] *= scale / (a + b * (ex[i] + ey[j]));
        }
    }
    fftw_execute_r2r(plans_->inverse, coeff, in.get());
    return Field(grid_, std::vector<double>(in.get(), in.get() + size));
}

namespace {

void apply_operator(const Field& z, double a, double b, Field& out) {
    kernels::omp::laplacian(z.grid().shape(), z.values(), out.values());
    auto o = out.values();
    const auto n = static_cast<long>(z.size());
#pragma omp parallel for schedule(static)
    for (long k = 0; k < n; ++k) o[k] = a * z[k] - b * o[k];
}

double dot(const Field& x, const Field& y) {
    std::vector<double> p(x.size());
    const auto n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
    for (long k = 0; k < n; ++k) p[k] = x[k] * y[k];
    return kernels::omp::sum(p);
}

}  // namespace

double ScreenedSolver::relative_residual(const Field& z, const Field& g, double a, double b) {
    Field r(z.grid());
    apply_operator(z, a, b, r);
    r -= g;
    const double gn = std::sqrt(dot(g, g));
    return gn == 0.0 ? std::sqrt(dot(r, r)) : std::sqrt(dot(r, r)) / gn;
}

Field ScreenedSolver::solve_cg(const Field& g, double a, double b) const {
    const double gnorm = std::sqrt(dot(g, g));
    Field z(grid_);
    if (gnorm == 0.0) return z;
    const int max_it = options_.max_iterations > 0 ? options_.max_iterations : static_cast<int>(10 * grid_.size());
    const double target = options_.tol * gnorm;

    // Jacobi preconditioner: the diagonal is constant on a uniform grid
    // except at walls, where mirror ghosts remove one neighbour per face.
    const auto shape = grid_.shape();
    Field diag(grid_);
    for (int j = 0; j < grid_.n[1]; ++j) {
        for (int i = 0; i < grid_.n[0]; ++i) {
            double d = 0.0;
            d += ((i > 0) + (i + 1 < shape.nx)) / (shape.hx * shape.hx);
            if (grid_.dim == 2) d += ((j > 0) + (j + 1 < shape.ny)) / (shape.hy * shape.hy);
            diag[diag.index(i, j)] = a + b * d;
        }
    }

    Field r = g;
    Field s(grid_);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = r[k] / diag[k];
    Field p = s;
    Field q(grid_);
    double rs = dot(r, s);
    double rnorm = gnorm;
    for (int it = 0; it < max_it; ++it) {
        apply_operator(p, a, b, q);
        const double alpha = rs / dot(p, q);
        for (std::size_t k = 0; k < z.size(); ++k) {
            z[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        rnorm = std::sqrt(dot(r, r));
        if (rnorm <= target) {
            // Recursive residual drifts; confirm against the true one.
            const double true_rel = relative_residual(z, g, a, b);
            if (true_rel <= options_.tol) return z;
            r = g;
            apply_operator(z, a, b, q);
            r -= q;
        }
        for (std::size_t k = 0; k < s.size(); ++k) s[k] = r[k] / diag[k];
        const double rs_new = dot(r, s);
        const double beta = rs_new / rs;
        rs = rs_new;
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = s[k] + beta * p[k];
    }
    std::ostringstream os;
    os << "conjugate gradient did not converge in " << max_it << " iterations (relative residual "
       << rnorm / gnorm << ", target " << options_.tol << ")";
    throw SolverFailure(os.str(), rnorm / gnorm);
}

double l1_to_l2_ratio(const ScreenedSolver& solver, const Field& g) {
    const double l1 = norm(g, Norm::L1);
    if (l1 == 0.0) throw InvalidArgument("l1_to_l2_ratio needs a nonzero input");
    return norm(solver.helmholtz(g), Norm::L2) / l1;
}

double point_source_constant(const ScreenedSolver& solver) {
    Field delta(solver.grid());
    delta[0] = 1.0 / solver.grid().cell_volume();
    return l1_to_l2_ratio(solver, delta);
}

}  // namespace dsmks
