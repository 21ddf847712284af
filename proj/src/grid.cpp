#include "dsmks/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "dsmks/error.hpp"

namespace dsmks {

namespace k = kernels::omp;

Grid make_grid(int dim, std::span<const int> n_per_axis, std::span<const double> lengths) {
    if (dim != 1 && dim != 2) {
        throw InvalidArgument("unsupported grid dimension " + std::to_string(dim) + " (expected 1 or 2)");
    }
    if (n_per_axis.size() != static_cast<std::size_t>(dim) || lengths.size() != static_cast<std::size_t>(dim)) {
        throw InvalidArgument("grid needs one cell count and one length per axis");
    }
    Grid g;
    g.dim = dim;
    g.volume = 1.0;
    for (int a = 0; a < dim; ++a) {
        if (n_per_axis[a] < kMinCellsPerAxis) {
            throw InvalidArgument("grid needs at least " + std::to_string(kMinCellsPerAxis) + " cells per axis, got " +
                                  std::to_string(n_per_axis[a]));
        }
        if (!(lengths[a] > 0.0) || !std::isfinite(lengths[a])) {
            throw InvalidArgument("grid lengths must be positive and finite");
        }
        g.n[a] = n_per_axis[a];
        g.length[a] = lengths[a];
        g.spacing[a] = lengths[a] / n_per_axis[a];
        g.volume *= lengths[a];
    }
    return g;
}

Grid make_grid(int dim, int n, std::span<const double> lengths) {
    const std::array<int, 2> ns{n, n};
    return make_grid(dim, std::span<const int>(ns.data(), static_cast<std::size_t>(std::clamp(dim, 0, 2))),
                     lengths);
}

Field::Field(const Grid& grid, double value) : grid_(grid), values_(grid.size(), value) {}

Field::Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        std::ostringstream os;
        os << "field has " << values_.size() << " values, grid has " << grid_.size() << " cells";
        throw InvalidArgument(os.str());
    }
    if (!all_finite()) throw InvalidArgument("field values must be finite");
}

bool Field::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::min() const { return k::min_value(values_); }
double Field::max() const { return k::max_value(values_); }

Field& Field::operator+=(const Field& other) {
    require_same_grid(*this, other);
    const auto n = static_cast<long>(values_.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) values_[i] += other.values_[i];
    return *this;
}

Field& Field::operator-=(const Field& other) {
    require_same_grid(*this, other);
    const auto n = static_cast<long>(values_.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) values_[i] -= other.values_[i];
    return *this;
}

Field& Field::operator*=(double s) {
    const auto n = static_cast<long>(values_.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) values_[i] *= s;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(Field a, double s) { return a *= s; }
Field operator*(double s, Field a) { return a *= s; }

Field hadamard(const Field& a, const Field& b) {
    require_same_grid(a, b);
    Field out(a.grid());
    const auto n = static_cast<long>(a.size());
    auto o = out.values();
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) o[i] = a[i] * b[i];
    return out;
}

void require_finite(const Field& f, std::string_view what) {
    if (!f.all_finite()) throw NumericalFailure("non-finite value in field '" + std::string(what) + "'");
}

void require_same_grid(const Field& a, const Field& b) {
    if (!(a.grid() == b.grid())) throw InvalidArgument("fields live on different grids");
}

Field laplacian_neumann(const Field& f) {
    Field out(f.grid());
    k::laplacian(f.grid().shape(), f.values(), out.values());
    return out;
}

Field laplacian_of_product(const Field& a, const Field& b) {
    require_same_grid(a, b);
    Field out(a.grid());
    k::laplacian_product(a.grid().shape(), a.values(), b.values(), out.values());
    return out;
}

double integrate(const Field& f) { return k::sum(f.values()) * f.grid().cell_volume(); }

double inner(const Field& a, const Field& b) { return integrate(hadamard(a, b)); }

double norm(const Field& f, Norm p) {
    switch (p) {
        case Norm::L1: {
            Field a(f.grid());
            for (std::size_t i = 0; i < f.size(); ++i) a[i] = std::abs(f[i]);
            return integrate(a);
        }
        case Norm::L2: return std::sqrt(inner(f, f));
        case Norm::Linf: return k::max_abs(f.values());
    }
    return 0.0;
}

Field grad_sq(const Field& f) {
    Field out(f.grid());
    k::grad_sq(f.grid().shape(), f.values(), out.values());
    return out;
}

double dirichlet_energy(const Field& f) { return k::dirichlet_energy(f.grid().shape(), f.values()); }

}  // namespace dsmks
