#include "fracinv/assembly.hpp"

#include "fracinv/errors.hpp"

#include <sstream>

namespace fracinv {

namespace {

using Triplet = Eigen::Triplet<double>;

struct P1Geometry {
    double area;
    // Gradients of the three barycentric basis functions.
    double gx[3];
    double gy[3];
};

P1Geometry p1_geometry(const Mesh2D& mesh, int tri)
{
    const auto& t = mesh.triangles[static_cast<std::size_t>(tri)];
    const auto& p0 = mesh.nodes[t[0]];
    const auto& p1 = mesh.nodes[t[1]];
    const auto& p2 = mesh.nodes[t[2]];
    P1Geometry g{};
    g.area = mesh.signed_area(tri);
    const double inv = 1.0 / (2.0 * g.area);
    g.gx[0] = (p1[1] - p2[1]) * inv;
    g.gx[1] = (p2[1] - p0[1]) * inv;
    g.gx[2] = (p0[1] - p1[1]) * inv;
    g.gy[0] = (p2[0] - p1[0]) * inv;
    g.gy[1] = (p0[0] - p2[0]) * inv;
    g.gy[2] = (p1[0] - p0[0]) * inv;
    return g;
}

SparseMatrix from_triplets(int n, const std::vector<Triplet>& triplets)
{
    SparseMatrix A(n, n);
    A.setFromTriplets(triplets.begin(), triplets.end());
    A.makeCompressed();
    return A;
}

} // namespace

const char* to_string(BcVariant variant)
{
    switch (variant) {
    case BcVariant::ispn: return "ispn";
    case BcVariant::ispd_forward: return "ispd-forward";
    case BcVariant::ispd_inversion: return "ispd-inversion";
    case BcVariant::adjoint: return "adjoint";
    }
    return "unknown";
}

SparseOperator assemble_mass(const Mesh2D& mesh)
{
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(9 * mesh.num_triangles()));
    for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
        const double area = mesh.signed_area(tri);
        const auto& t = mesh.triangles[static_cast<std::size_t>(tri)];
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                trip.emplace_back(t[a], t[b], area * (a == b ? 2.0 : 1.0) / 12.0);
            }
        }
    }
    return SparseOperator{from_triplets(mesh.num_nodes(), trip), BcVariant::ispn};
}

SparseOperator assemble_stiffness(const Mesh2D& mesh, const CoefficientSet& coeffs, double t)
{
    const double lo = coeffs.lambda;
    const double hi = 1.0 / coeffs.lambda;
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(9 * mesh.num_triangles()));
    for (int tri = 0; tri < mesh.num_triangles(); ++tri) {
        const P1Geometry g = p1_geometry(mesh, tri);
        const auto c = mesh.centroid(tri);
        const Tensor2 a = coeffs.a(c[0], c[1], t);
        if (a.min_eig() < lo - kAssumptionTolerance || a.max_eig() > hi + kAssumptionTolerance) {
            std::ostringstream os;
            os << "assemble_stiffness: coefficient not elliptic with lambda=" << lo << " at ("
               << c[0] << ", " << c[1] << ", t=" << t << ")";
            throw AssumptionViolation(os.str());
        }
        const double q = coeffs.q(c[0], c[1], t);
        const auto& nodes = mesh.triangles[static_cast<std::size_t>(tri)];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double flux = a.a11 * g.gx[j] * g.gx[i] + a.a12 * (g.gy[j] * g.gx[i] + g.gx[j] * g.gy[i])
                                  + a.a22 * g.gy[j] * g.gy[i];
                const double reaction = q * g.area * (i == j ? 2.0 : 1.0) / 12.0;
                trip.emplace_back(nodes[i], nodes[j], g.area * flux + reaction);
            }
        }
    }
    return SparseOperator{from_triplets(mesh.num_nodes(), trip), BcVariant::ispn};
}

SparseMatrix trace_mass(const Mesh2D& mesh)
{
    const int n = mesh.trace_size();
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(4 * mesh.M));
    for (int e = 0; e < mesh.M; ++e) {
        trip.emplace_back(e, e, mesh.h / 3.0);
        trip.emplace_back(e + 1, e + 1, mesh.h / 3.0);
        trip.emplace_back(e, e + 1, mesh.h / 6.0);
        trip.emplace_back(e + 1, e, mesh.h / 6.0);
    }
    return from_triplets(n, trip);
}

Eigen::VectorXd neumann_load(const Mesh2D& mesh, const Eigen::VectorXd& psi)
{
    if (psi.size() != mesh.trace_size()) {
        throw DimensionMismatch("neumann_load: boundary data must live on the trace grid");
    }
    Eigen::VectorXd load = Eigen::VectorXd::Zero(mesh.num_nodes());
    const double third = mesh.h / 3.0;
    const double sixth = mesh.h / 6.0;
    for (int e = 0; e < mesh.M; ++e) {
        load[mesh.top_node(e)] += third * psi[e] + sixth * psi[e + 1];
        load[mesh.top_node(e + 1)] += sixth * psi[e] + third * psi[e + 1];
    }
    return load;
}

Eigen::VectorXd DofMap::restrict_vector(const Eigen::VectorXd& full) const
{
    if (full.size() != num_full) {
        throw DimensionMismatch("DofMap::restrict_vector: wrong length");
    }
    Eigen::VectorXd r(num_free());
    for (int f = 0; f < num_free(); ++f) {
        r[f] = full[free[f]];
    }
    return r;
}

Eigen::VectorXd DofMap::extend(const Eigen::VectorXd& reduced) const
{
    if (reduced.size() != num_free()) {
        throw DimensionMismatch("DofMap::extend: wrong length");
    }
    Eigen::VectorXd full = Eigen::VectorXd::Zero(num_full);
    for (int f = 0; f < num_free(); ++f) {
        full[free[f]] = reduced[f];
    }
    return full;
}

DofMap make_dof_map(const Mesh2D& mesh, BcVariant variant)
{
    DofMap dofs;
    dofs.num_full = mesh.num_nodes();
    dofs.full_to_free.assign(static_cast<std::size_t>(mesh.num_nodes()), -1);
    const bool top_dirichlet = (variant == BcVariant::ispd_forward);
    for (int n = 0; n < mesh.num_nodes(); ++n) {
        const bool constrained = mesh.on_lateral(n) || (top_dirichlet && mesh.on_top(n));
        if (!constrained) {
            dofs.full_to_free[n] = dofs.num_free();
            dofs.free.push_back(n);
        }
    }
    return dofs;
}

SparseMatrix restrict_matrix(const SparseMatrix& A, const DofMap& dofs)
{
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(A.nonZeros()));
    for (int col = 0; col < A.outerSize(); ++col) {
        const int fc = dofs.full_to_free[col];
        if (fc < 0) {
            continue;
        }
        for (SparseMatrix::InnerIterator it(A, col); it; ++it) {
            const int fr = dofs.full_to_free[static_cast<std::size_t>(it.row())];
            if (fr >= 0) {
                trip.emplace_back(fr, fc, it.value());
            }
        }
    }
    return from_triplets(dofs.num_free(), trip);
}

ConstrainedSystem apply_bc(const SparseOperator& op, const Eigen::VectorXd& rhs, BcVariant variant,
                           const Mesh2D& mesh, const Eigen::VectorXd* boundary_data)
{
    if (op.dimension() != mesh.num_nodes() || rhs.size() != mesh.num_nodes()) {
        throw DimensionMismatch("apply_bc: operator/rhs do not match the mesh");
    }
    const bool needs_data = variant == BcVariant::ispd_inversion || variant == BcVariant::adjoint;
    if (needs_data && boundary_data == nullptr) {
        throw InvalidParameter(std::string("apply_bc: variant ") + to_string(variant)
                               + " requires Neumann boundary data");
    }
    ConstrainedSystem sys;
    sys.dofs = make_dof_map(mesh, variant);
    sys.matrix = restrict_matrix(op.matrix, sys.dofs);
    Eigen::VectorXd full = rhs;
    if (needs_data) {
        full += neumann_load(mesh, *boundary_data);
    }
    sys.rhs = sys.dofs.restrict_vector(full);
    return sys;
}

} // namespace fracinv
