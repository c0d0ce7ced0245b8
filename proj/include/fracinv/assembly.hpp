#pragma once

#include "fracinv/coefficients.hpp"
#include "fracinv/mesh.hpp"

#include <Eigen/Sparse>

#include <vector>

namespace fracinv {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Boundary-condition variants of the direct, inverse and adjoint problems.
///  ispn            lateral Dirichlet; natural (Neumann) top and bottom.
///  ispd_forward    lateral and top Dirichlet; natural bottom.
///  ispd_inversion  lateral Dirichlet; prescribed Neumann data on the top.
///  adjoint         lateral Dirichlet; misfit enters as Neumann data on the top.
enum class BcVariant { ispn, ispd_forward, ispd_inversion, adjoint };

const char* to_string(BcVariant variant);

struct SparseOperator {
    SparseMatrix matrix;
    BcVariant bc_variant = BcVariant::ispn;

    [[nodiscard]] Eigen::Index dimension() const { return matrix.rows(); }
};

/// Consistent P1 mass matrix.
SparseOperator assemble_mass(const Mesh2D& mesh);

/// P1 stiffness plus reaction, a(x,t) and q(x,t) sampled at triangle
/// centroids. Throws AssumptionViolation if a sampled tensor leaves the
/// declared ellipticity band.
SparseOperator assemble_stiffness(const Mesh2D& mesh, const CoefficientSet& coeffs, double t);

/// Consistent 1-D mass matrix of the top edge, on the trace grid (size M+1).
/// This is the Gram matrix of the L^2(omega) inner product used for data,
/// sources and misfits.
SparseMatrix trace_mass(const Mesh2D& mesh);

/// Full-length load vector of the surface integral int_omega psi phi_i dx1
/// for psi given at the top nodes (piecewise linear).
Eigen::VectorXd neumann_load(const Mesh2D& mesh, const Eigen::VectorXd& psi);

/// Free/constrained split of the mesh nodes for one boundary variant.
struct DofMap {
    int num_full = 0;
    std::vector<int> free;          // free index -> mesh node
    std::vector<int> full_to_free;  // mesh node -> free index, -1 if constrained

    [[nodiscard]] int num_free() const { return static_cast<int>(free.size()); }
    [[nodiscard]] int num_constrained() const { return num_full - num_free(); }
    [[nodiscard]] Eigen::VectorXd restrict_vector(const Eigen::VectorXd& full) const;
    /// Constrained entries are zero (all Dirichlet data here is homogeneous).
    [[nodiscard]] Eigen::VectorXd extend(const Eigen::VectorXd& reduced) const;
};

DofMap make_dof_map(const Mesh2D& mesh, BcVariant variant);

/// Symmetric restriction P^T A P onto the free nodes.
SparseMatrix restrict_matrix(const SparseMatrix& A, const DofMap& dofs);

struct ConstrainedSystem {
    SparseMatrix matrix;
    Eigen::VectorXd rhs;
    DofMap dofs;
};

/// Eliminates the Dirichlet rows and columns of `op` for `variant` and adds the
/// Neumann load of `boundary_data` (required for ispd_inversion and adjoint,
/// ignored otherwise) before restricting the right-hand side.
ConstrainedSystem apply_bc(const SparseOperator& op, const Eigen::VectorXd& rhs, BcVariant variant,
                           const Mesh2D& mesh, const Eigen::VectorXd* boundary_data = nullptr);

} // namespace fracinv
