#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace fracinv {

enum class NodeTag : std::uint8_t { interior, top, bottom, lateral, corner };

/// Uniform right-triangle mesh of (-1/2, 1/2)^2.
///
/// Nodes are numbered lexicographically in (x2, x1): node(i, k) = k*(M+1) + i,
/// where i indexes x1 and k indexes x2. The top row k = M is therefore a
/// contiguous slice and doubles as the trace grid on which sources and
/// lateral observations live. Each square cell is cut along its
/// lower-left to upper-right diagonal.
struct Mesh2D {
    int M = 0;
    double h = 0.0;
    double ell = 0.5;
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<NodeTag> tags;

    [[nodiscard]] int num_nodes() const { return static_cast<int>(nodes.size()); }
    [[nodiscard]] int num_triangles() const { return static_cast<int>(triangles.size()); }
    [[nodiscard]] int trace_size() const { return M + 1; }

    [[nodiscard]] int node(int i, int k) const { return k * (M + 1) + i; }
    [[nodiscard]] int top_node(int i) const { return node(i, M); }
    [[nodiscard]] double x1(int i) const { return -ell + i * h; }
    [[nodiscard]] double x2(int k) const { return -ell + k * h; }

    [[nodiscard]] double signed_area(int tri) const;
    [[nodiscard]] std::array<double, 2> centroid(int tri) const;

    /// Lateral nodes (x1 = +-1/2), corners included.
    [[nodiscard]] bool on_lateral(int node_index) const;
    [[nodiscard]] bool on_top(int node_index) const;

    /// Debug dump: a node table followed by a triangle table.
    void write_csv(std::ostream& os) const;
};

/// Throws InvalidParameter for M < 2.
Mesh2D build_mesh(int M);

} // namespace fracinv
