#include "fracinv/mesh.hpp"

#include "fracinv/errors.hpp"

#include <iomanip>
#include <ostream>
#include <string>

namespace fracinv {

double Mesh2D::signed_area(int tri) const
{
    const auto& t = triangles[static_cast<std::size_t>(tri)];
    const auto& a = nodes[t[0]];
    const auto& b = nodes[t[1]];
    const auto& c = nodes[t[2]];
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

std::array<double, 2> Mesh2D::centroid(int tri) const
{
    const auto& t = triangles[static_cast<std::size_t>(tri)];
    std::array<double, 2> c{0.0, 0.0};
    for (int v : t) {
        c[0] += nodes[v][0] / 3.0;
        c[1] += nodes[v][1] / 3.0;
    }
    return c;
}

bool Mesh2D::on_lateral(int node_index) const
{
    const NodeTag tag = tags[static_cast<std::size_t>(node_index)];
    return tag == NodeTag::lateral || tag == NodeTag::corner;
}

bool Mesh2D::on_top(int node_index) const
{
    return node_index / (M + 1) == M;
}

void Mesh2D::write_csv(std::ostream& os) const
{
    os << std::setprecision(17);
    os << "# nodes\nindex,x1,x2,tag\n";
    for (int n = 0; n < num_nodes(); ++n) {
        os << n << ',' << nodes[n][0] << ',' << nodes[n][1] << ','
           << static_cast<int>(tags[n]) << '\n';
    }
    os << "# triangles\nindex,v0,v1,v2\n";
    for (int t = 0; t < num_triangles(); ++t) {
        const auto& tri = triangles[t];
        os << t << ',' << tri[0] << ',' << tri[1] << ',' << tri[2] << '\n';
    }
}

Mesh2D build_mesh(int M)
{
    if (M < 2) {
        throw InvalidParameter("build_mesh: M must be >= 2, got " + std::to_string(M));
    }
    Mesh2D mesh;
    mesh.M = M;
    mesh.h = 1.0 / M;
    mesh.nodes.reserve(static_cast<std::size_t>((M + 1) * (M + 1)));
    mesh.tags.reserve(mesh.nodes.capacity());

    for (int k = 0; k <= M; ++k) {
        for (int i = 0; i <= M; ++i) {
            mesh.nodes.push_back({mesh.x1(i), mesh.x2(k)});
            const bool lateral = (i == 0 || i == M);
            const bool top = (k == M);
            const bool bottom = (k == 0);
            NodeTag tag = NodeTag::interior;
            if (lateral && (top || bottom)) {
                tag = NodeTag::corner;
            } else if (lateral) {
                tag = NodeTag::lateral;
            } else if (top) {
                tag = NodeTag::top;
            } else if (bottom) {
                tag = NodeTag::bottom;
            }
            mesh.tags.push_back(tag);
        }
    }

    mesh.triangles.reserve(static_cast<std::size_t>(2 * M * M));
    for (int k = 0; k < M; ++k) {
        for (int i = 0; i < M; ++i) {
            const int ll = mesh.node(i, k);
            const int lr = mesh.node(i + 1, k);
            const int ur = mesh.node(i + 1, k + 1);
            const int ul = mesh.node(i, k + 1);
            mesh.triangles.push_back({ll, lr, ur});
            mesh.triangles.push_back({ll, ur, ul});
        }
    }
    return mesh;
}

} // namespace fracinv
