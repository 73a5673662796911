// Structured simplicial meshes on intervals, rectangles and boxes, with
// topological boundary detection and subdomain tagging.

#include "westfem/mesh.hpp"

#include "westfem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace westfem {

namespace {

double det2(double a, double b, double c, double d) { return a * d - b * c; }

// Signed measure of the simplex spanned by the element's vertices.
double signed_measure(const Mesh& m, const std::array<int, 4>& el) {
    const auto& p0 = m.nodes[el[0]];
    if (m.dim == 1) {
        return m.nodes[el[1]][0] - p0[0];
    }
    if (m.dim == 2) {
        const auto& p1 = m.nodes[el[1]];
        const auto& p2 = m.nodes[el[2]];
        return 0.5 * det2(p1[0] - p0[0], p2[0] - p0[0], p1[1] - p0[1], p2[1] - p0[1]);
    }
    const auto& p1 = m.nodes[el[1]];
    const auto& p2 = m.nodes[el[2]];
    const auto& p3 = m.nodes[el[3]];
    double a[3] = {p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]};
    double b[3] = {p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]};
    double c[3] = {p3[0] - p0[0], p3[1] - p0[1], p3[2] - p0[2]};
    double det = a[0] * det2(b[1], b[2], c[1], c[2]) - a[1] * det2(b[0], b[2], c[0], c[2]) +
                 a[2] * det2(b[0], b[1], c[0], c[1]);
    return det / 6.0;
}

ElementGeometry element_geometry(const Mesh& m, int e) {
    ElementGeometry g;
    const auto& el = m.elements[e];
    g.measure = signed_measure(m, el);
    const int d = m.dim;
    const auto& p0 = m.nodes[el[0]];
    if (d == 1) {
        double h = g.measure;
        g.grad[0] = {-1.0 / h, 0, 0};
        g.grad[1] = {1.0 / h, 0, 0};
        return g;
    }
    // Invert the edge matrix J = [p1-p0, ..., pd-p0]; rows of J^{-1} are the
    // gradients of the barycentric coordinates lambda_1..lambda_d.
    if (d == 2) {
        const auto& p1 = m.nodes[el[1]];
        const auto& p2 = m.nodes[el[2]];
        double j00 = p1[0] - p0[0], j01 = p2[0] - p0[0];
        double j10 = p1[1] - p0[1], j11 = p2[1] - p0[1];
        double det = det2(j00, j01, j10, j11);
        g.grad[1] = {j11 / det, -j01 / det, 0};
        g.grad[2] = {-j10 / det, j00 / det, 0};
    } else {
        const auto& p1 = m.nodes[el[1]];
        const auto& p2 = m.nodes[el[2]];
        const auto& p3 = m.nodes[el[3]];
        double J[3][3] = {{p1[0] - p0[0], p2[0] - p0[0], p3[0] - p0[0]},
                          {p1[1] - p0[1], p2[1] - p0[1], p3[1] - p0[1]},
                          {p1[2] - p0[2], p2[2] - p0[2], p3[2] - p0[2]}};
        double det = J[0][0] * det2(J[1][1], J[1][2], J[2][1], J[2][2]) -
                     J[0][1] * det2(J[1][0], J[1][2], J[2][0], J[2][2]) +
                     J[0][2] * det2(J[1][0], J[1][1], J[2][0], J[2][1]);
        // Rows of J^{-1}: cofactors of columns.
        g.grad[1] = {det2(J[1][1], J[1][2], J[2][1], J[2][2]) / det,
                     -det2(J[0][1], J[0][2], J[2][1], J[2][2]) / det,
                     det2(J[0][1], J[0][2], J[1][1], J[1][2]) / det};
        g.grad[2] = {-det2(J[1][0], J[1][2], J[2][0], J[2][2]) / det,
                     det2(J[0][0], J[0][2], J[2][0], J[2][2]) / det,
                     -det2(J[0][0], J[0][2], J[1][0], J[1][2]) / det};
        g.grad[3] = {det2(J[1][0], J[1][1], J[2][0], J[2][1]) / det,
                     -det2(J[0][0], J[0][1], J[2][0], J[2][1]) / det,
                     det2(J[0][0], J[0][1], J[1][0], J[1][1]) / det};
    }
    for (int c = 0; c < 3; ++c) {
        double s = 0;
        for (int v = 1; v <= d; ++v) s += g.grad[v][c];
        g.grad[0][c] = -s; // hats sum to one
    }
    return g;
}

// Boundary nodes are found topologically: a facet shared by exactly one
// element lies on the boundary.
void detect_boundary(Mesh& m) {
    m.node_on_boundary.assign(m.node_count(), 0);
    std::map<std::vector<int>, int> facet_count;
    const int d = m.dim;
    for (const auto& el : m.elements) {
        for (int skip = 0; skip <= d; ++skip) {
            std::vector<int> facet;
            for (int v = 0; v <= d; ++v)
                if (v != skip) facet.push_back(el[v]);
            std::sort(facet.begin(), facet.end());
            facet_count[facet]++;
        }
    }
    for (const auto& [facet, count] : facet_count) {
        if (count == 1)
            for (int node : facet) m.node_on_boundary[node] = 1;
    }
    m.boundary_nodes.clear();
    for (int i = 0; i < m.node_count(); ++i)
        if (m.node_on_boundary[i]) m.boundary_nodes.push_back(i);
}

void finalize(Mesh& m) {
    // Orientation fix: swap two vertices of any negatively oriented element.
    for (auto& el : m.elements)
        if (signed_measure(m, el) < 0) std::swap(el[m.dim], el[m.dim - 1]);
    m.geometry.resize(m.elements.size());
    for (int e = 0; e < m.element_count(); ++e) {
        m.geometry[e] = element_geometry(m, e);
        if (!(m.geometry[e].measure > 0))
            throw ConfigError("mesh: element " + std::to_string(e) + " has nonpositive measure");
    }
    if (m.element_tags.size() != m.elements.size())
        m.element_tags.assign(m.elements.size(), Tag::Default);
    detect_boundary(m);
}

} // namespace

const char* tag_name(Tag t) {
    switch (t) {
        case Tag::Fluid: return "FLUID";
        case Tag::Solid: return "SOLID";
        case Tag::Nonlinear: return "NONLINEAR";
        default: return "DEFAULT";
    }
}

Tag tag_from_name(const std::string& name) {
    if (name == "FLUID") return Tag::Fluid;
    if (name == "SOLID") return Tag::Solid;
    if (name == "NONLINEAR") return Tag::Nonlinear;
    if (name == "DEFAULT") return Tag::Default;
    throw ConfigError("unknown element tag '" + name + "'");
}

Point Mesh::centroid(int element) const {
    const auto& el = elements[element];
    Point c{0, 0, 0};
    for (int v = 0; v <= dim; ++v)
        for (int k = 0; k < 3; ++k) c[k] += nodes[el[v]][k];
    for (int k = 0; k < 3; ++k) c[k] /= dim + 1;
    return c;
}

double Mesh::total_measure() const {
    double s = 0;
    for (const auto& g : geometry) s += g.measure;
    return s;
}

double Mesh::max_diameter() const {
    double h = 0;
    for (const auto& el : elements) {
        for (int a = 0; a <= dim; ++a) {
            for (int b = a + 1; b <= dim; ++b) {
                const auto& pa = nodes[el[a]];
                const auto& pb = nodes[el[b]];
                double d2 = 0;
                for (int k = 0; k < 3; ++k) d2 += (pa[k] - pb[k]) * (pa[k] - pb[k]);
                h = std::max(h, std::sqrt(d2));
            }
        }
    }
    return h;
}

Mesh interval_mesh(int n, double length) {
    if (n < 1) throw ConfigError("interval_mesh: need at least one subdivision");
    if (!(length > 0)) throw ConfigError("interval_mesh: length must be positive");
    Mesh m;
    m.dim = 1;
    m.nodes.resize(n + 1);
    for (int i = 0; i <= n; ++i) m.nodes[i] = {length * i / n, 0, 0};
    for (int e = 0; e < n; ++e) m.elements.push_back({e, e + 1, -1, -1});
    finalize(m);
    return m;
}

Mesh rect_mesh(int nx, int ny, double lx, double ly) {
    if (nx < 1 || ny < 1) throw ConfigError("rect_mesh: need at least one subdivision per direction");
    if (!(lx > 0 && ly > 0)) throw ConfigError("rect_mesh: lengths must be positive");
    Mesh m;
    m.dim = 2;
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) m.nodes.push_back({lx * i / nx, ly * j / ny, 0});
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            m.elements.push_back({a, b, c, -1});
            m.elements.push_back({a, c, d, -1});
        }
    }
    finalize(m);
    return m;
}

Mesh box_mesh(int nx, int ny, int nz, double lx, double ly, double lz) {
    if (nx < 1 || ny < 1 || nz < 1) throw ConfigError("box_mesh: need at least one subdivision per direction");
    if (!(lx > 0 && ly > 0 && lz > 0)) throw ConfigError("box_mesh: lengths must be positive");
    Mesh m;
    m.dim = 3;
    auto id = [nx, ny](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
    for (int k = 0; k <= nz; ++k)
        for (int j = 0; j <= ny; ++j)
            for (int i = 0; i <= nx; ++i) m.nodes.push_back({lx * i / nx, ly * j / ny, lz * k / nz});
    // Kuhn split: six tetrahedra per cell, all sharing the main diagonal.
    static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                for (const auto& p : perms) {
                    int path[4][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {1, 1, 1}};
                    path[1][p[0]] = 1;
                    path[2][p[0]] = 1;
                    path[2][p[1]] = 1;
                    std::array<int, 4> el{};
                    for (int v = 0; v < 4; ++v) el[v] = id(i + path[v][0], j + path[v][1], k + path[v][2]);
                    m.elements.push_back(el);
                }
            }
        }
    }
    finalize(m);
    return m;
}

Mesh tag_elements(Mesh mesh, const std::function<Tag(const Point&)>& predicate) {
    for (int e = 0; e < mesh.element_count(); ++e)
        mesh.element_tags[e] = predicate(mesh.centroid(e));
    return mesh;
}

std::vector<int> interface_nodes(const Mesh& mesh) {
    std::vector<std::set<Tag>> tags_at(mesh.node_count());
    for (int e = 0; e < mesh.element_count(); ++e)
        for (int v = 0; v <= mesh.dim; ++v) tags_at[mesh.elements[e][v]].insert(mesh.element_tags[e]);
    std::vector<int> out;
    for (int i = 0; i < mesh.node_count(); ++i)
        if (tags_at[i].size() > 1) out.push_back(i);
    return out;
}

void write_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os << mesh.dim << '\n' << mesh.node_count() << '\n' << mesh.element_count() << '\n';
    os.precision(17);
    for (const auto& p : mesh.nodes) {
        for (int k = 0; k < mesh.dim; ++k) os << (k ? " " : "") << p[k];
        os << '\n';
    }
    for (int e = 0; e < mesh.element_count(); ++e) {
        for (int v = 0; v <= mesh.dim; ++v) os << mesh.elements[e][v] << ' ';
        os << tag_name(mesh.element_tags[e]) << '\n';
    }
}

} // namespace westfem
