#ifndef WESTFEM_MESH_HPP
#define WESTFEM_MESH_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace westfem {

// Subdomain labels. NONLINEAR marks the region where the acoustic
// nonlinearity coefficient is nonzero; FLUID/SOLID are used by the
// elastic-acoustic coupling.
enum class Tag : std::uint8_t { Default = 0, Fluid = 1, Solid = 2, Nonlinear = 3 };

const char* tag_name(Tag t);
Tag tag_from_name(const std::string& name);

using Point = std::array<double, 3>; // unused coordinates are zero

// Per-element quantities that every assembly loop needs: the element
// measure and the (constant) gradients of the d+1 barycentric hat
// functions.
struct ElementGeometry {
    double measure = 0.0;
    std::array<Point, 4> grad{}; // grad[v] = gradient of hat at local vertex v
};

// Simplicial mesh with P1 nodes, d in {1,2,3}. Immutable after
// construction; safe to share read-only across threads.
struct Mesh {
    int dim = 1;
    std::vector<Point> nodes;
    std::vector<std::array<int, 4>> elements; // dim+1 vertex indices used
    std::vector<Tag> element_tags;
    std::vector<char> node_on_boundary;  // per node
    std::vector<int> boundary_nodes;     // sorted
    std::vector<ElementGeometry> geometry;

    int node_count() const { return static_cast<int>(nodes.size()); }
    int element_count() const { return static_cast<int>(elements.size()); }
    int verts_per_element() const { return dim + 1; }
    bool is_boundary(int node) const { return node_on_boundary[static_cast<std::size_t>(node)] != 0; }
    Point centroid(int element) const;

    double total_measure() const;
    double max_diameter() const;
};

Mesh interval_mesh(int n, double length);
Mesh rect_mesh(int nx, int ny, double lx, double ly);
Mesh box_mesh(int nx, int ny, int nz, double lx, double ly, double lz);

// Re-labels elements from a total predicate on centroids. Subdomain
// boundaries therefore always align with element facets.
Mesh tag_elements(Mesh mesh, const std::function<Tag(const Point&)>& predicate);

// Nodes incident to elements of more than one tag value.
std::vector<int> interface_nodes(const Mesh& mesh);

// Plain-text export: node and element counts, then one node per line
// (coordinates) and one element per line (vertex indices + tag name).
void write_mesh(const Mesh& mesh, const std::string& path);

} // namespace westfem

#endif
