// Copyright 2026 The primvol Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "primvol/geom.h"

namespace primvol {

/// Triangle mesh with an explicit UV layout. Faces index positions and UVs separately,
/// as OBJ does, so seams can carry distinct UVs for a shared position.
struct GuideMesh {
    struct Face {
        std::array<int, 3> position;
        std::array<int, 3> uv;
    };
    std::vector<Vec3> positions;
    std::vector<Vec2> uvs;
    std::vector<Face> faces;

    /// Index ranges, UVs inside [0,1]^2 and non-degenerate UV triangles.
    void validate() const;
    double uv_area(const Face& f) const;
};

class MeshError : public std::runtime_error {
public:
    enum class Kind { Io, Parse, NoUv, Invalid };
    MeshError(Kind kind, const std::string& what, int line = 0)
        : std::runtime_error(what), kind_(kind), line_(line)
    {
    }
    Kind kind() const { return kind_; }
    /// 1-based source line for parse errors, 0 otherwise.
    int line() const { return line_; }

private:
    Kind kind_;
    int line_;
};

/// Reads the OBJ subset `v`, `vt`, `f a/b a/b a/b`; normals, groups and materials are ignored.
GuideMesh load_mesh(const std::filesystem::path& path);
GuideMesh parse_obj(std::istream& in, const std::string& source_name = "<obj>");
std::string to_obj(const GuideMesh& mesh);

/// Base placement of each primitive derived from the guide mesh.
struct AnchorSet {
    int grid_side{0};
    std::vector<Vec3> positions;
    std::vector<Rotation> rotations;
    /// Cells with no UV coverage copy the nearest covered cell.
    std::vector<bool> inherited;
    Vec3 base_scale;

    std::size_t size() const { return positions.size(); }
};

/// One third of the bounding-box diagonal divided by the grid side, on every axis.
Vec3 default_base_scale(const GuideMesh& mesh, int grid_side);

/// Places grid_side^2 anchors at UV cell centers. Cell (i, j) maps to index j * g + i,
/// with u along i. Frames are (tangent dP/du, bitangent, normal) orthonormalized.
AnchorSet anchor_primitives(const GuideMesh& mesh, int grid_side,
                            std::optional<Vec3> base_scale = std::nullopt);

/// Latitude-longitude sphere centered at the origin, u along longitude. The pole rows
/// are triangle fans so no face is degenerate in 3D.
GuideMesh make_uv_sphere(double radius, int segments, int rings);

/// Unit square [-1,1]^2 in the z = 0 plane as two triangles, UVs spanning [0,1]^2.
GuideMesh make_quad(double half_size = 1.0);

}  // namespace primvol
