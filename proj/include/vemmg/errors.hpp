#pragma once

#include <stdexcept>
#include <string>

namespace vemmg {

// geometry
struct DegenerateGeometry : std::runtime_error { using std::runtime_error::runtime_error; };
struct TriangulationFailure : std::runtime_error { using std::runtime_error::runtime_error; };
struct UnsupportedOrder : std::runtime_error { using std::runtime_error::runtime_error; };

// mesh
struct GenerationFailure : std::runtime_error { using std::runtime_error::runtime_error; };
struct HierarchyConstraintViolation : std::runtime_error { using std::runtime_error::runtime_error; };
struct MeshIoError : std::runtime_error { using std::runtime_error::runtime_error; };
struct FormatVersionMismatch : MeshIoError { using MeshIoError::MeshIoError; };
struct IndexOutOfRange : MeshIoError { using MeshIoError::MeshIoError; };

// vem
struct SingularProjector : std::runtime_error { using std::runtime_error::runtime_error; };

// rbspace
struct SingularLocalSolve : std::runtime_error { using std::runtime_error::runtime_error; };
struct InsufficientSnapshots : std::runtime_error { using std::runtime_error::runtime_error; };
struct ShapeMismatch : std::runtime_error { using std::runtime_error::runtime_error; };
struct PointOutsideElement : std::runtime_error { using std::runtime_error::runtime_error; };

// transfer
struct CoverageGap : std::runtime_error { using std::runtime_error::runtime_error; };

// linear algebra
struct DimensionMismatch : std::runtime_error { using std::runtime_error::runtime_error; };
struct NotPositiveDefinite : std::runtime_error { using std::runtime_error::runtime_error; };
struct CgStagnation : std::runtime_error { using std::runtime_error::runtime_error; };
struct SolverFailure : std::runtime_error { using std::runtime_error::runtime_error; };
struct NonConvergence : std::runtime_error { using std::runtime_error::runtime_error; };
struct EmptyHistory : std::runtime_error { using std::runtime_error::runtime_error; };

} // namespace vemmg
