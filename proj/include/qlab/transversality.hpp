#pragma once

#include "qlab/classify.hpp"
#include "qlab/qform.hpp"
#include "qlab/rng.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace qlab {

using Vec5d = Eigen::Matrix<double, 5, 1>;
using Vec5Q = std::array<Rational, 5>;

/// n_j = (e_j, dQ1/dx_j, dQ2/dx_j) at a point of [0,1]^3.
struct TangentFrame {
    std::array<double, 3> point{};
    std::array<Vec5d, 3> n;
};

TangentFrame tangent_frame(const QuadraticPair& pair, double r, double s, double t);

/// Orthonormal frame of a subspace of R^5, stored as columns.
struct SubspaceSample {
    int dim = 0;
    Eigen::Matrix<double, 5, Eigen::Dynamic> basis;
};

/// Orthonormalizes the given spanning vectors (must be independent).
SubspaceSample make_subspace(const std::vector<Vec5d>& vectors);

/// Uniform on the Grassmannian: QR of a 5 x dim Gaussian matrix.
SubspaceSample random_subspace(int dim, Stream& rng);

/// Rational spanning set; used for the symbolic bad-set computation.
struct ExactSubspace {
    std::vector<Vec5Q> basis;
    int dim() const { return static_cast<int>(basis.size()); }
};

SubspaceSample to_sample(const ExactSubspace& v);

/// Dyadic cubes [c/K, (c+1)/K] in [0,1]^3, c the integer lower corner.
struct CubeCollection {
    long scale = 1;
    std::vector<std::array<long, 3>> corners;
    std::vector<std::string> labels;

    std::size_t size() const { return corners.size(); }
    bool dyadic() const { return scale > 0 && (scale & (scale - 1)) == 0; }
    std::array<double, 3> lower(std::size_t i) const;
    std::array<double, 3> center(std::size_t i) const;
};

/// Every cube of side 1/K.
CubeCollection full_collection(long K);

CubeCollection collection_from_json(const nlohmann::json& j);
nlohmann::json collection_to_json(const CubeCollection& c);
CubeCollection load_collection(const std::string& path);

// ---------------------------------------------------------------------------

/// l1 sum of the maximal square minors of the k x 3 matrix
/// M_V = [<x_a, n_j>], k = dim V in {1, 2, 4}.
double minor_det(const SubspaceSample& V, const std::array<double, 3>& point, const QuadraticPair& pair);

/// The entries of M_V are affine in the point; this caches the coefficients.
class ProjectionField {
public:
    ProjectionField(const SubspaceSample& V, const QuadraticPair& pair);
    Eigen::MatrixXd matrix(const std::array<double, 3>& p) const;
    double minor_det(const std::array<double, 3>& p) const;
    int dim() const { return k_; }

private:
    int k_;
    std::array<Eigen::MatrixXd, 4> c_; // constant, r, s, t parts
};

struct InfimumOptions {
    int grid = 9;           // samples per axis, faces and vertices included
    int descent_rounds = 3; // coordinate descent rounds at step side/16
};

/// Approximate infimum of minor_det over cube i.
double set_infimum(const ProjectionField& field, const CubeCollection& cubes, std::size_t i, const InfimumOptions& opt = {});
double set_infimum(const SubspaceSample& V, const CubeCollection& cubes, std::size_t i, const QuadraticPair& pair,
                   const InfimumOptions& opt = {});

/// q = max(1, floor(m / 100)).
std::size_t order_statistic_index(std::size_t m);

/// min over q-subsets of the max of d over the subset, computed as the q-th
/// smallest value.
double nu_of_subspace(std::vector<double> infima, std::size_t q);

struct NuOptions {
    std::vector<int> dims{1, 2, 4};
    std::size_t samples = 4096;
    std::uint64_t seed = 0;
    /// Share of the sampled subspaces that get the full grid plus descent
    /// and perturbation refinement; 1 refines everything.
    double refine_fraction = 0.01;
    int coarse_grid = 3;
    InfimumOptions fine{};
    int perturbations = 8;
};

struct NuEstimate {
    double value = 0;
    std::vector<std::pair<int, double>> per_dim;
    SubspaceSample witness;
    std::vector<std::size_t> witness_indices;
    std::size_t samples = 0;
    std::size_t refined = 0;
    std::size_t m = 0;
    std::size_t q = 0;
    std::optional<std::string> warning;
};

/// Throws EmptyCollection.
NuEstimate nu_estimate(const CubeCollection& cubes, const QuadraticPair& pair, const NuOptions& opt = {});

nlohmann::json to_json(const NuEstimate& e);

// ---------------------------------------------------------------------------

/// Polynomials of degree <= 2 whose common zero set contains the points where
/// M_V loses rank. A nonzero constant in the list means the set is empty, and
/// the list is then just {1}. Throws DegeneratePair when every candidate
/// vanishes identically.
std::vector<Quadric3> bad_set_polynomials(const ExactSubspace& V, const QuadraticPair& pair);

/// For a degenerate pair with witness n = (u, v, w): a subspace on which M_V
/// is rank deficient everywhere. dim 1 when A1, A2 are linearly dependent,
/// otherwise span((n, 0, 0), (0, 0, 0, x4, x5)) with x4 A1 + x5 A2 a multiple
/// of n n^T, when such (x4, x5) exists.
std::optional<ExactSubspace> degenerate_direction_subspace(const QuadraticPair& pair, const Vec3Q& witness);

// ---------------------------------------------------------------------------

struct ClusterOptions {
    double threshold_fraction = 0.01;
    /// Band half-width in units of the Lipschitz bound; <= 0 means 10/K.
    double margin = 0;
    std::size_t ransac_iterations = 20000;
    std::uint64_t seed = 0;
};

struct ClusterReport {
    bool found = false;
    std::array<double, 10> P{}; // unit l2 norm, order (1, r, s, t, r^2, s^2, t^2, rs, rt, st)
    std::size_t count = 0;
    std::size_t m = 0;
    double threshold = 0;
    double margin = 0;
    std::string method;
};

ClusterReport quadric_cluster_detect(const CubeCollection& cubes, const ClusterOptions& opt = {});

/// Lipschitz bound of P on [0,1]^3 (Euclidean gradient norm).
double lipschitz_bound(const std::array<double, 10>& P);

nlohmann::json to_json(const ClusterReport& r);

} // namespace qlab
