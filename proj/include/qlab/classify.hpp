#pragma once

#include "qlab/qform.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace qlab {

enum class Verdict { Nondegenerate, Degenerate };

std::string to_string(Verdict v);

/// Result of the exact test of the condition that
/// det[grad Q1; grad Q2; (u, v, w)] is a nonzero polynomial for every
/// nonzero (u, v, w). Expanding along the third row gives
/// u*D1 - v*D2 + w*D3, with D1, D2, D3 the 2x2 minors of the gradient rows
/// on columns (s,t), (r,t), (r,s).
struct NondegeneracyVerdict {
    Verdict verdict = Verdict::Nondegenerate;
    /// Present iff degenerate: (u, v, w) != 0 with u*D1 - v*D2 + w*D3 == 0.
    std::optional<Vec3Q> witness;
    std::array<HomQuad3, 3> minor_polys;
    std::size_t coefficient_rank = 0;
};

/// D1, D2, D3 as homogeneous quadratics.
std::array<HomQuad3, 3> gradient_minors(const QuadraticPair& pair);

/// u*D1 - v*D2 + w*D3.
HomQuad3 witness_combination(const std::array<HomQuad3, 3>& minors, const Vec3Q& uvw);

NondegeneracyVerdict nondegeneracy_check(const QuadraticPair& pair);

/// Compares the verdict on pair with the verdict on v -> Q_i(B v). Always
/// true; exists to drive the invariance property. Throws SingularTransform.
bool invariance_check(const QuadraticPair& pair, const Mat3Q& B);

// ---------------------------------------------------------------------------
// Simultaneous diagonalization M^T A_i M = diag(Lambda_i).

using LambdaQ = std::array<std::array<Rational, 3>, 2>;
using LambdaD = Eigen::Matrix<double, 2, 3>;

struct SimDiag {
    /// True when M and Lambda are exact rationals (all generalized
    /// eigenvalues rational). Otherwise only the binary64 fields are set.
    bool exact = false;
    std::optional<Mat3Q> M_exact;
    std::optional<LambdaQ> lambda_exact;
    Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
    LambdaD lambda = LambdaD::Zero();
    /// Largest off-diagonal magnitude of M^T A_i M relative to the largest
    /// entry; 0 in exact mode.
    double residual = 0.0;
    /// Which invertible pencil member was used: "A1", "A2" or "A1+k*A2".
    std::string route;
};

struct SimDiagResult {
    std::optional<SimDiag> value;
    /// Why value is absent: "complex-spectrum", "defective-eigenspace",
    /// "pencil-degenerate", "residual-gate".
    std::string reason;
};

/// Trial bound for tau in A1 + tau*A2 when both forms are singular.
inline constexpr int kPencilTrials = 20;

SimDiagResult simultaneous_diagonalize(const QuadraticPair& pair);

// ---------------------------------------------------------------------------
// Two-by-two minors of Lambda.

/// Column split patterns reachable by a row mix beta in GL2.
///  ZeroRow  : [[0,0,0],[a,b,c]]
///  Split1_23: [[c,0,0],[0,a,b]]  (columns 2 and 3 proportional)
///  Split2_13: [[0,c,0],[a,0,b]]  (columns 1 and 3 proportional)
///  Split3_12: [[0,0,c],[a,b,0]]  (columns 1 and 2 proportional)
enum class MinorType { ZeroRow, Split1_23, Split2_13, Split3_12 };

std::string to_string(MinorType t);

template <class T>
struct TypeMatch {
    MinorType type;
    std::array<std::array<T, 2>, 2> beta;
    /// beta * Lambda.
    std::array<std::array<T, 3>, 2> reduced;
    /// Sign pattern of reduced: the {0, 1, -1} representative after
    /// positive column scalings.
    std::array<std::array<int, 3>, 2> pattern;
};

template <class T>
struct Taxonomy {
    bool all_minors_nonzero = false;
    /// Minors on column pairs (1,2), (1,3), (2,3).
    std::array<T, 3> minors{};
    /// Every matching type; empty iff all_minors_nonzero.
    std::vector<TypeMatch<T>> matches;
};

Taxonomy<Rational> minor_taxonomy(const LambdaQ& lambda);
/// Minors with |m| <= tol * max(1, |col_i| |col_j|) count as zero.
Taxonomy<double> minor_taxonomy(const LambdaD& lambda, double tol = 1e-10);

// ---------------------------------------------------------------------------

/// Transform to (1/2 (r^2 + A s^2), 1/2 (t^2 + B s^2)).
struct NormalForm {
    bool exact = false;
    std::optional<Rational> A_exact, B_exact;
    std::optional<Mat3Q> M_exact;
    std::optional<Mat2Q> beta_exact;
    double A = 0, B = 0;
    Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
    Eigen::Matrix2d beta = Eigen::Matrix2d::Zero();
    /// Max deviation of the reconstructed pair from the target (0 when exact).
    double reconstruction_error = 0;
};

QuadraticPair normal_form_pair(const Rational& A, const Rational& B);

/// Throws NotReducible unless simultaneous diagonalization succeeds and all
/// minors are nonzero.
NormalForm normal_form(const QuadraticPair& pair);

// ---------------------------------------------------------------------------

struct EtaEstimate {
    double value = 0;
    /// (alpha, beta, gamma). The quadratic part of the restriction does not
    /// depend on alpha, so alpha is always reported as 0.
    std::array<double, 3> argmin{};
    double search_box = 10.0;
    double grid_step = 1.0 / 32;
    std::size_t grid_points = 0;
    double grid_value = 0;
    bool refined = false;
};

/// max over i of the largest |quadratic coefficient| of Q_i restricted to
/// t = alpha + beta r + gamma s.
double eta_objective(const QuadraticPair& pair, double beta, double gamma);

EtaEstimate eta_estimate(const QuadraticPair& pair, double box = 10.0, double step = 1.0 / 32, bool refine = true);

// ---------------------------------------------------------------------------

struct ClassificationReport {
    NondegeneracyVerdict nondegeneracy;
    SimDiagResult simdiag;
    std::optional<Taxonomy<double>> taxonomy;
    std::optional<Taxonomy<Rational>> taxonomy_exact;
    std::optional<NormalForm> normal_form;
    std::optional<EtaEstimate> eta;
};

ClassificationReport classify(const QuadraticPair& pair, std::optional<std::pair<double, double>> eta_params = std::nullopt);

nlohmann::json to_json(const NondegeneracyVerdict& v);
nlohmann::json to_json(const ClassificationReport& r);

} // namespace qlab
