#pragma once

#include "qlab/cylgeom.hpp"
#include "qlab/qform.hpp"
#include "qlab/rng.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qlab {

using Vec5 = std::array<double, 5>;
using cplx = std::complex<double>;

/// w_B(x) = (1 + |x - c|/N)^(-C).
struct WeightBall {
    Vec5 center{};
    double radius = 1;
    double C = 100;

    static WeightBall standard(double N, double C = 100) { return {{}, N, C}; }
    double operator()(const Vec5& x) const;
};

/// Closed form of the integral of w_B over R^5, truncated at radius 8N.
double weight_integral(const WeightBall& ball);

enum class DensityKind { ONE, RANDOM_UNIT_MODULUS, SINGLE_DELTA, PLANE_CLUSTER, PRODUCT };

std::string to_string(DensityKind k);

struct DensitySpec {
    DensityKind kind = DensityKind::ONE;
    std::uint64_t seed = 0;
    std::array<long, 3> delta{0, 0, 0}; // SINGLE_DELTA cube index
    Plane plane{};                      // PLANE_CLUSTER
    int split_axis = 2;                 // PRODUCT: g1(other axes) * g2(split axis)
    std::uint64_t factor_seed1 = 0;     // 0 keeps the factor at 1
    std::uint64_t factor_seed2 = 0;
};

/// g as values on the side^3 cubes of [0,1]^3, side = sqrt(N).
struct CubeDensity {
    long side = 1;
    std::vector<cplx> values; // index (i * side + j) * side + k

    cplx operator()(long i, long j, long k) const { return values[static_cast<std::size_t>((i * side + j) * side + k)]; }
    /// Value at a point, by the cube containing it.
    cplx at(double r, double s, double t) const;
    std::size_t support() const;
};

/// Throws InvalidArgument unless N is a power of 4.
CubeDensity realize(const DensitySpec& g, long N);

/// Cubes of the sqrt(K) partition meeting the plane.
std::vector<std::array<long, 3>> plane_cubes(const Plane& plane, long K);

struct Box {
    std::array<double, 3> lo{0, 0, 0};
    std::array<double, 3> hi{1, 1, 1};
};

/// max over the forms of the l1 norm of the gradient on [0,1]^3.
double gradient_bound(const QuadraticPair& pair);

/// Largest step with phase variation below a quarter cycle per cell.
double max_step(const QuadraticPair& pair, const Vec5& x);

bool separable(const QuadraticPair& pair);

/// Midpoint rule with step h over R; throws StepTooCoarse when h exceeds
/// max_step unless auto_refine, which then uses max_step. Diagonal pairs go
/// through per-axis sums, others through the OpenMP direct kernel.
cplx extension_eval(const QuadraticPair& pair, const CubeDensity& g, const Box& R, const Vec5& x, double h, bool auto_refine = false);

/// Direct triple sum, OpenMP over r-slices with a fixed-order reduction.
cplx extension_eval_direct(const QuadraticPair& pair, const CubeDensity& g, const Box& R, const Vec5& x, double h);

/// Serial reference: plain triple loop with compensated summation.
cplx extension_eval_serial(const QuadraticPair& pair, const CubeDensity& g, const Box& R, const Vec5& x, double h);

/// sum over i in {0..N}^3 of e(x1 i1/N + x2 i2/N + x3 i3/N + x4 Q1(i/N) + x5 Q2(i/N)).
/// Diagonal pairs factor; others run row recurrences in parallel.
cplx lattice_exp_sum(const QuadraticPair& pair, long N, const Vec5& x);

/// Serial reference, one exponential per term, compensated.
cplx lattice_exp_sum_serial(const QuadraticPair& pair, long N, const Vec5& x);

// ---------------------------------------------------------------------------

/// Radial mixture proposal for integrals against w_B: the law of w_B itself
/// plus heavier-tailed components at scales 1 and sqrt(N), all truncated at
/// radius 8N.
class Proposal {
public:
    explicit Proposal(const WeightBall& ball);

    /// Draws x and returns w_B(x) / q(x).
    double sample(Stream& rng, Vec5& x) const;

private:
    struct Component {
        double scale, shape, weight, norm, cdf_max;
    };
    double density(double rho) const;

    WeightBall ball_;
    double truncation_;
    std::vector<Component> parts_;
};

struct LpEstimate {
    double value = 0;     // (integral)^(1/p)
    double stderr_ = 0;
    double integral = 0;  // integral of |F|^p w
    double integral_stderr = 0;
    std::size_t samples = 0;
};

/// Batch-means standard error of the mean of v.
double batch_stderr(const std::vector<double>& v, std::size_t batches = 100);

LpEstimate weighted_lp_norm(const std::function<cplx(const Vec5&)>& F, const WeightBall& ball, double p, std::size_t mc,
                            std::uint64_t seed);

struct SamplingConfig {
    std::size_t mc = 100000;
    std::uint64_t seed = 0;
    std::size_t batches = 100;
    double C = 100;
    double h = 0; // nominal step; 0 means 1/(8N)
    double ball_scale = 1; // ball radius in units of N
};

struct ExperimentRecord {
    std::string pair_hash;
    long N = 0;
    double p = 0;
    double lhs = 0;
    double rhs = 0;
    double ratio = 0;
    double stderr_ = 0;
    std::size_t mc = 0;
    double h = 0;
    double C = 0;
    std::uint64_t seed = 0;
};

std::string csv_header();
std::string csv_row(const ExperimentRecord& r);
void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records);

/// RFC-4180 table; throws SchemaError with the line number.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t column(const std::string& name) const;
};
CsvTable read_csv(std::istream& in, const std::string& source = "<csv>");

/// lhs = ||E g||, rhs = (sum over the sqrt(N) cubes of ||E_cube g||^p)^(1/p),
/// both in L^p(w_B) and on one shared sample set, for each p.
std::vector<ExperimentRecord> decoupling_ratio(const QuadraticPair& pair, const DensitySpec& g, long N,
                                               const std::vector<double>& ps, const SamplingConfig& cfg);
ExperimentRecord decoupling_ratio(const QuadraticPair& pair, const DensitySpec& g, long N, double p, const SamplingConfig& cfg);

/// Same with an explicit realized density.
std::vector<ExperimentRecord> decoupling_ratio(const QuadraticPair& pair, const CubeDensity& g, long N, const std::vector<double>& ps,
                                               const SamplingConfig& cfg);

struct ExpSumEstimate {
    long N = 0;
    double p = 0;
    double value = 0;
    double stderr_ = 0;
    std::size_t mc = 0;
    std::uint64_t seed = 0;
};

/// (mean of |S|^p)^(1/p) for x uniform in [0,N]^3 x [0,N^2]^2, every p on
/// the same samples.
std::vector<ExpSumEstimate> exp_sum_lp_average(const QuadraticPair& pair, long N, const std::vector<double>& ps, std::size_t mc,
                                               std::uint64_t seed, std::size_t batches = 100);

ExperimentRecord to_record(const QuadraticPair& pair, const ExpSumEstimate& e);

/// |x_i| <= eps forces |S| >= (N+1)^3 / 2.
struct MainArc {
    double eps = 0;
    double fraction = 0; // volume share of the main arc in the sampling box
    double floor(long N, double p) const;
};
MainArc main_arc(const QuadraticPair& pair, long N);

struct ScalingFit {
    double slope = 0;
    double intercept = 0;
    double residual = 0; // root mean square of the log residuals
    double ci_half_width = 0; // 95%
    std::size_t points = 0;
};

/// Least squares of log y against log x. Throws InsufficientData below
/// three distinct x.
ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& xy);
ScalingFit fit_scaling(const std::vector<ExperimentRecord>& records);

struct ExperimentSeries {
    std::vector<ExperimentRecord> records;
    ScalingFit fit;
};

/// Product densities on a pair whose taxonomy has a zero row or a split;
/// throws WrongTaxonomy otherwise.
ExperimentSeries degenerate_product_bound(const QuadraticPair& pair, const std::vector<long>& Ns, double p, const SamplingConfig& cfg,
                                          bool single_delta = false);

/// g = 1 on the sqrt(K) cubes meeting the plane. Throws EmptyCluster when
/// the plane misses the cube, InvalidArgument outside 4 <= p <= 6.
ExperimentRecord plane_cluster_ratio(const QuadraticPair& pair, const Plane& plane, long K, double p, const SamplingConfig& cfg);
ExperimentSeries plane_cluster_series(const QuadraticPair& pair, const Plane& plane, const std::vector<long>& Ks, double p,
                                      const SamplingConfig& cfg);

struct CrossoverRow {
    double p, low_branch, high_branch, exponent;
};
struct Crossover {
    Rational p_c;
    std::vector<CrossoverRow> table;
};

/// Branches d/2 (1/2 - 1/p) and d/2 - n/p; they meet at 4n/d - 2.
Crossover critical_exponent_crossover(const std::vector<double>& ps, int d = 3, int n = 5);

} // namespace qlab
