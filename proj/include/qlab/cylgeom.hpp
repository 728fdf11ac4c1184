#pragma once

#include "qlab/qform.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace qlab {

using Vec4Q = std::array<Rational, 4>;

enum class PlaneCase { CASE1_A, CASE2_B, CASE3_C };

std::string to_string(PlaneCase c);

/// Plane t = alpha + beta r + gamma s.
struct Plane {
    Rational alpha, beta, gamma;
};

struct CaseSplit {
    Rational eta;
    PlaneCase kase = PlaneCase::CASE1_A;
    Rational a, b, c;
    Plane plane;
    int form = 0; // which form of the pair plays the role of Q1
    FormCoefficients coeffs;
    Rational discriminant; // c^2 - 4ab
};

/// Case of a restricted quadratic a r^2 + b s^2 + c rs, or nullopt when the
/// trichotomy does not apply.
std::optional<PlaneCase> classify_case(const Rational& a, const Rational& b, const Rational& c, const Rational& eta);

/// Uses Q1 when its restriction falls into one of the cases, otherwise Q2.
/// Throws EtaViolated when neither does.
CaseSplit case_split(const QuadraticPair& pair, const Plane& plane, const Rational& eta);

struct Form1Check {
    bool equal = false;
    Rational lhs;    // |d3 - beta d1 - gamma d2|
    Rational rhs;    // |c^2 - 4ab|
    Rational signed_lhs;
};

Form1Check form1_identity_check(const FormCoefficients& f, const Rational& beta, const Rational& gamma);

/// Rank of [[2A+E b, D+F b, E+2C b], [D+E g, 2B+F g, F+2C g]].
std::size_t case3_rank(const FormCoefficients& f, const Rational& beta, const Rational& gamma);

enum class Subcase { Auto, First, Second };

struct CylinderFrame {
    PlaneCase kase = PlaneCase::CASE1_A;
    int subcase = 0; // 1 or 2 in cases 1 and 2, 0 in case 3
    std::vector<Vec4Q> base;     // w vectors
    std::vector<Vec4Q> vertical; // u vectors
    Rational det;                // det[w..., u...]
    std::optional<Rational> predicted; // closed form for |det|, when there is one
    bool det_matches = true;
    bool tangent = false;  // every u lies in T at every sample point
    bool constant = false; // assembled r, s coefficients vanish
    std::vector<std::array<Rational, 2>> samples;
};

/// Frame over the parabola at s = s0. Throws CaseHypothesisFailed when
/// |a| <= eta/4, SubcaseHypothesisFailed when the requested subcase fails.
CylinderFrame cylinder_frame_case1(const FormCoefficients& f, const Plane& plane, const Rational& s0, const Rational& eta,
                                   Subcase sub = Subcase::Auto);

/// Case 1 with r and s exchanged; the parabola sits at r = r0.
CylinderFrame cylinder_frame_case2(const FormCoefficients& f, const Plane& plane, const Rational& r0, const Rational& eta,
                                   Subcase sub = Subcase::Auto);

/// Throws CaseHypothesisFailed when c^2 - 4ab = 0, or when eta is given and
/// the case 3 inequalities fail.
CylinderFrame cylinder_frame_case3(const FormCoefficients& f, const Plane& plane, const std::optional<Rational>& eta = std::nullopt);

/// Dispatches on split.kase.
CylinderFrame cylinder_frame(const CaseSplit& split, const Rational& slab = 0);

/// Identities re-derived over fully indeterminate coefficients.
struct SymbolicAudit {
    bool case1_sub1_constant = false;
    bool case1_sub2_constant = false;
    bool case1_fm2 = false;
    bool case3_star_constant = false;
    bool case3_det = false;
    bool form1 = false; // d3 - beta d1 - gamma d2 = -(c^2 - 4ab)
    bool ok() const
    {
        return case1_sub1_constant && case1_sub2_constant && case1_fm2 && case3_star_constant && case3_det && form1;
    }
};

SymbolicAudit generic_symbolic_audit();

nlohmann::json to_json(const CaseSplit& s);
nlohmann::json to_json(const CylinderFrame& f);

} // namespace qlab
