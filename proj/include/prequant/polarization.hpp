#pragma once

// Real polarizations given by global frames, polarized sections, leaf
// holonomy and the half-density pairing on the leaf space.

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prequant/densities.hpp"
#include "prequant/prequantum.hpp"

namespace pq {

// Leaves are the fibres over the transverse coordinates; the remaining
// coordinates parametrize a leaf.
struct LeafQuotient {
    std::vector<std::size_t> transverse;   // chart indices of the quotient coordinates
    std::vector<std::size_t> along;        // chart indices of the leaf parameters
    std::vector<std::string> coordinates;  // names of the quotient coordinates

    // Point of M over quotient point y with leaf parameters t.
    std::vector<double> lift(std::span<const double> y, std::span<const double> t) const;
};

struct PolarizationCertificate {
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    double min_singular_value = 0.0; // rank check
    double isotropy_residual = 0.0;  // max |ω(X_i, X_j)|
    double involutivity_residual = 0.0; // max least-squares residual of [X_i, X_j]
};

class Polarization {
public:
    // Certifies rank m = dim/2 (smallest singular value > 1e-10), isotropy
    // (< 1e-10) and involutivity (< `tolerance`) at `samples` points.
    static Polarization certify(SymplecticStructure omega, std::vector<VectorField> frame,
                                std::optional<LeafQuotient> quotient = std::nullopt, std::size_t samples = 200,
                                std::uint64_t seed = 0xf01, double tolerance = 1e-8);

    const Chart& chart() const noexcept { return omega_.chart(); }
    const SymplecticStructure& symplectic() const noexcept { return omega_; }
    const std::vector<VectorField>& frame() const noexcept { return frame_; }
    const std::optional<LeafQuotient>& quotient() const noexcept { return quotient_; }
    const PolarizationCertificate& certificate() const noexcept { return certificate_; }
    double tolerance() const noexcept { return tolerance_; }

    // Distance from v to span{X_k(x)}, by least squares.
    double span_residual(std::span<const double> x, const Eigen::VectorXd& v) const;

private:
    Polarization(SymplecticStructure omega, std::vector<VectorField> frame, std::optional<LeafQuotient> quotient,
                 PolarizationCertificate cert, double tolerance);

    SymplecticStructure omega_;
    std::vector<VectorField> frame_;
    std::optional<LeafQuotient> quotient_;
    PolarizationCertificate certificate_;
    double tolerance_;
};

// {∂p_1, …, ∂p_n} on (T*R^n, Σ dp∧dq); leaves are the fibres q = const.
Polarization vertical_polarization(std::size_t n);
// {∂θ} on the punctured plane of punctured_plane_bundle(); leaves r = const.
Polarization circle_polarization();

// max over frame fields and points of |∇_X s|.
double polarized_residual(const PrequantumBundle& bundle, const Section& s, const Polarization& F,
                          const PointCloud& points);

// Parallel transport once around the leaf through x0 along the first frame
// field, by RK4 on ds/dt = -κ i θ(X) s over t ∈ [0, period].
cplx leaf_holonomy(const PrequantumBundle& bundle, const Polarization& F, std::span<const double> x0,
                   double period = 2.0 * std::numbers::pi, std::size_t steps = 4000);

struct HolonomyResult {
    double r = 0.0;
    cplx numeric;
    cplx closed_form;       // e^{-2πi r²}
    bool polarized_exists = false; // |numeric - 1| < 1e-8
};
// Leaf C_r of the punctured-plane circle polarization.
HolonomyResult punctured_plane_holonomy(double r, std::size_t steps = 4000);

// max over frame fields and points of the least-squares residual of
// [Ξ_f, X_i] against the frame.
double is_polarization_preserving(const Expression& f, const Polarization& F, const PointCloud& points);
double bracket_closure_check(const Expression& f, const Expression& g, const Polarization& F,
                             const PointCloud& points);
double qf_preserves_polarized_check(const PrequantumBundle& bundle, const Expression& f, const Section& s,
                                    const Polarization& F, const PointCloud& points);

struct PairingOptions {
    double polarized_tolerance = 1e-7;
    double leaf_tolerance = 1e-8;
    std::size_t transverse_samples = 50;
    std::vector<double> leaf_parameters{-1.5, -0.5, 0.0, 0.75, 1.75};
    double quadrature_tolerance = 1e-8;
};

// ∫_{M/F} ⟨s1, s2⟩ conj(μ1) μ2, with μ1, μ2 half-densities on an atlas of
// the leaf space. Throws ValidationError when a section is not polarized
// and NotLeafConstantError when ⟨s1, s2⟩ varies along leaves.
cplx half_density_pairing(const PrequantumBundle& bundle, const Polarization& F, const Section& s1,
                          const ManifoldDensity& mu1, const Section& s2, const ManifoldDensity& mu2,
                          const PairingOptions& options = {});

} // namespace pq
