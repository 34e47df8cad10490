#pragma once

// Driven transmon at the end of a semi-infinite waveguide: rotating-frame
// Hamiltonian, generalized-dissipator Liouvillian, dense steady-state solve
// and the input-output reflection coefficient.
//
// All rates and frequencies are angular (rad/s) with hbar = 1 inside the
// Liouvillian. Density matrices are vectorized column-major, so
// vec(A X B) = (B^T kron A) vec(X).

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mwthermo/trace.hpp"

namespace mwthermo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr int kMinLevels = 2;
inline constexpr int kMaxLevels = 10;
inline constexpr int kDefaultLevels = 4;

/// Emitter spectrum and coupling. Transition j (1-based) sits at
/// omega_ge + (j - 1) * alpha and couples to the line with strength sqrt(j).
struct TransmonParams
{
    double omega_ge = 0.0;  ///< fundamental transition, rad/s
    double alpha = 0.0;     ///< anharmonicity, rad/s, negative
    double gamma_rad = 0.0; ///< radiative decay of the fundamental transition, rad/s
    double gamma_phi = 0.0; ///< pure dephasing, rad/s
    double gamma_nr = 0.0;  ///< nonradiative decay into a zero-temperature bath, rad/s
    int levels = kDefaultLevels;

    /// Throws InvalidArgument when any invariant is violated.
    void validate() const;

    /// Angular frequency of transition j between levels j-1 and j, j = 1..levels-1.
    double transition_frequency(int j) const;
};

struct DriveParams
{
    double detuning = 0.0;  ///< omega_d - omega_ge, rad/s
    double rabi_rate = 0.0; ///< Omega, rad/s

    void validate() const;
};

/// Thermal photon number seen by each transition; entry j-1 belongs to transition j.
class BathOccupation
{
public:
    explicit BathOccupation(std::vector<double> n_th);

    static BathOccupation uniform(int levels, double n);
    static BathOccupation zero(int levels) { return uniform(levels, 0.0); }

    std::span<const double> values() const noexcept { return n_th_; }
    std::size_t size() const noexcept { return n_th_.size(); }
    double operator[](std::size_t j) const { return n_th_.at(j); }

private:
    std::vector<double> n_th_;
};

/// Validated, Hermitian, unit-trace, positive semidefinite state.
class DensityMatrix
{
public:
    static constexpr double kHermiticityTolerance = 1e-12;
    static constexpr double kTraceTolerance = 1e-10;
    static constexpr double kPositivityTolerance = 1e-10;

    /// Throws InvalidArgument if rho is not a valid state within the tolerances above.
    explicit DensityMatrix(ComplexMatrix rho);

    const ComplexMatrix& matrix() const noexcept { return rho_; }
    int levels() const noexcept { return static_cast<int>(rho_.rows()); }
    Complex operator()(int row, int col) const { return rho_(row, col); }
    double population(int level) const { return rho_(level, level).real(); }

private:
    ComplexMatrix rho_;
};

struct LiouvillianMatrix
{
    ComplexMatrix superop; ///< levels^2 x levels^2, acts on column-major vec(rho)
    bool include_cross_terms = true;
    int levels = 0;
};

/// Rotating-frame Hamiltonian -delta b^dag b + (alpha/2) b^dag b^dag b b + i (Omega/2)(b - b^dag).
ComplexMatrix build_hamiltonian(const TransmonParams& p, const DriveParams& d);

/// Full static superoperator: Hamiltonian commutator plus radiative, dephasing and
/// nonradiative parts. With include_cross_terms = false only the l = m dissipators survive.
LiouvillianMatrix build_liouvillian(const TransmonParams& p, const BathOccupation& bath,
                                    const DriveParams& d, bool include_cross_terms = true);

/// Unique stationary state via the trace-constrained dense solve.
/// Throws DegenerateSteadyState for a non-unique nullspace and ConvergenceError when the
/// solution fails the residual or Hermiticity checks.
DensityMatrix steady_state(const LiouvillianMatrix& L);

/// r = 1 + (2 Gamma / Omega) sum_j sqrt(j) <sigma_-^j>. Rejects Omega = 0.
Complex reflection_coefficient(const TransmonParams& p, const DensityMatrix& rho,
                               const DriveParams& d);

/// Per-unit-coefficient pieces of the Liouvillian for a fixed truncation and bath.
/// The full operator is the linear combination
///   L = delta*L_det + alpha*L_anh + Omega*L_drive + Gamma*L_rad + Gamma_nr*L_nr + gamma_phi*L_deph,
/// which lets parameter sweeps and fits skip the Kronecker products.
class LiouvillianTerms
{
public:
    LiouvillianTerms(int levels, const BathOccupation& bath, bool include_cross_terms = true);

    ComplexMatrix assemble(const TransmonParams& p, const DriveParams& d) const;

    int levels() const noexcept { return levels_; }
    bool include_cross_terms() const noexcept { return cross_terms_; }

private:
    int levels_;
    bool cross_terms_;
    ComplexMatrix detuning_;
    ComplexMatrix anharmonic_;
    ComplexMatrix drive_;
    ComplexMatrix radiative_;
    ComplexMatrix nonradiative_;
    ComplexMatrix dephasing_;
};

/// Steady-state reflection for one operating point, reusing precomputed terms.
Complex reflection_at(const LiouvillianTerms& terms, const TransmonParams& p, const DriveParams& d);

/// Resonant (delta = 0) reflection with uniform or per-transition occupation at Omega = rabi_ratio*Gamma.
Complex resonant_reflection(const TransmonParams& p, const BathOccupation& bath, double rabi_ratio,
                            bool include_cross_terms = true);

/// Sweep over powers (W, at the source plane) and detunings (rad/s). Input power is
/// converted to a Rabi rate with the line attenuation A. Points are ordered power-major.
/// Solver failures are rethrown with the offending point in the message.
ReflectionTrace reflection_spectrum(const TransmonParams& p, const BathOccupation& bath,
                                    std::span<const double> powers_watt,
                                    std::span<const double> detunings, double attenuation,
                                    bool include_cross_terms = true);

} // namespace mwthermo
