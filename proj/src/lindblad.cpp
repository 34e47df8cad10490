#include "mwthermo/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mwthermo/calibration.hpp"
#include "mwthermo/constants.hpp"
#include "mwthermo/errors.hpp"

namespace mwthermo {

namespace {

constexpr double kResidualTolerance = 1e-10;
constexpr double kPreSymmetrizationTolerance = 1e-10;
constexpr double kMinReciprocalCondition = 1e-14;

bool finite(double x) { return std::isfinite(x); }

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b)
{
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Superoperators on column-major vec(rho).
ComplexMatrix left(const ComplexMatrix& a) // a rho
{
    return kron(ComplexMatrix::Identity(a.rows(), a.cols()), a);
}

ComplexMatrix right(const ComplexMatrix& b) // rho b
{
    return kron(b.transpose(), ComplexMatrix::Identity(b.rows(), b.cols()));
}

ComplexMatrix sandwich(const ComplexMatrix& a, const ComplexMatrix& b) // a rho b
{
    return kron(b.transpose(), a);
}

ComplexMatrix commutator(const ComplexMatrix& h) // -i [h, rho]
{
    return Complex(0.0, -1.0) * (left(h) - right(h));
}

ComplexMatrix annihilation(int n)
{
    ComplexMatrix b = ComplexMatrix::Zero(n, n);
    for (int j = 1; j < n; ++j)
        b(j - 1, j) = std::sqrt(static_cast<double>(j));
    return b;
}

// sigma_-^j = |j-1><j| for transition j = 1..n-1.
ComplexMatrix lowering(int n, int j)
{
    ComplexMatrix s = ComplexMatrix::Zero(n, n);
    s(j - 1, j) = 1.0;
    return s;
}

// Sum_{l,m} xi_l xi_m [(1 + n_m) D^-_{l,m} + n_m D^+_{l,m}] per unit rate.
ComplexMatrix generalized_dissipator(int n, std::span<const double> occupation, bool cross_terms)
{
    const int dim = n * n;
    ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
    for (int l = 1; l < n; ++l) {
        const ComplexMatrix sl = lowering(n, l);
        const ComplexMatrix pl = sl.adjoint();
        for (int m = 1; m < n; ++m) {
            if (!cross_terms && l != m)
                continue;
            const ComplexMatrix sm = lowering(n, m);
            const ComplexMatrix pm = sm.adjoint();
            const double xi = std::sqrt(static_cast<double>(l * m));
            const double nm = occupation[m - 1];

            const ComplexMatrix decay =
                -0.5 * (right(pm * sl) + left(pl * sm) - sandwich(sl, pm) - sandwich(sm, pl));
            const ComplexMatrix excite =
                -0.5 * (right(sm * pl) + left(sl * pm) - sandwich(pl, sm) - sandwich(pm, sl));
            out += xi * ((1.0 + nm) * decay + nm * excite);
        }
    }
    return out;
}

ComplexMatrix dephasing_dissipator(int n)
{
    const int dim = n * n;
    ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
    for (int j = 0; j < n; ++j) {
        ComplexMatrix proj = ComplexMatrix::Zero(n, n);
        proj(j, j) = 1.0;
        out += sandwich(proj, proj) - 0.5 * (left(proj) + right(proj));
    }
    return out;
}

void check_bath(int levels, const BathOccupation& bath)
{
    if (static_cast<int>(bath.size()) != levels - 1) {
        std::ostringstream msg;
        msg << "bath occupation has " << bath.size() << " entries, expected levels - 1 = "
            << levels - 1;
        throw InvalidArgument(msg.str());
    }
}

DensityMatrix solve_steady_state(const ComplexMatrix& superop, int n)
{
    const int dim = n * n;
    if (superop.rows() != dim || superop.cols() != dim)
        throw InvalidArgument("Liouvillian dimension does not match its level count");

    const double scale = superop.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || !finite(scale))
        throw DegenerateSteadyState("Liouvillian is zero or non-finite");

    ComplexMatrix system = superop / scale;
    system.row(0).setZero();
    for (int j = 0; j < n; ++j)
        system(0, j * n + j) = 1.0;
    ComplexVector rhs = ComplexVector::Zero(dim);
    rhs(0) = 1.0;

    const Eigen::PartialPivLU<ComplexMatrix> lu(system);
    // rcond() alone misses exactly singular systems, so the pivots are checked too.
    const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
    const double rcond = std::min(lu.rcond(), pivots.minCoeff() / pivots.maxCoeff());
    if (!(rcond > kMinReciprocalCondition)) {
        std::ostringstream msg;
        msg << "stationary state is not unique (reciprocal condition " << rcond << ")";
        throw DegenerateSteadyState(msg.str());
    }
    const ComplexVector vec = lu.solve(rhs);
    if (!vec.allFinite())
        throw ConvergenceError("steady-state solve produced non-finite entries");

    const double residual = (superop * vec).norm();
    const double bound = kResidualTolerance * superop.norm() * std::max(1.0, vec.norm());
    if (residual > bound) {
        std::ostringstream msg;
        msg << "steady-state residual " << residual << " exceeds " << bound;
        throw ConvergenceError(msg.str());
    }

    ComplexMatrix rho(n, n);
    for (int col = 0; col < n; ++col)
        for (int row = 0; row < n; ++row)
            rho(row, col) = vec(col * n + row);

    const double skew = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (skew > kPreSymmetrizationTolerance) {
        std::ostringstream msg;
        msg << "steady state deviates from Hermitian by " << skew;
        throw ConvergenceError(msg.str());
    }
    const ComplexMatrix hermitian = 0.5 * (rho + rho.adjoint());
    return DensityMatrix(hermitian);
}

} // namespace

void TransmonParams::validate() const
{
    if (levels < kMinLevels || levels > kMaxLevels)
        throw InvalidArgument("levels must lie in [2, 10], got " + std::to_string(levels));
    if (!finite(omega_ge) || omega_ge <= 0.0)
        throw InvalidArgument("omega_ge must be positive and finite");
    if (!finite(alpha) || alpha >= 0.0)
        throw InvalidArgument("alpha must be negative and finite");
    if (!finite(gamma_rad) || gamma_rad <= 0.0)
        throw InvalidArgument("gamma_rad must be positive; Gamma = 0 has no unique steady state");
    if (!finite(gamma_phi) || gamma_phi < 0.0)
        throw InvalidArgument("gamma_phi must be non-negative");
    if (!finite(gamma_nr) || gamma_nr < 0.0)
        throw InvalidArgument("gamma_nr must be non-negative");
}

double TransmonParams::transition_frequency(int j) const
{
    if (j < 1 || j >= levels)
        throw InvalidArgument("transition index out of range");
    return omega_ge + (j - 1) * alpha;
}

void DriveParams::validate() const
{
    if (!finite(detuning))
        throw InvalidArgument("detuning must be finite");
    if (!finite(rabi_rate) || rabi_rate < 0.0)
        throw InvalidArgument("rabi_rate must be non-negative");
}

BathOccupation::BathOccupation(std::vector<double> n_th) : n_th_(std::move(n_th))
{
    for (const double n : n_th_)
        if (!finite(n) || n < 0.0)
            throw InvalidArgument("thermal occupations must be non-negative and finite");
}

BathOccupation BathOccupation::uniform(int levels, double n)
{
    if (levels < kMinLevels)
        throw InvalidArgument("levels must be at least 2");
    return BathOccupation(std::vector<double>(static_cast<std::size_t>(levels - 1), n));
}

DensityMatrix::DensityMatrix(ComplexMatrix rho) : rho_(std::move(rho))
{
    if (rho_.rows() != rho_.cols() || rho_.rows() < 1)
        throw InvalidArgument("density matrix must be square");
    if (!rho_.allFinite())
        throw InvalidArgument("density matrix has non-finite entries");
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kHermiticityTolerance)
        throw InvalidArgument("density matrix is not Hermitian");
    if (std::abs(rho_.trace() - Complex(1.0)) > kTraceTolerance)
        throw InvalidArgument("density matrix trace differs from 1");
    const Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(rho_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -kPositivityTolerance)
        throw InvalidArgument("density matrix has a negative eigenvalue");
}

ComplexMatrix build_hamiltonian(const TransmonParams& p, const DriveParams& d)
{
    p.validate();
    d.validate();
    const ComplexMatrix b = annihilation(p.levels);
    const ComplexMatrix bd = b.adjoint();
    return -d.detuning * (bd * b) + 0.5 * p.alpha * (bd * bd * b * b)
           + Complex(0.0, 0.5 * d.rabi_rate) * (b - bd);
}

LiouvillianTerms::LiouvillianTerms(int levels, const BathOccupation& bath, bool include_cross_terms)
    : levels_(levels), cross_terms_(include_cross_terms)
{
    if (levels < kMinLevels || levels > kMaxLevels)
        throw InvalidArgument("levels must lie in [2, 10], got " + std::to_string(levels));
    check_bath(levels, bath);

    const ComplexMatrix b = annihilation(levels);
    const ComplexMatrix bd = b.adjoint();
    detuning_ = commutator(-(bd * b));
    anharmonic_ = commutator(0.5 * (bd * bd * b * b));
    drive_ = commutator(Complex(0.0, 0.5) * (b - bd));

    const std::vector<double> cold(static_cast<std::size_t>(levels - 1), 0.0);
    radiative_ = generalized_dissipator(levels, bath.values(), include_cross_terms);
    nonradiative_ = generalized_dissipator(levels, cold, include_cross_terms);
    dephasing_ = dephasing_dissipator(levels);
}

ComplexMatrix LiouvillianTerms::assemble(const TransmonParams& p, const DriveParams& d) const
{
    if (p.levels != levels_)
        throw InvalidArgument("parameter level count does not match the precomputed terms");
    ComplexMatrix out = d.detuning * detuning_;
    out += p.alpha * anharmonic_;
    out += d.rabi_rate * drive_;
    out += p.gamma_rad * radiative_;
    if (p.gamma_nr != 0.0)
        out += p.gamma_nr * nonradiative_;
    if (p.gamma_phi != 0.0)
        out += p.gamma_phi * dephasing_;
    return out;
}

LiouvillianMatrix build_liouvillian(const TransmonParams& p, const BathOccupation& bath,
                                    const DriveParams& d, bool include_cross_terms)
{
    p.validate();
    d.validate();
    check_bath(p.levels, bath);
    const LiouvillianTerms terms(p.levels, bath, include_cross_terms);
    return LiouvillianMatrix{terms.assemble(p, d), include_cross_terms, p.levels};
}

DensityMatrix steady_state(const LiouvillianMatrix& L)
{
    return solve_steady_state(L.superop, L.levels);
}

Complex reflection_coefficient(const TransmonParams& p, const DensityMatrix& rho, const DriveParams& d)
{
    if (!(d.rabi_rate > 0.0))
        throw InvalidArgument("reflection coefficient requires a strictly positive rabi_rate");
    if (rho.levels() != p.levels)
        throw InvalidArgument("density matrix size does not match the parameter level count");
    Complex sum = 0.0;
    for (int j = 1; j < p.levels; ++j)
        sum += std::sqrt(static_cast<double>(j)) * rho(j, j - 1);
    return 1.0 + (2.0 * p.gamma_rad / d.rabi_rate) * sum;
}

Complex reflection_at(const LiouvillianTerms& terms, const TransmonParams& p, const DriveParams& d)
{
    const DensityMatrix rho = solve_steady_state(terms.assemble(p, d), terms.levels());
    return reflection_coefficient(p, rho, d);
}

Complex resonant_reflection(const TransmonParams& p, const BathOccupation& bath, double rabi_ratio,
                            bool include_cross_terms)
{
    p.validate();
    if (!(rabi_ratio > 0.0))
        throw InvalidArgument("rabi_ratio must be positive");
    const LiouvillianTerms terms(p.levels, bath, include_cross_terms);
    return reflection_at(terms, p, DriveParams{0.0, rabi_ratio * p.gamma_rad});
}

ReflectionTrace reflection_spectrum(const TransmonParams& p, const BathOccupation& bath,
                                    std::span<const double> powers_watt,
                                    std::span<const double> detunings, double attenuation,
                                    bool include_cross_terms)
{
    p.validate();
    if (powers_watt.empty() || detunings.empty())
        throw InvalidArgument("power and detuning grids must be non-empty");
    if (!(attenuation > 0.0))
        throw InvalidArgument("attenuation must be positive");

    const LiouvillianTerms terms(p.levels, bath, include_cross_terms);
    ReflectionTrace trace;
    trace.points.reserve(powers_watt.size() * detunings.size());
    for (const double power : powers_watt) {
        const double rabi = drive_rate_from_power(power, attenuation, p.gamma_rad, p.omega_ge);
        for (const double detuning : detunings) {
            const DriveParams d{detuning, rabi};
            try {
                d.validate();
                trace.points.push_back(TracePoint{angular_to_hz(p.omega_ge + detuning), power,
                                                  reflection_at(terms, p, d)});
            } catch (const Error& e) {
                std::ostringstream msg;
                msg << "at power " << power << " W, detuning " << detuning << " rad/s: " << e.what();
                if (dynamic_cast<const DegenerateSteadyState*>(&e))
                    throw DegenerateSteadyState(msg.str());
                if (dynamic_cast<const ConvergenceError*>(&e))
                    throw ConvergenceError(msg.str());
                throw InvalidArgument(msg.str());
            }
        }
    }
    return trace;
}

} // namespace mwthermo
