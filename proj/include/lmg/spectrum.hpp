// spectrum.hpp — collective spin operators, non-Hermitian Hamiltonian, spectrum and level density
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <lapacke.h>

#include "core.hpp"

namespace lmg {

class EigensolverError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense spin-N/2 operators in the Jz eigenbasis, rows ordered by m = -N/2 ... +N/2.
// Dense (rather than banded) storage keeps the operator algebra transparent; the
// matrices are small enough that the eigensolver dominates anyway.
struct SpinMatrices {
    int n_spins{0};
    Eigen::MatrixXcd jx, jy, jz, jplus, jminus;
};

inline SpinMatrices build_spin_matrices(int n_spins, int n_max = 5000) {
    if (n_spins < 1) throw std::invalid_argument("build_spin_matrices: n_spins must be >= 1");
    if (n_spins > n_max)
        throw std::invalid_argument("build_spin_matrices: n_spins exceeds the dense-matrix cap");
    const int dim = n_spins + 1;
    const double j = 0.5 * n_spins;

    SpinMatrices m;
    m.n_spins = n_spins;
    m.jz = Eigen::MatrixXcd::Zero(dim, dim);
    m.jplus = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) m.jz(i, i) = -j + i;
    // J+ |j, m> = sqrt(j(j+1) - m(m+1)) |j, m+1>
    for (int i = 0; i + 1 < dim; ++i) {
        const double mval = -j + i;
        m.jplus(i + 1, i) = std::sqrt(j * (j + 1.0) - mval * (mval + 1.0));
    }
    m.jminus = m.jplus.adjoint();
    m.jx = 0.5 * (m.jplus + m.jminus);
    m.jy = std::complex<double>(0.0, -0.5) * (m.jplus - m.jminus);
    return m;
}

// H_eff = -h Jz - (gamma/N) Jx^2 - (gamma_y/N) Jy^2 - i (kappa/2N) J- J+.
// The anti-Hermitian part is diagonal and negative semidefinite, so every
// eigenvalue sits on or below the real axis.
inline Eigen::MatrixXcd build_h_eff(const SpinMatrices& m, const ModelParams& p) {
    p.validate();
    if (m.n_spins != p.n_spins)
        throw std::invalid_argument("build_h_eff: spin matrices built for a different n_spins");
    const double n = static_cast<double>(p.n_spins);
    Eigen::MatrixXcd h = -p.h * m.jz;
    h.noalias() -= (p.gamma / n) * (m.jx * m.jx);
    if (p.gamma_y != 0.0) h.noalias() -= (p.gamma_y / n) * (m.jy * m.jy);
    if (p.kappa != 0.0)
        h.noalias() -= std::complex<double>(0.0, 0.5 * p.kappa / n) * (m.jminus * m.jplus);
    return h;
}

// Eigenvalues of H_eff in units of h (not yet divided by N), sorted by
// (Re, Im) so equal inputs give byte-identical downstream output.
struct ComplexSpectrum {
    std::vector<std::complex<double>> eigenvalues;
    ModelParams params;

    // E/N values, the natural scale for densities and spectral plots.
    std::vector<std::complex<double>> scaled() const {
        std::vector<std::complex<double>> out(eigenvalues.size());
        const double inv_n = 1.0 / static_cast<double>(params.n_spins);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = eigenvalues[i] * inv_n;
        return out;
    }
};

inline ComplexSpectrum complex_spectrum(const Eigen::MatrixXcd& h_eff, const ModelParams& p) {
    if (h_eff.rows() != h_eff.cols() || h_eff.rows() != p.n_spins + 1)
        throw std::invalid_argument("complex_spectrum: matrix dimension does not match n_spins + 1");
    const lapack_int n = static_cast<lapack_int>(h_eff.rows());
    Eigen::MatrixXcd work = h_eff; // zgeev destroys its input
    std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
    const lapack_int info = LAPACKE_zgeev(
        LAPACK_COL_MAJOR, 'N', 'N', n,
        reinterpret_cast<lapack_complex_double*>(work.data()), n,
        reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, 1, nullptr, 1);
    if (info < 0)
        throw std::invalid_argument("complex_spectrum: invalid argument passed to zgeev");
    if (info > 0)
        throw EigensolverError("complex_spectrum: QR iteration failed to converge");

    std::sort(w.begin(), w.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return {std::move(w), p};
}

// ---- level density ----

enum class DosMethod { counting, resolvent };

struct DosHistogram {
    std::vector<double> bin_centers; // E/N units
    std::vector<double> density;     // states per unit E/N; counting integrates to N + 1
    DosMethod method{DosMethod::counting};
    double bin_width{0.0};
    double eta{0.0}; // resolvent broadening, 0 for counting
};

// Bin count of Re E / N divided by the bin width.  The right edge closes the last
// bin so the total count is exactly the Hilbert dimension.
inline DosHistogram dos_counting(const ComplexSpectrum& sp, double bin_width) {
    if (!(bin_width > 0.0)) throw std::invalid_argument("dos_counting: bin_width must be > 0");
    if (sp.eigenvalues.empty()) throw std::invalid_argument("dos_counting: empty spectrum");
    const auto scaled = sp.scaled();
    double lo = scaled.front().real(), hi = lo;
    for (const auto& e : scaled) {
        lo = std::min(lo, e.real());
        hi = std::max(hi, e.real());
    }
    const auto n_bins = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil((hi - lo) / bin_width - 1e-9)));

    DosHistogram d;
    d.method = DosMethod::counting;
    d.bin_width = bin_width;
    d.bin_centers.resize(n_bins);
    d.density.assign(n_bins, 0.0);
    for (std::size_t i = 0; i < n_bins; ++i) d.bin_centers[i] = lo + (i + 0.5) * bin_width;
    for (const auto& e : scaled) {
        auto idx = static_cast<std::size_t>((e.real() - lo) / bin_width);
        if (idx >= n_bins) idx = n_bins - 1;
        d.density[idx] += 1.0;
    }
    for (double& v : d.density) v /= bin_width;
    return d;
}

// Default resolution: about five states per bin.
inline double default_bin_width(const ComplexSpectrum& sp) {
    const auto scaled = sp.scaled();
    double lo = scaled.front().real(), hi = lo;
    for (const auto& e : scaled) {
        lo = std::min(lo, e.real());
        hi = std::max(hi, e.real());
    }
    const double n_bins = std::max(1.0, static_cast<double>(sp.params.n_spins) / 5.0);
    const double w = (hi - lo) / n_bins;
    return w > 0.0 ? w : 1.0;
}

// Broadening floor for nearly real spectra: ten mean level spacings.
inline double default_eta(const ComplexSpectrum& sp) {
    const auto scaled = sp.scaled();
    double lo = scaled.front().real(), hi = lo;
    for (const auto& e : scaled) {
        lo = std::min(lo, e.real());
        hi = std::max(hi, e.real());
    }
    return 10.0 * (hi - lo) / static_cast<double>(sp.eigenvalues.size());
}

// Resolvent density nu(e) = (1/pi) sum_k W_k / ((e - Re e_k)^2 + W_k^2) with
// W_k = eta + |Im e_k|: each state is a Lorentzian whose width is its own decay
// rate plus the uniform broadening.  Decay widths below the eigensolver noise
// floor are treated as zero rather than fed in with an unphysical sign.
inline std::vector<double> dos_resolvent_values(const ComplexSpectrum& sp,
                                                const std::vector<double>& energies,
                                                double eta) {
    if (eta < 0.0) throw std::invalid_argument("dos_resolvent_values: eta must be >= 0");
    const auto scaled = sp.scaled();
    std::vector<double> out(energies.size(), 0.0);
    for (std::size_t i = 0; i < energies.size(); ++i) {
        const double e = energies[i];
        double acc = 0.0;
        for (const auto& ek : scaled) {
            const double w = std::max(0.0, eta - ek.imag());
            const double de = e - ek.real();
            const double denom = de * de + w * w;
            if (denom < 1e-300)
                throw std::invalid_argument(
                    "dos_resolvent_values: evaluation point coincides with an undamped "
                    "eigenvalue; use eta > 0");
            acc += w / denom;
        }
        out[i] = acc / std::numbers::pi;
    }
    return out;
}

inline DosHistogram dos_resolvent(const ComplexSpectrum& sp, const std::vector<double>& energies,
                                  double eta) {
    DosHistogram d;
    d.method = DosMethod::resolvent;
    d.eta = eta;
    d.bin_centers = energies;
    d.density = dos_resolvent_values(sp, energies, eta);
    return d;
}

// Resolvent density averaged exactly over each bin, via the antiderivative
// (1/pi) arctan((e - Re e_k)/W_k) of the Lorentzian.  Removes the sampling bias
// when a state is much narrower than the bin, which is what a fair comparison
// against the counting histogram needs.  Width-zero states degenerate to sharp
// indicator functions.
inline DosHistogram dos_resolvent_binned(const ComplexSpectrum& sp, double lo, double bin_width,
                                         std::size_t n_bins, double eta) {
    if (!(bin_width > 0.0))
        throw std::invalid_argument("dos_resolvent_binned: bin_width must be > 0");
    if (eta < 0.0) throw std::invalid_argument("dos_resolvent_binned: eta must be >= 0");
    const auto scaled = sp.scaled();
    DosHistogram d;
    d.method = DosMethod::resolvent;
    d.eta = eta;
    d.bin_width = bin_width;
    d.bin_centers.resize(n_bins);
    d.density.assign(n_bins, 0.0);
    for (std::size_t i = 0; i < n_bins; ++i) {
        const double a = lo + i * bin_width;
        const double b = a + bin_width;
        d.bin_centers[i] = 0.5 * (a + b);
        double acc = 0.0;
        for (const auto& ek : scaled) {
            const double w = std::max(0.0, eta - ek.imag());
            if (w > 0.0) {
                acc += (std::atan((b - ek.real()) / w) - std::atan((a - ek.real()) / w)) /
                       std::numbers::pi;
            } else if (ek.real() >= a && ek.real() < b) {
                acc += 1.0;
            }
        }
        d.density[i] = acc / bin_width;
    }
    return d;
}

// ---- diagnostics on a density histogram ----

inline double peak_location(const DosHistogram& d) {
    if (d.density.empty()) throw std::invalid_argument("peak_location: empty histogram");
    std::size_t best = 0;
    for (std::size_t i = 1; i < d.density.size(); ++i)
        if (d.density[i] > d.density[best]) best = i;
    return d.bin_centers[best];
}

struct LogFit {
    double offset{0.0}; // a in  density ~ a + b ln|e - center|
    double slope{0.0};  // b; negative means a logarithmic divergence at the center
    std::size_t n_bins{0};
};

// Least-squares fit of density against ln|center distance| over a one-sided-in-
// distance annulus around the candidate singularity.
inline LogFit fit_log_divergence(const DosHistogram& d, double center, double dist_min,
                                 double dist_max) {
    if (!(dist_min > 0.0) || !(dist_max > dist_min))
        throw std::invalid_argument("fit_log_divergence: need 0 < dist_min < dist_max");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < d.bin_centers.size(); ++i) {
        const double dist = std::abs(d.bin_centers[i] - center);
        if (dist < dist_min || dist > dist_max) continue;
        const double x = std::log(dist);
        const double y = d.density[i];
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++n;
    }
    if (n < 3) throw std::invalid_argument("fit_log_divergence: fewer than 3 bins in the window");
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-300)
        throw std::invalid_argument("fit_log_divergence: degenerate abscissa");
    LogFit fit;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.offset = (sy - fit.slope * sx) / static_cast<double>(n);
    fit.n_bins = n;
    return fit;
}

} // namespace lmg
