// test_spectrum.cpp — spin operators, complex spectra, level densities
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include <lmg/core.hpp>
#include <lmg/spectrum.hpp>

using namespace lmg;

TEST_CASE("spin matrices satisfy the SU(2) algebra") {
    const SpinMatrices m = build_spin_matrices(7);
    const double j = 3.5;
    const Eigen::MatrixXcd comm = m.jx * m.jy - m.jy * m.jx;
    REQUIRE((comm - std::complex<double>(0.0, 1.0) * m.jz).norm() < 1e-12);
    const Eigen::MatrixXcd j2 = m.jx * m.jx + m.jy * m.jy + m.jz * m.jz;
    const Eigen::MatrixXcd expect =
        j * (j + 1.0) * Eigen::MatrixXcd::Identity(8, 8);
    REQUIRE((j2 - expect).norm() < 1e-12);
    REQUIRE((m.jminus - m.jplus.adjoint()).norm() == 0.0);
    REQUIRE_THROWS_AS(build_spin_matrices(0), std::invalid_argument);
    REQUIRE_THROWS_AS(build_spin_matrices(10, 5), std::invalid_argument);
}

TEST_CASE("effective Hamiltonian shape and Hermiticity split") {
    ModelParams p;
    p.n_spins = 12;
    const SpinMatrices m = build_spin_matrices(12);

    ModelParams mismatched = p;
    mismatched.n_spins = 14;
    REQUIRE_THROWS_AS(build_h_eff(m, mismatched), std::invalid_argument);

    ModelParams closed = p;
    closed.kappa = 0.0;
    const Eigen::MatrixXcd h0 = build_h_eff(m, closed);
    REQUIRE((h0 - h0.adjoint()).norm() < 1e-12);

    p.kappa = 0.4;
    const Eigen::MatrixXcd h = build_h_eff(m, p);
    const Eigen::MatrixXcd anti = (h - h.adjoint()) / std::complex<double>(0.0, 2.0);
    // The anti-Hermitian part is the diagonal loss operator -(kappa/2N)(J^2 - Jz^2 - Jz).
    const double jtot = 6.0;
    for (int i = 0; i <= 12; ++i) {
        const double mval = -jtot + i;
        const double expect =
            -0.5 * p.kappa / 12.0 * (jtot * (jtot + 1.0) - mval * mval - mval);
        REQUIRE(anti(i, i).real() == Catch::Approx(expect).margin(1e-12));
        for (int k = 0; k <= 12; ++k)
            if (k != i) REQUIRE(std::abs(anti(i, k)) < 1e-14);
    }
}

TEST_CASE("three-level closed spectrum has the hand-computed eigenvalues") {
    // N = 2, gamma = 1.5, kappa = 0.  In the m = -1, 0, +1 basis the Hamiltonian is
    // diag(1, 0, -1) - 0.75 Jx^2; the Jz-parity block [[0.625, -0.375], [-0.375,
    // -1.375]] gives roots (-3 -+ sqrt(73))/8 and the isolated m = 0 state -3/4.
    ModelParams p;
    p.n_spins = 2;
    p.kappa = 0.0;
    const ComplexSpectrum sp = complex_spectrum(build_h_eff(build_spin_matrices(2), p), p);
    REQUIRE(sp.eigenvalues.size() == 3);
    const double root = std::sqrt(73.0);
    REQUIRE(sp.eigenvalues[0].real() == Catch::Approx((-3.0 - root) / 8.0).margin(1e-12));
    REQUIRE(sp.eigenvalues[1].real() == Catch::Approx(-0.75).margin(1e-12));
    REQUIRE(sp.eigenvalues[2].real() == Catch::Approx((-3.0 + root) / 8.0).margin(1e-12));
    for (const auto& e : sp.eigenvalues) REQUIRE(std::abs(e.imag()) < 1e-13);
}

TEST_CASE("spectrum agrees with an independent dense eigensolver") {
    ModelParams p;
    p.n_spins = 40;
    p.gamma_y = 0.3;
    p.kappa = 0.05;
    const Eigen::MatrixXcd h = build_h_eff(build_spin_matrices(40), p);
    const ComplexSpectrum sp = complex_spectrum(h, p);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(h, false);
    REQUIRE(es.info() == Eigen::Success);
    std::vector<std::complex<double>> ref(es.eigenvalues().data(),
                                          es.eigenvalues().data() + 41);
    std::sort(ref.begin(), ref.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    for (std::size_t i = 0; i < ref.size(); ++i)
        REQUIRE(std::abs(sp.eigenvalues[i] - ref[i]) < 1e-10);
}

TEST_CASE("spectral invariants: trace identity, closed half plane, sorted order") {
    ModelParams p;
    p.n_spins = 60;
    p.kappa = 0.3;
    const Eigen::MatrixXcd h = build_h_eff(build_spin_matrices(60), p);
    const ComplexSpectrum sp = complex_spectrum(h, p);

    std::complex<double> sum = 0.0;
    for (const auto& e : sp.eigenvalues) sum += e;
    REQUIRE(std::abs(sum - h.trace()) < 1e-9 * std::abs(h.trace()));

    for (std::size_t i = 0; i < sp.eigenvalues.size(); ++i) {
        REQUIRE(sp.eigenvalues[i].imag() <= 1e-12);
        if (i > 0) REQUIRE(sp.eigenvalues[i - 1].real() <= sp.eigenvalues[i].real());
    }
    const auto scaled = sp.scaled();
    REQUIRE(std::abs(scaled[5] - sp.eigenvalues[5] / 60.0) < 1e-16);

    ModelParams closed = p;
    closed.kappa = 0.0;
    const ComplexSpectrum sp0 =
        complex_spectrum(build_h_eff(build_spin_matrices(60), closed), closed);
    for (const auto& e : sp0.eigenvalues) REQUIRE(std::abs(e.imag()) < 1e-12);

    REQUIRE_THROWS_AS(complex_spectrum(Eigen::MatrixXcd::Zero(4, 4), p),
                      std::invalid_argument);
}

TEST_CASE("counting histogram integrates to the Hilbert dimension") {
    ModelParams p;
    p.n_spins = 60;
    const ComplexSpectrum sp = complex_spectrum(build_h_eff(build_spin_matrices(60), p), p);
    const DosHistogram d = dos_counting(sp, default_bin_width(sp));
    REQUIRE(d.bin_centers.size() == 12); // span / (N/5) bins
    double total = 0.0;
    for (const double v : d.density) total += v * d.bin_width;
    REQUIRE(total == Catch::Approx(61.0).margin(1e-9));
    REQUIRE_THROWS_AS(dos_counting(sp, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(dos_counting(ComplexSpectrum{{}, p}, 0.1), std::invalid_argument);
}

TEST_CASE("zero-width resolvent bins degenerate to the counting histogram") {
    ModelParams p;
    p.n_spins = 60;
    p.kappa = 0.0;
    const ComplexSpectrum sp = complex_spectrum(build_h_eff(build_spin_matrices(60), p), p);
    const double bw = default_bin_width(sp);
    const DosHistogram cnt = dos_counting(sp, bw);
    const DosHistogram res = dos_resolvent_binned(sp, cnt.bin_centers.front() - 0.5 * bw, bw,
                                                  cnt.density.size(), 0.0);
    // Indicator bins are right-open, so the top eigenvalue falls off the last bin;
    // the counting histogram closes that edge and keeps it.
    for (std::size_t i = 0; i + 1 < cnt.density.size(); ++i)
        REQUIRE(res.density[i] == Catch::Approx(cnt.density[i]).margin(1e-10));
    REQUIRE(res.density.back() ==
            Catch::Approx(cnt.density.back() - 1.0 / bw).margin(1e-10));
}

TEST_CASE("broadened resolvent keeps nearly all spectral weight in a padded window") {
    ModelParams p;
    p.n_spins = 60;
    p.kappa = 0.05;
    const ComplexSpectrum sp = complex_spectrum(build_h_eff(build_spin_matrices(60), p), p);
    const double eta = default_eta(sp) / 10.0; // one mean spacing keeps the tails thin
    const double lo = sp.scaled().front().real() - 0.5;
    const std::size_t n_bins = 200;
    const double bw = (sp.scaled().back().real() + 0.5 - lo) / n_bins;
    const DosHistogram d = dos_resolvent_binned(sp, lo, bw, n_bins, eta);
    double total = 0.0;
    for (const double v : d.density) total += v * bw;
    REQUIRE(total > 0.95 * 61.0);
    REQUIRE(total < 61.0 + 1e-9);
    REQUIRE_THROWS_AS(dos_resolvent_binned(sp, lo, bw, n_bins, -0.1), std::invalid_argument);
}

TEST_CASE("pointwise resolvent guards the undamped singularity") {
    ModelParams p;
    p.n_spins = 10;
    p.kappa = 0.0;
    const ComplexSpectrum sp = complex_spectrum(build_h_eff(build_spin_matrices(10), p), p);
    const double at_eig = sp.scaled().front().real();
    REQUIRE_THROWS_AS(dos_resolvent_values(sp, {at_eig}, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(dos_resolvent_values(sp, {0.0}, -1.0), std::invalid_argument);
    const DosHistogram d = dos_resolvent(sp, {at_eig, 0.0}, 0.01);
    REQUIRE(d.density[0] > d.density[1]); // on-peak beats off-peak
    REQUIRE(d.method == DosMethod::resolvent);
}

TEST_CASE("peak location and logarithmic fit on a synthetic histogram") {
    DosHistogram d;
    d.bin_width = 0.01;
    for (int i = 0; i < 100; ++i) {
        const double c = -0.8 + (i + 0.5) * 0.01;
        d.bin_centers.push_back(c);
        d.density.push_back(3.0 - 2.0 * std::log(std::abs(c + 0.5)));
    }
    REQUIRE(std::abs(peak_location(d) + 0.5) < 0.011);
    const LogFit fit = fit_log_divergence(d, -0.5, 0.004, 0.2);
    REQUIRE(fit.slope == Catch::Approx(-2.0).margin(1e-10));
    REQUIRE(fit.offset == Catch::Approx(3.0).margin(1e-10));
    REQUIRE(fit.n_bins > 10);
    REQUIRE_THROWS_AS(fit_log_divergence(d, -0.5, 0.0, 0.2), std::invalid_argument);
    REQUIRE_THROWS_AS(fit_log_divergence(d, -0.5, 0.004, 0.0042), std::invalid_argument);
    REQUIRE_THROWS_AS(peak_location(DosHistogram{}), std::invalid_argument);
}
