#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "freqx/linalg.hpp"
#include "freqx/rng.hpp"

namespace freqx {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;

enum class Normalization { Unnormalized, Unitary };

// 1-D or 2-D spectrum. 2-D coefficients are stored row-major (rows x cols).
struct Spectrum {
    CVec coefficients;
    std::size_t rows = 1;  // 1 for 1-D
    std::size_t cols = 0;
    Normalization normalization = Normalization::Unnormalized;

    std::size_t size() const { return coefficients.size(); }
    Complex& at(std::size_t u, std::size_t v) { return coefficients[u * cols + v]; }
    Complex at(std::size_t u, std::size_t v) const { return coefficients[u * cols + v]; }
};

// Forward DFT, unnormalized: X(k) = sum_t x(t) e^{-j 2 pi t k / N}.
// Naive O(N^2); reference implementation for everything downstream.
inline Spectrum dft_1d(const Vec& x) {
    if (x.empty()) throw std::invalid_argument("dft: empty signal");
    if (!all_finite(x)) throw std::invalid_argument("dft: non-finite signal");
    const std::size_t n = x.size();
    Spectrum s;
    s.cols = n;
    s.coefficients.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc{0.0, 0.0};
        for (std::size_t t = 0; t < n; ++t) {
            double ang = -2.0 * M_PI * static_cast<double>(t) * static_cast<double>(k) / static_cast<double>(n);
            acc += x[t] * Complex{std::cos(ang), std::sin(ang)};
        }
        s.coefficients[k] = acc;
    }
    return s;
}

// Inverse, 1/N convention. Imaginary residue is discarded; callers asserting
// realness check it via idft_1d_complex.
inline CVec idft_1d_complex(const Spectrum& s) {
    if (s.coefficients.empty()) throw std::invalid_argument("idft: empty spectrum");
    const std::size_t n = s.coefficients.size();
    CVec out(n);
    for (std::size_t t = 0; t < n; ++t) {
        Complex acc{0.0, 0.0};
        for (std::size_t k = 0; k < n; ++k) {
            double ang = 2.0 * M_PI * static_cast<double>(t) * static_cast<double>(k) / static_cast<double>(n);
            acc += s.coefficients[k] * Complex{std::cos(ang), std::sin(ang)};
        }
        out[t] = acc / static_cast<double>(n);
    }
    return out;
}

inline Vec idft_1d(const Spectrum& s) {
    auto c = idft_1d_complex(s);
    Vec out(c.size());
    for (std::size_t t = 0; t < c.size(); ++t) out[t] = c[t].real();
    return out;
}

// Row transform then column transform, matching the separable definition.
inline Spectrum dft_2d(const Mat& m) {
    if (m.rows == 0 || m.cols == 0) throw std::invalid_argument("dft2d: empty matrix");
    if (!all_finite(m)) throw std::invalid_argument("dft2d: non-finite matrix");
    Spectrum s;
    s.rows = m.rows;
    s.cols = m.cols;
    s.coefficients.assign(m.rows * m.cols, Complex{0.0, 0.0});
    // rows first
    std::vector<CVec> row_tf(m.rows, CVec(m.cols));
    for (std::size_t y = 0; y < m.rows; ++y) {
        for (std::size_t u = 0; u < m.cols; ++u) {
            Complex acc{0.0, 0.0};
            for (std::size_t x = 0; x < m.cols; ++x) {
                double ang = -2.0 * M_PI * static_cast<double>(x) * static_cast<double>(u) / static_cast<double>(m.cols);
                acc += m(y, x) * Complex{std::cos(ang), std::sin(ang)};
            }
            row_tf[y][u] = acc;
        }
    }
    // then columns
    for (std::size_t v = 0; v < m.rows; ++v)
        for (std::size_t u = 0; u < m.cols; ++u) {
            Complex acc{0.0, 0.0};
            for (std::size_t y = 0; y < m.rows; ++y) {
                double ang = -2.0 * M_PI * static_cast<double>(y) * static_cast<double>(v) / static_cast<double>(m.rows);
                acc += row_tf[y][u] * Complex{std::cos(ang), std::sin(ang)};
            }
            s.at(v, u) = acc;
        }
    return s;
}

inline Mat idft_2d(const Spectrum& s) {
    if (s.rows == 0 || s.cols == 0 || s.coefficients.empty()) throw std::invalid_argument("idft2d: empty spectrum");
    Mat out(s.rows, s.cols);
    std::vector<CVec> col_tf(s.rows, CVec(s.cols));
    for (std::size_t u = 0; u < s.cols; ++u)
        for (std::size_t y = 0; y < s.rows; ++y) {
            Complex acc{0.0, 0.0};
            for (std::size_t v = 0; v < s.rows; ++v) {
                double ang = 2.0 * M_PI * static_cast<double>(y) * static_cast<double>(v) / static_cast<double>(s.rows);
                acc += s.at(v, u) * Complex{std::cos(ang), std::sin(ang)};
            }
            col_tf[y][u] = acc / static_cast<double>(s.rows);
        }
    for (std::size_t y = 0; y < s.rows; ++y)
        for (std::size_t x = 0; x < s.cols; ++x) {
            Complex acc{0.0, 0.0};
            for (std::size_t u = 0; u < s.cols; ++u) {
                double ang = 2.0 * M_PI * static_cast<double>(x) * static_cast<double>(u) / static_cast<double>(s.cols);
                acc += col_tf[y][u] * Complex{std::cos(ang), std::sin(ang)};
            }
            out(y, x) = acc.real() / static_cast<double>(s.cols);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Mutual energy and SNR

struct EnergyDecomposition {
    Vec per_frequency_mutual;              // E^k_xy = Re(X(k) Y*(k))
    std::vector<std::size_t> feature_set;  // E^k_xy > 0
    std::vector<std::size_t> noise_set;    // E^k_xy < 0
    Vec self_energy_x, self_energy_y;      // |X(k)|^2, |Y(k)|^2
    double total_energy_x = 0.0, total_energy_y = 0.0;
};

// Per-frequency mutual energy of two equal-length real signals, unnormalized
// coefficients: sum_k E^k_xy == N * sum_t x(t) y(t).
inline EnergyDecomposition mutual_energy(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("mutual_energy: length mismatch");
    auto sx = dft_1d(x);
    auto sy = dft_1d(y);
    const std::size_t n = x.size();
    EnergyDecomposition d;
    d.per_frequency_mutual.resize(n);
    d.self_energy_x.resize(n);
    d.self_energy_y.resize(n);
    double imag_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        Complex m = sx.coefficients[k] * std::conj(sy.coefficients[k]);
        imag_sum += m.imag();
        d.per_frequency_mutual[k] = m.real();
        d.self_energy_x[k] = std::norm(sx.coefficients[k]);
        d.self_energy_y[k] = std::norm(sy.coefficients[k]);
        d.total_energy_x += d.self_energy_x[k];
        d.total_energy_y += d.self_energy_y[k];
        if (d.per_frequency_mutual[k] > 0.0)
            d.feature_set.push_back(k);
        else if (d.per_frequency_mutual[k] < 0.0)
            d.noise_set.push_back(k);
    }
    // conjugate symmetry of real-signal spectra makes the imaginary parts
    // cancel in the sum
    double scale = std::max(1.0, std::max(d.total_energy_x, d.total_energy_y));
    if (std::abs(imag_sum) > 1e-9 * scale)
        throw std::runtime_error("mutual_energy: imaginary residue " + std::to_string(imag_sum));
    return d;
}

enum class BiasMode { Zero, NegativeBias, BiasAsFeature };

struct SnrReport {
    double snr_original = 0.0;
    double snr_compound = 0.0;
    BiasMode bias_mode = BiasMode::Zero;
    bool activated = false;
};

// snr_original = sum_f(E^f_x + E^f_y) / sum_n(E^n_x + E^n_y)
// snr_compound = sum_f(E^f_x + E^f_y + 2 E^f_xy) / sum_n(E^n_x + E^n_y + 2 E^n_xy)
inline SnrReport snr(const EnergyDecomposition& d, double bias = 0.0) {
    SnrReport r;
    r.bias_mode = bias == 0.0 ? BiasMode::Zero : (bias < 0.0 ? BiasMode::NegativeBias : BiasMode::BiasAsFeature);
    double mutual_sum = 0.0;
    for (double v : d.per_frequency_mutual) mutual_sum += v;
    r.activated = mutual_sum + bias > 0.0;

    double num_orig = 0.0, num_comp = 0.0;
    for (auto k : d.feature_set) {
        num_orig += d.self_energy_x[k] + d.self_energy_y[k];
        num_comp += d.self_energy_x[k] + d.self_energy_y[k] + 2.0 * d.per_frequency_mutual[k];
    }
    double den_orig = 0.0, den_comp = 0.0;
    for (auto k : d.noise_set) {
        den_orig += d.self_energy_x[k] + d.self_energy_y[k];
        den_comp += d.self_energy_x[k] + d.self_energy_y[k] + 2.0 * d.per_frequency_mutual[k];
    }
    if (den_orig == 0.0 || den_comp == 0.0)
        throw std::runtime_error("snr: degenerate decomposition, no noise frequencies");
    r.snr_original = num_orig / den_orig;
    r.snr_compound = num_comp / den_comp;
    return r;
}

// Hand-assembled decompositions for unit checks.
inline EnergyDecomposition make_decomposition(const Vec& mutual, const Vec& ex, const Vec& ey) {
    if (mutual.size() != ex.size() || mutual.size() != ey.size())
        throw std::invalid_argument("make_decomposition: length mismatch");
    EnergyDecomposition d;
    d.per_frequency_mutual = mutual;
    d.self_energy_x = ex;
    d.self_energy_y = ey;
    for (std::size_t k = 0; k < mutual.size(); ++k) {
        d.total_energy_x += ex[k];
        d.total_energy_y += ey[k];
        if (mutual[k] > 0.0)
            d.feature_set.push_back(k);
        else if (mutual[k] < 0.0)
            d.noise_set.push_back(k);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Monte-Carlo check that compounding an activated, unbiased neuron's signals
// raises the SNR.

struct TheoremReport {
    std::size_t trials = 0;
    std::size_t checked = 0;
    std::size_t passed = 0;
    std::size_t failed = 0;
    std::size_t skipped_degenerate = 0;  // empty noise or feature set
    std::size_t skipped_inactive = 0;    // premise unmet
    Vec witness_x, witness_w;            // first failing pair, if any
};

inline TheoremReport verify_theorem1(std::size_t trials, std::uint64_t seed,
                                     const std::vector<std::size_t>& dims = {8, 16, 32}) {
    if (trials == 0) throw std::invalid_argument("verify_theorem1: trials must be >= 1");
    auto rng = make_rng(seed, "theorem1");
    std::normal_distribution<double> gauss(0.0, 1.0);
    TheoremReport report;
    report.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        std::size_t n = dims[t % dims.size()];
        Vec x(n), w(n);
        for (auto& v : x) v = gauss(rng);
        for (auto& v : w) v = gauss(rng);
        auto d = mutual_energy(x, w);
        double mutual_sum = 0.0;
        for (double v : d.per_frequency_mutual) mutual_sum += v;
        if (mutual_sum <= 0.0) {  // unbiased: B = 0
            ++report.skipped_inactive;
            continue;
        }
        if (d.noise_set.empty() || d.feature_set.empty()) {
            ++report.skipped_degenerate;
            continue;
        }
        ++report.checked;
        auto r = snr(d, 0.0);
        if (r.snr_compound > r.snr_original) {
            ++report.passed;
        } else {
            ++report.failed;
            if (report.witness_x.empty()) {
                report.witness_x = x;
                report.witness_w = w;
            }
        }
    }
    return report;
}

}  // namespace freqx
