#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's numeric code paths.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

/// Concordance correlation written as 2 rho sx sy / (sx^2 + sy^2 + (mx - my)^2),
/// each moment accumulated separately with long double.
inline double ccc_direct(const std::vector<double>& x, const std::vector<double>& y)
{
    const long double n = static_cast<long double>(x.size());
    long double mx = 0, my = 0;
    for (double v : x) mx += v;
    for (double v : y) my += v;
    mx /= n;
    my /= n;
    long double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const long double sx = std::sqrt(sxx / n), sy = std::sqrt(syy / n);
    const long double rho = sxy / std::sqrt(sxx * syy);
    return static_cast<double>(2 * rho * sx * sy / (sx * sx + sy * sy + (mx - my) * (mx - my)));
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Two-pass population mean and standard deviation.
inline std::pair<double, double> mean_std(const std::vector<double>& v)
{
    long double m = 0;
    for (double x : v) m += x;
    m /= static_cast<long double>(v.size());
    long double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return {static_cast<double>(m), static_cast<double>(std::sqrt(s / static_cast<long double>(v.size())))};
}

/// O(N^2) DFT magnitudes of the Hamming-windowed frame, bins 0..N/2-1, scaled by 1/(N/2).
inline std::vector<double> dft_magnitude(const std::vector<double>& frame)
{
    const std::size_t n = frame.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = frame[i] * (0.54 - 0.46 * std::cos(2 * std::numbers::pi * i / (n - 1)));
    std::vector<double> mag(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        std::complex<double> acc = 0;
        for (std::size_t i = 0; i < n; ++i) acc += w[i] * std::polar(1.0, -2 * std::numbers::pi * k * i / n);
        mag[k] = std::abs(acc) / static_cast<double>(n / 2);
    }
    return mag;
}

/// Magnitude-weighted mean bin frequency.
inline double centroid_hz(const std::vector<double>& mag, int sample_rate)
{
    const double bin = sample_rate / (2.0 * mag.size());
    double num = 0, den = 0;
    for (std::size_t k = 0; k < mag.size(); ++k) {
        num += k * bin * mag[k];
        den += mag[k];
    }
    return num / den;
}

/// Central difference of f with respect to v[i].
inline double central_difference(const std::function<double()>& f, double& v, double h)
{
    const double saved = v;
    v = saved + h;
    const double up = f();
    v = saved - h;
    const double down = f();
    v = saved;
    return (up - down) / (2 * h);
}

/// Richardson extrapolation of two central differences, O(h^4) truncation.
/// Allows a larger step, so round-off stays small on tiny derivatives.
inline double richardson_difference(const std::function<double()>& f, double& v, double h)
{
    const double coarse = central_difference(f, v, h);
    const double fine = central_difference(f, v, h / 2);
    return (4 * fine - coarse) / 3;
}

/// |a - b| / max(|a|, |b|), with an absolute floor so near-zero pairs compare absolutely.
inline double relative_error(double a, double b, double floor = 1e-7)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

}  // namespace oracle
