// SPDX-License-Identifier: Apache-2.0
#include "csound/dft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>

namespace csound {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(int n) {
    int m = 1;
    while (m < n) m <<= 1;
    return m;
}

// Chirp phase e^{-i*pi*n^2/N} evaluated with n^2 reduced mod 2N so the
// argument never loses precision for large n.
std::complex<double> chirp(std::int64_t n, std::int64_t big_n) {
    const std::int64_t m = (n * n) % (2 * big_n);
    const double phi = -kPi * static_cast<double>(m) / static_cast<double>(big_n);
    return {std::cos(phi), std::sin(phi)};
}

struct Plan {
    int n = 0;
    bool pow2 = false;
    Eigen::FFT<double> fft;        // length n when pow2
    // Bluestein state, used when !pow2
    int m = 0;
    Eigen::FFT<double> fft_m;      // length m
    Eigen::VectorXcd chirp_fwd;    // e^{-i pi n^2 / N}
    Eigen::VectorXcd kernel_fft;   // FFT_m of the chirp kernel

    explicit Plan(int length) : n(length), pow2(is_pow2(length)) {
        if (pow2) return;
        m = next_pow2(2 * n - 1);
        chirp_fwd.resize(n);
        for (int i = 0; i < n; ++i) chirp_fwd(i) = chirp(i, n);
        Eigen::VectorXcd b = Eigen::VectorXcd::Zero(m);
        b(0) = std::conj(chirp_fwd(0));
        for (int i = 1; i < n; ++i) {
            const std::complex<double> v = std::conj(chirp_fwd(i));
            b(i) = v;
            b(m - i) = v;
        }
        kernel_fft.resize(m);
        fft_m.fwd(kernel_fft, b);
    }

    void forward(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
        if (pow2) {
            fft.fwd(out, in);
            return;
        }
        Eigen::VectorXcd a = Eigen::VectorXcd::Zero(m);
        a.head(n) = in.cwiseProduct(chirp_fwd);
        Eigen::VectorXcd af(m), prod(m), conv(m);
        fft_m.fwd(af, a);
        prod = af.cwiseProduct(kernel_fft);
        fft_m.inv(conv, prod);
        out.resize(n);
        out = conv.head(n).cwiseProduct(chirp_fwd);
    }
};

Plan& plan_for(int n) {
    thread_local std::map<int, std::unique_ptr<Plan>> cache;
    auto it = cache.find(n);
    if (it == cache.end())
        it = cache.emplace(n, std::make_unique<Plan>(n)).first;
    return *it->second;
}

}  // namespace

void dft_forward(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    const int n = static_cast<int>(in.size());
    if (n <= 0) throw std::invalid_argument("dft_forward: empty input");
    plan_for(n).forward(in, out);
}

void dft_inverse(const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    const int n = static_cast<int>(in.size());
    if (n <= 0) throw std::invalid_argument("dft_inverse: empty input");
    // x = conj(F(conj(X))) / N keeps one code path for both directions.
    Eigen::VectorXcd tmp = in.conjugate();
    Eigen::VectorXcd f;
    plan_for(n).forward(tmp, f);
    out = f.conjugate() / static_cast<double>(n);
}

}  // namespace csound
