#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace impulse {

/// Dense real polynomial with coefficients stored in ascending degree.
class Polynomial {
public:
    Polynomial() : coeffs_{0.0} {}

    explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) coeffs_.push_back(0.0);
        while (coeffs_.size() > 1 && coeffs_.back() == 0.0) coeffs_.pop_back();
    }

    const std::vector<double>& coeffs() const { return coeffs_; }

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

    bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }

    double leading() const { return coeffs_.back(); }

    double operator()(double x) const {
        double acc = 0.0;
        for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + coeffs_[i];
        return acc;
    }

    /// k-th derivative evaluated at x.
    double derivative_at(double x, int k = 1) const {
        if (k == 0) return (*this)(x);
        if (k > degree()) return 0.0;
        double acc = 0.0;
        for (std::size_t i = coeffs_.size(); i-- > static_cast<std::size_t>(k);) {
            double fall = 1.0;
            for (int j = 0; j < k; ++j) fall *= static_cast<double>(i - j);
            acc = acc * x + fall * coeffs_[i];
        }
        return acc;
    }

    Polynomial derivative() const {
        if (degree() == 0) return Polynomial{};
        std::vector<double> d(coeffs_.size() - 1);
        for (std::size_t i = 1; i < coeffs_.size(); ++i)
            d[i - 1] = static_cast<double>(i) * coeffs_[i];
        return Polynomial(std::move(d));
    }

    double max_abs_on(double lo, double hi, int samples = 2001) const {
        if (hi < lo) std::swap(lo, hi);
        double m = 0.0;
        for (int i = 0; i < samples; ++i) {
            const double x = lo + (hi - lo) * i / (samples - 1);
            m = std::max(m, std::abs((*this)(x)));
        }
        return m;
    }

    friend bool operator==(const Polynomial& a, const Polynomial& b) {
        return a.coeffs_ == b.coeffs_;
    }

private:
    std::vector<double> coeffs_;
};

// Cauchy bound: all real roots lie in [-B, B].
inline double root_bound(const Polynomial& p) {
    if (p.degree() == 0) return 1.0;
    double m = 0.0;
    for (int i = 0; i < p.degree(); ++i)
        m = std::max(m, std::abs(p.coeffs()[i]));
    return 1.0 + m / std::abs(p.leading());
}

/// Largest real root found by scan plus bisection; falls back to the sample
/// point of smallest |p| when no sign change exists in [-B, B].
inline double largest_real_root(const Polynomial& p) {
    const double B = root_bound(p);
    const int n = 4096;
    double best_x = 0.0, best_abs = std::abs(p(0.0));
    double hi_x = B, hi_f = p(B);
    for (int i = n - 1; i >= 0; --i) {
        const double x = -B + 2.0 * B * i / n;
        const double f = p(x);
        if (std::abs(f) < best_abs) { best_abs = std::abs(f); best_x = x; }
        if (f == 0.0) return x;
        if ((f < 0.0) != (hi_f < 0.0)) {
            double a = x, b = hi_x, fa = f;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (a + b);
                const double fm = p(mid);
                if (fm == 0.0) return mid;
                if ((fm < 0.0) == (fa < 0.0)) { a = mid; fa = fm; } else { b = mid; }
            }
            return 0.5 * (a + b);
        }
        hi_x = x; hi_f = f;
    }
    return best_x;
}

}  // namespace impulse
