#include "phgb/taylor.hpp"

#include <algorithm>
#include <cmath>

namespace phgb {

Taylor Taylor::constant(double v, int depth) {
    std::vector<double> c(depth + 1, 0.0);
    c[0] = v;
    return Taylor(std::move(c));
}

Taylor Taylor::one_plus_rho(const std::vector<double>& a, int depth) {
    std::vector<double> c(depth + 1, 0.0);
    c[0] = 1.0;
    for (int k = 0; k + 1 <= depth && k < static_cast<int>(a.size()); ++k) c[k + 1] = a[k];
    return Taylor(std::move(c));
}

int Taylor::common_depth(const Taylor& a, const Taylor& b) {
    return std::max(a.depth(), b.depth());
}

Taylor Taylor::operator+(const Taylor& o) const {
    int d = common_depth(*this, o);
    std::vector<double> c(d + 1, 0.0);
    for (int k = 0; k <= d; ++k) c[k] = (*this)[k] + o[k];
    return Taylor(std::move(c));
}

Taylor Taylor::operator-(const Taylor& o) const {
    int d = common_depth(*this, o);
    std::vector<double> c(d + 1, 0.0);
    for (int k = 0; k <= d; ++k) c[k] = (*this)[k] - o[k];
    return Taylor(std::move(c));
}

Taylor Taylor::operator*(const Taylor& o) const {
    int d = common_depth(*this, o);
    std::vector<double> c(d + 1, 0.0);
    for (int i = 0; i <= d; ++i)
        for (int j = 0; i + j <= d; ++j) c[i + j] += (*this)[i] * o[j];
    return Taylor(std::move(c));
}

Taylor Taylor::operator*(double v) const {
    std::vector<double> c(depth() + 1);
    for (int k = 0; k <= depth(); ++k) c[k] = (*this)[k] * v;
    return Taylor(std::move(c));
}

Taylor Taylor::reciprocal() const {
    if ((*this)[0] == 0.0) throw PhgbError("reciprocal of a series vanishing at rho=0");
    int d = depth();
    std::vector<double> c(d + 1, 0.0);
    c[0] = 1.0 / (*this)[0];
    for (int k = 1; k <= d; ++k) {
        double acc = 0.0;
        for (int j = 1; j <= k; ++j) acc += (*this)[j] * c[k - j];
        c[k] = -acc / (*this)[0];
    }
    return Taylor(std::move(c));
}

Taylor Taylor::sqrt() const {
    if ((*this)[0] <= 0.0) throw PhgbError("sqrt of a series nonpositive at rho=0");
    int d = depth();
    std::vector<double> c(d + 1, 0.0);
    c[0] = std::sqrt((*this)[0]);
    for (int k = 1; k <= d; ++k) {
        double acc = 0.0;
        for (int j = 1; j < k; ++j) acc += c[j] * c[k - j];
        c[k] = ((*this)[k] - acc) / (2.0 * c[0]);
    }
    return Taylor(std::move(c));
}

Taylor Taylor::dot() const {
    std::vector<double> c(depth() + 1);
    for (int k = 0; k <= depth(); ++k) c[k] = k * (*this)[k];
    return Taylor(std::move(c));
}

Taylor Taylor::pow(int n) const {
    Taylor out = Taylor::constant(1.0, depth());
    for (int i = 0; i < n; ++i) out = out * (*this);
    return out;
}

} // namespace phgb
