#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace canard {

struct SeriesFit {
    std::vector<int> powers;
    std::vector<double> coefficients;
    double residual = 0;  // max |model - sample|

    double coeff(int power) const {
        for (std::size_t k = 0; k < powers.size(); ++k)
            if (powers[k] == power) return coefficients[k];
        throw std::out_of_range("fit has no such power");
    }
};

// Least squares v(r) ~ sum_k c_k r^{p_k}. Columns are normalized before the
// pivoted QR so that r^9 next to r^0 does not fool the rank test.
inline SeriesFit fit_odd_series(const std::vector<std::pair<double, double>>& samples,
                                const std::vector<int>& powers) {
    if (powers.empty()) throw std::invalid_argument("fit: no powers");
    if (samples.size() < 2 * powers.size())
        throw std::invalid_argument("fit: need at least 2 samples per fitted power");
    std::vector<double> rs;
    for (auto& s : samples) rs.push_back(s.first);
    std::sort(rs.begin(), rs.end());
    if (std::adjacent_find(rs.begin(), rs.end()) != rs.end())
        throw std::invalid_argument("fit: sample abscissae must be distinct");

    const int n = static_cast<int>(samples.size());
    const int k = static_cast<int>(powers.size());
    Eigen::MatrixXd A(n, k);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) A(i, j) = std::pow(samples[i].first, powers[j]);
        b(i) = samples[i].second;
    }
    Eigen::VectorXd scale(k);
    for (int j = 0; j < k; ++j) {
        scale(j) = A.col(j).norm();
        if (scale(j) == 0) throw std::invalid_argument("fit: rank-deficient design");
        A.col(j) /= scale(j);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-13);
    if (qr.rank() < k) throw std::invalid_argument("fit: rank-deficient design");
    Eigen::VectorXd x = qr.solve(b);

    SeriesFit out;
    out.powers = powers;
    for (int j = 0; j < k; ++j) out.coefficients.push_back(x(j) / scale(j));
    Eigen::VectorXd res = A * x - b;
    out.residual = res.cwiseAbs().maxCoeff();
    return out;
}

}  // namespace canard
