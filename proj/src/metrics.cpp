#include "gsncp/metrics/metrics.hpp"

#include <limits>

namespace gsncp {

// Shortest augmenting path formulation (Jonker-Volgenant style potentials),
// O(n^3).
std::vector<std::size_t> hungarian(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols()) throw std::invalid_argument("hungarian: cost matrix must be square");
    const auto n = static_cast<std::size_t>(cost.rows());
    constexpr double kInf = std::numeric_limits<double>::infinity();
    // 1-based arrays with a virtual column 0.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assignment(n);
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] != 0) assignment[p[j] - 1] = j - 1;
    }
    return assignment;
}

double ospa(const std::vector<TargetState>& x, const std::vector<TargetState>& y, double order, double cutoff) {
    if (!(order >= 1.0) || !(cutoff > 0.0)) throw std::invalid_argument("ospa: need order >= 1 and cutoff > 0");
    // Equal-size sets are ordered canonically so ospa(x, y) and ospa(y, x)
    // run the same arithmetic.
    bool x_rows = x.size() < y.size();
    if (x.size() == y.size()) {
        x_rows = !std::lexicographical_compare(y.begin(), y.end(), x.begin(), x.end(),
                                               [](const TargetState& a, const TargetState& b) { return target_less(a, b); });
    }
    const std::vector<TargetState>& small = x_rows ? x : y;
    const std::vector<TargetState>& large = x_rows ? y : x;
    const std::size_t n = large.size();
    if (n == 0) return 0.0;

    // Rows past small.size() are dummies carrying the cardinality penalty c^p.
    const double penalty = std::pow(cutoff, order);
    Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), penalty);
    for (std::size_t i = 0; i < small.size(); ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::pow(std::min(cutoff, gw_distance(small[i], large[j])), order);
        }
    }
    const std::vector<std::size_t> assignment = hungarian(cost);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(assignment[i]));
    return std::min(cutoff, std::pow(total / static_cast<double>(n), 1.0 / order));
}

}  // namespace gsncp
