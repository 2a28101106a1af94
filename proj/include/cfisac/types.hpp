#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace cfisac {

using cdouble = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

constexpr double kPi = 3.14159265358979323846;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// 2-D point/vector in meters.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
    Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
    Point2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Point2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

/// Partition of the AP set into sensing receivers and ISAC transmitters.
/// Receivers and transmitters are kept sorted ascending so that set
/// comparisons and row-block layouts are deterministic.
struct ApConfiguration {
    std::vector<int> receivers;
    std::vector<int> transmitters;

    static ApConfiguration from_receivers(int n_ap, std::vector<int> rx) {
        std::sort(rx.begin(), rx.end());
        if (std::adjacent_find(rx.begin(), rx.end()) != rx.end())
            throw std::invalid_argument("ApConfiguration: duplicate receiver index");
        if (!rx.empty() && (rx.front() < 0 || rx.back() >= n_ap))
            throw std::invalid_argument("ApConfiguration: receiver index out of range");
        ApConfiguration cfg;
        cfg.receivers = std::move(rx);
        for (int j = 0; j < n_ap; ++j)
            if (!std::binary_search(cfg.receivers.begin(), cfg.receivers.end(), j))
                cfg.transmitters.push_back(j);
        return cfg;
    }

    int n_rx() const { return static_cast<int>(receivers.size()); }
    int n_tx() const { return static_cast<int>(transmitters.size()); }
    int n_ap() const { return n_rx() + n_tx(); }

    bool is_receiver(int ap) const {
        return std::binary_search(receivers.begin(), receivers.end(), ap);
    }

    bool operator==(const ApConfiguration& o) const { return receivers == o.receivers; }
    bool operator!=(const ApConfiguration& o) const { return !(*this == o); }
};

}  // namespace cfisac
