#pragma once

// Tensor Gauss-Legendre cells with greedy adaptive refinement. Shared by the
// parametric area integrals and the oscillatory pairings.

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "euchar/core.hpp"

namespace euchar::detail {

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
inline constexpr std::array<double, 8> kGauss8Nodes = {
    -0.9602898564975362, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975362};
inline constexpr std::array<double, 8> kGauss8Weights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

struct Cell {
    double u0, u1, v0, v1;
};

// Integrates f(u, v) -> T over one cell with the 8x8 tensor rule.
template <typename T, typename F>
T integrate_cell(const F& f, const Cell& c) {
    const double hu = 0.5 * (c.u1 - c.u0), cu = 0.5 * (c.u1 + c.u0);
    const double hv = 0.5 * (c.v1 - c.v0), cv = 0.5 * (c.v1 + c.v0);
    T acc{};
    for (int i = 0; i < 8; ++i) {
        const double u = cu + hu * kGauss8Nodes[i];
        T row{};
        for (int j = 0; j < 8; ++j) {
            const double v = cv + hv * kGauss8Nodes[j];
            row += f(u, v) * kGauss8Weights[j];
        }
        acc += row * kGauss8Weights[i];
    }
    return acc * (hu * hv);
}

template <typename T>
double magnitude(const T& x) {
    if constexpr (std::is_same_v<T, double>) return std::abs(x);
    else return std::abs(x);
}

struct AdaptiveResult {
    bool converged = true;
    double error_estimate = 0.0;
};

// Greedy refinement: keep a priority queue of cells keyed by the discrepancy
// between a cell's value and the sum over its 2x2 children; split the worst
// cell until the total estimate falls below abs_tol or the budget runs out.
// `out` accumulates the integral. Deterministic: ties broken by insertion id.
template <typename T, typename F>
AdaptiveResult adaptive_integrate(const F& f, std::vector<Cell> initial, double abs_tol,
                                  std::size_t max_cells, T& out) {
    struct Node {
        double err;
        std::size_t id;
        Cell cell;
        T refined;  // sum over the 4 children, kept as the better value
        bool operator<(const Node& o) const {
            return err < o.err || (err == o.err && id > o.id);
        }
    };

    std::priority_queue<Node> queue;
    std::size_t next_id = 0;
    std::size_t cells_used = initial.size();
    T total{};
    double total_err = 0.0;

    auto push_cell = [&](const Cell& c) {
        T coarse = integrate_cell<T>(f, c);
        const double um = 0.5 * (c.u0 + c.u1), vm = 0.5 * (c.v0 + c.v1);
        T fine{};
        fine += integrate_cell<T>(f, {c.u0, um, c.v0, vm});
        fine += integrate_cell<T>(f, {um, c.u1, c.v0, vm});
        fine += integrate_cell<T>(f, {c.u0, um, vm, c.v1});
        fine += integrate_cell<T>(f, {um, c.u1, vm, c.v1});
        cells_used += 4;
        double err = magnitude<T>(fine - coarse);
        total += fine;
        total_err += err;
        queue.push(Node{err, next_id++, c, fine});
    };

    for (const auto& c : initial) push_cell(c);

    while (total_err > abs_tol && !queue.empty()) {
        if (cells_used > max_cells) {
            return {false, total_err};
        }
        Node worst = queue.top();
        queue.pop();
        if (worst.err <= 0.0) break;
        total -= worst.refined;
        total_err -= worst.err;
        const Cell& c = worst.cell;
        const double um = 0.5 * (c.u0 + c.u1), vm = 0.5 * (c.v0 + c.v1);
        push_cell({c.u0, um, c.v0, vm});
        push_cell({um, c.u1, c.v0, vm});
        push_cell({c.u0, um, vm, c.v1});
        push_cell({um, c.u1, vm, c.v1});
    }
    out = total;
    return {true, total_err};
}

// Uniform initial cells over [u0,u1]x[v0,v1] with mandatory v breakpoints
// (chart rows where the integrand loses smoothness).
inline std::vector<Cell> initial_cells(double u0, double u1, double v0, double v1, int nu, int nv,
                                       const std::vector<double>& v_breaks) {
    std::vector<double> vs;
    for (int j = 0; j <= nv; ++j) vs.push_back(v0 + (v1 - v0) * j / nv);
    for (double b : v_breaks) {
        if (b > v0 && b < v1) vs.push_back(b);
    }
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end(),
                         [&](double a, double b) { return std::abs(a - b) < 1e-12 * (v1 - v0); }),
             vs.end());

    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(nu) * (vs.size() - 1));
    for (int i = 0; i < nu; ++i) {
        double ua = u0 + (u1 - u0) * i / nu;
        double ub = u0 + (u1 - u0) * (i + 1) / nu;
        for (std::size_t j = 0; j + 1 < vs.size(); ++j) {
            cells.push_back({ua, ub, vs[j], vs[j + 1]});
        }
    }
    return cells;
}

}  // namespace euchar::detail
