#include "lp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rsmamec/baselines.hpp"

namespace lp {

namespace {

using Table = std::vector<std::vector<double>>;

void pivot(Table& t, std::vector<int>& basis, std::size_t r, std::size_t c) {
  const double p = t[r][c];
  for (double& v : t[r]) v /= p;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i == r || t[i][c] == 0) continue;
    const double f = t[i][c];
    for (std::size_t j = 0; j < t[i].size(); ++j) t[i][j] -= f * t[r][j];
  }
  basis[r] = static_cast<int>(c);
}

// Maximizes cost . x over the tableau; columns >= allowed are never entered.
void run(Table& t, std::vector<int>& basis, const std::vector<double>& cost, std::size_t allowed,
         double tol) {
  const std::size_t rhs = t.empty() ? 0 : t[0].size() - 1;
  for (int guard = 0; guard < 100000; ++guard) {
    std::size_t enter = rhs;
    for (std::size_t j = 0; j < allowed && enter == rhs; ++j) {
      double d = cost[j];
      for (std::size_t i = 0; i < t.size(); ++i) d -= cost[basis[i]] * t[i][j];
      if (d > tol) enter = j;
    }
    if (enter == rhs) return;
    std::size_t leave = t.size();
    double best = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i][enter] <= tol) continue;
      const double ratio = t[i][rhs] / t[i][enter];
      if (leave == t.size() || ratio < best - tol ||
          (std::abs(ratio - best) <= tol && basis[i] < basis[leave])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave == t.size()) throw std::runtime_error("lp: unbounded");
    pivot(t, basis, leave, enter);
  }
  throw std::runtime_error("lp: iteration guard hit");
}

}  // namespace

std::optional<Result> maximize(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                               const std::vector<double>& c, double tol) {
  const std::size_t m = A.size(), n = c.size();
  std::size_t arts = 0;
  for (double v : b) arts += v < 0;
  const std::size_t cols = n + m + arts;
  Table t(m, std::vector<double>(cols + 1, 0.0));
  std::vector<int> basis(m);
  std::size_t next_art = n + m;
  for (std::size_t i = 0; i < m; ++i) {
    double scale = std::abs(b[i]);
    for (double v : A[i]) scale = std::max(scale, std::abs(v));
    if (scale == 0) scale = 1;
    const double sign = b[i] < 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) t[i][j] = sign * A[i][j] / scale;
    t[i][n + i] = sign / scale;
    t[i][cols] = sign * b[i] / scale;
    if (b[i] < 0) {
      t[i][next_art] = 1;
      basis[i] = static_cast<int>(next_art++);
    } else {
      basis[i] = static_cast<int>(n + i);
    }
  }

  if (arts > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t j = n + m; j < cols; ++j) phase1[j] = -1;
    run(t, basis, phase1, cols, tol);
    double infeas = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (static_cast<std::size_t>(basis[i]) >= n + m) infeas += t[i][cols];
    if (infeas > tol) return std::nullopt;
    for (std::size_t i = 0; i < m; ++i) {
      if (static_cast<std::size_t>(basis[i]) < n + m) continue;
      for (std::size_t j = 0; j < n + m; ++j)
        if (std::abs(t[i][j]) > tol) {
          pivot(t, basis, i, j);
          break;
        }
    }
  }

  std::vector<double> cost(cols, 0.0);
  std::copy(c.begin(), c.end(), cost.begin());
  run(t, basis, cost, n + m, tol);
  Result r;
  r.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (static_cast<std::size_t>(basis[i]) < n) r.x[basis[i]] = t[i][cols];
  for (std::size_t j = 0; j < n; ++j) r.value += c[j] * r.x[j];
  return r;
}

namespace {

struct Slots {
  std::vector<int> devices;
  std::vector<double> R;
};

Slots served(const rsmamec::Scenario& sc, const rsmamec::Allocation& a) {
  Slots s;
  const auto R = rsmamec::tdma_link_rates(sc, a);
  for (int k = 0; k < sc.num_devices(); ++k)
    if (a.served(k)) {
      s.devices.push_back(k);
      s.R.push_back(R[k]);
    }
  return s;
}

// Server rows: sum t (F + R) <= F T and sum t <= T.
void server_rows(const rsmamec::Scenario& sc, const rsmamec::Allocation& a, const Slots& s,
                 std::size_t width, std::vector<std::vector<double>>& A, std::vector<double>& b) {
  const double T = sc.deadline();
  for (int m = 0; m < sc.num_servers(); ++m) {
    std::vector<double> load(width, 0.0), time(width, 0.0);
    for (std::size_t i = 0; i < s.devices.size(); ++i)
      if (a.server_of[s.devices[i]] == m) {
        load[i] = sc.frequency(m) + s.R[i];
        time[i] = 1;
      }
    A.push_back(load);
    b.push_back(sc.frequency(m) * T);
    A.push_back(time);
    b.push_back(T);
  }
}

}  // namespace

bool tdma_lp_feasible(const rsmamec::Scenario& sc, const rsmamec::Allocation& a, double theta) {
  const Slots s = served(sc, a);
  const std::size_t n = s.devices.size();
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n, 0.0);
    row[i] = -s.R[i] / sc.deadline();
    A.push_back(row);
    b.push_back(-theta);
  }
  server_rows(sc, a, s, n, A, b);
  return maximize(A, b, std::vector<double>(n, 0.0)).has_value();
}

double tdma_lp_optimum(const rsmamec::Scenario& sc, const rsmamec::Allocation& a) {
  const Slots s = served(sc, a);
  const std::size_t n = s.devices.size();
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(n + 1, 0.0);
    row[i] = -s.R[i] / sc.deadline();
    row[n] = 1;
    A.push_back(row);
    b.push_back(0);
  }
  server_rows(sc, a, s, n + 1, A, b);
  std::vector<double> c(n + 1, 0.0);
  c[n] = 1;
  return maximize(A, b, c)->value;
}

}  // namespace lp
