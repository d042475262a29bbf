#include "odeint_driver.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>

namespace tropored::detail {

namespace odeint = boost::numeric::odeint;
using Vec = boost::numeric::ublas::vector<double>;
using Mat = boost::numeric::ublas::matrix<double>;

namespace {

// Dense-output stepping with a positivity guard: a component below -atol
// rejects the step and retries with a quarter of it, small negatives are
// clipped to atol/10 and the stepper restarts from the clipped state.
template <class Stepper, class System>
void drive(Stepper& st, System sys, const std::vector<double>& x0, const std::vector<double>& times,
           const DriverOptions& opt, DriverResult& out) {
  const std::size_t n = x0.size();
  Vec x(n);
  std::copy(x0.begin(), x0.end(), x.begin());
  double dt = opt.initial_dt > 0 ? opt.initial_dt : (times.size() > 1 ? (times[1] - times[0]) * 1e-3 : 1e-6);
  st.initialize(x, times[0], dt);
  out.times.push_back(times[0]);
  out.states.push_back(x0);
  std::size_t next = 1;
  Vec prev = x;
  double tprev = times[0];
  while (next < times.size()) {
    if (++out.steps > opt.max_steps) throw DriverError("step budget exhausted at t = " + std::to_string(tprev));
    auto [ta, tb] = st.do_step(sys);
    const Vec& cur = st.current_state();
    double minv = 0;
    bool finite = true;
    for (double v : cur) {
      minv = std::min(minv, v);
      finite = finite && std::isfinite(v);
    }
    if (minv < -opt.atol || !finite) {
      double h = (tb - ta) / 4;
      if (!(h > 1e-14 * std::max(1.0, std::abs(ta))))
        throw DriverError("step size underflow at t = " + std::to_string(ta) +
                          (finite ? " (positivity violation)" : " (non-finite state)"));
      st.initialize(prev, tprev, h);
      ++out.rejects;
      continue;
    }
    while (next < times.size() && times[next] <= tb) {
      Vec y(n);
      st.calc_state(times[next], y);
      std::vector<double> row(y.begin(), y.end());
      for (auto& v : row) v = std::max(v, 0.0);
      out.times.push_back(times[next]);
      out.states.push_back(std::move(row));
      ++next;
    }
    if (minv < 0) {
      Vec c = cur;
      for (auto& v : c)
        if (v < 0) v = opt.atol / 10;
      ++out.clips;
      st.initialize(c, tb, st.current_time_step());
    }
    prev = st.current_state();
    tprev = tb;
  }
}

}  // namespace

DriverResult run_odeint(const RhsFn& f, const JacFn& jac, const std::vector<double>& x0,
                        const std::vector<double>& times, const DriverOptions& opt) {
  const std::size_t n = x0.size();
  auto rhs = [&](const Vec& x, Vec& dx, double) {
    std::vector<double> xs(x.begin(), x.end()), d(n);
    f(xs, d);
    std::copy(d.begin(), d.end(), dx.begin());
  };
  auto jacobian = [&](const Vec& x, Mat& J, const double&, Vec& dfdt) {
    std::vector<double> xs(x.begin(), x.end());
    std::vector<std::vector<double>> Jv(n, std::vector<double>(n, 0.0));
    if (jac) {
      jac(xs, Jv);
    } else {
      std::vector<double> f0(n), f1(n);
      f(xs, f0);
      for (std::size_t j = 0; j < n; ++j) {
        auto y = xs;
        double h = 1e-7 * std::max(std::abs(xs[j]), 1e-6);
        y[j] += h;
        f(y, f1);
        for (std::size_t i = 0; i < n; ++i) Jv[i][j] = (f1[i] - f0[i]) / h;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      dfdt[i] = 0;
      for (std::size_t j = 0; j < n; ++j) J(i, j) = Jv[i][j];
    }
  };

  DriverResult out;
  try {
    if (opt.rosenbrock) {
      auto st = odeint::make_dense_output(opt.atol, opt.rtol, odeint::rosenbrock4<double>());
      drive(st, std::make_pair(rhs, jacobian), x0, times, opt, out);
    } else {
      auto st = odeint::make_dense_output(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<Vec>());
      drive(st, rhs, x0, times, opt, out);
    }
  } catch (const RhsFailure& e) {
    out.truncated = true;
    out.diagnostic = e.what();
  }
  return out;
}

}  // namespace tropored::detail
