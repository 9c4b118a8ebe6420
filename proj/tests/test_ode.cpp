#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gradcheck.hpp"
#include "neurint/model.hpp"
#include "neurint/ode.hpp"

using namespace neurint;
using neurint::testing::check_gradients;
using neurint::testing::uniform;

namespace {

const SecondOrderField kZeroField = [](const Tensor& z, const Tensor&) { return scale(z, 0.0); };
const SecondOrderField kOscillator = [](const Tensor& z, const Tensor&) { return scale(z, -1.0); };

AugmentedState oscillator_start() { return {Tensor::matrix({{1.0}}), Tensor::matrix({{0.0}})}; }

double endpoint_error(SolverMethod method, int steps) {
  const auto traj = integrate(kOscillator, oscillator_start(), {method, steps, 1.0});
  return std::abs(traj.terminal().item() - std::cos(1.0));
}

// Least-squares slope of log(error) against log(h).
double observed_order(SolverMethod method) {
  const int steps[] = {8, 16, 32, 64};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int n : steps) {
    const double x = std::log(1.0 / n);
    const double y = std::log(endpoint_error(method, n));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
}

}  // namespace

TEST(CoupledField, Examples) {
  const AugmentedState s{Tensor::matrix({{0.4, -0.3}}), Tensor::matrix({{1.0, 0.0}})};
  const AugmentedState d = coupled_field(kZeroField, s);
  EXPECT_EQ(d.z.values(), (std::vector<double>{1, 0}));
  EXPECT_EQ(d.v.values(), (std::vector<double>{0, 0}));

  const SecondOrderField constant = [](const Tensor& z, const Tensor&) {
    return add(scale(z, 0.0), Tensor::matrix({{2.5, -1.0}}));
  };
  const AugmentedState other{Tensor::matrix({{9.0, 9.0}}), Tensor::matrix({{-4.0, 3.0}})};
  EXPECT_EQ(coupled_field(constant, s).v.values(), coupled_field(constant, other).v.values());
}

TEST(CoupledField, MatchesNetworkOnConcatenation) {
  std::mt19937_64 rng(1);
  Mlp field({{4, 5, 5, 2}, Activation::Tanh}, rng);
  const AugmentedState s{uniform({3, 2}, rng), uniform({3, 2}, rng)};
  const AugmentedState d = coupled_field(second_order_field(field), s);
  const std::array<Tensor, 2> parts{s.z, s.v};
  EXPECT_EQ(d.v.values(), field.forward(concat_cols(parts)).values());
  EXPECT_EQ(d.z.values(), s.v.values());
}

TEST(EulerStep, HandSteps) {
  const FirstOrderField decay = [](const Tensor& z) { return scale(z, -1.0); };
  EXPECT_EQ(euler_step(decay, Tensor::matrix({{1.0}}), 1.0).item(), 0.0);

  AugmentedState s{Tensor::matrix({{0.0}}), Tensor::matrix({{1.0}})};
  s = euler_step(kZeroField, s, 0.5);
  s = euler_step(kZeroField, s, 0.5);
  EXPECT_EQ(s.z.item(), 1.0);
}

TEST(Rk4Step, ExponentialGrowth) {
  const FirstOrderField grow = [](const Tensor& z) { return z; };
  const auto traj = integrate_first_order(grow, Tensor::matrix({{1.0}}), {SolverMethod::Rk4, 32, 1.0});
  // one RK4 step on z' = z multiplies by the degree-4 Taylor polynomial of e^h
  const double h = 1.0 / 32;
  const double amp = 1 + h + h * h / 2 + h * h * h / 6 + h * h * h * h / 24;
  EXPECT_NEAR(traj.terminal().item(), std::pow(amp, 32), 1e-13);
  EXPECT_NEAR(traj.terminal().item(), std::exp(1.0), 3e-8);
}

TEST(Convergence, OscillatorOrders) {
  const double euler = observed_order(SolverMethod::Euler);
  const double rk4 = observed_order(SolverMethod::Rk4);
  EXPECT_GE(euler, 0.9);
  EXPECT_LE(euler, 1.1);
  EXPECT_GE(rk4, 3.8);
  EXPECT_LE(rk4, 4.2);
  EXPECT_NEAR(endpoint_error(SolverMethod::Euler, 16) / endpoint_error(SolverMethod::Euler, 32), 2.0, 0.2);
  EXPECT_NEAR(endpoint_error(SolverMethod::Rk4, 16) / endpoint_error(SolverMethod::Rk4, 32), 16.0, 1.6);
  EXPECT_LT(endpoint_error(SolverMethod::Rk4, 32), 1e-7);
}

TEST(Integrate, OneStepEqualsStepFunction) {
  std::mt19937_64 rng(2);
  Mlp field({{4, 5, 5, 2}, Activation::Tanh}, rng);
  const auto f = second_order_field(field);
  const AugmentedState s{uniform({2, 2}, rng), uniform({2, 2}, rng)};
  const auto e = integrate(f, s, {SolverMethod::Euler, 1, 0.7});
  const auto r = integrate(f, s, {SolverMethod::Rk4, 1, 0.7});
  EXPECT_EQ(e.terminal().values(), euler_step(f, s, 0.7).z.values());
  EXPECT_EQ(r.terminal().values(), rk4_step(f, s, 0.7).z.values());
  EXPECT_EQ(r.derivative(1).values(), rk4_step(f, s, 0.7).v.values());
}

TEST(Integrate, ZeroFieldIsStraightLine) {
  std::mt19937_64 rng(3);
  const AugmentedState s{uniform({3, 4}, rng), uniform({3, 4}, rng)};
  for (SolverMethod m : {SolverMethod::Euler, SolverMethod::Rk4}) {
    const SolverConfig cfg{m, 7, 1.3};
    const auto traj = integrate(kZeroField, s, cfg);
    for (std::size_t k = 0; k < traj.nodes(); ++k) {
      const double t = traj.time(k);
      for (std::size_t i = 0; i < s.z.size(); ++i) {
        EXPECT_NEAR(traj.position(k).data()[i], s.z.data()[i] + t * s.v.data()[i], 1e-14);
      }
    }
  }
}

TEST(Integrate, GridTimes) {
  const auto traj = integrate(kOscillator, oscillator_start(), {SolverMethod::Rk4, 5, 2.0});
  const auto t = traj.times();
  ASSERT_EQ(t.size(), 6u);
  EXPECT_EQ(t.front(), 0.0);
  EXPECT_EQ(t.back(), 2.0);
  for (std::size_t k = 1; k < t.size(); ++k) EXPECT_GT(t[k], t[k - 1]);
}

TEST(Integrate, GradientOfEndpointWrtInitialVelocity) {
  std::mt19937_64 rng(4);
  Mlp field({{6, 8, 8, 3}, Activation::Tanh}, rng);
  const Tensor z0 = uniform({2, 3}, rng);
  Tensor v0 = uniform({2, 3}, rng);
  const auto f = second_order_field(field);
  for (SolverMethod m : {SolverMethod::Euler, SolverMethod::Rk4}) {
    auto params = field.parameters();
    params.push_back(&v0);
    const auto r = check_gradients(params, [&] {
      return sum(square(integrate(f, {z0, v0}, {m, 8, 1.0}).terminal()));
    });
    EXPECT_LT(r.worst, 1e-4) << to_string(m);
  }
}

TEST(Integrate, AbortsOnNonFiniteState) {
  const SecondOrderField blowup = [](const Tensor& z, const Tensor&) { return scale(z, 1e200); };
  const AugmentedState s{Tensor::matrix({{1.0}}), Tensor::matrix({{1.0}})};
  try {
    integrate(blowup, s, {SolverMethod::Euler, 32, 1.0});
    FAIL() << "expected SolverAbort";
  } catch (const SolverAbort& e) {
    EXPECT_GE(e.step(), 0);
    EXPECT_LT(e.step(), 32);
  }
}

TEST(Integrate, RejectsBadConfig) {
  EXPECT_THROW(integrate(kZeroField, oscillator_start(), {SolverMethod::Rk4, 0, 1.0}), std::invalid_argument);
  EXPECT_THROW(integrate(kZeroField, oscillator_start(), {SolverMethod::Rk4, 4, -1.0}), std::invalid_argument);
}

TEST(DenseOutput, ExactAtGridPoints) {
  std::mt19937_64 rng(5);
  Mlp field({{4, 5, 5, 2}, Activation::Tanh}, rng);
  const auto traj = integrate(second_order_field(field), {uniform({2, 2}, rng), uniform({2, 2}, rng)},
                              {SolverMethod::Rk4, 10, 1.0});
  for (std::size_t k = 0; k < traj.nodes(); ++k) {
    EXPECT_EQ(traj.evaluate_at(traj.time(k)).values(), traj.position(k).values());
  }
}

TEST(DenseOutput, ZeroFieldAnyTime) {
  const AugmentedState s{Tensor::matrix({{0.5, -2.0}}), Tensor::matrix({{1.5, 0.25}})};
  const auto traj = integrate(kZeroField, s, {SolverMethod::Rk4, 4, 1.0});
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double t = u(rng);
    const Tensor z = traj.evaluate_at(t);
    EXPECT_NEAR(z(0, 0), 0.5 + t * 1.5, 1e-14);
    EXPECT_NEAR(z(0, 1), -2.0 + t * 0.25, 1e-14);
  }
}

TEST(DenseOutput, OscillatorRandomTimes) {
  const auto traj = integrate(kOscillator, oscillator_start(), {SolverMethod::Rk4, 32, 1.0});
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = u(rng);
    worst = std::max(worst, std::abs(traj.evaluate_at(t).item() - std::cos(t)));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(DenseOutput, ContinuousAndSmoothAcrossCells) {
  const auto traj = integrate(kOscillator, oscillator_start(), {SolverMethod::Rk4, 8, 1.0});
  for (std::size_t k = 1; k + 1 < traj.nodes(); ++k) {
    const double t = traj.time(k);
    const double z = traj.position(k).item();
    for (double d : {1e-4, 1e-6}) {
      const double left = traj.evaluate_at(t - d).item();
      const double right = traj.evaluate_at(t + d).item();
      EXPECT_LT(std::abs(left - z), 2 * d);
      EXPECT_LT(std::abs(right - z), 2 * d);
      // one-sided slopes agree to O(d)
      EXPECT_NEAR((z - left) / d, (right - z) / d, 10 * d);
    }
  }
}

TEST(DenseOutput, RejectsOutOfRange) {
  const auto traj = integrate(kOscillator, oscillator_start(), {SolverMethod::Rk4, 8, 1.0});
  EXPECT_THROW(traj.evaluate_at(-1e-9), std::out_of_range);
  EXPECT_THROW(traj.evaluate_at(1.0 + 1e-9), std::out_of_range);
}

TEST(DenseOutput, RowwiseTimes) {
  std::mt19937_64 rng(8);
  Mlp field({{4, 5, 5, 2}, Activation::Tanh}, rng);
  const auto traj = integrate(second_order_field(field), {uniform({3, 2}, rng), uniform({3, 2}, rng)},
                              {SolverMethod::Rk4, 6, 1.0});
  const std::vector<double> times{0.1, 0.55, 1.0};
  const Tensor rows = traj.evaluate_rows(times);
  for (std::size_t b = 0; b < 3; ++b) {
    const Tensor full = traj.evaluate_at(times[b]);
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(rows(b, c), full(b, c), 1e-15);
  }
  EXPECT_THROW(traj.evaluate_rows(std::vector<double>{0.1}), ShapeError);
}

TEST(Refinement, Rk4TwelveVersusSixtyFour) {
  std::mt19937_64 rng(9);
  Mlp field({{4, 16, 16, 2}, Activation::Tanh}, rng, 0.1);
  const AugmentedState s{uniform({4, 2}, rng), uniform({4, 2}, rng)};
  const auto coarse = integrate(second_order_field(field), s, {SolverMethod::Rk4, 12, 1.0});
  const auto fine = integrate(second_order_field(field), s, {SolverMethod::Rk4, 64, 1.0});
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_LT(std::abs(coarse.terminal().data()[i] - fine.terminal().data()[i]), 1e-4);
  }
}

TEST(TrajectoryCsv, Columns) {
  const AugmentedState s{Tensor::matrix({{1.0, 2.0}, {3.0, 4.0}}), Tensor::matrix({{0.5, 0.5}, {0.0, 1.0}})};
  const auto traj = integrate(kZeroField, s, {SolverMethod::Euler, 2, 1.0});
  std::ostringstream os;
  traj.write_csv(os, 1);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "t,z_0,z_1,v_0,v_1");
  std::getline(is, line);
  EXPECT_EQ(line, "0,3,4,0,1");
  std::getline(is, line);
  EXPECT_EQ(line, "0.5,3,4.5,0,1");

  const FirstOrderField still = [](const Tensor& z) { return scale(z, 0.0); };
  std::ostringstream first;
  integrate_first_order(still, Tensor::matrix({{1.0}}), {SolverMethod::Euler, 1, 1.0}).write_csv(first);
  EXPECT_EQ(first.str().substr(0, 4), "t,z_");
  EXPECT_EQ(first.str().find("v_"), std::string::npos);
}
