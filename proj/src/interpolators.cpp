#include "neurint/interpolators.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace neurint {

namespace {

double path_fraction(double t, double T, const char* op) {
  if (!(T > 0.0)) throw std::invalid_argument(std::string(op) + ": total time must be positive");
  if (!(t >= 0.0 && t <= T)) {
    throw std::out_of_range(std::string(op) + ": t=" + std::to_string(t) + " outside [0, " + std::to_string(T) + "]");
  }
  return t / T;
}

void require_paired(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rank() != 2 || a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": endpoints " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
}

}  // namespace

Tensor lerp(const Tensor& z0, const Tensor& zT, double t, double T) {
  require_paired(z0, zT, "lerp");
  const double s = path_fraction(t, T, "lerp");
  if (s == 0.0) return z0;
  if (s == 1.0) return zT;
  return add(scale(z0, 1.0 - s), scale(zT, s));
}

Tensor slerp(const Tensor& z0, const Tensor& zT, double t, double T) {
  require_paired(z0, zT, "slerp");
  const double s = path_fraction(t, T, "slerp");
  const std::size_t rows = z0.rows();
  const std::size_t d = z0.cols();

  struct RowGeometry {
    bool linear;
    double nu, nw, c, omega;
  };
  std::vector<RowGeometry> geo(rows);
  Tensor out = Tensor::zeros(z0.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double uu = 0, ww = 0, uw = 0;
    for (std::size_t j = 0; j < d; ++j) {
      uu += z0(r, j) * z0(r, j);
      ww += zT(r, j) * zT(r, j);
      uw += z0(r, j) * zT(r, j);
    }
    const double nu = std::sqrt(uu);
    const double nw = std::sqrt(ww);
    if (nu == 0.0 || nw == 0.0) throw std::invalid_argument("slerp: zero-norm endpoint in row " + std::to_string(r));
    const double c = std::clamp(uw / (nu * nw), -1.0, 1.0);
    const double omega = std::acos(c);
    const bool linear = omega < kSlerpAngleEps || omega > std::numbers::pi - kSlerpAngleEps;
    geo[r] = {linear, nu, nw, c, omega};
    double a, b;
    if (linear || s == 0.0 || s == 1.0) {
      a = 1.0 - s;
      b = s;
    } else {
      const double so = std::sin(omega);
      a = std::sin((1.0 - s) * omega) / so;
      b = std::sin(s * omega) / so;
    }
    for (std::size_t j = 0; j < d; ++j) out(r, j) = a * z0(r, j) + b * zT(r, j);
  }
  // Endpoints reproduce the inputs bit-exactly.
  if (s == 0.0) return z0;
  if (s == 1.0) return zT;

  const std::array<const Tensor*, 2> inputs{&z0, &zT};
  auto backward = [u = z0.values(), w = zT.values(), geo, s, rows, d](std::span<const double> g) {
    std::vector<double> du(rows * d, 0.0), dw(rows * d, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto& G = geo[r];
      const std::size_t o = r * d;
      if (G.linear) {
        for (std::size_t j = 0; j < d; ++j) {
          du[o + j] = (1.0 - s) * g[o + j];
          dw[o + j] = s * g[o + j];
        }
        continue;
      }
      const double so = std::sin(G.omega);
      const double co = std::cos(G.omega);
      const double sa = std::sin((1.0 - s) * G.omega);
      const double sb = std::sin(s * G.omega);
      const double A = sa / so;
      const double B = sb / so;
      const double dA = ((1.0 - s) * std::cos((1.0 - s) * G.omega) * so - sa * co) / (so * so);
      const double dB = (s * std::cos(s * G.omega) * so - sb * co) / (so * so);
      double gu = 0, gw = 0;
      for (std::size_t j = 0; j < d; ++j) {
        gu += g[o + j] * u[o + j];
        gw += g[o + j] * w[o + j];
      }
      // dOmega/dc = -1/sin(Omega)
      const double q = -(gu * dA + gw * dB) / so;
      const double inv = 1.0 / (G.nu * G.nw);
      for (std::size_t j = 0; j < d; ++j) {
        const double dc_du = w[o + j] * inv - G.c * u[o + j] / (G.nu * G.nu);
        const double dc_dw = u[o + j] * inv - G.c * w[o + j] / (G.nw * G.nw);
        du[o + j] = A * g[o + j] + q * dc_du;
        dw[o + j] = B * g[o + j] + q * dc_dw;
      }
    }
    return std::vector<std::vector<double>>{std::move(du), std::move(dw)};
  };
  return custom_op(std::move(out), inputs, std::move(backward));
}

LatentTrajectory first_order_integrate(const Mlp& field, const Tensor& z0, const Tensor* conditioning,
                                       const SolverConfig& solver) {
  if (conditioning == nullptr) {
    return integrate_first_order([&field](const Tensor& z) { return field.forward(z); }, z0, solver);
  }
  if (conditioning->shape() != z0.shape()) {
    throw ShapeError("first_order_integrate: conditioning " + shape_str(conditioning->shape()) + " vs state " +
                     shape_str(z0.shape()));
  }
  const Tensor zc = *conditioning;
  return integrate_first_order(
      [&field, zc](const Tensor& z) {
        const std::array<Tensor, 2> parts{z, zc};
        return field.forward(concat_cols(parts));
      },
      z0, solver);
}

}  // namespace neurint
