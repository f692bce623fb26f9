#include <cmath>
#include <memory>

#include "doctest.h"
#include "oracles.hpp"
#include "ssp/assumptions.hpp"
#include "ssp/auc.hpp"
#include "ssp/matrix_game.hpp"

using namespace ssp;

namespace {

MatrixGameSpec two_by_two(const std::vector<double>& a, double lx, double ly,
                          double trunc = 2.0) {
  MatrixGameSpec spec;
  spec.dim = 2;
  spec.lambda_x = lx;
  spec.lambda_y = ly;
  spec.truncation_L = trunc;
  spec.matrices = {a};
  spec.probs = {1.0};
  return spec;
}

}  // namespace

TEST_CASE("matrix game loss examples") {
  SUBCASE("bilinear symmetry and entropy cancellation") {
    const MatrixGameInstance game(two_by_two({1.0, -1.0, -1.0, 1.0}, 2.0, 2.0));
    const BlockVector u{0.5, 0.5};
    CHECK(game.loss(u, u, 0) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("entropy formula, zero matrix") {
    // Independently evaluated: 2[(1-e^-1)log(1-e^-1) + e^-1*(-1)] + 2 log 2.
    const MatrixGameInstance game(two_by_two({0.0, 0.0, 0.0, 0.0}, 2.0, 2.0));
    const BlockVector x{1.0 - std::exp(-1.0), std::exp(-1.0)};
    const BlockVector y{0.5, 0.5};
    CHECK(game.loss(x, y, 0) == doctest::Approx(0.07065950033130153).epsilon(1e-12));
  }
  SUBCASE("unknown atom and nonpositive coordinates rejected") {
    const MatrixGameInstance game(two_by_two({0.0, 0.0, 0.0, 0.0}, 2.0, 2.0));
    CHECK_THROWS_AS(game.loss({0.5, 0.5}, {0.5, 0.5}, 1), std::invalid_argument);
    CHECK_THROWS_AS(game.loss({-0.1, 1.1}, {0.5, 0.5}, 0), std::invalid_argument);
  }
}

TEST_CASE("matrix game gradients") {
  SUBCASE("zero matrix, uniform point") {
    const auto spec = make_matrix_game(3, 2.0, 2.0, 2.0, 1, 5);
    MatrixGameSpec zero = spec;
    for (auto& m : zero.matrices) std::fill(m.begin(), m.end(), 0.0);
    const MatrixGameInstance game(zero);
    const BlockVector u(3, 1.0 / 3.0);
    const BlockVector g = game.grad_x(u, u, 0);
    const double expect = 2.0 * (1.0 + std::log(1.0 / 3.0));
    for (double gi : g) CHECK(gi == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("entropic gradient needs positive coordinates") {
    const MatrixGameInstance game(two_by_two({0.0, 0.0, 0.0, 0.0}, 2.0, 2.0));
    CHECK_THROWS_AS(game.grad_x({0.0, 1.0}, {0.5, 0.5}, 0), std::invalid_argument);
  }
}

TEST_CASE("gradients match central finite differences") {
  const auto check_instance = [](const ProblemInstance& inst, std::uint64_t seed) {
    CounterRng rng(seed);
    for (int t = 0; t < 200; ++t) {
      const BlockVector x = random_feasible(inst.x_geometry(), rng);
      const BlockVector y = random_feasible(inst.y_geometry(), rng);
      const std::size_t atom = rng.next_u64() % inst.atom_count();
      const BlockVector gx = inst.grad_x(x, y, atom);
      const BlockVector gy = inst.grad_y(x, y, atom);
      const BlockVector fx = oracles::fd_gradient(
          [&](const BlockVector& v) { return inst.loss(v, y, atom); }, x);
      const BlockVector fy = oracles::fd_gradient(
          [&](const BlockVector& v) { return inst.loss(x, v, atom); }, y);
      const double sx = std::max(1.0, l2_norm(gx));
      const double sy = std::max(1.0, l2_norm(gy));
      CHECK(l2_norm(sub(gx, fx)) / sx <= 1e-5);
      CHECK(l2_norm(sub(gy, fy)) / sy <= 1e-5);
    }
  };
  check_instance(MatrixGameInstance(make_matrix_game(3, 2.0, 2.0, 2.0, 3, 42)), 1);
  check_instance(AucInstance(make_auc_dataset(4, 10, 0.5, 1.0, 1.0, 7)), 2);
}

TEST_CASE("AUC loss examples") {
  const AucInstance auc(make_auc_dataset(4, 10, 0.4, 1.0, 1.0, 3));
  SUBCASE("all-zero parameters give zero loss") {
    const BlockVector z(6, 0.0);
    for (std::size_t k = 0; k < auc.atom_count(); ++k)
      CHECK(auc.loss(z, {0.0}, k) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("d/da vanishes at zero residual") {
    const BlockVector z(6, 0.0);
    for (std::size_t k = 0; k < auc.atom_count(); ++k) {
      if (auc.spec().labels[k] != 1) continue;
      const BlockVector g = auc.grad_x(z, {0.0}, k);
      CHECK(g[4] == doctest::Approx(0.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("AUC spec invariants") {
  AucSpec bad = make_auc_dataset(3, 6, 0.5, 1.0, 1.0, 1);
  bad.features[0][0] = 5.0;
  CHECK_THROWS_AS(AucInstance{bad}, std::invalid_argument);
  AucSpec labels = make_auc_dataset(3, 6, 0.5, 1.0, 1.0, 1);
  labels.labels[0] = -1;  // breaks the label-1 mass
  CHECK_THROWS_AS(AucInstance{labels}, std::invalid_argument);
}

TEST_CASE("theoretical constants for the matrix game") {
  auto spec = make_matrix_game(4, 2.0, 3.0, 1.0, 2, 9);
  const TheoreticalConstants c = theoretical_constants(spec);
  CHECK(c.sigma_x == 2.0);
  CHECK(c.sigma_y == 3.0);
  CHECK(c.L_x == 5.0);
  CHECK(c.L_y == 7.0);
  CHECK(c.L_xy == 1.0);
  CHECK(c.assumption4_holds);

  spec.lambda_x = 1.0;
  CHECK_FALSE(theoretical_constants(spec).assumption4_holds);

  // Dominant term of L_x/lambda_x for large regularization weight.
  spec.lambda_x = 1e9;
  CHECK(theoretical_constants(spec).L_x / 1e9 ==
        doctest::Approx(spec.truncation_L + 1.0).epsilon(1e-8));
}

TEST_CASE("matrix entries above 1 rejected") {
  auto spec = make_matrix_game(2, 2.0, 2.0, 1.0, 1, 4);
  spec.matrices[0][0] = 1.5;
  CHECK_THROWS_AS(MatrixGameInstance(std::move(spec)), std::invalid_argument);
}

TEST_CASE("sampling") {
  const MatrixGameInstance single(two_by_two({0.5, 0.0, 0.0, -0.5}, 2.0, 2.0));
  SUBCASE("degenerate distribution") {
    const SampleSet s = sample(single, 17, 99);
    for (auto idx : s.indices) CHECK(idx == 0);
    CHECK(s.weights[0] == 1.0);
  }
  SUBCASE("determinism") {
    MatrixGameSpec spec = make_matrix_game(2, 2.0, 2.0, 1.0, 3, 21);
    const MatrixGameInstance game(spec);
    const SampleSet a = sample(game, 1000, 4242);
    const SampleSet b = sample(game, 1000, 4242);
    CHECK(a.indices == b.indices);
    CHECK(a.weights == b.weights);
  }
  SUBCASE("binomial frequency band") {
    MatrixGameSpec spec = make_matrix_game(2, 2.0, 2.0, 1.0, 2, 33);
    const MatrixGameInstance game(spec);
    const SampleSet s = sample(game, 100000, 7);
    CHECK(s.weights[0] >= 0.494);
    CHECK(s.weights[0] <= 0.506);
  }
  SUBCASE("n must be positive") {
    CHECK_THROWS_AS(sample(single, 0, 1), std::invalid_argument);
  }
}

TEST_CASE("population oracles") {
  SUBCASE("single atom equals per-atom loss") {
    const MatrixGameInstance game(two_by_two({0.3, -0.2, 0.4, 0.1}, 2.0, 2.0));
    const BlockVector x{0.6, 0.4}, y{0.3, 0.7};
    CHECK(population_loss(game, x, y) == doctest::Approx(game.loss(x, y, 0)));
  }
  SUBCASE("symmetric atoms cancel the bilinear part") {
    MatrixGameSpec spec;
    spec.dim = 2;
    spec.lambda_x = spec.lambda_y = 2.0;
    spec.truncation_L = 2.0;
    spec.matrices = {{0.8, -0.3, 0.2, 0.5}, {-0.8, 0.3, -0.2, -0.5}};
    spec.probs = {0.5, 0.5};
    const MatrixGameInstance game(spec);
    CounterRng rng(5);
    for (int t = 0; t < 20; ++t) {
      const BlockVector x = random_feasible(game.x_geometry(), rng);
      const BlockVector y = random_feasible(game.y_geometry(), rng);
      // Only the entropy terms survive.
      const double expect = 2.0 * (x[0] * std::log(x[0]) + x[1] * std::log(x[1])) -
                            2.0 * (y[0] * std::log(y[0]) + y[1] * std::log(y[1]));
      CHECK(population_loss(game, x, y) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  SUBCASE("population equals mixture with the averaged matrix") {
    const auto spec = make_matrix_game(3, 2.0, 2.0, 2.0, 4, 8);
    const MatrixGameInstance game(spec);
    std::vector<double> abar(9, 0.0);
    for (std::size_t k = 0; k < spec.matrices.size(); ++k)
      for (std::size_t i = 0; i < 9; ++i)
        abar[i] += spec.probs[k] * spec.matrices[k][i];
    MatrixGameSpec avg = spec;
    avg.matrices = {abar};
    avg.probs = {1.0};
    const MatrixGameInstance avg_game(avg);
    CounterRng rng(6);
    for (int t = 0; t < 50; ++t) {
      const BlockVector x = random_feasible(game.x_geometry(), rng);
      const BlockVector y = random_feasible(game.y_geometry(), rng);
      const double lhs = population_loss(game, x, y);
      CHECK(std::abs(lhs - avg_game.loss(x, y, 0)) <=
            1e-12 * std::max(1.0, std::abs(lhs)));
      const auto [gx, gy] = population_grads(game, x, y);
      const BlockVector gx2 = avg_game.grad_x(x, y, 0);
      CHECK(l2_norm(sub(gx, gx2)) <= 1e-12);
      const BlockVector gy2 = avg_game.grad_y(x, y, 0);
      CHECK(l2_norm(sub(gy, gy2)) <= 1e-12);
    }
  }
  SUBCASE("population linearity against the direct weighted sum") {
    const AucInstance auc(make_auc_dataset(3, 8, 0.25, 0.7, 0.9, 11));
    CounterRng rng(13);
    for (int t = 0; t < 50; ++t) {
      const BlockVector x = random_feasible(auc.x_geometry(), rng);
      const BlockVector y = random_feasible(auc.y_geometry(), rng);
      double direct = 0.0;
      for (std::size_t k = 0; k < auc.atom_count(); ++k)
        direct += auc.atom_probs()[k] * auc.loss(x, y, k);
      const double lhs = population_loss(auc, x, y);
      CHECK(std::abs(lhs - direct) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("bilinear boundedness on feasible points") {
  const auto spec = make_matrix_game(3, 2.0, 2.0, 2.0, 3, 17);
  const MatrixGameInstance game(spec);
  CounterRng rng(19);
  for (int t = 0; t < 500; ++t) {
    const BlockVector x = random_feasible(game.x_geometry(), rng);
    const BlockVector y = random_feasible(game.y_geometry(), rng);
    for (std::size_t k = 0; k < game.atom_count(); ++k) {
      double bil = 0.0;
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
          bil += x[i] * spec.matrices[k][i * 3 + j] * y[j];
      CHECK(std::abs(bil) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("verify_assumptions on the matrix game") {
  SUBCASE("regularizers off: no curvature, assumption4 fails empirically") {
    const MatrixGameInstance flat(two_by_two({0.9, -0.7, 0.2, -0.4}, 0.0, 0.0));
    const AssumptionReport rep = verify_assumptions(flat, 200, 3);
    CHECK(rep.sigma_x_hat <= 1e-8);
    CHECK(rep.sigma_y_hat <= 1e-8);
    CHECK_FALSE(rep.assumption4_empirical);
    CHECK_FALSE(rep.passed());
  }
  SUBCASE("entropy curvature dominates lambda on the truncated simplex") {
    const MatrixGameInstance game(make_matrix_game(3, 2.0, 2.0, 2.0, 3, 42));
    const AssumptionReport rep = verify_assumptions(game, 1000, 9);
    CHECK(rep.sigma_x_hat >= 2.0 - 1e-6);
    CHECK(rep.sigma_y_hat >= 2.0 - 1e-6);
    CHECK(rep.L_x_hat <= rep.theory.L_x + 1e-9);
    CHECK(rep.L_y_hat <= rep.theory.L_y + 1e-9);
    CHECK(rep.L_xy_hat <= 1.0 + 1e-9);
    CHECK(rep.passed());
  }
  SUBCASE("reports are deterministic in the seed") {
    const MatrixGameInstance game(make_matrix_game(2, 2.0, 2.0, 1.0, 2, 4));
    const AssumptionReport a = verify_assumptions(game, 100, 77);
    const AssumptionReport b = verify_assumptions(game, 100, 77);
    CHECK(a.sigma_x_hat == b.sigma_x_hat);
    CHECK(a.L_xy_hat == b.L_xy_hat);
    CHECK(a.sigma_y_hat == b.sigma_y_hat);
  }
  SUBCASE("probe count precondition") {
    const MatrixGameInstance game(make_matrix_game(2, 2.0, 2.0, 1.0, 2, 4));
    CHECK_THROWS_AS(verify_assumptions(game, 1, 1), std::invalid_argument);
  }
}

TEST_CASE("verify_assumptions on AUC stays consistent with its constants") {
  const AucInstance auc(make_auc_dataset(4, 12, 0.5, 1.0, 1.0, 21));
  const AssumptionReport rep = verify_assumptions(auc, 500, 15);
  CHECK(rep.sigma_x_consistent);
  CHECK(rep.sigma_y_consistent);
  CHECK(rep.L_x_consistent);
  CHECK(rep.L_y_consistent);
  CHECK(rep.L_xy_consistent);
  // The default AUC instance genuinely violates assumption 4.
  CHECK_FALSE(rep.theory.assumption4_holds);
  CHECK_FALSE(rep.passed());
}

TEST_CASE("instance probability validation") {
  MatrixGameSpec spec = two_by_two({0.0, 0.0, 0.0, 0.0}, 2.0, 2.0);
  spec.probs = {0.9};
  CHECK_THROWS_AS(MatrixGameInstance{spec}, std::invalid_argument);
}
