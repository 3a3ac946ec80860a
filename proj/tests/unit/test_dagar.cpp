#include <doctest.h>

#include "mdagar/dagar.hpp"
#include "mdagar/errors.hpp"
#include "oracles.hpp"

using namespace mdagar;
using doctest::Approx;

TEST_SUITE("dagar") {
  TEST_CASE("two-vertex path by hand") {
    const auto g = oracle::path_graph(2);
    const DagarPrecision p(g, 0.5);
    CHECK(p.conditional_precision(0) == Approx(1.0));
    CHECK(p.conditional_precision(1) == Approx(4.0 / 3.0));
    CHECK(p.coefficient(1, 0) == Approx(0.5));
    const Eigen::MatrixXd q = p.dense();
    CHECK(q(0, 0) == Approx(4.0 / 3.0));
    CHECK(q(0, 1) == Approx(-2.0 / 3.0));
    CHECK(q(1, 1) == Approx(4.0 / 3.0));
    const Eigen::MatrixXd s = q.inverse();
    CHECK(s(0, 1) / std::sqrt(s(0, 0) * s(1, 1)) == Approx(0.5).epsilon(1e-12));
    CHECK(p.log_det() == Approx(std::log(4.0 / 3.0)));

    const Eigen::VectorXd mv = p.matvec(Eigen::Vector2d(1, 0));
    CHECK(mv[0] == Approx(4.0 / 3.0));
    CHECK(mv[1] == Approx(-2.0 / 3.0));
    CHECK(p.quad_form(Eigen::Vector2d(1, 1)) == Approx(4.0 / 3.0));
    CHECK(p.quad_form(Eigen::Vector2d(1, 0)) == Approx(q(0, 0)));
    CHECK(p.matvec(Eigen::Vector2d::Zero()).isZero());
    CHECK(p.quad_form(Eigen::Vector2d::Zero()) == 0.0);
  }

  TEST_CASE("tiny rho gives the identity") {
    std::mt19937_64 rng(1);
    const auto g = oracle::random_graph(rng, 10, 0.4);
    const DagarPrecision p(g, 1e-12);
    CHECK(p.dense().isApprox(Eigen::MatrixXd::Identity(10, 10), 1e-10));
    CHECK(std::abs(p.log_det()) < 1e-12);
    const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(10, -1, 1);
    CHECK((p.matvec(v) - v).norm() < 1e-10);
  }

  TEST_CASE("single vertex and empty graph") {
    const DagarPrecision one(oracle::graph_from_edges(1, {}), 0.7);
    CHECK(one.dense()(0, 0) == Approx(1.0));
    const DagarPrecision empty(oracle::graph_from_edges(5, {}), 0.7);
    CHECK(std::abs(empty.log_det()) < 1e-14);
  }

  TEST_CASE("rho must be strictly inside (0, 1)") {
    const auto g = oracle::path_graph(3);
    CHECK_THROWS_AS(DagarPrecision(g, 0.0), ValidationError);
    CHECK_THROWS_AS(DagarPrecision(g, 1.0), ValidationError);
    CHECK_THROWS_AS(DagarPrecision(g, -0.2), ValidationError);
    CHECK_THROWS_AS(DagarPrecision(g, std::nan("")), ValidationError);
  }

  TEST_CASE("matches the dense oracle on random graphs") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 25; ++rep) {
      const auto g = oracle::random_graph(rng, 2 + rep, 0.25);
      for (double rho : {0.1, 0.5, 0.9}) {
        const DagarPrecision p(g, rho);
        const Eigen::MatrixXd ref = oracle::dagar_q(*g, rho);
        CHECK((p.dense() - ref).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(p.log_det() == Approx(oracle::dense_log_det(ref)).epsilon(1e-10));
        Eigen::VectorXd w(ref.rows());
        for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = z(rng);
        CHECK(p.quad_form(w) == Approx(w.dot(ref * w)).epsilon(1e-10));
        CHECK((p.matvec(w) - ref * w).norm() < 1e-10 * (1 + w.norm()));
        // solve_root gives R with R R^T = Q^{-1}
        Eigen::MatrixXd r(ref.rows(), ref.cols());
        for (Eigen::Index c = 0; c < r.cols(); ++c) r.col(c) = p.solve_root(Eigen::VectorXd::Unit(r.rows(), c));
        CHECK(((r * r.transpose()) * ref - Eigen::MatrixXd::Identity(r.rows(), r.rows())).norm() < 1e-8);
      }
    }
  }

  TEST_CASE("congruence accumulation") {
    std::mt19937_64 rng(3);
    const auto g = oracle::random_graph(rng, 8, 0.4);
    const DagarPrecision p(g, 0.6);
    const Eigen::MatrixXd m = oracle::adjacency(*g);
    const Eigen::MatrixXd a = 0.4 * Eigen::MatrixXd::Identity(8, 8) + 0.25 * m;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(8, 8);
    p.add_congruence_to(out, 2.0, 0.4, 0.25);
    CHECK((out - 2.0 * a.transpose() * oracle::dagar_q(*g, 0.6) * a).norm() < 1e-10);
  }

  TEST_CASE("dense materialization respects the cap") {
    const DagarPrecision p(oracle::path_graph(20), 0.5);
    CHECK_THROWS_AS(p.dense(10), ValidationError);
  }
}
