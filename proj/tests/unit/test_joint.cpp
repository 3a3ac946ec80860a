#include <doctest.h>

#include "mdagar/errors.hpp"
#include "mdagar/joint.hpp"
#include "oracles.hpp"

using namespace mdagar;
using doctest::Approx;

namespace {

InteractionCoeffs coeffs_from(const oracle::Eta& e, std::size_t q) {
  InteractionCoeffs c(q);
  for (std::size_t i = 1; i < q; ++i)
    for (std::size_t ip = 0; ip < i; ++ip) c.set(i, ip, e.e0[i][ip], e.e1[i][ip]);
  return c;
}

}  // namespace

TEST_SUITE("joint") {
  TEST_CASE("A blocks") {
    const auto g = oracle::path_graph(2);
    const Eigen::SparseMatrix<double> m = adjacency_matrix(*g);
    CHECK(Eigen::MatrixXd(build_A_block(1, 0, m)).isIdentity());
    CHECK(Eigen::MatrixXd(build_A_block(0, 0, m)).isZero());
    const Eigen::MatrixXd a = build_A_block(0.5, 0.3, m);
    CHECK(a(0, 0) == 0.5);
    CHECK(a(0, 1) == 0.3);
    CHECK(a(1, 0) == 0.3);
    CHECK(a(1, 1) == 0.5);
  }

  TEST_CASE("interaction blocks pack by earlier disease") {
    InteractionCoeffs c(3);
    c.set(2, 0, 1, 2);
    c.set(2, 1, 3, 4);
    CHECK(c.block(2) == Eigen::Vector4d(1, 2, 3, 4));
    c.set_block(1, Eigen::Vector2d(-1, 0.5));
    CHECK(c.eta0(1, 0) == -1);
    CHECK(c.eta1(1, 0) == 0.5);
    CHECK(c.pairs() == 3);
  }

  TEST_CASE("q = 1 is tau Q(rho)") {
    const auto g = oracle::path_graph(4);
    const JointPrecision p(g, Eigen::VectorXd::Constant(1, 2.5), Eigen::VectorXd::Constant(1, 0.3),
                           InteractionCoeffs(1));
    CHECK((p.dense() - 2.5 * oracle::dagar_q(*g, 0.3)).norm() < 1e-12);
  }

  TEST_CASE("q = 2 without interactions is block diagonal") {
    const auto g = oracle::path_graph(3);
    const JointPrecision p(g, Eigen::Vector2d(1, 2), Eigen::Vector2d(0.3, 0.7), InteractionCoeffs(2));
    const Eigen::MatrixXd d = p.dense();
    CHECK(d.topRightCorner(3, 3).isZero());
    CHECK((d.bottomRightCorner(3, 3) - 2 * oracle::dagar_q(*g, 0.7)).norm() < 1e-12);
  }

  TEST_CASE("bivariate block formula on the path") {
    const auto g = oracle::path_graph(2);
    InteractionCoeffs c(2);
    c.set(1, 0, 0.5, 0.3);
    const JointPrecision p(g, Eigen::Vector2d(1, 1), Eigen::Vector2d(0.5, 0.5), c);
    const Eigen::MatrixXd ref = oracle::bivariate_q(*g, 1, 1, 0.5, 0.5, 0.5, 0.3);
    CHECK((p.dense() - ref).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((bivariate_closed_form(p) - ref).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("random instances against the dense oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t q = 1 + rep % 4, k = 3 + rep % 7;
      const auto g = oracle::random_graph(rng, k, 0.4);
      std::vector<double> tau, rho;
      oracle::Eta e(q);
      for (std::size_t i = 0; i < q; ++i) {
        tau.push_back(0.2 + 2 * u(rng));
        rho.push_back(u(rng));
        for (std::size_t ip = 0; ip < i; ++ip) {
          e.e0[i][ip] = z(rng);
          e.e1[i][ip] = 0.5 * z(rng);
        }
      }
      const JointPrecision p(g, Eigen::Map<Eigen::VectorXd>(tau.data(), q), Eigen::Map<Eigen::VectorXd>(rho.data(), q),
                             coeffs_from(e, q));
      const Eigen::MatrixXd ref = oracle::joint_q(*g, tau, rho, e);
      CHECK((p.dense() - ref).cwiseAbs().maxCoeff() < 1e-10 * (1 + ref.cwiseAbs().maxCoeff()));
      CHECK(p.log_det() == Approx(oracle::dense_log_det(ref)).epsilon(1e-9));
      Eigen::VectorXd w(static_cast<Eigen::Index>(q * k));
      for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = z(rng);
      CHECK(p.quad_form(w) == Approx(w.dot(ref * w)).epsilon(1e-10));
      CHECK((p.matvec(w) - ref * w).norm() < 1e-9 * (1 + (ref * w).norm()));
      CHECK((p.covariance() * ref - Eigen::MatrixXd::Identity(ref.rows(), ref.cols())).norm() < 1e-7);
    }
  }

  TEST_CASE("huge tau2 with A = I couples the two fields") {
    const auto g = oracle::path_graph(3);
    InteractionCoeffs c(2);
    c.set(1, 0, 1.0, 0.0);
    const JointPrecision p(g, Eigen::Vector2d(1, 1e6), Eigen::Vector2d(0.5, 0.5), c);
    const Eigen::MatrixXd s = p.covariance();
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(s(j, 3 + j) / std::sqrt(s(j, j) * s(3 + j, 3 + j)) > 0.9999);
  }

  TEST_CASE("within-region moments") {
    const auto one = oracle::graph_from_edges(1, {});
    InteractionCoeffs c(2);
    c.set(1, 0, 1.0, 0.7);
    const CrossMoments m = within_region_cross_moments(JointPrecision(one, Eigen::Vector2d(1, 1), Eigen::Vector2d(0.5, 0.5), c), 0);
    CHECK(m.cov == Approx(1.0));
    CHECK(m.var1 == Approx(1.0));
    CHECK(m.var2 == Approx(2.0));
    CHECK(m.corr == Approx(1 / std::sqrt(2.0)));

    const auto g = oracle::path_graph(4);
    const CrossMoments zero = within_region_cross_moments(JointPrecision(g, Eigen::Vector2d(1, 2), Eigen::Vector2d(0.3, 0.6), InteractionCoeffs(2)), 2);
    CHECK(zero.cov == 0.0);
    CHECK(zero.corr == 0.0);

    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 10; ++rep) {
      const auto rg = oracle::random_graph(rng, 6, 0.4);
      InteractionCoeffs cc(2);
      cc.set(1, 0, 0.3 + 0.2 * rep, 0.1 * rep - 0.4);
      const JointPrecision p(rg, Eigen::Vector2d(0.5 + rep, 2), Eigen::Vector2d(0.2, 0.8), cc);
      const Eigen::MatrixXd s = p.covariance();
      for (std::size_t j = 0; j < 6; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const CrossMoments cm = within_region_cross_moments(p, j);
        CHECK(cm.cov == Approx(s(jj, 6 + jj)).epsilon(1e-8));
        CHECK(cm.var1 == Approx(s(jj, jj)).epsilon(1e-8));
        CHECK(cm.var2 == Approx(s(6 + jj, 6 + jj)).epsilon(1e-8));
      }
    }
  }

  TEST_CASE("sampling moments") {
    Rng rng(17);
    SUBCASE("single vertex has unit variance") {
      const JointPrecision p(oracle::graph_from_edges(1, {}), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Constant(1, 0.5),
                             InteractionCoeffs(1));
      std::vector<double> x;
      for (int n = 0; n < 100000; ++n) x.push_back(p.sample(rng)[0]);
      const auto m = oracle::moments(x);
      CHECK(std::abs(m.var - 1.0) < 0.02);
      CHECK(oracle::within(m.mean, 0.0, m.se_mean));
    }
    SUBCASE("no interactions means uncorrelated diseases") {
      const auto g = oracle::path_graph(4);
      const JointPrecision p(g, Eigen::Vector2d(1, 1), Eigen::Vector2d(0.5, 0.5), InteractionCoeffs(2));
      double sxy = 0, sxx = 0, syy = 0;
      for (int n = 0; n < 100000; ++n) {
        const Eigen::VectorXd w = p.sample(rng);
        sxy += w[1] * w[5];
        sxx += w[1] * w[1];
        syy += w[5] * w[5];
      }
      CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.05);
    }
    SUBCASE("covariance matches the dense inverse") {
      const auto g = oracle::graph_from_edges(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {1, 3}});
      InteractionCoeffs c(2);
      c.set(1, 0, 0.8, -0.3);
      const JointPrecision p(g, Eigen::Vector2d(1.5, 0.7), Eigen::Vector2d(0.3, 0.8), c);
      const Eigen::MatrixXd s = oracle::joint_q(*g, {1.5, 0.7}, {0.3, 0.8}, [] {
                                  oracle::Eta e(2);
                                  e.e0[1][0] = 0.8;
                                  e.e1[1][0] = -0.3;
                                  return e;
                                }())
                                    .inverse();
      const int n = 200000;
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(10, 10), acc2 = Eigen::MatrixXd::Zero(10, 10);
      for (int r = 0; r < n; ++r) {
        const Eigen::VectorXd w = p.sample(rng);
        const Eigen::MatrixXd outer = w * w.transpose();
        acc += outer;
        acc2 += outer.cwiseProduct(outer);
      }
      acc /= n;
      acc2 /= n;
      int bad = 0;
      for (int a = 0; a < 10; ++a)
        for (int b = 0; b < 10; ++b) {
          const double se = std::sqrt((acc2(a, b) - acc(a, b) * acc(a, b)) / n);
          if (!oracle::within(acc(a, b), s(a, b), se, 4.0)) ++bad;
        }
      CHECK(bad == 0);
    }
  }

  TEST_CASE("shape errors") {
    const auto g = oracle::path_graph(3);
    CHECK_THROWS_AS(JointPrecision(g, Eigen::Vector2d(1, 1), Eigen::VectorXd::Constant(1, 0.5), InteractionCoeffs(2)),
                    ValidationError);
    CHECK_THROWS_AS(JointPrecision(g, Eigen::Vector2d(1, -1), Eigen::Vector2d(0.5, 0.5), InteractionCoeffs(2)),
                    ValidationError);
    const JointPrecision p(g, Eigen::Vector2d(1, 1), Eigen::Vector2d(0.5, 0.5), InteractionCoeffs(2));
    CHECK_THROWS_AS(p.matvec(Eigen::VectorXd::Ones(5)), ValidationError);
    CHECK_THROWS_AS(bivariate_closed_form(JointPrecision(g, Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(0.5, 0.5, 0.5),
                                                         InteractionCoeffs(3))),
                    ValidationError);
  }
}
