#include <doctest.h>

#include "fixtures.hpp"
#include "mdagar/errors.hpp"
#include "mdagar/evidence.hpp"
#include "mdagar/linalg.hpp"
#include "oracles.hpp"

using namespace mdagar;
using doctest::Approx;

namespace {

// y ~ N(theta, 1), theta ~ N(0, 1), y = 0: posterior N(0, 1/2).
double conjugate_target(const Eigen::VectorXd& t) {
  return normal_log_density(0.0, t[0], 1.0) + normal_log_density(t[0], 0.0, 1.0);
}

Eigen::MatrixXd posterior_draws(std::size_t n, Rng& rng) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < d.rows(); ++i) d(i, 0) = std::sqrt(0.5) * standard_normal(rng);
  return d;
}

}  // namespace

TEST_SUITE("evidence") {
  TEST_CASE("conjugate scalar model") {
    Rng rng(1);
    const Eigen::MatrixXd draws = posterior_draws(4000, rng);
    const ProposalFit fit = fit_proposal(draws, 0.5);
    CHECK(fit.n_fit == 2000);
    CHECK(fit.held_out.rows() == 2000);
    CHECK(fit.proposal.mean()[0] == Approx(draws.topRows(2000).mean()).epsilon(1e-12));
    const BridgeEstimate est = bridge_sampling(conjugate_target, fit.held_out, fit.proposal, 2000, 1e-10, 1000, rng);
    CHECK(est.converged);
    CHECK(std::abs(est.log_ml + 0.5 * std::log(4 * M_PI)) < 0.02);
    CHECK(est.mc_se > 0);
    CHECK(est.trace.size() == est.n_iterations);
  }

  TEST_CASE("exact proposal converges at once") {
    Rng rng(2);
    const GaussianProposal exact(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 0.5));
    const BridgeEstimate est = bridge_sampling(conjugate_target, posterior_draws(1000, rng), exact, 1000, 1e-10, 1000, rng);
    CHECK(est.n_iterations <= 2);
    CHECK(est.log_ml == Approx(-0.5 * std::log(4 * M_PI)).epsilon(1e-12));
  }

  TEST_CASE("infinite tolerance stops after one step") {
    Rng rng(3);
    const ProposalFit fit = fit_proposal(posterior_draws(400, rng));
    const BridgeEstimate est = bridge_sampling(conjugate_target, fit.held_out, fit.proposal, 200, INFINITY, 1000, rng);
    CHECK(est.n_iterations == 1);
    CHECK(est.converged);
  }

  TEST_CASE("proposal fitting errors") {
    CHECK_THROWS_AS(fit_proposal(Eigen::MatrixXd::Ones(50, 2)), NumericalError);
    CHECK_THROWS_AS(fit_proposal(Eigen::MatrixXd::Random(5, 3)), ValidationError);
  }

  TEST_CASE("non-finite ratios name the pool") {
    Rng rng(4);
    const ProposalFit fit = fit_proposal(posterior_draws(400, rng));
    const LogTarget bad = [](const Eigen::VectorXd& t) { return t[0] > 0 ? std::nan("") : conjugate_target(t); };
    try {
      bridge_sampling(bad, fit.held_out, fit.proposal, 200, 1e-10, 100, rng);
      FAIL("expected an error");
    } catch (const NumericalError& e) {
      const std::string msg = e.what();
      CHECK((msg.find("posterior") != std::string::npos || msg.find("proposal") != std::string::npos));
    }
  }

  TEST_CASE("split fraction barely moves the estimate") {
    std::vector<double> est;
    for (double split : {0.3, 0.5, 0.7}) {
      std::vector<double> per_seed;
      for (int seed = 0; seed < 20; ++seed) {
        Rng rng(static_cast<std::uint64_t>(100 + seed));
        const ProposalFit fit = fit_proposal(posterior_draws(4000, rng), split);
        per_seed.push_back(bridge_sampling(conjugate_target, fit.held_out, fit.proposal, 2000, 1e-10, 1000, rng).log_ml);
      }
      std::nth_element(per_seed.begin(), per_seed.begin() + 10, per_seed.end());
      est.push_back(per_seed[10]);
    }
    CHECK(std::abs(est[0] - est[1]) < 0.02);
    CHECK(std::abs(est[2] - est[1]) < 0.02);
  }

  TEST_CASE("theta transform") {
    std::mt19937_64 rng(5);
    const auto g = oracle::path_graph(4);
    auto d = fixture::random_dataset(*g, 3, 2, rng);
    const ModelSpec spec(g, d, PriorSpec{}, {1, 2, 0});
    const ThetaTransform tr = ThetaTransform::for_spec(spec);
    CHECK(tr.dim() == 6 + 9 + 6);
    const ParamState s = fixture::random_state(*d, rng);
    const UnconstrainedSample u = tr.to_unconstrained(s);
    const ParamState back = tr.to_constrained(u.values);
    CHECK(back.w.size() == 0);
    for (int i = 0; i < 3; ++i) {
      CHECK((back.beta[i] - s.beta[i]).norm() < 1e-12);
      CHECK(back.sigma2[i] == Approx(s.sigma2[i]).epsilon(1e-12));
      CHECK(back.tau[i] == Approx(s.tau[i]).epsilon(1e-12));
      CHECK(back.rho[i] == Approx(s.rho[i]).epsilon(1e-12));
    }
    CHECK(back.eta.block(2) == s.eta.block(2));
    double jac = 0;
    for (int i = 0; i < 3; ++i) jac += std::log(s.sigma2[i]) + std::log(s.tau[i]) + std::log(s.rho[i] * (1 - s.rho[i]));
    CHECK(u.log_jacobian == Approx(jac).epsilon(1e-12));
    CHECK(tr.log_jacobian(u.values) == Approx(jac).epsilon(1e-12));
  }

  TEST_CASE("posterior model probabilities") {
    const std::vector<double> equal(6, -10.0);
    for (double p : posterior_model_probs(equal).posterior) CHECK(p == Approx(1.0 / 6));
    const std::vector<double> two = {std::log(3.0), 0.0};
    const ModelPosterior mp = posterior_model_probs(two);
    CHECK(mp.posterior[0] == Approx(0.75).epsilon(1e-12));
    CHECK(mp.posterior[1] == Approx(0.25).epsilon(1e-12));
    const std::vector<double> one = {-1e6};
    CHECK(posterior_model_probs(one).posterior[0] == 1.0);
    CHECK_THROWS_AS(posterior_model_probs(std::vector<double>{}), ValidationError);

    const std::vector<double> lm = {-340.2, -351.7, -339.9, -400.0};
    std::vector<double> shifted;
    for (double v : lm) shifted.push_back(v + 1234.5);
    const auto a = posterior_model_probs(lm), b = posterior_model_probs(shifted);
    double sum = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(a.posterior[i] - b.posterior[i]) < 1e-12);
      sum += a.posterior[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);

    const std::vector<double> prior = {0.5, 0.5};
    const std::vector<double> bad_prior = {0.7, 0.5};
    CHECK(posterior_model_probs(two, prior).posterior[0] == Approx(0.75));
    CHECK_THROWS_AS(posterior_model_probs(two, bad_prior), ValidationError);
    const std::vector<double> failed = {-INFINITY, -3.0};
    CHECK(posterior_model_probs(failed).posterior[0] == 0.0);
  }

  TEST_CASE("model averaging") {
    const Eigen::VectorXd v = Eigen::Vector3d(1, 2, 3);
    const std::vector<double> p3 = {0.2, 0.3, 0.5};
    CHECK((bma_expectation({v, v, v}, p3) - v).norm() < 1e-15);
    const std::vector<double> first = {1.0, 0.0};
    CHECK(bma_expectation({v, Eigen::Vector3d(9, 9, 9)}, first) == v);
    const std::vector<double> q = {0.25, 0.75};
    CHECK(bma_expectation({Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)}, q)[0] == Approx(0.75));
    CHECK_THROWS_AS(bma_expectation({v, Eigen::VectorXd::Ones(2)}, q), ValidationError);
  }

  TEST_CASE("orderings are lexicographic") {
    const auto two = enumerate_orderings(2);
    CHECK(two == std::vector<std::vector<std::size_t>>{{0, 1}, {1, 0}});
    const auto three = enumerate_orderings(3);
    CHECK(three.size() == 6);
    CHECK(three[1] == std::vector<std::size_t>{0, 2, 1});
    CHECK(enumerate_orderings(4).size() == 24);
    CHECK_THROWS_AS(enumerate_orderings(7), ValidationError);
    CHECK_THROWS_AS(enumerate_orderings(0), ValidationError);
  }

  TEST_CASE("aligned posterior means ignore the hierarchy order") {
    std::mt19937_64 rng(6);
    const auto g = std::make_shared<const ArealGraph>(grid_graph(3, 3));
    auto d = fixture::random_dataset(*g, 2, 2, rng);
    ChainConfig cfg;
    cfg.n_iter = 400;
    cfg.n_burnin = 100;
    const PosteriorSamples a = run_chain(ModelSpec(g, d, PriorSpec{}, {0, 1}), cfg);
    const PosteriorSamples b = run_chain(ModelSpec(g, d, PriorSpec{}, {1, 0}), cfg);
    const Eigen::VectorXd ma = aligned_posterior_mean(a), mb = aligned_posterior_mean(b);
    CHECK(ma.size() == 4 + 18);
    CHECK(ma[0] == Approx(a.column("beta[1][0]").mean()));
    CHECK(mb[0] == Approx(b.column("beta[1][0]").mean()));
    CHECK(mb[4 + 9] == Approx(b.column("w[2][1]").mean()));
  }
}
