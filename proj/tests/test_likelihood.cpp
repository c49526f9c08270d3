#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "balkest/errors.hpp"
#include "balkest/likelihood.hpp"
#include "support/oracles.hpp"

using namespace balkest;

namespace {

struct Case {
  const char* name;
  PatienceModel patience;
  std::vector<double> theta;
};

std::vector<Case> families() {
  return {{"exponential", PatienceModel::exponential(), {0.5}},
          {"hyperexponential", PatienceModel::hyperexponential(), {0.8, 1.0, 0.1}},
          {"lomax", PatienceModel::lomax(), {1.0, 2.0}},
          {"geometric", PatienceModel::geometric(), {0.1}}};
}

SimulationConfig base_config(const Case& c, int s, DelayKind policy, std::size_t n) {
  SimulationConfig cfg;
  cfg.rate = RateModel({0.1});
  cfg.alpha = {50, 20, 1};
  cfg.patience = c.patience;
  cfg.theta = c.theta;
  cfg.service = ServiceModel::exponential(0.2);
  cfg.servers = s;
  cfg.policy = policy;
  cfg.total_arrivals = n;
  return cfg;
}

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
  auto out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Log-likelihood from first principles: points, plus Simpson integration of
// lambda(u) S(Delta(u)) between breakpoints where Delta jumps or kinks.
double oracle_loglik(const RateModel& rate, const PatienceModel& patience,
                     const std::vector<double>& mu, const std::vector<double>& arrivals,
                     const std::vector<double>& deltas, const std::function<double(double)>& delta_at,
                     std::vector<double> breaks, double horizon) {
  const std::vector<double> alpha(mu.begin(), mu.begin() + static_cast<long>(rate.arity()));
  const std::vector<double> theta(mu.begin() + static_cast<long>(rate.arity()), mu.end());
  double total = 0.0;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    total += std::log(rate.rate_at(alpha, arrivals[i])) + std::log(patience.survival(theta, deltas[i]));
  }
  const auto f = [&](double u) { return rate.rate_at(alpha, u) * patience.survival(theta, delta_at(u)); };
  return total - oracle::simpson_split(f, 0.0, horizon, std::move(breaks), 200);
}

// Breakpoints of the exact announcement: arrivals, zero crossings and, for
// step survivals, every integer level crossing.
std::vector<double> exact_breaks(const Observation& o, bool integers) {
  std::vector<double> br;
  for (std::size_t i = 0; i < o.size(); ++i) {
    br.push_back(o.arrivals[i]);
    const double top = o.waits[i] + o.jumps[i];
    const double next = i + 1 < o.size() ? o.arrivals[i + 1] : o.horizon;
    if (o.arrivals[i] + top < next) br.push_back(o.arrivals[i] + top);
    if (integers) {
      for (double k = std::floor(top); k > 0.0; k -= 1.0) {
        const double u = o.arrivals[i] + top - k;
        if (u < next) br.push_back(u);
      }
    }
  }
  return br;
}

double exact_delta(const Observation& o, double u) {
  // Last arrival strictly before u.
  auto it = std::lower_bound(o.arrivals.begin(), o.arrivals.end(), u);
  if (it == o.arrivals.begin()) return 0.0;
  const std::size_t i = static_cast<std::size_t>(it - o.arrivals.begin()) - 1;
  return std::max(0.0, o.waits[i] + o.jumps[i] - (u - o.arrivals[i]));
}

}  // namespace

TEST(Likelihood, ExactMatchesOracle) {
  for (const auto& c : families()) {
    const auto cfg = base_config(c, 2, DelayKind::exact_vwt, 400);
    const auto obs = observe(simulate(cfg, 31));
    const auto mu = concat(cfg.alpha, cfg.theta);
    const double ref = oracle_loglik(cfg.rate, c.patience, mu, obs.arrivals, obs.waits,
                                     [&](double u) { return exact_delta(obs, u); },
                                     exact_breaks(obs, c.patience.family() == PatienceFamily::geometric),
                                     obs.horizon);
    const double direct = loglik_exact(cfg.rate, c.patience, obs, mu);
    LikelihoodContext ctx(cfg.rate, c.patience, cfg.delay_policy(), obs);
    EXPECT_NEAR(direct, ref, 1e-7 * std::abs(ref)) << c.name;
    EXPECT_NEAR(ctx.loglik(mu), direct, 1e-10 * std::abs(direct)) << c.name;
  }
}

TEST(Likelihood, QueueLengthMatchesOracle) {
  for (auto kind : {DelayKind::expected_delay_proxy, DelayKind::completions_count}) {
    for (const auto& c : families()) {
      const auto cfg = base_config(c, 3, kind, 400);
      const auto obs = observe(simulate(cfg, 32));
      const auto policy = cfg.delay_policy();
      std::vector<double> deltas;
      std::vector<double> br;
      for (std::size_t i = 0; i < obs.size(); ++i) {
        const double a = obs.arrivals[i];
        const auto before = static_cast<std::size_t>(
            std::upper_bound(obs.departures.begin(), obs.departures.end(), a) - obs.departures.begin());
        deltas.push_back(policy.for_queue_length(i - before));
        br.push_back(a);
      }
      for (double d : obs.departures) br.push_back(d);
      const auto delta_at = [&](double u) {
        const auto in = std::lower_bound(obs.arrivals.begin(), obs.arrivals.end(), u) - obs.arrivals.begin();
        const auto out = std::lower_bound(obs.departures.begin(), obs.departures.end(), u) -
                         obs.departures.begin();
        return policy.for_queue_length(static_cast<std::size_t>(in - out));
      };
      const auto mu = concat(cfg.alpha, cfg.theta);
      const double ref = oracle_loglik(cfg.rate, c.patience, mu, obs.arrivals, deltas, delta_at, br, obs.horizon);
      const double direct = loglik_queue_length(cfg.rate, c.patience, policy, obs, mu);
      LikelihoodContext ctx(cfg.rate, c.patience, policy, obs);
      EXPECT_NEAR(direct, ref, 1e-7 * std::abs(ref)) << c.name << ' ' << to_string(kind);
      EXPECT_NEAR(ctx.loglik(mu), direct, 1e-10 * std::abs(direct)) << c.name;
    }
  }
}

TEST(Likelihood, MaxWaitMatchesOracle) {
  for (const auto& c : families()) {
    const auto cfg = base_config(c, 2, DelayKind::max_wait_so_far, 400);
    const auto log = simulate(cfg, 33);
    const auto obs = observe(log);
    std::vector<double> deltas, br;
    for (const auto& j : log.joins) {
      deltas.push_back(j.announced);
      br.push_back(j.time);
      br.push_back(j.start());
    }
    if (c.patience.family() == PatienceFamily::geometric) {
      for (const auto& j : log.joins) {
        for (double k = 1.0; k < j.wait; k += 1.0) br.push_back(j.time + k);
      }
    }
    const auto delta_at = [&](double u) {
      for (const auto& j : log.joins) {
        if (j.time >= u) break;
        if (j.start() > u) return u - j.time;  // first customer still waiting
      }
      return 0.0;
    };
    const auto mu = concat(cfg.alpha, cfg.theta);
    const double ref = oracle_loglik(cfg.rate, c.patience, mu, obs.arrivals, deltas, delta_at, br, obs.horizon);
    const double direct = loglik_path(cfg.rate, c.patience, announcement_path(obs, cfg.delay_policy()), mu);
    LikelihoodContext ctx(cfg.rate, c.patience, cfg.delay_policy(), obs);
    EXPECT_NEAR(direct, ref, 1e-7 * std::abs(ref)) << c.name;
    EXPECT_NEAR(ctx.loglik(mu), direct, 1e-10 * std::abs(direct)) << c.name;
  }
}

TEST(Likelihood, AnnouncementsMatchSimulator) {
  for (auto kind : {DelayKind::exact_vwt, DelayKind::expected_delay_proxy, DelayKind::completions_count,
                    DelayKind::max_wait_so_far}) {
    const auto cfg = base_config(families()[0], 2, kind, 3000);
    const auto log = simulate(cfg, 34);
    const auto path = announcement_path(observe(log), cfg.delay_policy());
    ASSERT_EQ(path.points.size(), log.joins.size());
    for (std::size_t i = 0; i < log.joins.size(); ++i) {
      ASSERT_NEAR(path.points[i].delta, log.joins[i].announced, 1e-9) << to_string(kind) << " i=" << i;
    }
    // Pieces tile [0, horizon].
    ASSERT_FALSE(path.pieces.empty());
    EXPECT_EQ(path.pieces.front().t_lo, 0.0);
    EXPECT_EQ(path.pieces.back().t_hi, path.horizon);
    for (std::size_t k = 1; k < path.pieces.size(); ++k) {
      ASSERT_EQ(path.pieces[k].t_lo, path.pieces[k - 1].t_hi);
    }
  }
}

TEST(Likelihood, CachedAgreesAtRandomParameters) {
  std::mt19937_64 rng(35);
  for (const auto& c : families()) {
    const auto cfg = base_config(c, 2, DelayKind::exact_vwt, 3000);
    const auto obs = observe(simulate(cfg, 36));
    LikelihoodContext ctx(cfg.rate, c.patience, cfg.delay_policy(), obs);
    const auto lo = c.patience.default_lower();
    const auto hi = c.patience.default_upper();
    for (int k = 0; k < 20; ++k) {
      std::vector<double> mu{std::uniform_real_distribution<double>(40, 80)(rng),
                             std::uniform_real_distribution<double>(0, 35)(rng),
                             std::uniform_real_distribution<double>(-6, 6)(rng)};
      for (std::size_t d = 0; d < lo.size(); ++d) {
        mu.push_back(std::uniform_real_distribution<double>(lo[d], hi[d])(rng));
      }
      const double a = ctx.loglik(mu);
      const double b = loglik_path(cfg.rate, c.patience, ctx.path(), mu);
      if (is_infeasible(b)) {
        EXPECT_TRUE(is_infeasible(a)) << c.name;
        continue;
      }
      EXPECT_NEAR(a, b, 1e-9 * std::abs(b)) << c.name;
    }
  }
}

TEST(Likelihood, QuadratureRefinementStable) {
  const auto c = families()[2];
  const auto cfg = base_config(c, 2, DelayKind::exact_vwt, 5000);
  const auto obs = observe(simulate(cfg, 37));
  const auto mu = concat(cfg.alpha, cfg.theta);
  QuadratureSettings fine;
  fine.rel_tol = 1e-13;
  fine.abs_tol = 1e-15;
  const double a = loglik_exact(cfg.rate, c.patience, obs, mu);
  const double b = loglik_exact(cfg.rate, c.patience, obs, mu, fine);
  EXPECT_LE(std::abs(a - b), 1e-8 * std::abs(a));
}

TEST(Likelihood, NoPatienceInformationWithoutDelays) {
  // With enough servers every announcement is zero, S(0) = 1 and l does not
  // depend on theta at all.
  auto c = families()[0];
  auto cfg = base_config(c, 200, DelayKind::exact_vwt, 3000);
  const auto obs = observe(simulate(cfg, 38));
  LikelihoodContext ctx(cfg.rate, c.patience, cfg.delay_policy(), obs);
  for (const auto& p : ctx.path().points) ASSERT_EQ(p.delta, 0.0);
  const auto g = score_at(ctx, concat(cfg.alpha, cfg.theta));
  EXPECT_EQ(g.back(), 0.0);
}

TEST(Likelihood, Infeasibility) {
  const auto c = families()[0];
  const auto cfg = base_config(c, 1, DelayKind::exact_vwt, 500);
  const auto obs = observe(simulate(cfg, 39));
  LikelihoodContext ctx(cfg.rate, c.patience, cfg.delay_policy(), obs);
  EXPECT_TRUE(is_infeasible(ctx.loglik(std::vector<double>{10, 20, 1, 0.5})));
  EXPECT_TRUE(is_infeasible(ctx.loglik(std::vector<double>{50, 20, 1, -0.5})));
  EXPECT_THROW(ctx.loglik(std::vector<double>{50, 20, 1}), ParameterError);
  EXPECT_THROW(loglik_queue_length(cfg.rate, c.patience, cfg.delay_policy(), obs,
                                   std::vector<double>{50, 20, 1, 0.5}),
               ParameterError);
}

TEST(Likelihood, IdentifiabilityAgainstLargePerturbation) {
  const auto c = families()[0];
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cfg = base_config(c, 4, DelayKind::exact_vwt, 5000);
    const auto obs = observe(simulate(cfg, 100 + seed));
    LikelihoodContext ctx(cfg.rate, c.patience, cfg.delay_policy(), obs);
    const double at_truth = ctx.loglik(std::vector<double>{50, 20, 1, 0.5});
    const double away = ctx.loglik(std::vector<double>{65, 10, 2.5, 1.5});
    wins += at_truth > away;
  }
  EXPECT_GE(wins, 19);
}

TEST(Decomposition, CycleSumEqualsPathLoglik) {
  SimulationConfig cfg;
  cfg.rate = RateModel({0.1});
  cfg.alpha = {2.0, 1.0, 1.0};
  cfg.patience = PatienceModel::exponential();
  cfg.theta = {0.5};
  cfg.service = ServiceModel::exponential(0.4);
  cfg.servers = 1;
  cfg.total_arrivals = 40000;
  const auto obs = observe(simulate(cfg, 40));
  const auto b = find_cycle_boundaries(obs, cfg.rate.period());
  const auto cycles = split_cycles(obs, b);
  ASSERT_GT(cycles.size(), 20u);
  const auto whole = truncate(obs, b.back());
  for (const auto& mu : {std::vector<double>{2.0, 1.0, 1.0, 0.5}, std::vector<double>{3.0, 0.5, 4.0, 2.0}}) {
    double sum = 0.0, sum_general = 0.0;
    for (const auto& cy : cycles) {
      sum += q_of_cycle(cfg.rate, cfg.patience, cy, mu);
      sum_general += q_of_cycle_general(cfg.rate, cfg.patience, cfg.delay_policy(), 1, cy, mu);
    }
    const double l = loglik_exact(cfg.rate, cfg.patience, whole, mu);
    EXPECT_LE(std::abs(sum - l), 1e-8 * (1.0 + std::abs(l)));
    EXPECT_LE(std::abs(sum_general - l), 1e-8 * (1.0 + std::abs(l)));
  }
}

TEST(Decomposition, EmptyCycle) {
  CycleData empty;
  empty.R = 2.0 * 20.0 * std::numbers::pi;
  const RateModel rate({0.1});
  const std::vector<double> mu{2.0, 1.0, 1.0, 0.5};
  EXPECT_NEAR(q_of_cycle(rate, PatienceModel::exponential(), empty, mu), -2.0 * empty.R, 1e-12);
  const DelayPolicy completions{DelayKind::completions_count, 0.4, 2};
  EXPECT_NEAR(q_of_cycle_general(rate, PatienceModel::exponential(), completions, 2, empty, mu),
              -2.0 * empty.R, 1e-12);
}

TEST(Decomposition, QueueLengthCycleSum) {
  SimulationConfig cfg;
  cfg.rate = RateModel({0.1});
  cfg.alpha = {2.0, 1.0, 1.0};
  cfg.patience = PatienceModel::geometric();
  cfg.theta = {0.3};
  cfg.service = ServiceModel::exponential(0.4);
  cfg.servers = 1;
  cfg.policy = DelayKind::completions_count;
  cfg.total_arrivals = 40000;
  const auto obs = observe(simulate(cfg, 41));
  const auto b = find_cycle_boundaries(obs, cfg.rate.period());
  const auto cycles = split_cycles(obs, b);
  ASSERT_GT(cycles.size(), 20u);
  const std::vector<double> mu{2.0, 1.0, 1.0, 0.3};
  double sum = 0.0;
  for (const auto& cy : cycles) sum += q_of_cycle_general(cfg.rate, cfg.patience, cfg.delay_policy(), 1, cy, mu);
  const double l = loglik_queue_length(cfg.rate, cfg.patience, cfg.delay_policy(), truncate(obs, b.back()), mu);
  EXPECT_LE(std::abs(sum - l), 1e-8 * (1.0 + std::abs(l)));
}
