#include <doctest.h>

#include <cmath>

#include "prsim/error.hpp"
#include "prsim/phy.hpp"

using namespace prsim;

namespace {

ChannelModel clean() {
  ChannelModel m;
  m.shadow_sigma_db = 0.0;
  m.interference_loss_prob = 0.0;
  m.rss_floor_dbm = -200.0;
  return m;
}

}  // namespace

TEST_CASE("path loss at the reference distance and a decade out") {
  const auto m = clean();
  Rng rng(1);
  CHECK(rss_at(m, m.d0_m, rng) == -25);
  CHECK(rss_at(m, 10.0 * m.d0_m, rng) == -50);
  CHECK(m.mean_rss_dbm(0.1) == m.mean_rss_dbm(m.d0_m));  // clamped to d0
  CHECK(m.mean_rss_dbm(1.0) - m.mean_rss_dbm(10.0) == doctest::Approx(25.0));
}

TEST_CASE("mean rss strictly decreases with distance") {
  const auto m = clean();
  double prev = m.mean_rss_dbm(1.0);
  for (double d = 1.5; d <= 100.0; d += 0.5) {
    const double v = m.mean_rss_dbm(d);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("default model covers the indoor rss range") {
  const auto m = clean();
  Rng rng(1);
  for (double d = 1.0; d <= 40.0; d += 0.25) {
    const auto v = rss_at(m, d, rng);
    REQUIRE(v.has_value());
    CHECK(*v <= -25);
    CHECK(*v >= -80);
  }
  ChannelModel shadowed;
  shadowed.interference_loss_prob = 0.0;
  int lo = 0;
  int hi = -200;
  for (int i = 0; i < 20000; ++i) {
    const auto v = rss_at(shadowed, 1.0 + 39.0 * rng.uniform01(), rng);
    if (!v) continue;
    lo = std::min(lo, *v);
    hi = std::max(hi, *v);
  }
  CHECK(lo <= -70);
  CHECK(hi >= -31);
}

TEST_CASE("shadowing is zero-mean") {
  ChannelModel m = clean();
  m.shadow_sigma_db = 4.0;
  Rng rng(12);
  double sum = 0.0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) sum += *rss_at(m, 10.0, rng);
  CHECK(std::abs(sum / n - m.mean_rss_dbm(10.0)) < 0.1);
}

TEST_CASE("loss and capture floor") {
  ChannelModel m = clean();
  m.interference_loss_prob = 1.0;
  Rng rng(1);
  CHECK_FALSE(rss_at(m, 1.0, rng).has_value());
  m = clean();
  m.rss_floor_dbm = -40.0;
  CHECK_FALSE(rss_at(m, 100.0, rng).has_value());
  CHECK(rss_at(m, 1.0, rng).has_value());

  m = ChannelModel{};
  m.interference_loss_prob = 0.02;
  m.shadow_sigma_db = 0.0;
  int lost = 0;
  for (int i = 0; i < 100'000; ++i) lost += !rss_at(m, 2.0, rng).has_value();
  CHECK(std::abs(lost / 100'000.0 - 0.02) < 0.003);
}

TEST_CASE("channel validation") {
  ChannelModel m;
  CHECK_NOTHROW(m.validate());
  m.d0_m = 0.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = ChannelModel{};
  m.exponent = -1.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = ChannelModel{};
  m.interference_loss_prob = 1.5;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = ChannelModel{};
  m.shadow_sigma_db = -0.1;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("fading terms") {
  Rng rng(4);
  CHECK(fading_db(Fading{}, rng) == 0.0);
  // Rayleigh power is unit-mean exponential; E[10 log10 X] = -10 * gamma / ln 10.
  double sum = 0.0;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) sum += fading_db(RayleighFading{}, rng);
  CHECK(sum / n == doctest::Approx(-2.5068).epsilon(0.02));
  // Strong line of sight: Rician with a large K concentrates near 0 dB.
  double sq = 0.0;
  for (int i = 0; i < 20'000; ++i) {
    const double v = fading_db(RicianFading{30.0}, rng);
    sq += v * v;
  }
  CHECK(std::sqrt(sq / 20'000) < 0.5);
}

TEST_CASE("static shadowing stays put") {
  ChannelModel m;
  ShadowingProcess p;
  Rng rng(3);
  const double a = p.sample(m, {5, 5}, rng);
  for (int i = 0; i < 10; ++i) CHECK(p.sample(m, {5, 5}, rng) == a);
}

TEST_CASE("static mobility") {
  const MobilityModel s = StaticMobility{{3.0, -4.0}};
  CHECK(position_at(s, 1, 9, 0.0) == Position{3.0, -4.0});
  CHECK(position_at(s, 1, 9, 1e6) == Position{3.0, -4.0});
  CHECK(distance({0, 0}, {3, -4}) == 5.0);
}

TEST_CASE("random waypoint: inside the area, pure in (seed, id, t)") {
  RandomWaypointMobility rw;
  rw.area = {-10, -5, 10, 5};
  rw.speed_min_mps = 0.8;
  rw.speed_max_mps = 1.6;
  rw.pause_s = DiscreteDistribution::parse("0:0.5 / 30:0.5");
  const MobilityModel m = rw;
  CHECK_NOTHROW(validate(m));

  Trajectory tr(m, 7, 3);
  Position prev = tr.at(0.0);
  for (double t = 0.5; t < 3600.0; t += 0.5) {
    const Position p = tr.at(t);
    CHECK(rw.area.contains(p));
    CHECK(distance(p, prev) <= rw.speed_max_mps * 0.5 + 1e-9);
    prev = p;
  }
  for (double t : {0.0, 17.3, 900.0, 3599.9}) {
    CHECK(position_at(m, 7, 3, t) == position_at(m, 7, 3, t));
    Trajectory fresh(m, 7, 3);
    CHECK(fresh.at(t) == position_at(m, 7, 3, t));
  }
  CHECK(position_at(m, 7, 3, 500.0) != position_at(m, 7, 4, 500.0));

  RandomWaypointMobility bad = rw;
  bad.speed_min_mps = 2.0;
  bad.speed_max_mps = 1.0;
  CHECK_THROWS_AS(validate(MobilityModel{bad}), ConfigError);
}
