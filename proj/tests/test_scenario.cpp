#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "risnoma/scenario.hpp"

using namespace risnoma;

TEST_CASE("path gain at the reference distance") {
  CHECK(path_gain(1.0, 2.0, -30.0) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(path_gain(1.0, 1.1, -30.0) == doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("path gain decays with the exponent") {
  // 10 m at exponent 2: 1e-3 * 1e-2
  CHECK(path_gain(10.0, 2.0, -30.0) == doctest::Approx(1e-5).epsilon(1e-12));
}

TEST_CASE("path gain rejects non-positive distance") {
  CHECK_THROWS_AS(path_gain(0.0, 2.0, -30.0), std::domain_error);
}

TEST_CASE("preset carries the standard link exponents") {
  SystemConfig c = SystemConfig::desk_preset();
  CHECK(c.pathloss_exponents.bs_ris == 1.1);
  CHECK(c.pathloss_exponents.ris_target == 1.1);
  CHECK(c.pathloss_exponents.ris_user == 1.2);
  CHECK(c.pathloss_exponents.bs_target == 1.2);
  CHECK(c.pathloss_exponents.bs_user == 1.7);
  CHECK(c.pathloss_ref_db == -30.0);
}

TEST_CASE("rician vector reduces to the LoS part for huge kappa") {
  Rng rng(7);
  CVector los = ula_steering(8, 0.3);
  CVector out = rician_vector(8, 1e9, los, 2.0, rng);
  CVector want = std::sqrt(2.0) * los;
  CHECK((out - want).norm() / want.norm() < 1e-4);
}

TEST_CASE("rician vector with kappa zero has per-entry variance equal to gain") {
  Rng rng(11);
  const int draws = 100000;
  const double gain = 0.5;
  CVector los = ula_steering(1, 0.0);
  double sum2 = 0.0;
  for (int i = 0; i < draws; ++i) sum2 += std::norm(rician_vector(1, 0.0, los, gain, rng)(0));
  double mean2 = sum2 / draws;
  // |x|^2 is exponential with mean `gain`; stderr of the mean is gain/sqrt(n)
  double sigma = gain / std::sqrt(static_cast<double>(draws));
  CHECK(std::abs(mean2 - gain) < 3.0 * sigma);
}

TEST_CASE("3 dB rician factor puts two thirds of the power in the LoS part") {
  double kappa = std::pow(10.0, 0.3);
  CHECK(kappa / (1.0 + kappa) == doctest::Approx(0.666).epsilon(1e-3));
  // generator mean matches sqrt(gain * k/(1+k)) * los over many draws
  Rng rng(13);
  const int draws = 200000;
  cplx acc = 0.0;
  CVector los = ula_steering(1, 0.0);
  for (int i = 0; i < draws; ++i) acc += rician_vector(1, kappa, los, 1.0, rng)(0);
  cplx mean = acc / static_cast<double>(draws);
  double want = std::sqrt(kappa / (1.0 + kappa));
  double sigma = std::sqrt(1.0 / (1.0 + kappa) / draws);
  CHECK(std::abs(mean - cplx(want, 0.0)) < 4.0 * sigma);
}

TEST_CASE("no-RIS config yields empty reflected channels") {
  SystemConfig c = SystemConfig::desk_preset();
  c.N = 0;
  Rng rng(3);
  ChannelSet ch = generate_channels(c, rng);
  CHECK(ch.G_mat.rows() == 0);
  for (const auto& h : ch.h_r) CHECK(h.size() == 0);
  for (const auto& g : ch.g_r) CHECK(g.size() == 0);
  for (const auto& h : ch.h_d) CHECK(h.size() == c.M);
}

TEST_CASE("channel generation is bitwise reproducible under a fixed seed") {
  SystemConfig c = SystemConfig::desk_preset();
  Rng r1(42), r2(42);
  ChannelSet a = generate_channels(c, r1);
  ChannelSet b = generate_channels(c, r2);
  CHECK(a.G_mat == b.G_mat);
  for (int k = 0; k < c.K; ++k) {
    CHECK(a.h_d[k] == b.h_d[k]);
    CHECK(a.h_r[k] == b.h_r[k]);
  }
  for (int l = 0; l < c.L; ++l) {
    CHECK(a.g_d[l] == b.g_d[l]);
    CHECK(a.g_r[l] == b.g_r[l]);
  }
}

TEST_CASE("direct-link power matches the path loss model on average") {
  SystemConfig c = SystemConfig::desk_preset();
  c.K = 1;
  c.noise_user_dbm.assign(1, -90.0);
  c.sinr_threshold_db.assign(1, 5.0);
  c.geometry.users = {c.geometry.users[0]};
  double dx = c.geometry.users[0].x, dy = c.geometry.users[0].y;
  double gain = path_gain(std::hypot(dx, dy), c.pathloss_exponents.bs_user, c.pathloss_ref_db);
  Rng rng(5);
  const int draws = 10000;
  double acc = 0.0;
  for (int i = 0; i < draws; ++i) {
    ChannelSet ch = generate_channels(c, rng);
    acc += ch.h_d[0].squaredNorm() / c.M;
  }
  double mean = acc / draws;
  // per-entry |h|^2 has variance <= gain^2 (Rician); generous 3-sigma band
  double sigma = gain / std::sqrt(static_cast<double>(draws * c.M));
  CHECK(std::abs(mean - gain) < 3.0 * sigma);
}

TEST_CASE("all generated channel gains are finite and positive") {
  SystemConfig c = SystemConfig::desk_preset();
  Rng rng(17);
  ChannelSet ch = generate_channels(c, rng);
  CHECK(ch.G_mat.allFinite());
  for (const auto& h : ch.h_d) {
    CHECK(h.allFinite());
    CHECK(h.squaredNorm() > 0.0);
  }
  for (const auto& g : ch.g_d) CHECK(g.squaredNorm() > 0.0);
}

TEST_CASE("single user ordering is the identity") {
  SystemConfig c = SystemConfig::desk_preset();
  c.K = 1;
  c.noise_user_dbm.assign(1, -90.0);
  c.sinr_threshold_db.assign(1, 5.0);
  c.geometry.users = {c.geometry.users[0]};
  Rng rng(19);
  ChannelSet ch = generate_channels(c, rng);
  CVector v = CVector::Ones(c.N);
  CHECK(order_users(ch, v) == std::vector<int>{0});
}

TEST_CASE("scaling a user's channels moves it to the front") {
  SystemConfig c = SystemConfig::desk_preset();
  Rng rng(23);
  ChannelSet ch = generate_channels(c, rng);
  CVector v = CVector::Ones(c.N);
  auto base = order_users(ch, v);
  int weakest = base.back();
  ch.h_d[weakest] *= 50.0;
  ch.h_r[weakest] *= 50.0;
  auto boosted = order_users(ch, v);
  CHECK(boosted.front() == weakest);
}

TEST_CASE("ordering matches a brute-force sort of the aggregated norms") {
  SystemConfig c = SystemConfig::desk_preset();
  Rng rng(29);
  ChannelSet ch = generate_channels(c, rng);
  Rng prng(31);
  CVector v(c.N);
  for (int n = 0; n < c.N; ++n) v(n) = std::polar(1.0, 2.0 * M_PI * prng.uniform());
  auto order = order_users(ch, v);
  std::vector<double> gains(c.K);
  for (int k = 0; k < c.K; ++k) {
    CRowVector row = ch.h_d[k].adjoint() + ch.h_r[k].adjoint() * v.asDiagonal() * ch.G_mat;
    gains[k] = row.squaredNorm();
  }
  for (int i = 0; i + 1 < c.K; ++i) CHECK(gains[order[i]] >= gains[order[i + 1]]);
  // the ordered chain of norms is reproducible by re-evaluation
  ChannelSet reordered = ch;
  apply_user_order(reordered, order);
  for (int i = 0; i + 1 < c.K; ++i) {
    CRowVector a = reordered.h_d[i].adjoint() + reordered.h_r[i].adjoint() * v.asDiagonal() * reordered.G_mat;
    CRowVector b = reordered.h_d[i + 1].adjoint() + reordered.h_r[i + 1].adjoint() * v.asDiagonal() * reordered.G_mat;
    CHECK(a.squaredNorm() >= b.squaredNorm());
  }
}

TEST_CASE("config json round trip preserves values") {
  SystemConfig c = SystemConfig::desk_preset();
  c.seed = 77;
  c.p_max_dbm = 37.5;
  SystemConfig back = SystemConfig::from_json(c.to_json());
  CHECK(back.seed == 77);
  CHECK(back.p_max_dbm == 37.5);
  CHECK(back.N == c.N);
  CHECK(back.geometry.users.size() == c.geometry.users.size());
  CHECK(back.noise_user_dbm == c.noise_user_dbm);
}

TEST_CASE("config conversions between dB and linear") {
  SystemConfig c = SystemConfig::desk_preset();
  CHECK(c.p_max_w() == doctest::Approx(10.0).epsilon(1e-12));        // 40 dBm
  CHECK(c.noise_user_w(0) == doctest::Approx(1e-12).epsilon(1e-12));  // -90 dBm
  CHECK(c.gamma_lin(0) == doctest::Approx(10.0).epsilon(1e-12));      // 10 dB
  CHECK(c.rth_lin(0) == doctest::Approx(3.16227766).epsilon(1e-8));   // 5 dB
}

TEST_CASE("config rejects malformed documents") {
  CHECK_THROWS_AS(SystemConfig::from_json("{\"bogus_key\": 1}"), std::invalid_argument);
  CHECK_THROWS_AS(SystemConfig::from_json("{\"M\": 0}"), std::invalid_argument);
}
