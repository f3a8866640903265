#include <doctest.h>

#include <set>

#include "mogp/error.hpp"
#include "mogp/params.hpp"
#include "support.hpp"

using namespace mogp;

namespace {

// Free parameters per component under each variant's ties, counted by hand.
std::size_t expected_count(Variant v, std::size_t Q, std::size_t M, std::size_t N) {
  std::size_t per = 0;
  switch (v) {
    case Variant::mosm: per = M + M * N + M * N + M * N + M; break;
    case Variant::csm: per = M + N + N + M; break;
    case Variant::smlmc:
    case Variant::smigp: per = M + N + N; break;
  }
  return Q * per + M;
}

}  // namespace

TEST_SUITE("params") {
  TEST_CASE("CSM with three channels and two components has 19 parameters") {
    ParamLayout L(Variant::csm, 2, 3, 1);
    CHECK(L.size() == 19);
  }

  TEST_CASE("parameter counts follow the ties") {
    for (Variant v : {Variant::mosm, Variant::csm, Variant::smlmc, Variant::smigp})
      for (std::size_t Q = 1; Q <= 3; ++Q)
        for (std::size_t M = 1; M <= 4; ++M)
          for (std::size_t N = 1; N <= 2; ++N) {
            ParamLayout L(v, Q, M, N);
            CHECK(L.size() == expected_count(v, Q, M, N));
            CHECK(L.kinds().size() == L.size());
          }
  }

  TEST_CASE("layout indices are distinct and cover the vector") {
    for (Variant v : {Variant::mosm, Variant::csm, Variant::smlmc, Variant::smigp}) {
      ParamLayout L(v, 2, 3, 2);
      std::set<std::size_t> seen;
      for (std::size_t q = 0; q < 2; ++q) {
        for (std::size_t i = 0; i < 3; ++i) {
          seen.insert(L.weight(q, i));
          for (std::size_t d = 0; d < 2; ++d) {
            seen.insert(L.mean(q, i, d));
            seen.insert(L.scale(q, i, d));
            if (L.delay(q, i, d) != ParamLayout::npos) seen.insert(L.delay(q, i, d));
          }
          if (L.phase(q, i) != ParamLayout::npos) seen.insert(L.phase(q, i));
        }
      }
      for (std::size_t i = 0; i < 3; ++i) seen.insert(L.noise(i));
      CHECK(seen.size() == L.size());
      CHECK(*seen.rbegin() == L.size() - 1);
      CHECK((L.delay(0, 0, 0) != ParamLayout::npos) == has_delay(v));
      CHECK((L.phase(0, 0) != ParamLayout::npos) == has_phase(v));
    }
  }

  TEST_CASE("round trip on random specs") {
    Rng rng(8);
    for (Variant v : {Variant::mosm, Variant::csm, Variant::smlmc, Variant::smigp})
      for (int rep = 0; rep < 20; ++rep) {
        auto spec = test::random_spec(v, 1 + rng.below(4), 1 + rng.below(3), 1 + rng.below(2), rng);
        Eigen::VectorXd noise = Eigen::VectorXd::Random(static_cast<Eigen::Index>(spec.M())).cwiseAbs().array() + 0.01;
        auto x = to_unconstrained(spec, noise);
        CHECK(static_cast<std::size_t>(x.size()) == ParamLayout::of(spec).size());
        auto [back, nb] = from_unconstrained(ParamLayout::of(spec), x);
        CHECK(back.variant() == v);
        CHECK((nb - noise).cwiseAbs().maxCoeff() <= 1e-12);
        for (std::size_t q = 0; q < spec.Q(); ++q) {
          const auto& a = spec.component(q);
          const auto& b = back.component(q);
          CHECK((a.weight - b.weight).cwiseAbs().maxCoeff() <= 1e-12);
          CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() <= 1e-12);
          CHECK((a.scale - b.scale).cwiseAbs().maxCoeff() <= 1e-12);
          CHECK((a.delay - b.delay).cwiseAbs().maxCoeff() <= 1e-12);
          CHECK((a.phase - b.phase).cwiseAbs().maxCoeff() <= 1e-12);
        }
      }
  }

  TEST_CASE("zero vector maps positive parameters to one") {
    for (Variant v : {Variant::mosm, Variant::csm, Variant::smlmc, Variant::smigp}) {
      ParamLayout L(v, 2, 3, 1);
      auto [spec, noise] = from_unconstrained(L, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L.size())));
      CHECK(noise.isOnes());
      for (const auto& c : spec.components()) {
        CHECK(c.scale.isOnes());
        if (signed_weights(v))
          CHECK(c.weight.isZero());
        else
          CHECK(c.weight.isOnes());
        CHECK(c.mean.isZero());
        CHECK(c.delay.isZero());
        CHECK(c.phase.isZero());
      }
    }
  }

  TEST_CASE("non-finite entries are rejected") {
    ParamLayout L(Variant::mosm, 1, 2, 1);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(L.size()));
    x(3) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(from_unconstrained(L, x), InvalidParameter);
    x(3) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(from_unconstrained(L, x), InvalidParameter);
    CHECK_THROWS_AS(from_unconstrained(L, Eigen::VectorXd::Zero(2)), InvalidParameter);
  }
}
