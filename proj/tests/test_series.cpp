#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "mogp/csv.hpp"
#include "mogp/error.hpp"
#include "mogp/rng.hpp"
#include "mogp/series.hpp"
#include "support.hpp"

using namespace mogp;

namespace {

Channel make_channel(std::string name, std::vector<double> t, std::vector<double> y) {
  Channel ch;
  ch.name = std::move(name);
  for (std::size_t k = 0; k < t.size(); ++k) ch.observations.push_back({t[k], y[k]});
  return ch;
}

std::vector<double> values(const Channel& ch) {
  std::vector<double> v;
  for (const auto& o : ch.observations) v.push_back(o.y);
  return v;
}

void check_partition(const TimeSeriesSet& ts) {
  for (std::size_t c = 0; c < ts.num_channels(); ++c) {
    std::set<std::size_t> train(ts.train_mask[c].begin(), ts.train_mask[c].end());
    std::set<std::size_t> test(ts.test_mask[c].begin(), ts.test_mask[c].end());
    CHECK(train.size() == ts.train_mask[c].size());
    CHECK(train.size() + test.size() == ts.channels[c].size());
    for (auto k : test) CHECK(train.count(k) == 0);
    CHECK(std::is_sorted(ts.train_mask[c].begin(), ts.train_mask[c].end()));
    CHECK(std::is_sorted(ts.test_mask[c].begin(), ts.test_mask[c].end()));
  }
}

}  // namespace

TEST_SUITE("series") {
  TEST_CASE("wide csv: consecutive days give unit offsets") {
    auto ts = parse_csv("date,gold,oil\n2017-01-02,1.5,2.5\n2017-01-03,1.6,2.4\n", CsvSchema::wide);
    REQUIRE(ts.num_channels() == 2);
    for (const auto& ch : ts.channels) {
      REQUIRE(ch.size() == 2);
      CHECK(ch.observations[0].t == 0.0);
      CHECK(ch.observations[1].t == 1.0);
    }
    CHECK(ts.channels[1].observations[1].y == 2.4);
    CHECK(ts.origin == "2017-01-02");
    CHECK(ts.num_train() == 4);
    CHECK(ts.num_test() == 0);
  }

  TEST_CASE("long csv: weekly dates give offsets of 7") {
    auto ts = parse_csv("channel,date,value\ngold,2017-01-09,2\ngold,2017-01-02,1\n", CsvSchema::long_form);
    REQUIRE(ts.num_channels() == 1);
    CHECK(ts.channels[0].name == "gold");
    REQUIRE(ts.channels[0].size() == 2);
    CHECK(ts.channels[0].observations[0].t == 0.0);
    CHECK(ts.channels[0].observations[1].t == 7.0);
    CHECK(ts.channels[0].observations[0].y == 1.0);
  }

  TEST_CASE("offsets are measured from the earliest date in the file") {
    auto ts = parse_csv("channel,date,value\na,2017-01-05,1\nb,2017-01-02,1\nb,2017-01-03,2\n", CsvSchema::long_form);
    CHECK(ts.channels[ts.channel_index("a")].observations[0].t == 3.0);
    CHECK(ts.channels[ts.channel_index("b")].observations[0].t == 0.0);
  }

  TEST_CASE("csv errors name the row") {
    auto message = [](const std::string& text, CsvSchema s) {
      try {
        parse_csv(text, s);
      } catch (const DataError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    auto dup = message("channel,date,value\ngold,2017-01-02,1\ngold,2017-01-02,2\n", CsvSchema::long_form);
    CHECK(dup.find("duplicate") != std::string::npos);
    CHECK(dup.find("gold") != std::string::npos);
    CHECK(dup.find("row 3") != std::string::npos);

    auto bad_date = message("date,a\n2017-13-02,1\n", CsvSchema::wide);
    CHECK(bad_date.find("row 2") != std::string::npos);
    CHECK(bad_date.find("date") != std::string::npos);
    CHECK_FALSE(message("date,a\n2017/01/02,1\n", CsvSchema::wide).empty());
    CHECK_FALSE(message("date,a\n2017-02-30,1\n", CsvSchema::wide).empty());

    auto bad_value = message("date,a\n2017-01-02,abc\n", CsvSchema::wide);
    CHECK(bad_value.find("non-numeric") != std::string::npos);
    CHECK(bad_value.find("row 2") != std::string::npos);

    CHECK_THROWS_AS(parse_csv("", CsvSchema::wide), DataError);
    CHECK_THROWS_AS(parse_csv("date,a,a\n2017-01-02,1,2\n", CsvSchema::wide), DataError);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", CsvSchema::wide), DataError);
    CHECK_THROWS_AS(parse_schema("tall"), ConfigError);
  }

  TEST_CASE("empty cells mean no observation") {
    auto ts = parse_csv("date,a,b\n2017-01-02,1,\n2017-01-03,,5\n2017-01-04,3,6\n", CsvSchema::wide);
    CHECK(ts.channels[0].size() == 2);
    CHECK(ts.channels[1].size() == 2);
    CHECK(ts.channels[1].observations[0].t == 1.0);
  }

  TEST_CASE("quoted fields and CRLF") {
    auto ts = parse_csv("date,\"gold, spot\"\r\n2017-01-02,\"1.25\"\r\n\r\n2017-01-03,1.5\r\n", CsvSchema::wide);
    REQUIRE(ts.num_channels() == 1);
    CHECK(ts.channels[0].name == "gold, spot");
    CHECK(ts.channels[0].size() == 2);
  }

  TEST_CASE("iso dates round trip") {
    CHECK(parse_iso_date("1970-01-01") == 0);
    CHECK(parse_iso_date("2017-01-09") - parse_iso_date("2017-01-02") == 7);
    CHECK(parse_iso_date("2016-03-01") - parse_iso_date("2016-02-28") == 2);
    for (long d : {-1000L, 0L, 17168L, 20000L}) CHECK(parse_iso_date(format_iso_date(d)) == d);
  }

  TEST_CASE("series set validation") {
    CHECK_THROWS_AS(make_series_set({make_channel("a", {0, 0}, {1, 2})}), DataError);
    CHECK_THROWS_AS(make_series_set({make_channel("a", {1, 0}, {1, 2})}), DataError);
    CHECK_THROWS_AS(make_series_set({make_channel("a", {0, 1}, {1, NAN})}), DataError);
    CHECK_THROWS_AS(make_series_set({make_channel("a", {0}, {1}), make_channel("a", {0}, {1})}), DataError);
    auto ts = make_series_set({make_channel("a", {0, 1}, {1, 2})});
    CHECK_THROWS_AS(ts.channel_index("zzz"), DataError);
  }

  TEST_CASE("detrend examples") {
    auto lin = detrend_linear(make_channel("a", {0, 1, 2}, {1, 4, 7}));
    for (double r : values(lin)) CHECK(std::abs(r) <= 1e-12);
    REQUIRE(lin.transforms.size() == 1);
    CHECK(lin.transforms[0].kind == TransformKind::detrend_linear);
    CHECK(lin.transforms[0].slope == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(lin.transforms[0].intercept == doctest::Approx(1.0).epsilon(1e-14));

    auto flat = detrend_linear(make_channel("a", {0, 1, 2, 3}, {5, 5, 5, 5}));
    for (double r : values(flat)) CHECK(std::abs(r) <= 1e-12);
    CHECK(std::abs(flat.transforms[0].slope) <= 1e-14);
    CHECK(flat.transforms[0].intercept == doctest::Approx(5.0));

    auto tent = detrend_linear(make_channel("a", {0, 1, 2}, {0, 1, 0}));
    auto r = values(tent);
    CHECK(r[0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));
    CHECK(r[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(r[2] == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));

    CHECK_THROWS_AS(detrend_linear(make_channel("a", {0}, {1})), DataError);
  }

  TEST_CASE("detrend fits on the given indices only") {
    // Line through t = 0, 1 is y = t; the outlier at t = 2 is only shifted.
    auto ch = make_channel("a", {0, 1, 2}, {0, 1, 10});
    std::vector<std::size_t> fit_idx{0, 1};
    auto d = detrend_linear(ch, fit_idx);
    CHECK(std::abs(d.observations[0].y) <= 1e-14);
    CHECK(std::abs(d.observations[1].y) <= 1e-14);
    CHECK(d.observations[2].y == doctest::Approx(8.0));
    std::vector<std::size_t> one{0};
    CHECK_THROWS_AS(detrend_linear(ch, one), DataError);
  }

  TEST_CASE("log transform examples") {
    const double e = std::exp(1.0);
    auto l = log_transform(make_channel("a", {0, 1, 2}, {1, e, e * e}));
    auto v = values(l);
    CHECK(std::abs(v[0]) <= 1e-15);
    CHECK(v[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(v[2] == doctest::Approx(2.0).epsilon(1e-15));

    try {
      log_transform(make_channel("a", {0, 3.5}, {1, 0}));
      FAIL("expected a domain error");
    } catch (const DataError& err) {
      CHECK(std::string(err.what()).find("t=3.5") != std::string::npos);
    }
    CHECK_THROWS_AS(log_transform(make_channel("a", {0}, {-2})), DataError);
  }

  TEST_CASE("transform compositions round trip") {
    Rng rng(2);
    std::vector<std::vector<TransformKind>> orders = {
        {TransformKind::log},
        {TransformKind::detrend_linear},
        {TransformKind::log, TransformKind::detrend_linear},
        {TransformKind::detrend_linear, TransformKind::detrend_linear},
        {TransformKind::log, TransformKind::detrend_linear, TransformKind::detrend_linear}};
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<double> t, y;
      double cur = 0;
      for (int k = 0; k < 30; ++k) {
        cur += 0.5 + rng.uniform() * 7;
        t.push_back(cur);
        y.push_back(50 + 40 * rng.uniform() + 0.3 * cur);
      }
      auto orig = make_channel("x", t, y);
      for (const auto& order : orders) {
        Channel c = orig;
        for (auto k : order) c = k == TransformKind::log ? log_transform(c) : detrend_linear(c);
        CHECK(c.transforms.size() == order.size());
        auto back = invert_transforms(c);
        CHECK(back.transforms.empty());
        for (std::size_t k = 0; k < t.size(); ++k) {
          CHECK(back.observations[k].t == t[k]);
          CHECK(std::abs(back.observations[k].y - y[k]) <= 1e-12 * std::abs(y[k]));
          CHECK(std::abs(invert_value(c.transforms, t[k], c.observations[k].y) - y[k]) <= 1e-12 * std::abs(y[k]));
        }
      }
    }
  }

  TEST_CASE("inverse derivative matches finite differences") {
    auto c = detrend_linear(log_transform(make_channel("x", {0, 1, 2, 5}, {2, 3, 5, 4})));
    for (double y : {-0.3, 0.0, 0.4}) {
      double h = 1e-6;
      double fd = (invert_value(c.transforms, 2.0, y + h) - invert_value(c.transforms, 2.0, y - h)) / (2 * h);
      CHECK(invert_derivative(c.transforms, 2.0, y) == doctest::Approx(fd).epsilon(1e-7));
    }
  }

  TEST_CASE("transform_set fits trends on training points only") {
    auto ts = make_series_set({make_channel("a", {0, 1, 2, 3}, {0, 1, 2, 100})});
    ts.train_mask[0] = {0, 1, 2};
    ts.test_mask[0] = {3};
    std::vector<TransformKind> order{TransformKind::detrend_linear};
    auto out = transform_set(ts, order);
    CHECK(out.channels[0].transforms[0].slope == doctest::Approx(1.0));
    CHECK(out.channels[0].observations[3].y == doctest::Approx(97.0));
    CHECK(out.train_mask == ts.train_mask);
  }

  TEST_CASE("empty mask keeps everything in training") {
    auto ts = make_series_set({make_channel("a", {0, 1, 2}, {1, 2, 3})});
    auto r = apply_mask(ts, MaskSpec{});
    CHECK(r.set.train_mask[0] == IndexSet{0, 1, 2});
    CHECK(r.set.test_mask[0].empty());
    CHECK(r.warnings.empty());
  }

  TEST_CASE("range removal uses closed intervals") {
    std::vector<double> t(21), y(21, 1.0);
    std::iota(t.begin(), t.end(), 0.0);
    auto ts = make_series_set({make_channel("a", t, y)});
    MaskSpec spec;
    spec.channels["a"].ranges = {{5.0, 10.0}};
    auto r = apply_mask(ts, spec);
    CHECK(r.set.test_mask[0] == IndexSet{5, 6, 7, 8, 9, 10});
    REQUIRE(r.set.removed_ranges[0].size() == 1);
    check_partition(r.set);
  }

  TEST_CASE("random removal is deterministic and seed dependent") {
    std::vector<double> t(200), y(200, 1.0);
    std::iota(t.begin(), t.end(), 0.0);
    auto ts = make_series_set({make_channel("a", t, y), make_channel("b", t, y)});
    MaskSpec spec;
    spec.seed = 9;
    spec.channels["a"].random_fraction = 0.3;
    spec.channels["b"].random_fraction = 0.3;
    spec.channels["b"].ranges = {{10.0, 29.0}};
    auto r1 = apply_mask(ts, spec), r2 = apply_mask(ts, spec);
    CHECK(r1.set.test_mask == r2.set.test_mask);
    CHECK(r1.set.test_mask[0].size() == 60);
    CHECK(r1.set.test_mask[0] != r1.set.test_mask[1]);
    check_partition(r1.set);
    // Range indices are always removed; the random share is drawn from the rest.
    for (std::size_t k = 10; k <= 29; ++k)
      CHECK(std::binary_search(r1.set.test_mask[1].begin(), r1.set.test_mask[1].end(), k));
    CHECK(r1.set.test_mask[1].size() == 20 + 54);

    spec.seed = 10;
    auto r3 = apply_mask(ts, spec);
    CHECK(r3.set.test_mask[0] != r1.set.test_mask[0]);
    check_partition(r3.set);
  }

  TEST_CASE("partition holds for random masks") {
    Rng rng(77);
    for (int rep = 0; rep < 30; ++rep) {
      std::vector<double> t;
      double cur = 0;
      for (int k = 0; k < 40; ++k) t.push_back(cur += 1 + rng.below(3));
      std::vector<double> y(t.size(), 2.0);
      auto ts = make_series_set({make_channel("a", t, y), make_channel("b", t, y)});
      MaskSpec spec;
      spec.seed = rng.below(1000);
      spec.channels["a"].random_fraction = rng.uniform();
      double s = test::uniform(rng, 0, 60);
      spec.channels["b"].ranges = {{s, s + test::uniform(rng, 1, 30)}};
      spec.channels["b"].random_fraction = 0.5 * rng.uniform();
      check_partition(apply_mask(ts, spec).set);
    }
  }

  TEST_CASE("mask warnings and validation") {
    auto ts = make_series_set({make_channel("a", {0, 1, 2}, {1, 2, 3})});
    MaskSpec all;
    all.channels["a"].random_fraction = 1.0;
    auto r = apply_mask(ts, all);
    CHECK(r.set.train_mask[0].empty());
    CHECK(r.set.test_mask[0].size() == 3);
    CHECK_FALSE(r.warnings.empty());

    MaskSpec unknown;
    unknown.channels["zzz"].random_fraction = 0.1;
    CHECK_FALSE(apply_mask(ts, unknown).warnings.empty());

    MaskSpec bad;
    bad.channels["a"].random_fraction = 1.5;
    CHECK_THROWS_AS(apply_mask(ts, bad), ConfigError);
    MaskSpec inverted;
    inverted.channels["a"].ranges = {{2.0, 1.0}};
    CHECK_THROWS_AS(apply_mask(ts, inverted), ConfigError);
  }

  TEST_CASE("csv helpers") {
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
    auto rows = csv::parse("a,\"b,\"\"c\"\"\"\n\n1,2\n");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][1] == "b,\"c\"");
    CHECK(csv::format_double(0.1) == "0.1");
    CHECK(csv::format_double(3.0) == "3");
    CHECK(std::stod(csv::format_double(1.0 / 3.0)) == 1.0 / 3.0);
  }
}
