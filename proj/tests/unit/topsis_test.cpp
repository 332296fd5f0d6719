#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "topsis_oracle.hpp"
#include "vsfleet/error.hpp"
#include "vsfleet/repository.hpp"
#include "vsfleet/topsis.hpp"

using namespace vsfleet;
using vsfleet::testing::oracle_topsis;

namespace {

std::vector<std::string> labels(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("o" + std::to_string(i));
    return out;
}

std::vector<CriterionSpec> specs(const std::vector<bool>& maximize) {
    std::vector<CriterionSpec> out;
    for (std::size_t j = 0; j < maximize.size(); ++j)
        out.push_back({"c" + std::to_string(j), maximize[j] ? Direction::maximize : Direction::minimize});
    return out;
}

DecisionMatrix matrix(const std::vector<std::vector<double>>& rows, const std::vector<bool>& maximize) {
    std::vector<double> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return DecisionMatrix(labels(rows.size()), specs(maximize), flat);
}

struct RandomCase {
    std::vector<std::vector<double>> rows;
    std::vector<bool> maximize;
};

RandomCase random_case(std::mt19937_64& gen) {
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_real_distribution<double> value(0.0, 10.0);
    std::bernoulli_distribution coin(0.5);
    RandomCase c;
    const int n = dim(gen), m = dim(gen);
    c.maximize.resize(m);
    for (int j = 0; j < m; ++j) c.maximize[j] = coin(gen);
    c.rows.assign(n, std::vector<double>(m));
    for (auto& r : c.rows)
        for (auto& v : r) v = 10.0 - value(gen);  // (0, 10]
    return c;
}

GenericSensor sensor_with(std::int64_t id, ContextVector ctx) {
    GenericSensor s;
    s.id = id;
    s.name = "S";
    s.location = GeoPoint(50, 10);
    s.context = ctx;
    s.source_url = owm_query_url(id);
    return s;
}

}  // namespace

TEST_CASE("matrix validation") {
    CHECK_THROWS_AS(DecisionMatrix({}, specs({true}), {}), Error);
    CHECK_THROWS_AS(DecisionMatrix(labels(1), {}, {}), Error);
    CHECK_THROWS_AS(DecisionMatrix(labels(2), specs({true}), {1.0}), Error);
    CHECK_THROWS_AS(DecisionMatrix(labels(1), specs({true}), {std::nan("")}), Error);
    CHECK_THROWS_AS(DecisionMatrix(labels(1), {{"a", Direction::maximize}, {"a", Direction::minimize}}, {1, 2}),
                    Error);
}

TEST_CASE("parse_direction") {
    CHECK(parse_direction("max") == Direction::maximize);
    CHECK(parse_direction("minimize") == Direction::minimize);
    CHECK_THROWS_AS(parse_direction("up"), Error);
}

TEST_CASE("normalize examples") {
    auto single = normalize(matrix({{5, 2}}, {true, true}));
    CHECK(single.at(0, 0) == doctest::Approx(1.0));
    CHECK(single.at(0, 1) == doctest::Approx(1.0));

    auto two = normalize(matrix({{3}, {4}}, {true}));
    CHECK(two.at(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(two.at(1, 0) == doctest::Approx(0.8).epsilon(1e-15));

    auto zero = normalize(matrix({{0}, {0}}, {true}));
    CHECK(zero.at(0, 0) == 0.0);
    CHECK(zero.at(1, 0) == 0.0);
}

TEST_CASE("normalized columns have unit or zero norm") {
    std::mt19937_64 gen(3);
    for (int t = 0; t < 100; ++t) {
        auto c = random_case(gen);
        auto n = normalize(matrix(c.rows, c.maximize));
        for (std::size_t j = 0; j < n.cols(); ++j) {
            double ss = 0;
            for (std::size_t i = 0; i < n.rows(); ++i) ss += n.at(i, j) * n.at(i, j);
            CHECK(std::sqrt(ss) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("ideal point examples") {
    auto up = ideal_points(matrix({{0.6}, {0.8}}, {true}));
    CHECK(up.positive == std::vector<double>{0.8});
    CHECK(up.negative == std::vector<double>{0.6});
    auto down = ideal_points(matrix({{0.6}, {0.8}}, {false}));
    CHECK(down.positive == std::vector<double>{0.6});
    CHECK(down.negative == std::vector<double>{0.8});
}

TEST_CASE("ideal points match a column scan") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> v(0, 1);
    for (int t = 0; t < 50; ++t) {
        std::vector<std::vector<double>> rows(3, std::vector<double>(2));
        for (auto& r : rows)
            for (auto& x : r) x = v(gen);
        const std::vector<bool> dirs = {t % 2 == 0, t % 3 == 0};
        auto p = ideal_points(matrix(rows, dirs));
        for (std::size_t j = 0; j < 2; ++j) {
            double hi = rows[0][j], lo = rows[0][j];
            for (const auto& r : rows) {
                hi = std::max(hi, r[j]);
                lo = std::min(lo, r[j]);
            }
            CHECK(p.positive[j] == (dirs[j] ? hi : lo));
            CHECK(p.negative[j] == (dirs[j] ? lo : hi));
        }
    }
}

TEST_CASE("rank examples") {
    auto dominated = rank(matrix({{3, 4}, {6, 8}}, {true, true}));
    CHECK(dominated.order == std::vector<std::size_t>{1, 0});
    CHECK(dominated.closeness[0] == doctest::Approx(0.0));
    CHECK(dominated.closeness[1] == doctest::Approx(1.0));

    auto single = rank(matrix({{7, 1, 3}}, {true, false, true}));
    CHECK(single.order == std::vector<std::size_t>{0});
    CHECK(single.closeness[0] == 0.5);

    auto twins = rank(matrix({{2, 5}, {2, 5}}, {true, false}));
    CHECK(twins.order == std::vector<std::size_t>{0, 1});
    CHECK(twins.closeness[0] == twins.closeness[1]);
}

TEST_CASE("rank agrees with the brute-force oracle") {
    std::mt19937_64 gen(20150207);
    for (int t = 0; t < 300; ++t) {
        auto c = random_case(gen);
        auto got = rank(matrix(c.rows, c.maximize));
        auto want = oracle_topsis(c.rows, c.maximize);
        REQUIRE(got.order == want.order);
        for (std::size_t i = 0; i < c.rows.size(); ++i)
            REQUIRE(std::abs(got.closeness[i] - want.closeness[i]) <= 1e-9);
    }
}

TEST_CASE("scaling one column leaves the ranking unchanged") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> log_c(std::log(0.01), std::log(100.0));
    for (int t = 0; t < 100; ++t) {
        auto c = random_case(gen);
        auto before = rank(matrix(c.rows, c.maximize));
        const std::size_t col = t % c.maximize.size();
        const double factor = std::exp(log_c(gen));
        for (auto& r : c.rows) r[col] *= factor;
        auto after = rank(matrix(c.rows, c.maximize));
        CHECK(after.order == before.order);
        for (std::size_t i = 0; i < c.rows.size(); ++i)
            CHECK(after.closeness[i] == doctest::Approx(before.closeness[i]).epsilon(1e-12));
    }
}

TEST_CASE("closeness range, permutation and positive ideal") {
    std::mt19937_64 gen(17);
    for (int t = 0; t < 200; ++t) {
        auto c = random_case(gen);
        auto r = rank(matrix(c.rows, c.maximize));
        auto sorted = r.order;
        std::sort(sorted.begin(), sorted.end());
        std::vector<std::size_t> iota(c.rows.size());
        std::iota(iota.begin(), iota.end(), 0);
        CHECK(sorted == iota);
        for (double ci : r.closeness) {
            CHECK(ci >= 0.0);
            CHECK(ci <= 1.0);
        }
        for (std::size_t k = 1; k < r.order.size(); ++k) {
            const auto a = r.order[k - 1], b = r.order[k];
            CHECK((r.closeness[a] > r.closeness[b] || (r.closeness[a] == r.closeness[b] && a < b)));
        }
    }
    // Row 0 is best on every criterion.
    auto r = rank(matrix({{9, 1, 8}, {2, 5, 3}, {4, 3, 1}}, {true, false, true}));
    CHECK(r.closeness[0] == doctest::Approx(1.0));
    CHECK(r.order.front() == 0);
}

TEST_CASE("dominating rows come first") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> bump(0.01, 2.0);
    for (int t = 0; t < 200; ++t) {
        auto c = random_case(gen);
        if (c.rows.size() < 2) continue;
        // Make row 1 dominate row 0.
        c.rows[1] = c.rows[0];
        const std::size_t j = t % c.maximize.size();
        c.rows[1][j] = c.maximize[j] ? c.rows[0][j] + bump(gen) : c.rows[0][j] * 0.5;
        auto r = rank(matrix(c.rows, c.maximize));
        const auto pos = [&](std::size_t i) { return std::find(r.order.begin(), r.order.end(), i) - r.order.begin(); };
        CHECK(pos(1) < pos(0));
    }
}

TEST_CASE("weighted rank with unit weights equals rank") {
    std::mt19937_64 gen(29);
    for (int t = 0; t < 50; ++t) {
        auto c = random_case(gen);
        auto m = matrix(c.rows, c.maximize);
        std::vector<double> ones(c.maximize.size(), 1.0);
        auto a = rank(m), b = rank(m, ones);
        CHECK(a.order == b.order);
        CHECK(a.closeness == b.closeness);
    }
    auto m = matrix({{1, 2}, {2, 1}}, {true, true});
    CHECK_THROWS_AS(rank(m, std::vector<double>{1.0}), Error);
    CHECK_THROWS_AS(rank(m, std::vector<double>{1.0, 0.0}), Error);
}

TEST_CASE("rank output does not depend on row order beyond ties") {
    auto a = rank(matrix({{1, 9}, {5, 5}, {9, 1}}, {true, false}));
    auto b = rank(matrix({{9, 1}, {5, 5}, {1, 9}}, {true, false}));
    CHECK(a.closeness[0] == doctest::Approx(b.closeness[2]));
    CHECK(a.closeness[2] == doctest::Approx(b.closeness[0]));
}

TEST_CASE("select_top picks the dominating sensor") {
    std::vector<GenericSensor> sensors = {
        sensor_with(1, {50, 5, 0.02, 2, 100, 500}),
        sensor_with(2, {90, 1, 0.01, 8, 20, 50}),  // best on all six
        sensor_with(3, {60, 4, 0.03, 3, 200, 900}),
    };
    auto top = select_top(sensors, default_context_criteria(), 1);
    REQUIRE(top.size() == 1);
    CHECK(top[0].id == 2);

    auto all = select_top(sensors, default_context_criteria(), 10);
    CHECK(all.size() == 3);
    std::vector<std::int64_t> ids;
    for (const auto& s : all) ids.push_back(s.id);
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<std::int64_t>{1, 2, 3});
}

TEST_CASE("select_top errors") {
    std::vector<GenericSensor> none;
    try {
        select_top(none, default_context_criteria(), 1);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::empty_sensor_list);
    }
    std::vector<GenericSensor> one = {sensor_with(1, {})};
    std::vector<CriterionSpec> bad = {{"colour", Direction::maximize}};
    try {
        select_top(one, bad, 1);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::unknown_criterion);
        CHECK(std::string(e.what()).find("unknown-criterion-name") != std::string::npos);
    }
}

TEST_CASE("default criteria directions") {
    auto c = default_context_criteria();
    REQUIRE(c.size() == 6);
    for (const auto& spec : c) {
        const bool up = spec.name == "battery" || spec.name == "frequency";
        CHECK(spec.direction == (up ? Direction::maximize : Direction::minimize));
    }
}

TEST_CASE("select_random basics") {
    const Region r(GeoPoint(10, 0), GeoPoint(0, 10));
    auto five = generate_synthetic(5, r, 1);
    auto perm = select_random(five, 5, 9);
    CHECK(perm.size() == 5);
    CHECK(std::is_permutation(perm.begin(), perm.end(), five.begin()));
    CHECK(select_random(five, 3, 4) == select_random(five, 3, 4));
    CHECK(select_random(five, 50, 4).size() == 5);
    std::vector<GenericSensor> none;
    CHECK_THROWS_AS(select_random(none, 1, 0), Error);
}

TEST_CASE("select_random is uniform") {
    const Region r(GeoPoint(10, 0), GeoPoint(0, 10));
    auto ten = generate_synthetic(10, r, 2);
    std::map<std::int64_t, int> hits;
    const int trials = 10000;
    for (int seed = 0; seed < trials; ++seed)
        for (const auto& s : select_random(ten, 3, static_cast<std::uint64_t>(seed))) ++hits[s.id];
    REQUIRE(hits.size() == 10);
    for (const auto& [id, n] : hits) CHECK(std::abs(n / double(trials) - 0.3) <= 0.02);
}

TEST_CASE("matrix CSV input") {
    std::istringstream labelled("option,cost:min,speed:max\na,3,10\nb,1,10\n");
    auto m = read_decision_csv(labelled);
    CHECK(m.rows() == 2);
    CHECK(m.options()[1] == "b");
    CHECK(m.criteria()[0].direction == Direction::minimize);
    std::ostringstream out;
    write_ranking_csv(out, m, rank(m));
    CHECK(out.str().rfind("rank,option,closeness\n1,b,1\n2,a,0\n", 0) == 0);

    std::istringstream bare("x:max\n1\n2\n");
    CHECK(read_decision_csv(bare).options()[0] == "1");
    std::istringstream bad_header("x\n1\n");
    CHECK_THROWS_AS(read_decision_csv(bad_header), Error);
    std::istringstream bad_cell("x:max\nabc\n");
    CHECK_THROWS_AS(read_decision_csv(bad_cell), Error);
}
