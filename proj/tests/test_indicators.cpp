#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"
#include "policylens/indicators.hpp"

using namespace policylens;
using namespace policylens::indicators;
using Catch::Matchers::WithinAbs;

namespace {

ingest::PolicyDocument doc(const std::string& id, const std::string& iso, int year,
                           std::initializer_list<Theme> labels) {
    ingest::PolicyDocument d;
    d.doc_id = id;
    d.country_iso3 = iso;
    d.year = year;
    d.summary_text = "text";
    for (Theme t : labels) d.gold_labels.add(t);
    return d;
}

}  // namespace

TEST_CASE("theme_counts aggregates documents per country-year") {
    std::vector<ingest::PolicyDocument> docs = {
        doc("1", "DEU", 2021, {Theme::Mitigation}),
        doc("2", "DEU", 2021, {Theme::Mitigation}),
        doc("3", "DEU", 2021, {Theme::Mitigation}),
        doc("4", "FRA", 2020, {Theme::Adaptation, Theme::DisasterRiskManagement}),
        doc("5", "FRA", 2021, {}),
    };
    auto panel = theme_counts(docs);
    REQUIRE(panel.cells.size() == 3);
    CHECK(panel.find("DEU", 2021)->counts[static_cast<int>(Theme::Mitigation)] == 3);
    const auto* fra = panel.find("FRA", 2020);
    CHECK(fra->counts[static_cast<int>(Theme::Adaptation)] == 1);
    CHECK(fra->counts[static_cast<int>(Theme::DisasterRiskManagement)] == 1);
    CHECK(fra->counts[static_cast<int>(Theme::Mitigation)] == 0);
    // unlabeled doc still creates its cell, with zero counts
    const auto* fra21 = panel.find("FRA", 2021);
    REQUIRE(fra21 != nullptr);
    for (int c : fra21->counts) CHECK(c == 0);

    CHECK(theme_counts(std::vector<ingest::PolicyDocument>{}).cells.empty());

    // total count equals the sum of label-set sizes
    long total = 0;
    for (const auto& cell : panel.cells)
        for (int c : cell.counts) total += c;
    long expected = 0;
    for (const auto& d : docs) expected += d.gold_labels.size();
    CHECK(total == expected);
}

TEST_CASE("theme_counts accepts an external label vector") {
    std::vector<ingest::PolicyDocument> docs = {doc("1", "DEU", 2021, {})};
    std::vector<ThemeSet> predicted(1);
    predicted[0].add(Theme::LossAndDamage);
    auto panel = theme_counts(docs, predicted);
    CHECK(panel.find("DEU", 2021)->counts[static_cast<int>(Theme::LossAndDamage)] == 1);
    CHECK_THROWS_AS(theme_counts(docs, std::vector<ThemeSet>{}), Error);
}

TEST_CASE("zscore matches hand values and conventions") {
    SECTION("(1,2,3) -> (-1,0,1)") {
        auto z = zscore(std::vector<double>{1, 2, 3});
        CHECK_THAT(z[0], WithinAbs(-1.0, 1e-12));
        CHECK_THAT(z[1], WithinAbs(0.0, 1e-12));
        CHECK_THAT(z[2], WithinAbs(1.0, 1e-12));
    }
    SECTION("constant series standardizes to zeros") {
        auto z = zscore(std::vector<double>{5, 5, 5});
        for (double v : z) CHECK(v == 0.0);
    }
    SECTION("single point is zero") {
        CHECK(zscore(std::vector<double>{42.0}) == std::vector<double>{0.0});
    }
    SECTION("hand-computed eight-point series") {
        auto z = zscore(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9});
        CHECK_THAT(z[0], WithinAbs(-1.40312, 5e-6));
    }
    SECTION("empty series is an error") {
        CHECK_THROWS_AS(zscore(std::vector<double>{}), Error);
    }
    SECTION("mean 0 and sd 1 whenever input varies") {
        std::mt19937 gen(9);
        std::normal_distribution<double> nd(3.0, 2.0);
        std::vector<double> xs(37);
        for (auto& x : xs) x = nd(gen);
        auto z = zscore(xs);
        double mean = 0, ss = 0;
        for (double v : z) mean += v;
        mean /= static_cast<double>(z.size());
        for (double v : z) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / (static_cast<double>(z.size()) - 1.0));
        CHECK_THAT(mean, WithinAbs(0.0, 1e-12));
        CHECK_THAT(sd, WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("standardize pools z-scores per theme across the panel") {
    ThemePanel panel;
    panel.cells.push_back({"AAA", 2019, {1, 0, 0, 0}});
    panel.cells.push_back({"BBB", 2019, {2, 0, 0, 0}});
    panel.cells.push_back({"CCC", 2019, {3, 0, 0, 0}});
    auto std_panel = standardize(panel);
    REQUIRE(std_panel.z.size() == 3);
    CHECK_THAT(std_panel.z[0][0], WithinAbs(-1.0, 1e-12));
    CHECK_THAT(std_panel.z[2][0], WithinAbs(1.0, 1e-12));
    // constant themes (all zero counts) give zero z everywhere
    for (const auto& z : std_panel.z) {
        CHECK(z[1] == 0.0);
        CHECK(z[2] == 0.0);
        CHECK(z[3] == 0.0);
    }
}

TEST_CASE("top_countries ranks by mean z with the declared tie-break") {
    ThemePanel panel;
    panel.cells.push_back({"DEU", 2019, {4, 0, 0, 0}});
    panel.cells.push_back({"DEU", 2020, {4, 0, 0, 0}});
    panel.cells.push_back({"FRA", 2019, {4, 0, 0, 0}});
    panel.cells.push_back({"FRA", 2020, {4, 0, 0, 0}});
    panel.cells.push_back({"KEN", 2019, {1, 0, 0, 0}});
    panel.cells.push_back({"KEN", 2020, {1, 0, 0, 0}});

    auto ranked = top_countries(panel, Theme::Mitigation, 10);
    REQUIRE(ranked.size() == 3);
    // DEU and FRA tie on mean z; DEU wins the ISO3 tie-break
    CHECK(ranked[0].country_iso3 == "DEU");
    CHECK(ranked[1].country_iso3 == "FRA");
    CHECK(ranked[2].country_iso3 == "KEN");
    CHECK_THAT(ranked[0].mean_z, WithinAbs(ranked[1].mean_z, 1e-15));
    CHECK(ranked[0].mean_z > ranked[2].mean_z);
    REQUIRE(ranked[0].years.size() == 2);
    CHECK(ranked[0].years[0].first == 2019);
    CHECK(ranked[0].years[1].first == 2020);

    SECTION("k truncates; oversized k returns all") {
        CHECK(top_countries(panel, Theme::Mitigation, 2).size() == 2);
        CHECK(top_countries(panel, Theme::Mitigation, 99).size() == 3);
        CHECK_THROWS_AS(top_countries(panel, Theme::Mitigation, 0), Error);
    }
}

TEST_CASE("ranking order is invariant under positive affine count transforms") {
    std::mt19937 gen(13);
    ThemePanel base;
    const std::vector<std::string> isos = {"AAA", "BBB", "CCC", "DDD", "EEE"};
    for (const auto& iso : isos)
        for (int year = 2016; year <= 2020; ++year) {
            ThemePanel::Cell cell{iso, year, {}};
            for (int k = 0; k < kThemeCount; ++k) cell.counts[k] = static_cast<int>(gen() % 9);
            base.cells.push_back(cell);
        }

    ThemePanel scaled = base;
    for (auto& cell : scaled.cells)
        for (int k = 0; k < kThemeCount; ++k) cell.counts[k] = 3 * cell.counts[k] + 7;

    for (int k = 0; k < kThemeCount; ++k) {
        auto a = top_countries(base, static_cast<Theme>(k), 10);
        auto b = top_countries(scaled, static_cast<Theme>(k), 10);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].country_iso3 == b[i].country_iso3);
            CHECK_THAT(a[i].mean_z, WithinAbs(b[i].mean_z, 1e-9));
        }
    }
}

TEST_CASE("box_stats follows the type-7 convention") {
    SECTION("five points") {
        auto b = box_stats(std::vector<double>{1, 2, 3, 4, 5});
        CHECK_THAT(b.q1, WithinAbs(2.0, 1e-12));
        CHECK_THAT(b.median, WithinAbs(3.0, 1e-12));
        CHECK_THAT(b.q3, WithinAbs(4.0, 1e-12));
        CHECK(b.outliers.empty());
        CHECK(b.whisker_low == 1.0);
        CHECK(b.whisker_high == 5.0);
    }
    SECTION("single value") {
        auto b = box_stats(std::vector<double>{7.5});
        CHECK(b.median == 7.5);
        CHECK(b.q1 == 7.5);
        CHECK(b.q3 == 7.5);
        CHECK(b.whisker_low == 7.5);
        CHECK(b.whisker_high == 7.5);
        CHECK(b.outliers.empty());
    }
    SECTION("outlier beyond the fence") {
        auto b = box_stats(std::vector<double>{1, 2, 3, 4, 100});
        CHECK_THAT(b.q3, WithinAbs(4.0, 1e-12));
        CHECK_THAT(b.q1, WithinAbs(2.0, 1e-12));
        CHECK(b.whisker_high == 4.0);
        CHECK(b.whisker_low == 1.0);
        REQUIRE(b.outliers.size() == 1);
        CHECK(b.outliers[0] == 100.0);
    }
    SECTION("interpolated quartiles on four points") {
        auto b = box_stats(std::vector<double>{1, 2, 3, 4});
        CHECK_THAT(b.q1, WithinAbs(1.75, 1e-12));
        CHECK_THAT(b.median, WithinAbs(2.5, 1e-12));
        CHECK_THAT(b.q3, WithinAbs(3.25, 1e-12));
    }
    SECTION("empty is an error") {
        CHECK_THROWS_AS(box_stats(std::vector<double>{}), Error);
    }
}

TEST_CASE("box_stats invariants on random series") {
    std::mt19937 gen(29);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> xs(2 + gen() % 40);
        for (auto& x : xs) x = nd(gen);
        if (trial % 7 == 0) xs.push_back(50.0);  // force an outlier sometimes
        auto b = box_stats(xs);
        auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
        CHECK(b.q1 <= b.median + 1e-15);
        CHECK(b.median <= b.q3 + 1e-15);
        CHECK(*mn <= b.whisker_low);
        CHECK(b.whisker_low <= b.q1 + 1e-15);
        CHECK(b.q3 <= b.whisker_high + 1e-15);
        CHECK(b.whisker_high <= *mx);
        for (double o : b.outliers) {
            const bool beyond = o < b.whisker_low || o > b.whisker_high;
            CHECK(beyond);
        }
        CHECK(std::is_sorted(b.outliers.begin(), b.outliers.end()));
    }
}

TEST_CASE("indicator CSV writers carry the declared columns") {
    ThemePanel panel;
    panel.cells.push_back({"DEU", 2019, {2, 1, 0, 0}});
    panel.cells.push_back({"FRA", 2019, {0, 3, 1, 0}});
    auto std_panel = standardize(panel);

    auto recs = parse_csv(theme_counts_to_csv(std_panel), "counts");
    REQUIRE(recs.size() == 1 + 2 * kThemeCount);
    CHECK(recs[0].fields ==
          std::vector<std::string>{"country_iso3", "year", "theme", "count", "zscore"});
    CHECK(recs[1].fields[0] == "DEU");
    CHECK(recs[1].fields[2] == "Mitigation");
    CHECK(recs[1].fields[3] == "2");
    // zscore column round-trips as a double
    CHECK(try_parse_double(recs[1].fields[4]).has_value());

    std::array<std::vector<RankedCountry>, kThemeCount> rankings;
    for (int k = 0; k < kThemeCount; ++k)
        rankings[k] = top_countries(std_panel, static_cast<Theme>(k), 10);
    auto rrecs = parse_csv(rankings_to_csv(rankings), "rankings");
    CHECK(rrecs[0].fields == std::vector<std::string>{"theme", "rank", "country_iso3", "mean_z"});
    REQUIRE(rrecs.size() == 1 + 4 * 2);
    CHECK(rrecs[1].fields[1] == "1");
    CHECK(rrecs[2].fields[1] == "2");
}
