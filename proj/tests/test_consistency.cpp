#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mve/consistency.hpp"
#include "mve/errors.hpp"
#include "mve/rng.hpp"
#include "fixtures.hpp"

using namespace mve;

namespace {

LabelSet make_set(const std::string& name, const std::vector<LabelId>& labels) {
    std::vector<std::pair<std::string, LabelId>> pairs;
    for (std::size_t i = 0; i < labels.size(); ++i)
        pairs.emplace_back("img_" + std::to_string(1000 + i), labels[i]);
    return LabelSet::from_pairs(name, std::move(pairs));
}

} // namespace

TEST_CASE("consistency_rate counts equal labels") {
    const LabelSet a = make_set("a", {0, 1, 2, 1});
    CHECK(consistency_rate(a, a) == 1.0);

    const LabelSet b = make_set("b", {1, 2, 0, 2});
    CHECK(consistency_rate(a, b) == 0.0);

    // 160 images, 136 matching
    std::vector<LabelId> x(160, 0), y(160, 0);
    for (int i = 0; i < 24; ++i) y[static_cast<std::size_t>(i)] = 1;
    CHECK(consistency_rate(make_set("x", x), make_set("y", y)) == 0.85);

    const LabelSet short_set = make_set("s", {0, 1});
    CHECK_THROWS_AS(consistency_rate(a, short_set), ImageListMismatch);
}

TEST_CASE("consistency_rate is symmetric and 1 only for identical sets") {
    Rng rng(41);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<LabelId> la(30), lb(30);
        for (auto& l : la) l = static_cast<LabelId>(rng.bounded(3));
        for (auto& l : lb) l = static_cast<LabelId>(rng.bounded(3));
        const LabelSet a = make_set("a", la), b = make_set("b", lb);
        CHECK(consistency_rate(a, b) == consistency_rate(b, a));
        CHECK((consistency_rate(a, b) == 1.0) == (la == lb));
    }
}

TEST_CASE("consistency_matrix is symmetric with unit diagonal") {
    const LabelSet a = make_set("orig", {0, 0, 1, 1, 2});
    const LabelSet b = make_set("exp1", {0, 1, 1, 1, 2});
    const LabelSet c = make_set("exp2", {2, 0, 1, 0, 2});
    const std::vector<LabelSet> sets{a, b, c};
    const ConsistencyMatrix matrix = consistency_matrix(sets);
    REQUIRE(matrix.sources.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(matrix.at(i, i) == 1.0);
        for (std::size_t j = 0; j < 3; ++j) CHECK(matrix.at(i, j) == matrix.at(j, i));
    }
    CHECK(matrix.at(0, 1) == consistency_rate(a, b));
    CHECK(matrix.at(0, 2) == consistency_rate(a, c));
    CHECK(matrix.at(1, 2) == consistency_rate(b, c));

    const std::vector<LabelSet> two{a, a};
    const ConsistencyMatrix same = consistency_matrix(two);
    CHECK(same.at(0, 1) == 1.0);

    const std::vector<LabelSet> one{a};
    CHECK_THROWS_AS(consistency_matrix(one), FewerThanTwoSystems);
}

TEST_CASE("consistency is invariant to image list ordering") {
    std::vector<std::pair<std::string, LabelId>> forward, backward;
    for (int i = 0; i < 10; ++i) forward.emplace_back("img_" + std::to_string(100 + i), i % 3);
    backward = forward;
    std::reverse(backward.begin(), backward.end());
    const LabelSet a = LabelSet::from_pairs("a", std::move(forward));
    const LabelSet b = LabelSet::from_pairs("b", std::move(backward));
    CHECK(consistency_rate(a, b) == 1.0);
}

TEST_CASE("agreement_matrix on identical systems is the identity") {
    const std::vector<LabelId> labels{0, 1, 2, 1, 0, 2};
    const std::vector<std::vector<LabelId>> systems{labels, labels};
    const AgreementMatrix matrix = agreement_matrix(systems, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(matrix.at(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("agreement_matrix matches pairwise counting on a 4-image fixture") {
    // system a: 0 0 1 1 ; system b relabels class 0 as 1
    const std::vector<std::vector<LabelId>> systems{{0, 0, 1, 1}, {1, 1, 1, 1}};
    const AgreementMatrix matrix = agreement_matrix(systems, 2);
    // ordered pairs (a,b) and (b,a):
    //   N(0,1) += 2 from (a,b); N(1,0) += 2 from (b,a)
    //   N(1,1) += 2 from (a,b); N(1,1) += 2 from (b,a)
    // row 0 mass 2 -> [0, 1]; row 1 mass 6 -> [2/6, 4/6]
    CHECK(matrix.at(0, 0) == 0.0);
    CHECK(matrix.at(0, 1) == 1.0);
    CHECK(matrix.at(1, 0) == doctest::Approx(2.0 / 6).epsilon(1e-12));
    CHECK(matrix.at(1, 1) == doctest::Approx(4.0 / 6).epsilon(1e-12));
    CHECK_FALSE(matrix.row_flagged[0]);
    CHECK_FALSE(matrix.row_flagged[1]);
}

TEST_CASE("agreement_matrix rows sum to one; unused classes are flagged uniform") {
    Rng rng(43);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<std::vector<LabelId>> systems(3, std::vector<LabelId>(25));
        for (auto& system : systems)
            for (auto& l : system) l = static_cast<LabelId>(rng.bounded(3)); // class 3 never used
        const AgreementMatrix matrix = agreement_matrix(systems, 4);
        for (int i = 0; i < 4; ++i) {
            double row = 0;
            for (int j = 0; j < 4; ++j) row += matrix.at(i, j);
            CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
        }
        CHECK(matrix.row_flagged[3]);
        CHECK(matrix.at(3, 0) == 0.25);
    }

    const std::vector<std::vector<LabelId>> one{{0, 1}};
    CHECK_THROWS_AS(agreement_matrix(one, 2), FewerThanTwoSystems);
    const std::vector<std::vector<LabelId>> ragged{{0, 1}, {0}};
    CHECK_THROWS_AS(agreement_matrix(ragged, 2), ImageListMismatch);
}

TEST_CASE("label CSV ingestion groups by source") {
    const auto path = std::filesystem::temp_directory_path() / "mve_labels_test.csv";
    {
        std::ofstream out(path);
        out << "image_id,label,source\n";
        out << "img_b,genus_y,expert2\n";
        out << "img_a,genus_x,expert1\n";
        out << "img_b,genus_x,expert1\n";
        out << "img_a,genus_x,expert2\n";
    }
    const LabelCsv csv = load_label_sets_csv(path);
    REQUIRE(csv.sets.size() == 2);
    CHECK(csv.class_names == std::vector<std::string>{"genus_x", "genus_y"});
    CHECK(csv.sets[0].source_name == "expert1");
    CHECK(csv.sets[0].image_ids == std::vector<std::string>{"img_a", "img_b"});
    CHECK(csv.sets[0].labels == std::vector<LabelId>{0, 0});
    CHECK(csv.sets[1].labels == std::vector<LabelId>{0, 1});

    // label outside a fixed class universe
    const std::vector<std::string> universe{"genus_x"};
    CHECK_THROWS_AS(load_label_sets_csv(path, &universe), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("aligned_labels follows manifest entry order") {
    const DatasetManifest manifest = fixtures::fake_manifest(2, 3);
    std::vector<std::pair<std::string, LabelId>> pairs;
    for (const auto& entry : manifest.entries) pairs.emplace_back(entry.image_path, entry.label);
    const LabelSet set = LabelSet::from_pairs("self", std::move(pairs));
    const std::vector<LabelId> aligned = aligned_labels(set, manifest);
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        CHECK(aligned[i] == manifest.entries[i].label);

    const LabelSet wrong = make_set("wrong", {0, 1, 0, 1, 0, 1});
    CHECK_THROWS_AS(aligned_labels(wrong, manifest), ImageListMismatch);
}

namespace {

LabelSet dataset_label_set(const Dataset& ds, const std::string& name,
                           const std::vector<LabelId>& labels) {
    std::vector<std::pair<std::string, LabelId>> pairs;
    for (std::size_t i = 0; i < ds.size(); ++i)
        pairs.emplace_back(ds.manifest().entries[i].image_path, labels[i]);
    return LabelSet::from_pairs(name, std::move(pairs));
}

} // namespace

TEST_CASE("cross_label_eval produces the full table and covering predictions") {
    const Dataset ds = Dataset::synthetic(fixtures::tiny_spec(2, 10, 3, /*noise=*/10));
    const std::vector<LabelId> own = ds.labels();

    std::vector<LabelId> flipped = own;
    Rng rng(9);
    for (std::size_t i = 0; i < flipped.size(); ++i)
        if (rng.real01() < 0.3) flipped[i] = 1 - flipped[i];

    const std::vector<LabelSet> sets{dataset_label_set(ds, "o_label", own),
                                     dataset_label_set(ds, "expert1", flipped),
                                     dataset_label_set(ds, "expert2", own)};

    const CrossLabelResult result =
        cross_label_eval(ds, sets, /*folds=*/2, /*repeats=*/2, EnsembleKind::OGS,
                         fixtures::tiny_train(6), fixtures::tiny_view(), 12, /*jobs=*/2);

    REQUIRE(result.sources.size() == 3);
    REQUIRE(result.table.size() == 3);
    for (const auto& row : result.table) {
        REQUIRE(row.size() == 3);
        for (const auto& cell : row) {
            CHECK(cell.mean >= 0.0);
            CHECK(cell.mean <= 100.0);
            CHECK(cell.stddev >= 0.0);
        }
    }
    REQUIRE(result.system_predictions.size() == 3);
    for (const auto& preds : result.system_predictions) {
        REQUIRE(preds.size() == ds.size());
        for (LabelId p : preds) {
            CHECK(p >= 0);
            CHECK(p < 2);
        }
    }
    CHECK(result.agreement.class_count == 2);
    for (int i = 0; i < 2; ++i) {
        double row = 0;
        for (int j = 0; j < 2; ++j) row += result.agreement.at(i, j);
        CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
    }

    // determinism across job counts
    const CrossLabelResult again =
        cross_label_eval(ds, sets, 2, 2, EnsembleKind::OGS, fixtures::tiny_train(6),
                         fixtures::tiny_view(), 12, /*jobs=*/1);
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t t = 0; t < 3; ++t) {
            CHECK(result.table[s][t].mean == again.table[s][t].mean);
            CHECK(result.table[s][t].stddev == again.table[s][t].stddev);
        }
    CHECK(result.system_predictions == again.system_predictions);
}

TEST_CASE("cross_label_eval with one label set yields a 1x1 table") {
    const Dataset ds = Dataset::synthetic(fixtures::tiny_spec(2, 5, 4, /*noise=*/0));
    const std::vector<LabelSet> sets{dataset_label_set(ds, "only", ds.labels())};
    const CrossLabelResult result =
        cross_label_eval(ds, sets, 2, 1, EnsembleKind::O, fixtures::tiny_train(4),
                         fixtures::tiny_view(), 2);
    REQUIRE(result.table.size() == 1);
    REQUIRE(result.table[0].size() == 1);
    CHECK(result.table[0][0].mean >= 0.0);
}
