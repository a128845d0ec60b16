#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "fpdist/dataset.hpp"

using namespace fpdist;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content)
        : path("fpdist_test_" + name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("load_csv sorts times within subject, values in lockstep") {
    TempFile f("sort.csv", "id,time,value\nA,1,10\nA,3,30\nA,2,20\n");
    auto ds = load_csv(f.path);
    REQUIRE(ds.n_subjects() == 1);
    CHECK(ds.subjects[0].times == std::vector<double>{1, 2, 3});
    CHECK(ds.subjects[0].values == std::vector<double>{10, 20, 30});
}

TEST_CASE("load_csv groups by subject") {
    TempFile f("group.csv", "id,time,value\nA,1,1\nB,1,2\nA,2,3\nB,3,4\nB,2,5\n");
    auto ds = load_csv(f.path);
    REQUIRE(ds.n_subjects() == 2);
    CHECK(ds.subjects[0].id == "A");
    CHECK(ds.subjects[0].n_obs() == 2);
    CHECK(ds.subjects[1].id == "B");
    CHECK(ds.subjects[1].n_obs() == 3);
    CHECK(ds.domain_a == doctest::Approx(1.0));
    CHECK(ds.domain_b == doctest::Approx(3.0));
}

TEST_CASE("load_csv names the offending row on a parse error") {
    TempFile f("bad.csv",
               "id,time,value\nA,1,1\nA,2,2\nA,3,3\nA,4,4\nA,5,abc\nA,6,6\n");
    try {
        load_csv(f.path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 5") != std::string::npos);
    }
}

TEST_CASE("load_csv error paths") {
    TempFile missing("missing.csv", "id,t,value\nA,1,1\n");
    CHECK_THROWS_AS(load_csv(missing.path), SchemaError);
    TempFile empty("empty.csv", "id,time,value\n");
    CHECK_THROWS_AS(load_csv(empty.path), ParseError);
    CHECK_THROWS_AS(load_csv("does_not_exist.csv"), ParseError);
}

TEST_CASE("load_csv picks up the optional response column") {
    TempFile f("resp.csv", "id,time,value,y\nA,1,1,5\nA,2,2,5\nB,1,3,\n");
    auto ds = load_csv(f.path);
    CHECK(ds.has_response("A"));
    CHECK(ds.responses.at("A") == doctest::Approx(5.0));
    CHECK(!ds.has_response("B"));
}

TEST_CASE("save then load round-trips the dataset content") {
    TempFile f("rt.csv",
               "id,time,value,y\nA,0.125,1.25,2.5\nA,0.7311,-0.001,2.5\nB,0.5,3.25,-1\n");
    auto ds = load_csv(f.path);
    TempFile out("rt_out.csv", "");
    save_csv(ds, out.path);
    auto ds2 = load_csv(out.path);
    REQUIRE(ds2.n_subjects() == ds.n_subjects());
    for (int i = 0; i < ds.n_subjects(); ++i) {
        CHECK(ds2.subjects[i].id == ds.subjects[i].id);
        CHECK(ds2.subjects[i].times == ds.subjects[i].times);
        CHECK(ds2.subjects[i].values == ds.subjects[i].values);
    }
    CHECK(ds2.responses == ds.responses);
}

TEST_CASE("rescale_domain maps times affinely and inverts exactly") {
    SparseFunctionalDataset ds;
    ds.domain_a = 0;
    ds.domain_b = 10;
    ds.subjects.push_back({"A", {0, 5, 10}, {1, 2, 3}});

    auto scaled = rescale_domain(ds, {0.0, 1.0});
    CHECK(scaled.dataset.subjects[0].times == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(scaled.dataset.subjects[0].values == ds.subjects[0].values);

    SUBCASE("identity when already on target") {
        auto same = rescale_domain(scaled.dataset, {0.0, 1.0});
        CHECK(same.dataset.subjects[0].times == std::vector<double>{0.0, 0.5, 1.0});
    }

    SUBCASE("derived two-point example") {
        SparseFunctionalDataset d2;
        d2.domain_a = 2;
        d2.domain_b = 4;
        d2.subjects.push_back({"A", {2, 4}, {0, 0}});
        auto r = rescale_domain(d2, {0.0, 1.0});
        CHECK(r.dataset.subjects[0].times[0] == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(r.dataset.subjects[0].times[1] == doctest::Approx(1.0).epsilon(1e-15));
    }

    SUBCASE("inverse reproduces original times to 1e-12") {
        for (size_t j = 0; j < ds.subjects[0].times.size(); ++j) {
            double back = scaled.map.invert(scaled.dataset.subjects[0].times[j]);
            CHECK(back == doctest::Approx(ds.subjects[0].times[j]).epsilon(1e-12));
        }
    }

    SUBCASE("degenerate domain rejected") {
        SparseFunctionalDataset flat;
        flat.domain_a = flat.domain_b = 1.0;
        flat.subjects.push_back({"A", {1.0}, {1.0}});
        CHECK_THROWS_AS(rescale_domain(flat, {0.0, 1.0}), ValidationError);
    }
}

TEST_CASE("grid invariants") {
    Grid g = Grid::uniform(0, 10, 51);
    CHECK(g.weights.sum() == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(g.size() == 51);
    CHECK_THROWS_AS(Grid::uniform(1, 1, 5), ValidationError);
    CHECK_THROWS_AS(Grid::uniform(0, 1, 1), ValidationError);
}

TEST_CASE("dataset validation rejects duplicates and out-of-domain times") {
    SparseFunctionalDataset ds;
    ds.domain_a = 0;
    ds.domain_b = 1;
    ds.subjects.push_back({"A", {0.5}, {1.0}});
    ds.subjects.push_back({"A", {0.6}, {1.0}});
    CHECK_THROWS_AS(ds.validate(), ValidationError);

    SparseFunctionalDataset out;
    out.domain_a = 0;
    out.domain_b = 1;
    out.subjects.push_back({"A", {1.5}, {1.0}});
    CHECK_THROWS_AS(out.validate(), ValidationError);
}

}  // TEST_SUITE
