#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "factlp/relational.hpp"

using namespace factlp;

namespace {

// Five rows over (x, y, z), used across the relational tests.
Relation sample_relation() {
    Relation r({"x", "y", "z"});
    r.insert_row({"1", "1", "0"});
    r.insert_row({"1", "0", "1"});
    r.insert_row({"0", "1", "1"});
    r.insert_row({"0", "1", "0"});
    r.insert_row({"1", "1", "1"});
    return r;
}

Tuple mk(std::initializer_list<std::pair<const std::string, Value>> kv) { return Tuple(kv); }

} // namespace

TEST_CASE("schema validation rejects bad attribute lists") {
    CHECK_THROWS_AS(Relation({}), schema_error);
    CHECK_THROWS_AS(Relation({"x", "x"}), schema_error);
    CHECK_THROWS_AS(Relation({"x", ""}), schema_error);
}

TEST_CASE("insert enforces tuple scope and deduplicates") {
    Relation r({"a", "b"});
    r.insert(mk({{"a", "1"}, {"b", "2"}}));
    r.insert(mk({{"a", "1"}, {"b", "2"}}));
    CHECK(r.size() == 1);
    CHECK_THROWS_AS(r.insert(mk({{"a", "1"}})), schema_error);
    CHECK_THROWS_AS(r.insert(mk({{"a", "1"}, {"c", "2"}})), schema_error);
    CHECK_THROWS_AS(r.insert_row({"1"}), schema_error);
}

TEST_CASE("relation equality ignores attribute order") {
    Relation a({"x", "y"});
    a.insert_row({"1", "2"});
    Relation b({"y", "x"});
    b.insert(mk({{"x", "1"}, {"y", "2"}}));
    CHECK(a == b);
    b.insert(mk({{"x", "3"}, {"y", "4"}}));
    CHECK(a != b);
}

TEST_CASE("select_eq filters by one attribute") {
    Relation r = sample_relation();
    Relation s = select_eq(r, "x", "1");
    Relation expected({"x", "y", "z"});
    expected.insert_row({"1", "1", "0"});
    expected.insert_row({"1", "0", "1"});
    expected.insert_row({"1", "1", "1"});
    CHECK(s == expected);
    CHECK(select_eq(r, "y", "2").empty());
    CHECK_THROWS_AS(select_eq(r, "w", "1"), schema_error);
}

TEST_CASE("select_eq over the active column values partitions the relation") {
    Relation r = sample_relation();
    for (const auto& attr : r.attributes()) {
        std::set<Value> active;
        for (const auto& t : r.tuples()) active.insert(t.at(attr));
        std::size_t total = 0;
        for (const auto& v : active) total += select_eq(r, attr, v).size();
        CHECK(total == r.size());
    }
}

TEST_CASE("project_out collapses duplicate projections") {
    Relation r = sample_relation();
    Relation p = project_out(r, {"z"});
    Relation expected({"x", "y"});
    expected.insert_row({"1", "1"});
    expected.insert_row({"1", "0"});
    expected.insert_row({"0", "1"});
    CHECK(p == expected);
    CHECK(project_out(r, {}) == r);
    CHECK_THROWS_AS(project_out(r, {"x", "y", "z"}), schema_error);
    CHECK_THROWS_AS(project_out(r, {"w"}), schema_error);
}

TEST_CASE("natural_join matches on shared attributes") {
    Relation projects({"pname", "field", "language"});
    projects.insert_row({"p1", "ML", "Python"});
    projects.insert_row({"p2", "DBs", "Python"});
    Relation researchers({"rname", "field"});
    researchers.insert_row({"Alice", "ML"});
    researchers.insert_row({"Bob", "ML"});
    researchers.insert_row({"Carol", "ML"});
    researchers.insert_row({"David", "DBs"});

    Relation j = natural_join(projects, researchers);
    CHECK(j.size() == 4);
    CHECK(j.attribute_set() == std::set<std::string>{"pname", "field", "language", "rname"});
    CHECK(j.contains(mk({{"pname", "p1"}, {"field", "ML"}, {"language", "Python"}, {"rname", "Carol"}})));
    CHECK(j.contains(mk({{"pname", "p2"}, {"field", "DBs"}, {"language", "Python"}, {"rname", "David"}})));
    CHECK_FALSE(j.contains(mk({{"pname", "p2"}, {"field", "DBs"}, {"language", "Python"}, {"rname", "Alice"}})));

    // Join order does not change the contents.
    CHECK(natural_join(researchers, projects) == j);
}

TEST_CASE("natural_join on disjoint schemas is a cartesian product") {
    Relation a({"x"});
    a.insert_row({"1"});
    a.insert_row({"2"});
    Relation b({"y"});
    b.insert_row({"u"});
    b.insert_row({"v"});
    b.insert_row({"w"});
    CHECK(natural_join(a, b).size() == 6);
}

TEST_CASE("natural_join with itself is the identity") {
    Relation r = sample_relation();
    CHECK(natural_join(r, r) == r);
}

TEST_CASE("extensions lists the completions of a partial tuple") {
    Relation r = sample_relation();
    std::set<std::string> sub{"y", "z"};
    auto ext1 = extensions(r, sub, mk({{"x", "1"}}));
    std::set<Tuple> expected1{mk({{"y", "1"}, {"z", "0"}}), mk({{"y", "0"}, {"z", "1"}}),
                              mk({{"y", "1"}, {"z", "1"}})};
    CHECK(ext1 == expected1);
    auto ext0 = extensions(r, sub, mk({{"x", "0"}}));
    CHECK(ext0.size() == 2);
    CHECK_THROWS_AS(extensions(r, sub, mk({{"w", "1"}})), schema_error);
    CHECK_THROWS_AS(extensions(r, {"w"}, mk({{"x", "1"}})), schema_error);
}

TEST_CASE("extension counts partition the relation size") {
    Relation r = sample_relation();
    std::set<std::string> sub{"y", "z"};
    Relation outer = project_out(r, sub);
    std::size_t total = 0;
    for (const auto& t : outer.tuples()) total += extensions(r, sub, t).size();
    CHECK(total == r.size());
}

TEST_CASE("extensions with an empty projection set test membership") {
    Relation r = sample_relation();
    auto hit = extensions(r, {}, mk({{"x", "1"}, {"y", "1"}, {"z", "0"}}));
    CHECK(hit == std::set<Tuple>{Tuple{}});
    auto miss = extensions(r, {}, mk({{"x", "0"}, {"y", "0"}, {"z", "0"}}));
    CHECK(miss.empty());
}

TEST_CASE("load_relation reads delimited text") {
    std::istringstream in("1,1,0\n1,0,1\n0,1,1\n0,1,0\n1,1,1\n");
    Relation r = load_relation(in, {"x", "y", "z"});
    CHECK(r == sample_relation());
}

TEST_CASE("load_relation takes the schema from a header when asked") {
    std::istringstream in("x,y\n1,2\n1,2\n3,4\n");
    CsvOptions opts;
    opts.header = true;
    Relation r = load_relation(in, {}, opts);
    CHECK(r.attributes() == std::vector<std::string>{"x", "y"});
    CHECK(r.size() == 2);

    std::istringstream bad("x,y\n1,2\n");
    CHECK_THROWS_AS(load_relation(bad, {"a", "b"}, opts), parse_error);
}

TEST_CASE("load_relation reports the offending line") {
    std::istringstream in("1,2\n3\n");
    try {
        load_relation(in, {"x", "y"});
        FAIL("expected a parse error");
    } catch (const parse_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::istringstream empty("");
    CHECK_THROWS_AS(load_relation(empty, {}), schema_error);
}

TEST_CASE("csv round trip preserves the relation") {
    Relation r = sample_relation();
    std::ostringstream out;
    CsvOptions opts;
    opts.header = true;
    write_csv(out, r, opts);
    std::istringstream in(out.str());
    CHECK(load_relation(in, {}, opts) == r);

    Relation tricky({"a"});
    tricky.insert_row({"has,comma"});
    std::ostringstream sink;
    CHECK_THROWS_AS(write_csv(sink, tricky), parse_error);
}

TEST_CASE("relation json round trip") {
    Relation r = sample_relation();
    auto j = relation_to_json(r, "sample");
    CHECK(j.at("name") == "sample");
    CHECK(relation_from_json(j) == r);

    auto numeric = nlohmann::json::parse(R"({"attributes":["x"],"tuples":[[1],[2]]})");
    Relation n = relation_from_json(numeric);
    CHECK(n.contains(mk({{"x", "1"}})));

    auto bad = nlohmann::json::parse(R"({"attributes":["x"],"tuples":[["1","2"]]})");
    CHECK_THROWS_AS(relation_from_json(bad), parse_error);
}

TEST_CASE("database rejects duplicate names and misses loudly") {
    Database db;
    db.add("r", sample_relation());
    CHECK(db.has("r"));
    CHECK_THROWS_AS(db.add("r", sample_relation()), schema_error);
    CHECK_THROWS_AS(db.get("missing"), schema_error);
}

TEST_CASE("join of random relations agrees with a nested-loop oracle") {
    std::mt19937_64 rng(7);
    auto rand_rel = [&](std::vector<std::string> attrs, int rows) {
        Relation r(attrs);
        for (int i = 0; i < rows; ++i) {
            std::vector<Value> row;
            for (std::size_t k = 0; k < attrs.size(); ++k)
                row.push_back(std::to_string(rng() % 3));
            r.insert_row(row);
        }
        return r;
    };
    for (int iter = 0; iter < 25; ++iter) {
        Relation a = rand_rel({"x", "y"}, 6);
        Relation b = rand_rel({"y", "z"}, 6);
        Relation j = natural_join(a, b);
        std::size_t expected = 0;
        for (const auto& ta : a.tuples())
            for (const auto& tb : b.tuples())
                if (ta.at("y") == tb.at("y")) ++expected;
        CHECK(j.size() == expected);
        for (const auto& t : j.tuples()) {
            CHECK(a.contains(tuple_restrict(t, {"x", "y"})));
            CHECK(b.contains(tuple_restrict(t, {"y", "z"})));
        }
    }
}
