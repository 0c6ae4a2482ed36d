#include "morphlearn/error.hpp"
#include "morphlearn/morphology.hpp"

#include <doctest.h>

#include <filesystem>
#include <set>

using namespace morphlearn;

namespace {

// All-pairs shortest paths over the module tree, then every hinge pair at
// distance <= 2.
std::vector<std::pair<std::size_t, std::size_t>> floyd_pairs(const MorphologyTree& tree)
{
    const std::size_t n = tree.module_count();
    const int inf = 1 << 20;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (std::size_t i = 0; i < n; ++i) {
        d[i][i] = 0;
        const int p = tree.modules()[i].parent;
        if (p != kNoModule)
            d[i][static_cast<std::size_t>(p)] = d[static_cast<std::size_t>(p)][i] = 1;
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    const auto hinges = enumerate_hinges(tree);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t a = 0; a < hinges.size(); ++a)
        for (std::size_t b = a + 1; b < hinges.size(); ++b)
            if (d[static_cast<std::size_t>(hinges[a])][static_cast<std::size_t>(hinges[b])] <= 2)
                out.emplace_back(a, b);
    return out;
}

MorphologyTree chain(int hinges)
{
    MorphologyTree t("chain");
    int at = 0;
    for (int i = 0; i < hinges; ++i)
        at = t.attach(at, 0, ModuleKind::ActiveHinge, 0);
    return t;
}

} // namespace

TEST_CASE("spider golden counts")
{
    const MorphologyTree spider = load_bundled_robot("spider");
    CHECK(spider.hinge_count() == 8);
    const NeighbourGraph g = neighbour_pairs(spider);
    CHECK(g.hinge_count == 8);
    CHECK(g.pairs.size() == 10);
    CHECK(g.pairs == floyd_pairs(spider));
}

TEST_CASE("chain of three hinges has three neighbour pairs")
{
    const MorphologyTree c = chain(3);
    const auto g = neighbour_pairs(c);
    CHECK(g.pairs.size() == 3);
    CHECK(g.pairs == floyd_pairs(c));
    // A longer chain keeps only distance-1 and distance-2 pairs: 2n - 3.
    CHECK(neighbour_pairs(chain(6)).pairs.size() == 9);
}

TEST_CASE("attach enforces slot arity and a single core")
{
    MorphologyTree t("t");
    const int h = t.attach(0, 3, ModuleKind::ActiveHinge);
    CHECK_THROWS_AS(t.attach(0, 4, ModuleKind::Brick), MorphologyError);
    CHECK_THROWS_AS(t.attach(h, 1, ModuleKind::Brick), MorphologyError);
    CHECK_THROWS_AS(t.attach(0, 3, ModuleKind::Brick), MorphologyError);
    CHECK_THROWS_AS(t.attach(0, 1, ModuleKind::Core), MorphologyError);
    CHECK_THROWS_AS(t.attach(0, 1, ModuleKind::Brick, 45), MorphologyError);
    const int b = t.attach(h, 0, ModuleKind::Brick);
    CHECK_THROWS_AS(t.attach(b, 3, ModuleKind::Brick), MorphologyError);
    CHECK_NOTHROW(t.attach(b, 2, ModuleKind::Brick, 90));
    CHECK_NOTHROW(t.validate());
}

TEST_CASE("parse errors")
{
    CHECK_THROWS_AS(parse_morphology("{"), MorphologyError);
    CHECK_THROWS_AS(parse_morphology(R"({"name":"x","root":{"kind":"brick","children":{}}})"), MorphologyError);
    CHECK_THROWS_AS(
        parse_morphology(
            R"({"name":"x","root":{"kind":"core","children":{"0":{"kind":"active_hinge","children":{"1":{"kind":"brick"}}}}}})"),
        MorphologyError);
    CHECK_THROWS_AS(parse_morphology(R"({"name":"x","root":{"kind":"core","children":{"7":{"kind":"brick"}}}})"),
                    MorphologyError);
    CHECK_THROWS_AS(parse_morphology(R"({"name":"x","root":{"kind":"core","children":{"0":{"kind":"wheel"}}}})"),
                    MorphologyError);
}

TEST_CASE("emit then parse round-trips every bundled robot")
{
    for (const auto& name : bundled_robot_names()) {
        const MorphologyTree t = load_bundled_robot(name);
        CHECK(t.name() == name);
        const MorphologyTree back = parse_morphology(emit_morphology(t));
        CHECK(back == t);
        CHECK(emit_morphology(back) == emit_morphology(t));
        CHECK(neighbour_pairs(t).pairs == floyd_pairs(t));
    }
}

TEST_CASE("save and load")
{
    const auto path = std::filesystem::temp_directory_path() / "morphlearn_roundtrip.json";
    const MorphologyTree t = load_bundled_robot("gecko");
    save_morphology(t, path);
    CHECK(load_morphology(path) == t);
    std::filesystem::remove(path);
    CHECK_THROWS(load_morphology(path));
}

TEST_CASE("hinge order is pre-order by ascending slot")
{
    MorphologyTree t("order");
    const int b = t.attach(0, 1, ModuleKind::Brick);
    const int h2 = t.attach(b, 0, ModuleKind::ActiveHinge);
    const int h1 = t.attach(0, 0, ModuleKind::ActiveHinge);
    const int h3 = t.attach(0, 2, ModuleKind::ActiveHinge);
    CHECK(enumerate_hinges(t) == std::vector<int>{h1, h2, h3});
}

TEST_CASE("random morphologies are valid and varied")
{
    RngStream rng(2024);
    std::set<std::size_t> hinge_counts;
    for (int i = 0; i < 1000; ++i) {
        const MorphologyTree t = generate_random_morphology(rng, 15);
        REQUIRE_NOTHROW(t.validate());
        REQUIRE(t.hinge_count() >= 1);
        REQUIRE(t.module_count() <= 15);
        REQUIRE(t.module_count() >= 2);
        hinge_counts.insert(t.hinge_count());
        if (i < 100)
            REQUIRE(neighbour_pairs(t).pairs == floyd_pairs(t));
        if (i < 50)
            REQUIRE(emit_morphology(parse_morphology(emit_morphology(t))) == emit_morphology(t));
    }
    CHECK(hinge_counts.size() >= 5);
}
